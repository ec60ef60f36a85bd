#include "tensor/array3.hpp"

#include "common/error.hpp"
#include "common/random.hpp"

#include <string>

namespace pencilrank {

Array3::Array3(Matrix slice1, Matrix slice2) : slices_{std::move(slice1), std::move(slice2)} {
    if (slices_[0].rows() != slices_[1].rows() || slices_[0].cols() != slices_[1].cols()) {
        fail(ErrorCode::Dimension, "slices must have identical dimensions, got " +
                                       std::to_string(slices_[0].rows()) + "x" +
                                       std::to_string(slices_[0].cols()) + " and " +
                                       std::to_string(slices_[1].rows()) + "x" +
                                       std::to_string(slices_[1].cols()));
    }
    if (slices_[0].rows() < 1 || slices_[0].cols() < 1) {
        fail(ErrorCode::Dimension, "array dimensions must be positive");
    }
    for (const auto& s : slices_) {
        if (!s.allFinite()) {
            fail(ErrorCode::InvalidArgument, "array entries must be finite");
        }
    }
}

Array3 Array3::zeros(Eigen::Index rows, Eigen::Index cols) {
    return Array3(Matrix::Zero(rows, cols), Matrix::Zero(rows, cols));
}

Mode3Vector mode3_vector(const Array3& a, Eigen::Index m, Eigen::Index n) {
    if (m < 0 || m >= a.rows() || n < 0 || n >= a.cols()) {
        fail(ErrorCode::Dimension, "mode-3 index out of range");
    }
    return Mode3Vector{m, n, Eigen::Vector2d(a(m, n, 0), a(m, n, 1))};
}

double frobenius_norm_sq(const Array3& a) {
    return a.slice(0).squaredNorm() + a.slice(1).squaredNorm();
}

Matrix wide_unfold(const Array3& a) {
    Matrix out(a.rows(), 2 * a.cols());
    out << a.slice(0), a.slice(1);
    return out;
}

Matrix tall_unfold(const Array3& a) {
    Matrix out(2 * a.rows(), a.cols());
    out << a.slice(0), a.slice(1);
    return out;
}

Array3 from_wide_unfold(const Matrix& wide) {
    if (wide.cols() % 2 != 0) {
        fail(ErrorCode::Dimension, "wide unfolding must have an even number of columns");
    }
    const auto j = wide.cols() / 2;
    return Array3(wide.leftCols(j), wide.rightCols(j));
}

Array3 from_tall_unfold(const Matrix& tall) {
    if (tall.rows() % 2 != 0) {
        fail(ErrorCode::Dimension, "tall unfolding must have an even number of rows");
    }
    const auto i = tall.rows() / 2;
    return Array3(tall.topRows(i), tall.bottomRows(i));
}

Array3 transform(const Array3& a, const Matrix& left, const Matrix& right) {
    if (left.rows() != a.rows() || right.rows() != a.cols()) {
        fail(ErrorCode::Dimension, "transform factor dimensions do not match the array");
    }
    return Array3(left.transpose() * a.slice(0) * right, left.transpose() * a.slice(1) * right);
}

Array3 transpose_slices(const Array3& a) {
    return Array3(a.slice(0).transpose(), a.slice(1).transpose());
}

Array3 mix_slices(const Array3& a, const Eigen::Matrix2d& mix) {
    return Array3(mix(0, 0) * a.slice(0) + mix(0, 1) * a.slice(1),
                  mix(1, 0) * a.slice(0) + mix(1, 1) * a.slice(1));
}

Array3 scaled(const Array3& a, double factor) {
    return Array3(factor * a.slice(0), factor * a.slice(1));
}

double distance_sq(const Array3& a, const Array3& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail(ErrorCode::Dimension, "arrays differ in shape");
    }
    return (a.slice(0) - b.slice(0)).squaredNorm() + (a.slice(1) - b.slice(1)).squaredNorm();
}

Array3 random_array(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    if (rows < 1 || cols < 1) {
        fail(ErrorCode::Dimension, "random_array needs positive dimensions");
    }
    Rng rng = make_rng(seed);
    Matrix z1(rows, cols);
    Matrix z2(rows, cols);
    for (auto* z : {&z1, &z2}) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                (*z)(i, j) = standard_normal(rng);
            }
        }
    }
    return Array3(std::move(z1), std::move(z2));
}

}  // namespace pencilrank
