#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>

namespace pencilrank {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A real I x J x 2 array held as its two frontal slices.
///
/// Immutable after construction; the constructor rejects mismatched slice
/// shapes and non-finite entries.
class Array3 {
public:
    Array3(Matrix slice1, Matrix slice2);

    static Array3 zeros(Eigen::Index rows, Eigen::Index cols);

    Eigen::Index rows() const noexcept { return slices_[0].rows(); }
    Eigen::Index cols() const noexcept { return slices_[0].cols(); }

    const Matrix& slice(int k) const { return slices_.at(static_cast<std::size_t>(k)); }
    double operator()(Eigen::Index i, Eigen::Index j, int k) const { return slice(k)(i, j); }

    bool is_square() const noexcept { return rows() == cols(); }

private:
    std::array<Matrix, 2> slices_;
};

/// The mode-3 fiber (z_mn1, z_mn2) at position (m, n).
struct Mode3Vector {
    Eigen::Index m = 0;
    Eigen::Index n = 0;
    Eigen::Vector2d value = Eigen::Vector2d::Zero();
};

Mode3Vector mode3_vector(const Array3& a, Eigen::Index m, Eigen::Index n);

double frobenius_norm_sq(const Array3& a);

/// [Z1 | Z2], I x 2J.
Matrix wide_unfold(const Array3& a);

/// [Z1 ; Z2], 2I x J.
Matrix tall_unfold(const Array3& a);

Array3 from_wide_unfold(const Matrix& wide);
Array3 from_tall_unfold(const Matrix& tall);

/// Slices Z_k -> P^T Z_k Q.
Array3 transform(const Array3& a, const Matrix& left, const Matrix& right);

/// Slices Z_k -> Z_k^T (a J x I x 2 array).
Array3 transpose_slices(const Array3& a);

/// Mixed slices s_k1 Z_1 + s_k2 Z_2 for a 2x2 matrix S.
Array3 mix_slices(const Array3& a, const Eigen::Matrix2d& mix);

Array3 scaled(const Array3& a, double factor);

/// Sum over k of ||A_k - B_k||_F^2.
double distance_sq(const Array3& a, const Array3& b);

/// I x J x 2 array of i.i.d. standard normal entries; identical seeds give identical arrays.
Array3 random_array(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

}  // namespace pencilrank
