#include "linalg/dense.hpp"

#include "common/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>

namespace pencilrank {

SvdResult svd(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> decomposition(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return {decomposition.matrixU(), decomposition.singularValues(), decomposition.matrixV()};
}

void sort_eigenvalues(ComplexEigenList& values) {
    std::sort(values.begin(), values.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
}

ComplexEigenList eigvals_real_matrix(const Matrix& m) {
    if (m.rows() != m.cols()) {
        fail(ErrorCode::Dimension, "eigenvalues need a square matrix");
    }
    if (!m.allFinite()) {
        fail(ErrorCode::InvalidArgument, "eigenvalues need a finite matrix");
    }
    Eigen::EigenSolver<Matrix> solver(m, false);
    if (solver.info() != Eigen::Success) {
        fail(ErrorCode::Numerical, "real Schur iteration did not converge");
    }
    ComplexEigenList out(solver.eigenvalues().begin(), solver.eigenvalues().end());
    // Force exact conjugate symmetry for downstream pairing.
    for (auto& v : out) {
        if (v.imag() == 0.0) v = Complex(v.real(), 0.0);
    }
    sort_eigenvalues(out);
    return out;
}

SchurInit generalized_schur(const Matrix& z1, const Matrix& z2) {
    if (z1.rows() != z1.cols() || z2.rows() != z2.cols() || z1.rows() != z2.rows()) {
        fail(ErrorCode::Dimension, "generalized Schur needs square slices of equal order");
    }
    // RealQZ factors A = Q S Z, B = Q T Z with S quasi-triangular and T triangular.
    // Z2 takes the role of A so that Z1 becomes the triangular factor.
    Eigen::RealQZ<Matrix> qz(z1.rows());
    qz.compute(z2, z1, true);
    if (qz.info() != Eigen::Success) {
        fail(ErrorCode::Numerical, "QZ iteration did not converge");
    }
    return {qz.matrixQ(), qz.matrixZ().transpose()};
}

ComplexEigenList pencil_eigenvalues(const Matrix& z1, const Matrix& z2) {
    if (z1.rows() != z1.cols() || z2.rows() != z2.cols() || z1.rows() != z2.rows()) {
        fail(ErrorCode::Dimension, "pencil eigenvalues need square slices of equal order");
    }
    Eigen::RealQZ<Matrix> qz(z1.rows());
    qz.compute(z2, z1, false);
    if (qz.info() != Eigen::Success) {
        fail(ErrorCode::Numerical, "QZ iteration did not converge");
    }
    const Matrix& s = qz.matrixS();
    const Matrix& t = qz.matrixT();
    const Eigen::Index n = t.rows();
    ComplexEigenList out;
    out.reserve(static_cast<std::size_t>(n));
    const double inf = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n;) {
        const bool bump = i + 1 < n && s(i + 1, i) != 0.0;
        if (!bump) {
            out.emplace_back(t(i, i) == 0.0 ? inf : s(i, i) / t(i, i), 0.0);
            ++i;
            continue;
        }
        // 2x2 block: eigenvalues of S_blk T_blk^{-1}.
        const Eigen::Matrix2d sb = s.block<2, 2>(i, i);
        const Eigen::Matrix2d tb = t.block<2, 2>(i, i);
        Eigen::EigenSolver<Eigen::Matrix2d> es(sb * tb.inverse(), false);
        for (int k = 0; k < 2; ++k) out.push_back(es.eigenvalues()(k));
        i += 2;
    }
    sort_eigenvalues(out);
    return out;
}

int numerical_rank(const Matrix& m, double tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> decomposition(m);
    const auto& s = decomposition.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double threshold = tol * s(0);
    return static_cast<int>((s.array() > threshold).count());
}

int geometric_multiplicity(const Matrix& m, Complex lambda, double tol) {
    if (m.rows() != m.cols()) {
        fail(ErrorCode::Dimension, "geometric multiplicity needs a square matrix");
    }
    const Eigen::Index n = m.rows();
    if (lambda.imag() == 0.0) {
        const Matrix shifted = m - lambda.real() * Matrix::Identity(n, n);
        return static_cast<int>(n) - numerical_rank(shifted, tol);
    }
    using CMatrix = Eigen::MatrixXcd;
    const CMatrix shifted = m.cast<Complex>() - lambda * CMatrix::Identity(n, n);
    Eigen::JacobiSVD<CMatrix> decomposition(shifted);
    const auto& s = decomposition.singularValues();
    if (s(0) == 0.0) return static_cast<int>(n);
    const auto rank = (s.array() > tol * s(0)).count();
    return static_cast<int>(n - rank);
}

Matrix random_orthonormal(Eigen::Index order, Rng& rng) {
    Matrix g(order, order);
    for (Eigen::Index i = 0; i < order; ++i) {
        for (Eigen::Index j = 0; j < order; ++j) {
            g(i, j) = standard_normal(rng);
        }
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(order, order);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Sign fix on diag(R) makes the distribution Haar.
    for (Eigen::Index j = 0; j < order; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return q;
}

double orthonormality_defect(const Matrix& q) {
    return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

}  // namespace pencilrank
