#pragma once

#include "common/random.hpp"
#include "tensor/array3.hpp"

#include <complex>
#include <vector>

namespace pencilrank {

using Complex = std::complex<double>;

/// Eigenvalues sorted by (real, imag). Non-real entries come in conjugate pairs.
using ComplexEigenList = std::vector<Complex>;

struct SvdResult {
    Matrix u;       // rows x rows
    Vector s;       // min(rows, cols), nonincreasing
    Matrix v;       // cols x cols
};

/// Full SVD M = U diag(S) V^T.
SvdResult svd(const Matrix& m);

/// Eigenvalues of a real square matrix.
ComplexEigenList eigvals_real_matrix(const Matrix& m);

void sort_eigenvalues(ComplexEigenList& values);

/// Orthonormal Q_a, Q_b with Q_a^T Z1 Q_b upper triangular and Q_a^T Z2 Q_b
/// quasi upper triangular (2x2 bumps for complex pencil eigenvalue pairs).
struct SchurInit {
    Matrix qa;
    Matrix qb;
};

/// Generalized real Schur decomposition of the pencil (Z1, Z2) via QZ iteration.
/// Throws Error(Numerical) when the iteration does not converge.
SchurInit generalized_schur(const Matrix& z1, const Matrix& z2);

/// Generalized eigenvalues lambda with Z2 v = lambda Z1 v, read off the
/// (quasi-)triangular pair. Infinite eigenvalues (zero diagonal of the
/// triangular factor) are reported as +inf.
ComplexEigenList pencil_eigenvalues(const Matrix& z1, const Matrix& z2);

/// order(M) minus the numerical rank of (M - lambda I); singular values
/// above tol * sigma_max count toward the rank.
int geometric_multiplicity(const Matrix& m, Complex lambda, double tol);

/// Count of singular values above tol * sigma_max.
int numerical_rank(const Matrix& m, double tol);

/// Haar-distributed orthonormal matrix.
Matrix random_orthonormal(Eigen::Index order, Rng& rng);

/// Max |Q^T Q - I| entry.
double orthonormality_defect(const Matrix& q);

}  // namespace pencilrank
