#pragma once

// Cores and arrays with a known pencil eigenstructure, built by inverse
// construction so the expected rank verdict is the ground truth.

#include "common/random.hpp"
#include "rank/pencil_diagnosis.hpp"
#include "tensor/array3.hpp"

#include <Eigen/QR>

#include <cmath>

namespace pencilrank::testing {

enum class CoreKind { Diagonalizable, Jordan, Rotation };

inline RankVerdict expected_verdict(CoreKind kind) {
    switch (kind) {
        case CoreKind::Diagonalizable: return RankVerdict::RankR;
        case CoreKind::Jordan: return RankVerdict::RankExceedsR_Jordan;
        case CoreKind::Rotation: return RankVerdict::RankExceedsR_Complex;
    }
    return RankVerdict::Indeterminate;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = standard_normal(rng);
    }
    return m;
}

inline double condition_number(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector s = svd.singularValues();
    return s(0) / s(s.size() - 1);
}

// Gaussian matrix redrawn until its condition number is at most `max_cond`.
inline Matrix conditioned_matrix(Eigen::Index order, Rng& rng, double max_cond) {
    for (;;) {
        Matrix m = gaussian_matrix(order, order, rng);
        if (condition_number(m) <= max_cond) return m;
    }
}

// Canonical block D with the requested structure: distinct real diagonal,
// one 2x2 Jordan block, or one 2x2 rotation-scaling block; the remaining
// diagonal entries are distinct reals separated by at least 0.1.
inline Matrix canonical_block(Eigen::Index order, CoreKind kind, Rng& rng) {
    Matrix d = Matrix::Zero(order, order);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (Eigen::Index i = 0; i < order; ++i) {
        for (;;) {
            const double v = 2.0 * unit(rng);
            bool separated = true;
            for (Eigen::Index k = 0; k < i; ++k) separated = separated && std::abs(d(k, k) - v) >= 0.1;
            if (separated) {
                d(i, i) = v;
                break;
            }
        }
    }
    if (kind == CoreKind::Jordan) {
        d(1, 1) = d(0, 0);
        d(0, 1) = 0.5 + std::abs(unit(rng));
        for (Eigen::Index i = 2; i < order; ++i) {
            while (std::abs(d(i, i) - d(0, 0)) < 0.1) d(i, i) = 2.0 * unit(rng);
        }
    } else if (kind == CoreKind::Rotation) {
        const double b = 0.5 + std::abs(unit(rng));
        d(1, 1) = d(0, 0);
        d(0, 1) = -b;
        d(1, 0) = b;
    }
    return d;
}

// Core (Y1, M Y1) with M = V D V^{-1}; V and Y1 have condition at most 1e3.
inline Array3 labelled_core(Eigen::Index order, CoreKind kind, Rng& rng) {
    const Matrix v = conditioned_matrix(order, rng, 1e3);
    const Matrix y1 = conditioned_matrix(order, rng, 1e3);
    const Matrix m = v * canonical_block(order, kind, rng) * v.inverse();
    return Array3(y1, m * y1);
}

// I x J x 2 array whose leading left singular subspace of [Z1 | Z2] is
// exactly R-dimensional plus a small tail, with the J x J x 2 core
// S_R V_R^T taken from `core`. Used for I > J = R constructions.
inline Array3 embed_core(const Array3& core, Eigen::Index rows, Rng& rng, double tail) {
    const Eigen::Index r = core.rows();
    Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rows, rows, rng));
    const Matrix u = qr.householderQ() * Matrix::Identity(rows, rows);
    Matrix z1 = u.leftCols(r) * core.slice(0) + tail * gaussian_matrix(rows, r, rng);
    Matrix z2 = u.leftCols(r) * core.slice(1) + tail * gaussian_matrix(rows, r, rng);
    return Array3(z1, z2);
}

}  // namespace pencilrank::testing
