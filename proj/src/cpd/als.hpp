#pragma once

#include "tensor/array3.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pencilrank {

/// Z_k ~ A diag(row k of C) B^T.
struct CpdModel {
    Matrix a;   // I x R
    Matrix b;   // J x R
    Matrix c;   // 2 x R
    double error = 0.0;

    Array3 reconstruct() const;
};

/// Per-iteration traces that expose diverging components.
struct DegeneracySignal {
    std::vector<int> iteration;
    std::vector<double> error;
    std::vector<double> max_norm_a;
    std::vector<double> max_norm_b;
    std::vector<double> min_angle_deg;   // smallest angle between two columns of A

    /// Header "iteration,error,maxNormA,maxNormB,minAngleDeg", one row per iteration.
    std::string to_csv() const;
};

struct AlsConfig {
    int iterations = 1000;
    std::uint64_t seed = 0;
    /// Stop early once the error drops below this fraction of ||Z||^2.
    double error_floor = 0.0;
};

struct AlsResult {
    CpdModel model;
    DegeneracySignal signal;
    /// A normal-equation system was singular and got a 1e-12 (relative) ridge.
    bool ridge_applied = false;
    /// Largest error increase over any single factor update (expected at rounding level).
    double max_increase = 0.0;
};

double cpd_error(const Array3& z, const Matrix& a, const Matrix& b, const Matrix& c);

/// Plain alternating least squares from a random normal start. After every
/// iteration the columns are rescaled so that a_r, b_r and c_r have equal norms.
AlsResult fit_als(const Array3& z, Eigen::Index rank, const AlsConfig& cfg);

}  // namespace pencilrank
