#pragma once

#include "gsd/rotation_objective.hpp"
#include "tensor/array3.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pencilrank {

struct MlrankConfig {
    int max_sweeps = 2000;
    double rel_tol = 1e-9;
    /// Total starts: the first from the truncated SVDs of the unfoldings, the rest random.
    int restarts = 1;
    std::uint64_t seed = 0;
    bool polish = true;

    void validate() const;
};

/// Best approximation with rank([X1 | X2]) <= R and rank([X1 ; X2]) <= R.
///
/// With full orthonormal U1, U2 the transformed slices are
/// U1^T Z_k U2 = [G_k L_k; H_k M_k] and the approximation keeps G_k.
struct MlrankSolution {
    Eigen::Index rank = 0;
    Matrix full_u1;                      // I x I
    Matrix full_u2;                      // J x J
    std::array<Matrix, 2> transformed;
    double objective = 0.0;              // ||G1||^2 + ||G2||^2
    double residual = 0.0;               // mass in the L, H, M blocks
    int sweeps = 0;
    bool converged = false;
    std::string init_label;
    std::uint64_t seed = 0;
    /// Starts whose objective is within 1e-6 (relative) of the best one.
    int agreeing_starts = 0;
    std::vector<double> start_objectives;

    Matrix u1() const { return full_u1.leftCols(rank); }
    Matrix u2() const { return full_u2.leftCols(rank); }
    Matrix g(int k) const;
    Matrix l(int k) const;
    Matrix h(int k) const;
    Matrix m(int k) const;
    Array3 core_array() const;           // R x R x 2 with slices G_k
    Array3 reconstruction() const;       // slices U1R G_k U2R^T
};

/// Givens-rotation solver: extended row pairs (i < R <= j) then extended
/// column pairs, each rotation moving mass into the leading block. Stops on
/// relative objective increase below relTol per sweep or after maxSweeps.
/// Throws Error(Dimension) unless 1 <= R <= min(I, J).
MlrankSolution fit_mlrank(const Array3& z, Eigen::Index rank, const MlrankConfig& cfg);

/// Single start from explicit full factors.
MlrankSolution fit_mlrank_from(const Array3& z, Eigen::Index rank, Matrix u1, Matrix u2,
                               const MlrankConfig& cfg, std::string label);

struct StationarityReport {
    /// max |<row a of [H1|H2], row b of [G1|G2]>|
    double row = 0.0;
    /// max |<column a of [L1;L2], column b of [G1;G2]>|
    double col = 0.0;
    /// ||Z||_F^2, the natural scale of both residuals.
    double scale = 0.0;
};

StationarityReport stationarity_report(const MlrankSolution& sol);

nlohmann::json to_json(const MlrankSolution& sol);

}  // namespace pencilrank
