#pragma once

#include "gsd/rotation_objective.hpp"
#include "tensor/array3.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pencilrank {

enum class InitMode { Qz, Random, Given };

std::string to_string(InitMode mode);
InitMode init_mode_from_string(const std::string& name);

enum class SweepOrder {
    /// Interior rows, extended rows, interior columns, extended columns.
    RowsFirst,
    /// Columns before rows. Used to check that the solution array does not depend on the order.
    ColumnsFirst,
};

struct GsdConfig {
    InitMode init = InitMode::Qz;
    int max_sweeps = 2000;
    double rel_tol = 1e-9;
    /// Total number of starts; the first uses `init`, the rest random orthonormal factors.
    int restarts = 1;
    std::uint64_t seed = 0;
    /// Newton refinement on the rotation angles after the sweeps terminate.
    bool polish = true;
    SweepOrder order = SweepOrder::RowsFirst;
    /// Full I x I and J x J orthonormal factors for InitMode::Given.
    std::optional<Matrix> given_qa;
    std::optional<Matrix> given_qb;

    void validate() const;
};

/// A fitted GSD Z_k ~ Qa R_k Qb^T with the full square factors retained.
struct GsdSolution {
    Eigen::Index rank = 0;
    Matrix full_qa;                      // I x I
    Matrix full_qb;                      // J x J
    std::array<Matrix, 2> transformed;   // full_qa^T Z_k full_qb
    double residual = 0.0;
    int sweeps = 0;
    /// Sweep termination rule met, or the Newton polish reached a stationary point.
    bool converged = false;
    /// Relative decrease per sweep fell below relTol before maxSweeps.
    bool sweep_converged = false;
    int polish_iterations = 0;
    double polish_gradient = 0.0;        // max |gradient| after polishing
    InitMode init = InitMode::Qz;
    std::string init_label;              // "qz", "random", "given" or "random-fallback"
    std::uint64_t seed = 0;
    std::vector<double> objective_trace; // objective after each sweep

    Matrix qa() const { return full_qa.leftCols(rank); }
    Matrix qb() const { return full_qb.leftCols(rank); }
    Matrix core(int k) const;            // R_k, upper triangular
    Array3 core_array() const;           // R x R x 2
    Array3 solution_array() const;       // slices Qa R_k Qb^T
};

/// Internal state of the rotation sweeps.
struct GsdState {
    Eigen::Index rank = 0;
    RotatedPair rotated;
    double objective = 0.0;
    int skipped_degenerate = 0;
};

GsdState make_gsd_state(const Array3& z, Eigen::Index rank, Matrix qa, Matrix qb);

/// Residual mass: everything outside the upper triangle of the leading rank x rank block.
double gsd_objective(const std::array<Matrix, 2>& slices, Eigen::Index rank);

/// One pass of optimal Givens rotations over all row and column pairs that
/// touch the leading rank x rank upper triangle.
GsdState sweep_once(GsdState state, SweepOrder order = SweepOrder::RowsFirst);

struct GsdStart {
    Matrix qa;
    Matrix qb;
    InitMode mode = InitMode::Qz;
    std::string label;
};

/// Starting factors of start number `start`: cfg.init for start 0, random
/// orthonormal factors from sub-seed mix_seed(cfg.seed, start) afterwards.
/// A failed QZ falls back to random factors labelled "random-fallback".
GsdStart gsd_start(const Array3& z, Eigen::Index rank, const GsdConfig& cfg, int start);

/// Best-of-restarts GSD fit. Throws Error(Dimension) unless 1 <= rank <= min(I, J).
GsdSolution fit_gsd(const Array3& z, Eigen::Index rank, const GsdConfig& cfg);

/// Single start from explicit full factors.
GsdSolution fit_gsd_from(const Array3& z, Eigen::Index rank, Matrix qa, Matrix qb,
                         const GsdConfig& cfg, InitMode mode, std::string label);

/// Starting factors produced by the generalized real Schur decomposition; for
/// non-square arrays the QZ step runs on the leading core of an SVD basis.
std::pair<Matrix, Matrix> qz_start(const Array3& z, Eigen::Index rank);

/// rank, residual, sweeps, converged, sweepConverged, polishIterations, init, seed, Qa, Qb, R1, R2.
nlohmann::json to_json(const GsdSolution& sol);

MaskedRotationObjective gsd_angle_objective(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank);

}  // namespace pencilrank
