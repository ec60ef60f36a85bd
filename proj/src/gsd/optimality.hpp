#pragma once

#include "gsd/gsd_solver.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace pencilrank {

/// One condition value attached to a rotation pair (0-based indices).
struct PairValue {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    double value = 0.0;
};

struct OptimalityReport {
    // Interior pairs (j < R) first, then extended pairs (j >= R).
    std::vector<PairValue> first_row;
    std::vector<PairValue> first_col;
    // Interior pairs only.
    std::vector<PairValue> second_row;
    std::vector<PairValue> second_col;
    double max_abs_first = 0.0;
    double min_second = 0.0;   // +inf when there are no interior pairs
    std::optional<std::vector<double>> hessian_eigs;
    double residual = 0.0;
    int sweeps = 0;
    bool converged = false;
    bool sweep_converged = false;
    int polish_iterations = 0;
    std::string init;
    std::uint64_t seed = 0;
};

/// Mode-3 inner-product sums of the stationarity equations, evaluated on
/// transformed slices T_k = Qa~^T Z_k Qb~ of a fit of rank `rank`.
void first_order_conditions(const std::array<Matrix, 2>& t, Eigen::Index rank, OptimalityReport& out);

/// Second-order values for interior pairs:
/// rows sum ||z(i,r)||^2 - ||z(j,r)||^2 over r = i..j-1,
/// columns sum ||z(r,j)||^2 - ||z(r,i)||^2 over r = i+1..j.
void second_order_conditions(const std::array<Matrix, 2>& t, Eigen::Index rank, OptimalityReport& out);

/// First and second order values together with the fit's bookkeeping fields.
/// The Hessian is added when `with_hessian` is set (square R = I = J only).
OptimalityReport optimality_report(const GsdSolution& sol, bool with_hessian);

/// Same diagnostics for slices taken as already transformed (identity factors).
OptimalityReport optimality_report(const Array3& transformed, Eigen::Index rank, bool with_hessian);

/// The rotation-angle Hessian reported with the diagnostics.
///
/// Parameters are the I(I-1) angles, row pairs then column pairs, each
/// lexicographic. The diagonal is analytic and equals twice the second-order
/// values (`diagonal_scale`); off-diagonal entries use central differences
/// with step h = 1e-5 max(1, ||Z||_F).
struct HessianResult {
    Matrix matrix;
    std::vector<double> eigenvalues;   // ascending
    double diagonal_scale = 2.0;
    double step = 0.0;
};

/// Throws Error(Unsupported) unless the slices are square and rank equals their order.
HessianResult gsd_hessian(const std::array<Matrix, 2>& t, Eigen::Index rank);

/// All entries, diagonal included, by central differences (for cross-checks).
Matrix gsd_hessian_finite_difference(const std::array<Matrix, 2>& t, Eigen::Index rank, double step);

/// Exact Hessian of the same parameterization.
Matrix gsd_hessian_analytic(const std::array<Matrix, 2>& t, Eigen::Index rank);

struct StudyEntry {
    int start = 0;
    std::string init;
    double residual = 0.0;
    OptimalityReport report;
    bool suboptimal = false;
};

/// One fit per start (cfg.restarts starts, the first with cfg.init), each
/// with its diagnostics. An entry is suboptimal when its residual exceeds the
/// best residual by more than 1e-6 relative.
std::vector<StudyEntry> multi_start_study(const Array3& z, Eigen::Index rank, const GsdConfig& cfg,
                                          bool with_hessian);

nlohmann::json to_json(const OptimalityReport& report);

}  // namespace pencilrank
