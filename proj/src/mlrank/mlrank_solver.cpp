#include "mlrank/mlrank_solver.hpp"

#include "common/error.hpp"
#include "common/random.hpp"
#include "linalg/dense.hpp"
#include "linalg/givens.hpp"
#include "tensor/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace pencilrank {

namespace {

double leading_mass(const std::array<Matrix, 2>& t, Eigen::Index rank) {
    return t[0].topLeftCorner(rank, rank).squaredNorm() + t[1].topLeftCorner(rank, rank).squaredNorm();
}

void rotate_rows(RotatedPair& state, Eigen::Index kept, Eigen::Index moved, Eigen::Index rank) {
    RotationGram gram;
    for (const auto& t : state.slices) {
        for (Eigen::Index r = 0; r < rank; ++r) {
            gram.xx += t(moved, r) * t(moved, r);
            gram.yy += t(kept, r) * t(kept, r);
            gram.xy += t(moved, r) * t(kept, r);
        }
    }
    const OptimalAngle best = optimal_angle(gram);
    if (best.degenerate || best.angle == 0.0) return;
    state.rotate(RotationSide::Row, moved, kept, std::cos(best.angle), std::sin(best.angle));
}

void rotate_cols(RotatedPair& state, Eigen::Index kept, Eigen::Index moved, Eigen::Index rank) {
    RotationGram gram;
    for (const auto& t : state.slices) {
        for (Eigen::Index r = 0; r < rank; ++r) {
            gram.xx += t(r, moved) * t(r, moved);
            gram.yy += t(r, kept) * t(r, kept);
            gram.xy += t(r, moved) * t(r, kept);
        }
    }
    const OptimalAngle best = optimal_angle(gram);
    if (best.degenerate || best.angle == 0.0) return;
    state.rotate(RotationSide::Column, moved, kept, std::cos(best.angle), std::sin(best.angle));
}

void check_rank(const Array3& z, Eigen::Index rank) {
    const auto limit = std::min(z.rows(), z.cols());
    if (rank < 1 || rank > limit) {
        fail(ErrorCode::Dimension, "multilinear rank R must satisfy 1 <= R <= min(I,J) = " +
                                       std::to_string(limit) + ", got " + std::to_string(rank));
    }
}

Matrix block(const Matrix& t, Eigen::Index r0, Eigen::Index c0, Eigen::Index rows, Eigen::Index cols) {
    return t.block(r0, c0, rows, cols);
}

}  // namespace

void MlrankConfig::validate() const {
    if (!(rel_tol > 0.0)) fail(ErrorCode::InvalidArgument, "relTol must be positive");
    if (restarts < 1) fail(ErrorCode::InvalidArgument, "restarts must be at least 1");
    if (max_sweeps < 1) fail(ErrorCode::InvalidArgument, "maxSweeps must be at least 1");
}

Matrix MlrankSolution::g(int k) const {
    return block(transformed.at(static_cast<std::size_t>(k)), 0, 0, rank, rank);
}

Matrix MlrankSolution::l(int k) const {
    const auto& t = transformed.at(static_cast<std::size_t>(k));
    return block(t, 0, rank, rank, t.cols() - rank);
}

Matrix MlrankSolution::h(int k) const {
    const auto& t = transformed.at(static_cast<std::size_t>(k));
    return block(t, rank, 0, t.rows() - rank, rank);
}

Matrix MlrankSolution::m(int k) const {
    const auto& t = transformed.at(static_cast<std::size_t>(k));
    return block(t, rank, rank, t.rows() - rank, t.cols() - rank);
}

Array3 MlrankSolution::core_array() const { return Array3(g(0), g(1)); }

Array3 MlrankSolution::reconstruction() const {
    const Matrix a = u1();
    const Matrix b = u2();
    return Array3(a * g(0) * b.transpose(), a * g(1) * b.transpose());
}

MlrankSolution fit_mlrank_from(const Array3& z, Eigen::Index rank, Matrix u1, Matrix u2,
                               const MlrankConfig& cfg, std::string label) {
    check_rank(z, rank);
    RotatedPair state = RotatedPair::start(z, std::move(u1), std::move(u2));
    const double total = frobenius_norm_sq(z);
    const Eigen::Index rows = z.rows();
    const Eigen::Index cols = z.cols();

    MlrankSolution sol;
    sol.rank = rank;
    sol.init_label = std::move(label);
    sol.seed = cfg.seed;

    double previous = leading_mass(state.slices, rank);
    const bool trivial = rank == rows && rank == cols;
    for (int sweep = 0; sweep < cfg.max_sweeps && !trivial; ++sweep) {
        for (Eigen::Index i = 0; i < rank; ++i) {
            for (Eigen::Index j = rank; j < rows; ++j) rotate_rows(state, i, j, rank);
        }
        for (Eigen::Index i = 0; i < rank; ++i) {
            for (Eigen::Index j = rank; j < cols; ++j) rotate_cols(state, i, j, rank);
        }
        ++sol.sweeps;
        const double current = leading_mass(state.slices, rank);
        const double increase = current - previous;
        previous = current;
        if (increase < cfg.rel_tol * std::max(current, 1e-300) || total - current <= 1e-28 * total) {
            sol.converged = true;
            break;
        }
    }
    if (trivial) sol.converged = true;

    if (cfg.polish && !trivial && total - previous > 1e-28 * total) {
        const MaskedRotationObjective objective(block_mask(rows, cols, rank),
                                                subspace_parameters(rows, cols, rank));
        const PolishResult polish = newton_polish(objective, state);
        sol.converged = sol.converged || polish.max_abs_gradient <= 1e-12 * total;
    }

    sol.objective = leading_mass(state.slices, rank);
    sol.residual = std::max(0.0, state.slices[0].squaredNorm() + state.slices[1].squaredNorm() - sol.objective);
    sol.full_u1 = std::move(state.qa);
    sol.full_u2 = std::move(state.qb);
    sol.transformed = std::move(state.slices);
    return sol;
}

MlrankSolution fit_mlrank(const Array3& z, Eigen::Index rank, const MlrankConfig& cfg) {
    check_rank(z, rank);
    cfg.validate();
    std::optional<MlrankSolution> best;
    std::vector<double> objectives;
    for (int start = 0; start < cfg.restarts; ++start) {
        Matrix u1;
        Matrix u2;
        std::string label;
        if (start == 0) {
            u1 = svd(wide_unfold(z)).u;
            u2 = svd(tall_unfold(z)).v;
            label = "svd";
        } else {
            Rng rng = make_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(start)));
            u1 = random_orthonormal(z.rows(), rng);
            u2 = random_orthonormal(z.cols(), rng);
            label = "random";
        }
        MlrankSolution sol = fit_mlrank_from(z, rank, std::move(u1), std::move(u2), cfg, std::move(label));
        objectives.push_back(sol.objective);
        if (!best || sol.objective > best->objective) best = std::move(sol);
    }
    best->start_objectives = objectives;
    best->agreeing_starts = static_cast<int>(std::count_if(objectives.begin(), objectives.end(), [&](double v) {
        return best->objective - v <= 1e-6 * std::max(best->objective, 1e-300);
    }));
    return std::move(*best);
}

StationarityReport stationarity_report(const MlrankSolution& sol) {
    StationarityReport out;
    out.scale = sol.transformed[0].squaredNorm() + sol.transformed[1].squaredNorm();
    const Eigen::Index r = sol.rank;
    const Eigen::Index rows = sol.transformed[0].rows();
    const Eigen::Index cols = sol.transformed[0].cols();
    if (rows > r) {
        Matrix cross = Matrix::Zero(rows - r, r);
        for (int k = 0; k < 2; ++k) cross += sol.h(k) * sol.g(k).transpose();
        out.row = cross.cwiseAbs().maxCoeff();
    }
    if (cols > r) {
        Matrix cross = Matrix::Zero(cols - r, r);
        for (int k = 0; k < 2; ++k) cross += sol.l(k).transpose() * sol.g(k);
        out.col = cross.cwiseAbs().maxCoeff();
    }
    return out;
}

nlohmann::json to_json(const MlrankSolution& sol) {
    const StationarityReport st = stationarity_report(sol);
    return {
        {"rank", sol.rank},
        {"objective", sol.objective},
        {"residual", sol.residual},
        {"sweeps", sol.sweeps},
        {"converged", sol.converged},
        {"init", sol.init_label},
        {"seed", sol.seed},
        {"agreeingStarts", sol.agreeing_starts},
        {"stationarityRow", st.row},
        {"stationarityCol", st.col},
        {"U1", matrix_to_json(sol.u1())},
        {"U2", matrix_to_json(sol.u2())},
        {"G1", matrix_to_json(sol.g(0))},
        {"G2", matrix_to_json(sol.g(1))},
    };
}

}  // namespace pencilrank
