#include "gsd/gsd_solver.hpp"

#include "common/error.hpp"
#include "common/random.hpp"
#include "linalg/dense.hpp"
#include "linalg/givens.hpp"
#include "tensor/tensor_io.hpp"

#include <algorithm>
#include <cmath>

namespace pencilrank {

namespace {

// Jacobi sweeps between Newton steps of the polish.
constexpr int kRelaxSweeps = 10;

// Rotate rows (minimized m, kept p), optimizing over the column range [lo, hi].
void row_rotation(GsdState& state, Eigen::Index m, Eigen::Index p, Eigen::Index lo, Eigen::Index hi) {
    RotationGram gram;
    for (const auto& t : state.rotated.slices) {
        for (Eigen::Index r = lo; r <= hi; ++r) {
            gram.xx += t(m, r) * t(m, r);
            gram.yy += t(p, r) * t(p, r);
            gram.xy += t(m, r) * t(p, r);
        }
    }
    const OptimalAngle best = optimal_angle(gram);
    if (best.degenerate) {
        ++state.skipped_degenerate;
        return;
    }
    if (best.angle == 0.0) return;
    state.rotated.rotate(RotationSide::Row, m, p, std::cos(best.angle), std::sin(best.angle));
}

// Rotate columns (minimized m, kept p), optimizing over the row range [lo, hi].
void column_rotation(GsdState& state, Eigen::Index m, Eigen::Index p, Eigen::Index lo,
                     Eigen::Index hi) {
    RotationGram gram;
    for (const auto& t : state.rotated.slices) {
        for (Eigen::Index r = lo; r <= hi; ++r) {
            gram.xx += t(r, m) * t(r, m);
            gram.yy += t(r, p) * t(r, p);
            gram.xy += t(r, m) * t(r, p);
        }
    }
    const OptimalAngle best = optimal_angle(gram);
    if (best.degenerate) {
        ++state.skipped_degenerate;
        return;
    }
    if (best.angle == 0.0) return;
    state.rotated.rotate(RotationSide::Column, m, p, std::cos(best.angle), std::sin(best.angle));
}

void row_pass(GsdState& state) {
    const Eigen::Index rank = state.rank;
    const Eigen::Index rows = state.rotated.slices[0].rows();
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = i + 1; j < rank; ++j) row_rotation(state, j, i, i, j - 1);
    }
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = rank; j < rows; ++j) row_rotation(state, j, i, i, rank - 1);
    }
}

void column_pass(GsdState& state) {
    const Eigen::Index rank = state.rank;
    const Eigen::Index cols = state.rotated.slices[0].cols();
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = i + 1; j < rank; ++j) column_rotation(state, i, j, i + 1, j);
    }
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = rank; j < cols; ++j) column_rotation(state, j, i, 0, i);
    }
}

void check_rank(const Array3& z, Eigen::Index rank) {
    const auto limit = std::min(z.rows(), z.cols());
    if (rank < 1 || rank > limit) {
        fail(ErrorCode::Dimension, "GSD rank must satisfy 1 <= R <= min(I,J) = " +
                                       std::to_string(limit) + ", got " + std::to_string(rank));
    }
}

Matrix block_diag(const Matrix& lead, Eigen::Index order) {
    Matrix out = Matrix::Identity(order, order);
    out.topLeftCorner(lead.rows(), lead.cols()) = lead;
    return out;
}

}  // namespace

std::string to_string(InitMode mode) {
    switch (mode) {
        case InitMode::Qz: return "qz";
        case InitMode::Random: return "random";
        case InitMode::Given: return "given";
    }
    return "qz";
}

InitMode init_mode_from_string(const std::string& name) {
    if (name == "qz") return InitMode::Qz;
    if (name == "random") return InitMode::Random;
    if (name == "given") return InitMode::Given;
    fail(ErrorCode::InvalidArgument, "unknown init mode '" + name + "' (expected qz, random or given)");
}

void GsdConfig::validate() const {
    if (!(rel_tol > 0.0)) fail(ErrorCode::InvalidArgument, "relTol must be positive");
    if (restarts < 1) fail(ErrorCode::InvalidArgument, "restarts must be at least 1");
    if (max_sweeps < 1) fail(ErrorCode::InvalidArgument, "maxSweeps must be at least 1");
    if (init == InitMode::Given && (!given_qa || !given_qb)) {
        fail(ErrorCode::InvalidArgument, "init mode 'given' needs both starting factors");
    }
}

Matrix GsdSolution::core(int k) const {
    return transformed.at(static_cast<std::size_t>(k)).topLeftCorner(rank, rank).triangularView<Eigen::Upper>();
}

Array3 GsdSolution::core_array() const { return Array3(core(0), core(1)); }

Array3 GsdSolution::solution_array() const {
    const Matrix a = qa();
    const Matrix b = qb();
    return Array3(a * core(0) * b.transpose(), a * core(1) * b.transpose());
}

double gsd_objective(const std::array<Matrix, 2>& slices, Eigen::Index rank) {
    double total = 0.0;
    for (const auto& t : slices) {
        total += t.squaredNorm();
        total -= t.topLeftCorner(rank, rank).triangularView<Eigen::Upper>().toDenseMatrix().squaredNorm();
    }
    return std::max(total, 0.0);
}

GsdState make_gsd_state(const Array3& z, Eigen::Index rank, Matrix qa, Matrix qb) {
    check_rank(z, rank);
    if (qa.rows() != z.rows() || qa.cols() != z.rows() || qb.rows() != z.cols() ||
        qb.cols() != z.cols()) {
        fail(ErrorCode::Dimension, "starting factors must be I x I and J x J");
    }
    GsdState state;
    state.rank = rank;
    state.rotated = RotatedPair::start(z, std::move(qa), std::move(qb));
    state.objective = gsd_objective(state.rotated.slices, rank);
    return state;
}

GsdState sweep_once(GsdState state, SweepOrder order) {
    if (order == SweepOrder::RowsFirst) {
        row_pass(state);
        column_pass(state);
    } else {
        column_pass(state);
        row_pass(state);
    }
    state.objective = gsd_objective(state.rotated.slices, state.rank);
    return state;
}

MaskedRotationObjective gsd_angle_objective(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank) {
    return MaskedRotationObjective(gsd_mask(rows, cols, rank), gsd_parameters(rows, cols, rank));
}

std::pair<Matrix, Matrix> qz_start(const Array3& z, Eigen::Index rank) {
    if (z.is_square()) {
        const SchurInit schur = generalized_schur(z.slice(0), z.slice(1));
        return {schur.qa, schur.qb};
    }
    const Matrix u = svd(wide_unfold(z)).u;
    const Matrix v = svd(tall_unfold(z)).v;
    const Matrix c1 = u.leftCols(rank).transpose() * z.slice(0) * v.leftCols(rank);
    const Matrix c2 = u.leftCols(rank).transpose() * z.slice(1) * v.leftCols(rank);
    const SchurInit schur = generalized_schur(c1, c2);
    return {u * block_diag(schur.qa, z.rows()), v * block_diag(schur.qb, z.cols())};
}

GsdSolution fit_gsd_from(const Array3& z, Eigen::Index rank, Matrix qa, Matrix qb,
                         const GsdConfig& cfg, InitMode mode, std::string label) {
    GsdState state = make_gsd_state(z, rank, std::move(qa), std::move(qb));
    const double norm_sq = frobenius_norm_sq(z);
    const double floor = 1e-28 * std::max(norm_sq, 1e-300);

    GsdSolution sol;
    sol.rank = rank;
    sol.init = mode;
    sol.init_label = std::move(label);
    sol.seed = cfg.seed;
    sol.objective_trace.reserve(64);

    double previous = state.objective;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        state = sweep_once(std::move(state), cfg.order);
        ++sol.sweeps;
        sol.objective_trace.push_back(state.objective);
        const double decrease = previous - state.objective;
        if (previous <= floor || decrease < cfg.rel_tol * previous) {
            sol.sweep_converged = true;
            break;
        }
        previous = state.objective;
    }

    if (cfg.polish && state.objective > floor) {
        const auto objective = gsd_angle_objective(z.rows(), z.cols(), rank);
        const auto relax = [&](RotatedPair& pair) {
            const double value = gsd_objective(pair.slices, rank);
            GsdState inner{rank, std::move(pair), value, 0};
            for (int k = 0; k < kRelaxSweeps; ++k) inner = sweep_once(std::move(inner), cfg.order);
            pair = std::move(inner.rotated);
        };
        const PolishResult polish = newton_polish(objective, state.rotated, relax);
        sol.polish_iterations = polish.iterations;
        sol.polish_gradient = polish.max_abs_gradient;
        state.objective = gsd_objective(state.rotated.slices, rank);
        sol.converged = polish.max_abs_gradient <= 1e-12 * norm_sq;
    }
    sol.converged = sol.converged || sol.sweep_converged;

    sol.full_qa = std::move(state.rotated.qa);
    sol.full_qb = std::move(state.rotated.qb);
    sol.transformed = std::move(state.rotated.slices);
    sol.residual = state.objective;
    return sol;
}

GsdStart gsd_start(const Array3& z, Eigen::Index rank, const GsdConfig& cfg, int start) {
    Rng rng = make_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(start)));
    GsdStart out;
    out.mode = start == 0 ? cfg.init : InitMode::Random;
    out.label = to_string(out.mode);
    if (out.mode == InitMode::Qz) {
        try {
            std::tie(out.qa, out.qb) = qz_start(z, rank);
            return out;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Numerical) throw;
            out.mode = InitMode::Random;
            out.label = "random-fallback";
        }
    } else if (out.mode == InitMode::Given) {
        out.qa = *cfg.given_qa;
        out.qb = *cfg.given_qb;
        return out;
    }
    out.qa = random_orthonormal(z.rows(), rng);
    out.qb = random_orthonormal(z.cols(), rng);
    return out;
}

GsdSolution fit_gsd(const Array3& z, Eigen::Index rank, const GsdConfig& cfg) {
    check_rank(z, rank);
    cfg.validate();

    std::optional<GsdSolution> best;
    for (int start = 0; start < cfg.restarts; ++start) {
        GsdStart init = gsd_start(z, rank, cfg, start);
        GsdSolution sol = fit_gsd_from(z, rank, std::move(init.qa), std::move(init.qb), cfg,
                                       init.mode, std::move(init.label));
        if (!best || sol.residual < best->residual) best = std::move(sol);
    }
    return std::move(*best);
}

nlohmann::json to_json(const GsdSolution& sol) {
    return {
        {"rank", sol.rank},
        {"residual", sol.residual},
        {"sweeps", sol.sweeps},
        {"converged", sol.converged},
        {"sweepConverged", sol.sweep_converged},
        {"polishIterations", sol.polish_iterations},
        {"init", sol.init_label},
        {"seed", sol.seed},
        {"Qa", matrix_to_json(sol.qa())},
        {"Qb", matrix_to_json(sol.qb())},
        {"R1", matrix_to_json(sol.core(0))},
        {"R2", matrix_to_json(sol.core(1))},
    };
}

}  // namespace pencilrank
