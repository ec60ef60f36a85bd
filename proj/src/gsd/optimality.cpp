#include "gsd/optimality.hpp"

#include "common/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pencilrank {

namespace {

double row_inner(const std::array<Matrix, 2>& t, Eigen::Index a, Eigen::Index b, Eigen::Index lo,
                 Eigen::Index hi) {
    double s = 0.0;
    for (const auto& m : t) {
        for (Eigen::Index r = lo; r <= hi; ++r) s += m(a, r) * m(b, r);
    }
    return s;
}

double col_inner(const std::array<Matrix, 2>& t, Eigen::Index a, Eigen::Index b, Eigen::Index lo,
                 Eigen::Index hi) {
    double s = 0.0;
    for (const auto& m : t) {
        for (Eigen::Index r = lo; r <= hi; ++r) s += m(r, a) * m(r, b);
    }
    return s;
}

RotatedPair identity_state(const std::array<Matrix, 2>& t) {
    RotatedPair state;
    state.slices = t;
    state.qa = Matrix::Identity(t[0].rows(), t[0].rows());
    state.qb = Matrix::Identity(t[0].cols(), t[0].cols());
    return state;
}

void require_square_full_rank(const std::array<Matrix, 2>& t, Eigen::Index rank) {
    if (t[0].rows() != t[0].cols() || rank != t[0].rows()) {
        fail(ErrorCode::Unsupported, "the Hessian study is defined for square arrays with R = I = J");
    }
}

double fd_step(const std::array<Matrix, 2>& t) {
    const double norm = std::sqrt(t[0].squaredNorm() + t[1].squaredNorm());
    return 1e-5 * std::max(1.0, norm);
}

std::vector<double> symmetric_eigenvalues(const Matrix& h) {
    if (h.size() == 0) return {};
    const Matrix sym = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    const Vector& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

nlohmann::json pairs_json(const std::vector<PairValue>& values) {
    auto out = nlohmann::json::array();
    for (const auto& p : values) out.push_back({{"i", p.i + 1}, {"j", p.j + 1}, {"value", p.value}});
    return out;
}

nlohmann::json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

void first_order_conditions(const std::array<Matrix, 2>& t, Eigen::Index rank, OptimalityReport& out) {
    const Eigen::Index rows = t[0].rows();
    const Eigen::Index cols = t[0].cols();
    out.first_row.clear();
    out.first_col.clear();
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = i + 1; j < rank; ++j) out.first_row.push_back({i, j, row_inner(t, i, j, i, j - 1)});
    }
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = rank; j < rows; ++j) {
            out.first_row.push_back({i, j, row_inner(t, i, j, i, rank - 1)});
        }
    }
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = i + 1; j < rank; ++j) out.first_col.push_back({i, j, col_inner(t, i, j, i + 1, j)});
    }
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = rank; j < cols; ++j) out.first_col.push_back({i, j, col_inner(t, i, j, 0, i)});
    }
    out.max_abs_first = 0.0;
    for (const auto* list : {&out.first_row, &out.first_col}) {
        for (const auto& p : *list) out.max_abs_first = std::max(out.max_abs_first, std::abs(p.value));
    }
}

void second_order_conditions(const std::array<Matrix, 2>& t, Eigen::Index rank, OptimalityReport& out) {
    out.second_row.clear();
    out.second_col.clear();
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = i + 1; j < rank; ++j) {
            const double kept = row_inner(t, i, i, i, j - 1);
            const double moved = row_inner(t, j, j, i, j - 1);
            out.second_row.push_back({i, j, kept - moved});
        }
    }
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = i + 1; j < rank; ++j) {
            const double kept = col_inner(t, j, j, i + 1, j);
            const double moved = col_inner(t, i, i, i + 1, j);
            out.second_col.push_back({i, j, kept - moved});
        }
    }
    out.min_second = std::numeric_limits<double>::infinity();
    for (const auto* list : {&out.second_row, &out.second_col}) {
        for (const auto& p : *list) out.min_second = std::min(out.min_second, p.value);
    }
}

Matrix gsd_hessian_finite_difference(const std::array<Matrix, 2>& t, Eigen::Index rank, double h) {
    require_square_full_rank(t, rank);
    const auto objective = gsd_angle_objective(t[0].rows(), t[0].cols(), rank);
    const RotatedPair state = identity_state(t);
    const Eigen::Index d = objective.dimension();
    const double f0 = objective.value(state);
    auto f = [&](Eigen::Index p, double a, Eigen::Index q, double b) {
        Vector angles = Vector::Zero(d);
        angles(p) += a;
        angles(q) += b;
        return objective.value_at(state, angles);
    };
    Matrix out(d, d);
    for (Eigen::Index p = 0; p < d; ++p) {
        out(p, p) = (f(p, h, p, 0.0) - 2.0 * f0 + f(p, -h, p, 0.0)) / (h * h);
        for (Eigen::Index q = p + 1; q < d; ++q) {
            const double v = (f(p, h, q, h) - f(p, h, q, -h) - f(p, -h, q, h) + f(p, -h, q, -h)) / (4.0 * h * h);
            out(p, q) = v;
            out(q, p) = v;
        }
    }
    return out;
}

Matrix gsd_hessian_analytic(const std::array<Matrix, 2>& t, Eigen::Index rank) {
    require_square_full_rank(t, rank);
    const auto objective = gsd_angle_objective(t[0].rows(), t[0].cols(), rank);
    return objective.hessian(identity_state(t));
}

HessianResult gsd_hessian(const std::array<Matrix, 2>& t, Eigen::Index rank) {
    require_square_full_rank(t, rank);
    HessianResult out;
    out.step = fd_step(t);
    out.matrix = gsd_hessian_finite_difference(t, rank, out.step);

    OptimalityReport second;
    second_order_conditions(t, rank, second);
    Eigen::Index p = 0;
    for (const auto* list : {&second.second_row, &second.second_col}) {
        for (const auto& v : *list) out.matrix(p, p) = out.diagonal_scale * v.value, ++p;
    }
    out.eigenvalues = symmetric_eigenvalues(out.matrix);
    return out;
}

OptimalityReport optimality_report(const Array3& transformed, Eigen::Index rank, bool with_hessian) {
    const std::array<Matrix, 2> t{transformed.slice(0), transformed.slice(1)};
    OptimalityReport out;
    first_order_conditions(t, rank, out);
    second_order_conditions(t, rank, out);
    out.residual = gsd_objective(t, rank);
    out.converged = true;
    out.sweep_converged = true;
    out.init = "given";
    if (with_hessian) out.hessian_eigs = gsd_hessian(t, rank).eigenvalues;
    return out;
}

OptimalityReport optimality_report(const GsdSolution& sol, bool with_hessian) {
    OptimalityReport out;
    first_order_conditions(sol.transformed, sol.rank, out);
    second_order_conditions(sol.transformed, sol.rank, out);
    out.residual = sol.residual;
    out.sweeps = sol.sweeps;
    out.converged = sol.converged;
    out.sweep_converged = sol.sweep_converged;
    out.polish_iterations = sol.polish_iterations;
    out.init = sol.init_label;
    out.seed = sol.seed;
    if (with_hessian) out.hessian_eigs = gsd_hessian(sol.transformed, sol.rank).eigenvalues;
    return out;
}

std::vector<StudyEntry> multi_start_study(const Array3& z, Eigen::Index rank, const GsdConfig& cfg,
                                          bool with_hessian) {
    cfg.validate();
    std::vector<StudyEntry> entries;
    entries.reserve(static_cast<std::size_t>(cfg.restarts));
    const bool hessian_ok = with_hessian && z.is_square() && rank == z.rows();
    for (int start = 0; start < cfg.restarts; ++start) {
        GsdStart init = gsd_start(z, rank, cfg, start);
        const GsdSolution sol = fit_gsd_from(z, rank, std::move(init.qa), std::move(init.qb), cfg,
                                             init.mode, std::move(init.label));
        StudyEntry e;
        e.start = start;
        e.init = sol.init_label;
        e.residual = sol.residual;
        e.report = optimality_report(sol, hessian_ok);
        entries.push_back(std::move(e));
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : entries) best = std::min(best, e.residual);
    const double slack = 1e-6 * std::max(best, 1e-12 * frobenius_norm_sq(z));
    for (auto& e : entries) e.suboptimal = e.residual - best > slack;
    return entries;
}

nlohmann::json to_json(const OptimalityReport& r) {
    nlohmann::json hess = nullptr;
    if (r.hessian_eigs) hess = *r.hessian_eigs;
    return {
        {"maxAbsFirst", r.max_abs_first},
        {"minSecond", finite_or_null(r.min_second)},
        {"hessianEigs", hess},
        {"hessianDiagonalScale", 2.0},
        {"residual", r.residual},
        {"sweeps", r.sweeps},
        {"converged", r.converged},
        {"sweepConverged", r.sweep_converged},
        {"polishIterations", r.polish_iterations},
        {"init", r.init},
        {"seed", r.seed},
        {"firstOrderRow", pairs_json(r.first_row)},
        {"firstOrderCol", pairs_json(r.first_col)},
        {"secondOrderRow", pairs_json(r.second_row)},
        {"secondOrderCol", pairs_json(r.second_col)},
    };
}

}  // namespace pencilrank
