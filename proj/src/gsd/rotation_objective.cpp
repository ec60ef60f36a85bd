#include "gsd/rotation_objective.hpp"

#include "common/error.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <functional>

namespace pencilrank {

namespace {

// Right-multiply `u` by the Givens matrix G(i, j, angle).
void right_givens(Matrix& u, Eigen::Index i, Eigen::Index j, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const Vector ci = u.col(i);
    const Vector cj = u.col(j);
    u.col(i) = c * ci + s * cj;
    u.col(j) = c * cj - s * ci;
}

// A matrix that is zero outside two rows (or two columns) a and b.
struct TwoLines {
    RotationSide side = RotationSide::Row;
    Eigen::Index a = 0;
    Eigen::Index b = 0;
    Vector la;
    Vector lb;

    double at(Eigen::Index r, Eigen::Index c) const {
        if (side == RotationSide::Row) return r == a ? la(c) : r == b ? lb(c) : 0.0;
        return c == a ? la(r) : c == b ? lb(r) : 0.0;
    }
};

Vector line(const Matrix& m, RotationSide side, Eigen::Index k) {
    return side == RotationSide::Row ? Vector(m.row(k).transpose()) : Vector(m.col(k));
}

// Derivative of T under the generator of `p` (A = dG/dangle at 0, A(j,i) = 1, A(i,j) = -1):
// rows: A^T T, columns: T A.
TwoLines first_derivative(const Matrix& t, const RotationPair& p) {
    return {p.side, p.i, p.j, line(t, p.side, p.j), -line(t, p.side, p.i)};
}

// Adjoint factor used by the second-order terms: rows: A X, columns: X A^T.
TwoLines adjoint_factor(const Matrix& x, const RotationPair& p) {
    return {p.side, p.i, p.j, -line(x, p.side, p.j), line(x, p.side, p.i)};
}

TwoLines masked(const Matrix& mask, TwoLines d) {
    d.la = d.la.cwiseProduct(line(mask, d.side, d.a));
    d.lb = d.lb.cwiseProduct(line(mask, d.side, d.b));
    return d;
}

// Frobenius inner product; only shared lines (same side) or the four crossing
// entries (opposite sides) contribute.
double inner(const TwoLines& x, const TwoLines& y) {
    if (x.side == y.side) {
        double v = 0.0;
        if (x.a == y.a) v += x.la.dot(y.la);
        if (x.a == y.b) v += x.la.dot(y.lb);
        if (x.b == y.a) v += x.lb.dot(y.la);
        if (x.b == y.b) v += x.lb.dot(y.lb);
        return v;
    }
    const TwoLines& rows = x.side == RotationSide::Row ? x : y;
    const TwoLines& cols = x.side == RotationSide::Row ? y : x;
    double v = 0.0;
    for (Eigen::Index r : {rows.a, rows.b}) {
        for (Eigen::Index c : {cols.a, cols.b}) v += rows.at(r, c) * cols.at(r, c);
    }
    return v;
}

}  // namespace

RotatedPair RotatedPair::start(const Array3& z, Matrix qa, Matrix qb) {
    RotatedPair out;
    out.slices = {qa.transpose() * z.slice(0) * qb, qa.transpose() * z.slice(1) * qb};
    out.qa = std::move(qa);
    out.qb = std::move(qb);
    return out;
}

void RotatedPair::rotate(RotationSide side, Eigen::Index minimized, Eigen::Index kept, double c,
                         double s) {
    if (side == RotationSide::Row) {
        for (auto& t : slices) {
            const Eigen::RowVectorXd m = t.row(minimized);
            const Eigen::RowVectorXd p = t.row(kept);
            t.row(minimized) = c * m + s * p;
            t.row(kept) = c * p - s * m;
        }
        const Vector m = qa.col(minimized);
        const Vector p = qa.col(kept);
        qa.col(minimized) = c * m + s * p;
        qa.col(kept) = c * p - s * m;
    } else {
        for (auto& t : slices) {
            const Vector m = t.col(minimized);
            const Vector p = t.col(kept);
            t.col(minimized) = c * m + s * p;
            t.col(kept) = c * p - s * m;
        }
        const Vector m = qb.col(minimized);
        const Vector p = qb.col(kept);
        qb.col(minimized) = c * m + s * p;
        qb.col(kept) = c * p - s * m;
    }
}

void RotatedPair::apply_parameters(const std::vector<RotationPair>& params, const Vector& angles) {
    Matrix ua = Matrix::Identity(qa.cols(), qa.cols());
    Matrix ub = Matrix::Identity(qb.cols(), qb.cols());
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& p = params[k];
        right_givens(p.side == RotationSide::Row ? ua : ub, p.i, p.j, angles(static_cast<Eigen::Index>(k)));
    }
    for (auto& t : slices) t = ua.transpose() * t * ub;
    qa = qa * ua;
    qb = qb * ub;
}

MaskedRotationObjective::MaskedRotationObjective(Matrix mask, std::vector<RotationPair> params)
    : mask_(std::move(mask)), params_(std::move(params)) {
    for (const auto& p : params_) {
        const auto n = p.side == RotationSide::Row ? mask_.rows() : mask_.cols();
        if (p.i < 0 || p.j <= p.i || p.j >= n) {
            fail(ErrorCode::Dimension, "rotation pair out of range");
        }
    }
}

double MaskedRotationObjective::value(const RotatedPair& state) const {
    double f = 0.0;
    for (const auto& t : state.slices) f += mask_.cwiseProduct(t).squaredNorm();
    return f;
}

double MaskedRotationObjective::value_at(const RotatedPair& state, const Vector& angles) const {
    RotatedPair moved = state;
    moved.apply_parameters(params_, angles);
    return value(moved);
}

Vector MaskedRotationObjective::gradient(const RotatedPair& state) const {
    const Eigen::Index d = dimension();
    Vector g = Vector::Zero(d);
    for (const auto& t : state.slices) {
        const Matrix pt = mask_.cwiseProduct(t);
        for (Eigen::Index p = 0; p < d; ++p) {
            const TwoLines e = first_derivative(t, params_[static_cast<std::size_t>(p)]);
            g(p) += 2.0 * (line(pt, e.side, e.a).dot(e.la) + line(pt, e.side, e.b).dot(e.lb));
        }
    }
    return g;
}

Matrix MaskedRotationObjective::hessian(const RotatedPair& state) const {
    const Eigen::Index d = dimension();
    Matrix h = Matrix::Zero(d, d);
    if (d == 0) return h;
    std::vector<TwoLines> derivs(static_cast<std::size_t>(d));
    std::vector<TwoLines> masked_derivs(derivs.size());
    std::vector<TwoLines> adjoint(derivs.size());
    for (const auto& t : state.slices) {
        const Matrix pt = mask_.cwiseProduct(t);
        for (std::size_t p = 0; p < derivs.size(); ++p) {
            derivs[p] = first_derivative(t, params_[p]);
            masked_derivs[p] = masked(mask_, derivs[p]);
            adjoint[p] = adjoint_factor(pt, params_[p]);
        }
        for (std::size_t p = 0; p < derivs.size(); ++p) {
            for (std::size_t q = p; q < derivs.size(); ++q) {
                const bool same_side = params_[p].side == params_[q].side;
                if (same_side && params_[p].i != params_[q].i && params_[p].i != params_[q].j &&
                    params_[p].j != params_[q].i && params_[p].j != params_[q].j) {
                    continue;   // disjoint lines
                }
                // <F_a, E_b> with the later factor adjoint for same-side pairs.
                const double second = same_side ? inner(adjoint[q], derivs[p]) : inner(adjoint[p], derivs[q]);
                const double v = 2.0 * (inner(masked_derivs[p], masked_derivs[q]) + second);
                const auto pi = static_cast<Eigen::Index>(p);
                const auto qi = static_cast<Eigen::Index>(q);
                h(pi, qi) += v;
                if (q != p) h(qi, pi) += v;
            }
        }
    }
    return h;
}

Matrix gsd_mask(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank) {
    Matrix m = Matrix::Ones(rows, cols);
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = i; j < rank; ++j) m(i, j) = 0.0;
    }
    return m;
}

Matrix block_mask(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank) {
    Matrix m = Matrix::Ones(rows, cols);
    m.topLeftCorner(rank, rank).setZero();
    return m;
}

std::vector<RotationPair> gsd_parameters(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank) {
    std::vector<RotationPair> out;
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = i + 1; j < rows; ++j) out.push_back({RotationSide::Row, i, j});
    }
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = i + 1; j < cols; ++j) out.push_back({RotationSide::Column, i, j});
    }
    return out;
}

std::vector<RotationPair> subspace_parameters(Eigen::Index rows, Eigen::Index cols,
                                              Eigen::Index rank) {
    std::vector<RotationPair> out;
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = rank; j < rows; ++j) out.push_back({RotationSide::Row, i, j});
    }
    for (Eigen::Index i = 0; i < rank; ++i) {
        for (Eigen::Index j = rank; j < cols; ++j) out.push_back({RotationSide::Column, i, j});
    }
    return out;
}

PolishResult newton_polish(const MaskedRotationObjective& objective, RotatedPair& state,
                           const std::function<void(RotatedPair&)>& relax, int max_iterations) {
    PolishResult result;
    double scale = 0.0;
    for (const auto& t : state.slices) scale += t.squaredNorm();
    const double floor = 1e-15 * std::max(scale, 1e-300);
    const Eigen::Index d = objective.dimension();

    Vector g = objective.gradient(state);
    double f = objective.value(state);
    result.max_abs_gradient = d ? g.cwiseAbs().maxCoeff() : 0.0;
    double last_shift = 0.0;
    for (int it = 0; it < max_iterations && result.max_abs_gradient > floor; ++it) {
        const Matrix h = objective.hessian(state);
        // Levenberg shift until the (shifted) Hessian factors, starting near the previous one.
        const double base = std::max(h.cwiseAbs().maxCoeff(), 1e-300);
        double shift = 0.0;
        Eigen::LLT<Matrix> llt(h);
        result.positive_definite = llt.info() == Eigen::Success;
        for (int k = 0; llt.info() != Eigen::Success && k < 60; ++k) {
            shift = shift == 0.0 ? std::max(1e-10 * base, last_shift / 16.0) : 4.0 * shift;
            llt.compute(h + shift * Matrix::Identity(d, d));
        }
        if (llt.info() != Eigen::Success) break;
        last_shift = shift;
        Vector step = -llt.solve(g);
        const double longest = step.cwiseAbs().maxCoeff();
        if (longest > 0.25) step *= 0.25 / longest;
        const double slope = g.dot(step);

        bool accepted = false;
        for (double t = 1.0; t > 1e-6 && !accepted; t *= 0.5) {
            RotatedPair trial = state;
            trial.apply_parameters(objective.parameters(), t * step);
            const double f_trial = objective.value(trial);
            const bool sufficient = slope < 0.0 && f_trial <= f + 1e-4 * t * slope;
            bool flat = false;
            if (!sufficient && f_trial <= f + 1e-13 * scale) {
                flat = objective.gradient(trial).cwiseAbs().maxCoeff() < result.max_abs_gradient;
            }
            if (!sufficient && !flat) continue;
            state = std::move(trial);
            accepted = true;
        }
        const double before = f;
        if (relax) relax(state);
        f = objective.value(state);
        g = objective.gradient(state);
        result.max_abs_gradient = g.cwiseAbs().maxCoeff();
        if (!accepted && !(f < before)) break;
        ++result.iterations;
    }
    return result;
}

}  // namespace pencilrank
