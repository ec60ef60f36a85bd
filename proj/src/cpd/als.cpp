#include "cpd/als.hpp"

#include "common/error.hpp"
#include "common/random.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace pencilrank {

namespace {

constexpr double kRidge = 1e-12;

Matrix random_factor(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = standard_normal(rng);
    }
    return m;
}

// Solve X G = rhs for symmetric positive semidefinite G, adding a ridge when it is singular.
Matrix solve_right(const Matrix& gram, const Matrix& rhs, bool& ridged) {
    Eigen::LLT<Matrix> llt(gram);
    const double diag = gram.diagonal().cwiseAbs().maxCoeff();
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
        const Vector d = llt.matrixL().toDenseMatrix().diagonal();
        ok = d.minCoeff() > std::sqrt(kRidge * std::max(diag, 1e-300));
    }
    if (!ok) {
        ridged = true;
        const Eigen::Index n = gram.rows();
        llt.compute(gram + kRidge * std::max(diag, 1e-300) * Matrix::Identity(n, n));
    }
    return llt.solve(rhs.transpose()).transpose();
}

void balance(Matrix& a, Matrix& b, Matrix& c) {
    for (Eigen::Index r = 0; r < a.cols(); ++r) {
        const double na = a.col(r).norm();
        const double nb = b.col(r).norm();
        const double nc = c.col(r).norm();
        if (na == 0.0 || nb == 0.0 || nc == 0.0) continue;
        const double target = std::cbrt(na * nb * nc);
        a.col(r) *= target / na;
        b.col(r) *= target / nb;
        c.col(r) *= target / nc;
    }
}

double min_angle_deg(const Matrix& a) {
    double best = 90.0;
    for (Eigen::Index r = 0; r < a.cols(); ++r) {
        for (Eigen::Index s = r + 1; s < a.cols(); ++s) {
            const double denom = a.col(r).norm() * a.col(s).norm();
            if (denom == 0.0) continue;
            const double cosine = std::min(1.0, std::abs(a.col(r).dot(a.col(s))) / denom);
            best = std::min(best, std::acos(cosine) * 180.0 / std::numbers::pi);
        }
    }
    return best;
}

double max_col_norm(const Matrix& m) { return m.colwise().norm().maxCoeff(); }

}  // namespace

double cpd_error(const Array3& z, const Matrix& a, const Matrix& b, const Matrix& c) {
    double e = 0.0;
    for (int k = 0; k < 2; ++k) {
        e += (z.slice(k) - a * c.row(k).asDiagonal() * b.transpose()).squaredNorm();
    }
    return e;
}

Array3 CpdModel::reconstruct() const {
    return Array3(a * c.row(0).asDiagonal() * b.transpose(), a * c.row(1).asDiagonal() * b.transpose());
}

std::string DegeneracySignal::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "iteration,error,maxNormA,maxNormB,minAngleDeg\n";
    for (std::size_t i = 0; i < iteration.size(); ++i) {
        out << iteration[i] << ',' << error[i] << ',' << max_norm_a[i] << ',' << max_norm_b[i] << ','
            << min_angle_deg[i] << '\n';
    }
    return out.str();
}

AlsResult fit_als(const Array3& z, Eigen::Index rank, const AlsConfig& cfg) {
    if (rank < 1) fail(ErrorCode::InvalidArgument, "CPD rank must be at least 1");
    if (cfg.iterations < 0) fail(ErrorCode::InvalidArgument, "iteration count must be nonnegative");
    Rng rng = make_rng(cfg.seed);
    AlsResult out;
    Matrix a = random_factor(z.rows(), rank, rng);
    Matrix b = random_factor(z.cols(), rank, rng);
    Matrix c = random_factor(2, rank, rng);
    balance(a, b, c);

    const double total = frobenius_norm_sq(z);
    double error = cpd_error(z, a, b, c);
    auto track = [&](double next) {
        out.max_increase = std::max(out.max_increase, next - error);
        error = next;
    };

    for (int it = 1; it <= cfg.iterations; ++it) {
        const Matrix ctc = c.transpose() * c;
        Matrix rhs = Matrix::Zero(z.rows(), rank);
        for (int k = 0; k < 2; ++k) rhs += z.slice(k) * b * c.row(k).asDiagonal();
        a = solve_right((b.transpose() * b).cwiseProduct(ctc), rhs, out.ridge_applied);
        track(cpd_error(z, a, b, c));

        rhs = Matrix::Zero(z.cols(), rank);
        for (int k = 0; k < 2; ++k) rhs += z.slice(k).transpose() * a * c.row(k).asDiagonal();
        b = solve_right((a.transpose() * a).cwiseProduct(ctc), rhs, out.ridge_applied);
        track(cpd_error(z, a, b, c));

        const Matrix gram = (a.transpose() * a).cwiseProduct(b.transpose() * b);
        Matrix crhs(2, rank);
        for (int k = 0; k < 2; ++k) crhs.row(k) = (a.transpose() * z.slice(k) * b).diagonal().transpose();
        c = solve_right(gram, crhs, out.ridge_applied);
        track(cpd_error(z, a, b, c));

        balance(a, b, c);
        out.signal.iteration.push_back(it);
        out.signal.error.push_back(error);
        out.signal.max_norm_a.push_back(max_col_norm(a));
        out.signal.max_norm_b.push_back(max_col_norm(b));
        out.signal.min_angle_deg.push_back(min_angle_deg(a));
        if (error <= cfg.error_floor * total) break;
    }
    out.model = {std::move(a), std::move(b), std::move(c), error};
    return out;
}

}  // namespace pencilrank
