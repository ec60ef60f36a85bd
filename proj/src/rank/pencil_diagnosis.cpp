#include "rank/pencil_diagnosis.hpp"

#include "common/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

namespace pencilrank {

namespace {

constexpr int kMixAngles = 17;
constexpr double kNearDefectiveWindow = 1e-2;

// Reciprocal condition number above 1e-12. For R = 2 this is |det Y| > 1e-12 ||Y||_2^2;
// a determinant test would reject well-conditioned slices of large order.
double reciprocal_condition(const Matrix& y) {
    Eigen::JacobiSVD<Matrix> svd(y);
    const Vector& s = svd.singularValues();
    return s(0) == 0.0 ? 0.0 : s(s.size() - 1) / s(0);
}

bool well_determined(const Matrix& y) { return reciprocal_condition(y) > 1e-12; }

bool upper_triangular(const Matrix& y) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        for (Eigen::Index i = j + 1; i < y.rows(); ++i) {
            if (y(i, j) != 0.0) return false;
        }
    }
    return true;
}

Eigen::Matrix2d rotation_mix(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Eigen::Matrix2d m;
    m << c, s, -s, c;
    return m;
}

double smallest_singular_value(const Matrix& m, Complex shift) {
    const Eigen::Index n = m.rows();
    if (shift.imag() == 0.0) {
        Eigen::JacobiSVD<Matrix> svd(m - shift.real() * Matrix::Identity(n, n));
        return svd.singularValues()(n - 1);
    }
    using CMatrix = Eigen::MatrixXcd;
    Eigen::JacobiSVD<CMatrix> svd(m.cast<Complex>() - shift * CMatrix::Identity(n, n));
    return svd.singularValues()(n - 1);
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

// Group label (smallest member index) per eigenvalue.
std::vector<std::size_t> cluster_labels(const ComplexEigenList& values, const Matrix& m, double tol,
                                        double rank_tol) {
    const std::size_t n = values.size();
    UnionFind uf(n);
    Eigen::JacobiSVD<Matrix> svd(m);
    const double norm = svd.singularValues()(0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const double gap = std::abs(values[a] - values[b]);
            const double scale = std::max({1.0, std::abs(values[a]), std::abs(values[b])});
            if (gap <= tol * scale) {
                uf.unite(a, b);
            } else if (gap <= kNearDefectiveWindow * scale) {
                const Complex mean = 0.5 * (values[a] + values[b]);
                if (smallest_singular_value(m, mean) <= rank_tol * norm) uf.unite(a, b);
            }
        }
    }
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = uf.find(i);
    return labels;
}

Matrix pencil_matrix(const Array3& core) {
    // M = Y2 Y1^{-1}, via Y1^T M^T = Y2^T.
    Eigen::FullPivLU<Matrix> lu(core.slice(0).transpose());
    return lu.solve(core.slice(1).transpose()).transpose();
}

}  // namespace

std::string to_string(RankVerdict verdict) {
    switch (verdict) {
        case RankVerdict::RankR: return "RankR";
        case RankVerdict::RankExceedsR_Jordan: return "RankExceedsR_Jordan";
        case RankVerdict::RankExceedsR_Complex: return "RankExceedsR_Complex";
        case RankVerdict::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

SliceMix slice_mix(const Array3& core) {
    if (!core.is_square()) fail(ErrorCode::Dimension, "slice mix needs a core with square slices");
    for (int k = 0; k < kMixAngles; ++k) {
        const double angle = k * std::numbers::pi / kMixAngles;
        const Eigen::Matrix2d mix = rotation_mix(angle);
        Array3 mixed = mix_slices(core, mix);
        if (well_determined(mixed.slice(0)) && well_determined(mixed.slice(1))) {
            return {std::move(mixed), mix, angle};
        }
    }
    fail(ErrorCode::DegenerateCore, "no slice mix makes both core slices nonsingular");
}

PencilDiagnosis diagnose_core(const Array3& core, const DiagnosisConfig& cfg) {
    if (!core.is_square()) fail(ErrorCode::Dimension, "pencil diagnosis needs a core with square slices");
    PencilDiagnosis out;
    Array3 work = core;
    std::optional<Eigen::Matrix2d> conditioning;
    if (!well_determined(core.slice(0))) {
        SliceMix mixed = slice_mix(core);
        work = std::move(mixed.core);
        out.mix = mixed.mix;
        out.slices_mixed = true;
    } else {
        // A nearly singular Y1 pushes a group of eigenvalues towards infinity,
        // where the multiplicity tests lose it; analyze in a 10x better
        // conditioned slice mix if there is one and report unmixed values.
        double best = 10.0 * reciprocal_condition(core.slice(0));
        for (int k = 1; k < kMixAngles; ++k) {
            const Eigen::Matrix2d mix = rotation_mix(k * std::numbers::pi / kMixAngles);
            const double rc = reciprocal_condition(mix_slices(core, mix).slice(0));
            if (rc > best) {
                best = rc;
                conditioning = mix;
            }
        }
        if (conditioning) work = mix_slices(core, *conditioning);
    }
    const Matrix m = pencil_matrix(work);
    if (upper_triangular(work.slice(0)) && upper_triangular(work.slice(1))) {
        // Exact for triangular pairs and immune to the splitting of defective eigenvalues.
        const Vector ratios = work.slice(1).diagonal().cwiseQuotient(work.slice(0).diagonal());
        out.eigenvalues.assign(ratios.data(), ratios.data() + ratios.size());
        sort_eigenvalues(out.eigenvalues);
    } else {
        out.eigenvalues = eigvals_real_matrix(m);
    }

    const auto labels = cluster_labels(out.eigenvalues, m, cfg.cluster_tol, cfg.rank_tol);
    const auto coarse = cluster_labels(out.eigenvalues, m, 10.0 * cfg.cluster_tol, cfg.rank_tol);
    const bool tolerance_sensitive = labels != coarse;

    const double geometric_tol = std::max(cfg.rank_tol, 10.0 * cfg.cluster_tol);
    bool band = false;
    bool complex_pair = false;
    bool defective = false;
    for (std::size_t root = 0; root < labels.size(); ++root) {
        if (labels[root] != root) continue;
        EigenCluster c;
        Complex sum = 0.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == root) {
                sum += out.eigenvalues[i];
                ++c.algebraic;
            }
        }
        c.value = sum / static_cast<double>(c.algebraic);
        const double scale = std::max(1.0, std::abs(c.value));
        const double im = std::abs(c.value.imag());
        if (im <= cfg.real_tol * scale) {
            c.value = Complex(c.value.real(), 0.0);
        } else if (im <= 10.0 * cfg.real_tol * scale) {
            band = true;
        } else {
            complex_pair = true;
        }
        c.geometric = std::clamp(geometric_multiplicity(m, c.value, geometric_tol), 1, c.algebraic);
        defective = defective || c.geometric < c.algebraic;
        out.clusters.push_back(c);
    }
    if (conditioning) {
        // Back to eigenvalues of the unmixed pencil: Y1' = c Y1 + s Y2, Y2' = c Y2 - s Y1.
        const double c = (*conditioning)(0, 0), s = (*conditioning)(0, 1);
        const auto unmix = [c, s](Complex mu) { return (s + c * mu) / (c - s * mu); };
        for (Complex& v : out.eigenvalues) v = unmix(v);
        for (EigenCluster& cl : out.clusters) cl.value = unmix(cl.value);
        sort_eigenvalues(out.eigenvalues);
    }
    std::sort(out.clusters.begin(), out.clusters.end(), [](const EigenCluster& a, const EigenCluster& b) {
        if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
        return a.value.imag() < b.value.imag();
    });

    if (tolerance_sensitive) {
        out.verdict = RankVerdict::Indeterminate;
        out.note = "eigenvalue clustering changes between tol and 10 tol";
    } else if (band) {
        out.verdict = RankVerdict::Indeterminate;
        out.note = "an eigenvalue imaginary part lies inside the realness tolerance band";
    } else if (complex_pair) {
        out.verdict = RankVerdict::RankExceedsR_Complex;
    } else if (defective) {
        out.verdict = RankVerdict::RankExceedsR_Jordan;
    } else {
        out.verdict = RankVerdict::RankR;
    }
    return out;
}

std::vector<EigenCluster> diverging_groups(const PencilDiagnosis& diagnosis) {
    std::vector<EigenCluster> out;
    for (const auto& c : diagnosis.clusters) {
        if (c.geometric < c.algebraic) out.push_back(c);
    }
    return out;
}

GenericRank generic_rank_square(const Array3& z, const DiagnosisConfig& cfg) {
    if (!z.is_square()) fail(ErrorCode::Dimension, "generic rank test needs I = J");
    GenericRank out;
    out.diagnosis = diagnose_core(z, cfg);
    const auto& d = out.diagnosis;
    const bool repeated = std::any_of(d.clusters.begin(), d.clusters.end(),
                                      [](const EigenCluster& c) { return c.algebraic > 1; });
    if (d.verdict == RankVerdict::Indeterminate) {
        out.note = d.note;
    } else if (repeated) {
        out.note = "repeated eigenvalues: the array is not generic";
    } else if (d.verdict == RankVerdict::RankExceedsR_Complex) {
        out.rank = static_cast<int>(z.rows()) + 1;
    } else {
        out.rank = static_cast<int>(z.rows());
    }
    return out;
}

std::optional<CoreCpd> core_cpd(const Array3& core, const DiagnosisConfig& cfg) {
    const PencilDiagnosis d = diagnose_core(core, cfg);
    if (d.verdict != RankVerdict::RankR) return std::nullopt;
    const Array3 work = d.slices_mixed ? mix_slices(core, d.mix) : core;
    const Matrix m = pencil_matrix(work);
    Eigen::EigenSolver<Matrix> solver(m, true);
    if (solver.info() != Eigen::Success) return std::nullopt;
    const Matrix v = solver.eigenvectors().real();
    const Vector lambda = solver.eigenvalues().real();
    const Eigen::Index r = core.rows();

    CoreCpd out;
    out.a = v;
    out.b = v.fullPivLu().solve(work.slice(0)).transpose();
    Matrix mixed_c(2, r);
    mixed_c.row(0).setOnes();
    mixed_c.row(1) = lambda.transpose();
    // Undo the orthonormal slice mix: Y_l = sum_k mix(k, l) Y'_k.
    out.c = d.mix.transpose() * mixed_c;
    return out;
}

nlohmann::json to_json(const EigenCluster& c) {
    return {{"value", {c.value.real(), c.value.imag()}},
            {"algebraicMult", c.algebraic},
            {"geometricMult", c.geometric}};
}

nlohmann::json to_json(const PencilDiagnosis& d) {
    auto eig = nlohmann::json::array();
    for (const auto& v : d.eigenvalues) eig.push_back({v.real(), v.imag()});
    auto clusters = nlohmann::json::array();
    for (const auto& c : d.clusters) clusters.push_back(to_json(c));
    nlohmann::json out = {{"eigenvalues", eig},
                          {"clusters", clusters},
                          {"verdict", to_string(d.verdict)},
                          {"slicesMixed", d.slices_mixed}};
    if (!d.note.empty()) out["note"] = d.note;
    return out;
}

}  // namespace pencilrank
