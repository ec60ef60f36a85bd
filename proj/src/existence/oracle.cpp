#include "existence/oracle.hpp"

#include "common/error.hpp"
#include "linalg/dense.hpp"

#include <algorithm>
#include <sstream>

namespace pencilrank {

namespace {

Matrix block_diag(const Matrix& lead, Eigen::Index order) {
    Matrix out = Matrix::Identity(order, order);
    out.topLeftCorner(lead.rows(), lead.cols()) = lead;
    return out;
}

// Full factors whose leading columns span the witness and triangularize its core.
std::pair<Matrix, Matrix> triangularizing_start(const Matrix& full_u1, const Matrix& full_u2,
                                                const Matrix& g1, const Matrix& g2) {
    const SchurInit s = generalized_schur(g1, g2);
    return {full_u1 * block_diag(s.qa, full_u1.cols()), full_u2 * block_diag(s.qb, full_u2.cols())};
}

// Factors of the truncated SVD of [Z1 | Z2] for R = J.
std::pair<Matrix, Matrix> c8_start(const Array3& z, Eigen::Index r) {
    const SvdResult s = svd(wide_unfold(z));
    const Matrix vr = s.v.leftCols(r);
    const Matrix sr = s.s.head(r).asDiagonal();
    return triangularizing_start(s.u, Matrix::Identity(z.cols(), z.cols()), sr * vr.topRows(z.cols()).transpose(),
                                 sr * vr.bottomRows(z.cols()).transpose());
}

GsdConfig gsd_config(const ExistenceConfig& cfg) {
    GsdConfig g;
    g.seed = cfg.seed;
    g.restarts = cfg.gsd_restarts;
    g.init = InitMode::Qz;
    return g;
}

Outcome outcome_from(RankVerdict v) {
    switch (v) {
        case RankVerdict::RankR: return Outcome::Exists;
        case RankVerdict::RankExceedsR_Complex: return Outcome::NotExists;
        default: return Outcome::Indeterminate;
    }
}

std::string indeterminate_note(const PencilDiagnosis& d) {
    if (d.verdict == RankVerdict::RankExceedsR_Jordan) {
        return "repeated eigenvalues within tolerance: the array is not generic";
    }
    return d.note;
}

// Best of the QZ/random starts and, when given, a start from the factors of the
// W-set solution (their leading block is quasi-triangularized first).
void attach_limit(const Array3& z, Eigen::Index r, const ExistenceConfig& cfg, ExistenceVerdict& v,
                  const std::optional<std::pair<Matrix, Matrix>>& seeded = std::nullopt) {
    GsdSolution limit = fit_gsd(z, r, gsd_config(cfg));
    if (seeded) {
        GsdConfig g = gsd_config(cfg);
        g.init = InitMode::Given;
        g.restarts = 1;
        g.given_qa = seeded->first;
        g.given_qb = seeded->second;
        GsdSolution alt = fit_gsd(z, r, g);
        if (alt.residual < limit.residual) limit = std::move(alt);
    }
    PencilDiagnosis d = diagnose_core(limit.core_array(), cfg.diagnosis);
    v.diverging = diverging_groups(d);
    v.limit_report = optimality_report(limit, false);
    if (!(v.limit_report->min_second > 0.0)) {
        std::ostringstream msg;
        msg << "second-order conditions of the GSD limit are not strictly positive (minSecond = "
            << v.limit_report->min_second << ")";
        v.warnings.push_back(msg.str());
    }
    if (v.diverging.empty()) v.warnings.push_back("the GSD limit shows no diverging eigenvalue group");
    v.limit = std::move(limit);
    v.limit_diagnosis = std::move(d);
}

void attach_consistency(const Array3& z, Eigen::Index r, const ExistenceConfig& cfg,
                        const std::pair<Matrix, Matrix>& seed_factors, ExistenceVerdict& v) {
    GsdConfig g = gsd_config(cfg);
    g.init = InitMode::Given;
    g.restarts = 1;
    g.given_qa = seed_factors.first;
    g.given_qb = seed_factors.second;
    GsdSolution best = fit_gsd(z, r, g);
    GsdSolution qz = fit_gsd(z, r, gsd_config(cfg));
    if (qz.residual < best.residual) best = std::move(qz);
    v.consistency_diagnosis = diagnose_core(best.core_array(), cfg.diagnosis);
    v.consistency = std::move(best);
}

nlohmann::json eigen_json(const ComplexEigenList& values) {
    auto out = nlohmann::json::array();
    for (const auto& e : values) out.push_back({e.real(), e.imag()});
    return out;
}

}  // namespace

CaseId classify(Eigen::Index rows, Eigen::Index cols, int rank, Eigen::Index r) {
    if (cols < 2 || rows < cols) {
        fail(ErrorCode::InvalidArgument, "classification needs I >= J >= 2, got I=" + std::to_string(rows) +
                                             " J=" + std::to_string(cols));
    }
    if (r < 2) fail(ErrorCode::InvalidArgument, "classification needs R >= 2");
    CaseId c{0, rows, cols, rank, r, ""};
    const auto n = static_cast<int>(rows);
    const auto rr = static_cast<int>(r);
    if (rows == cols) {
        if (rank == n + 1) {
            if (rr >= n + 1) c = {1, rows, cols, rank, r, "I=J, rank I+1, R>=I+1"};
            else if (rr == n) c = {2, rows, cols, rank, r, "I=J, rank I+1, R=I"};
            else c = {3, rows, cols, rank, r, "I=J, rank I+1, R<I"};
        } else if (rank == n) {
            if (rr >= n) c = {4, rows, cols, rank, r, "I=J, rank I, R>=I"};
            else c = {5, rows, cols, rank, r, "I=J, rank I, R<I"};
        } else {
            fail(ErrorCode::InvalidArgument, "rank " + std::to_string(rank) + " is not a typical rank of " +
                                                 std::to_string(n) + "x" + std::to_string(n) + "x2 arrays");
        }
        return c;
    }
    const int generic = std::min(n, 2 * static_cast<int>(cols));
    if (rank != generic) {
        fail(ErrorCode::InvalidArgument, "rank " + std::to_string(rank) + " is not the generic rank " +
                                             std::to_string(generic) + " of this shape");
    }
    const auto j = static_cast<int>(cols);
    if (rr >= generic) c = {6, rows, cols, rank, r, "I>J, R>=min(I,2J)"};
    else if (rr > j) c = {7, rows, cols, rank, r, "I>J, min(I,2J)>R>J"};
    else if (rr == j) c = {8, rows, cols, rank, r, "I>J, R=J"};
    else c = {9, rows, cols, rank, r, "I>J, R<J"};
    return c;
}

std::string to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Exists: return "Exists";
        case Outcome::NotExists: return "NotExists";
        case Outcome::TrivialSelf: return "TrivialSelf";
        case Outcome::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

std::optional<Array3> ExistenceVerdict::limit_array() const {
    if (!limit) return std::nullopt;
    Array3 a = limit->solution_array();
    return transposed ? transpose_slices(a) : a;
}

Array3 case7_witness(const Array3& z, Eigen::Index r) {
    const Eigen::Index rows = z.rows();
    const Eigen::Index cols = z.cols();
    if (!(rows > cols && cols >= 2 && r > cols && std::min(rows, 2 * cols) > r)) {
        fail(ErrorCode::Dimension, "the truncated-SVD witness needs I > J >= 2 and min(I,2J) > R > J");
    }
    const SvdResult s = svd(wide_unfold(z));
    const Matrix x = s.u.leftCols(r) * s.s.head(r).asDiagonal() * s.v.leftCols(r).transpose();
    return from_wide_unfold(x);
}

Case8Result case8_check(const Array3& z, Eigen::Index r, const DiagnosisConfig& cfg) {
    const Eigen::Index rows = z.rows();
    const Eigen::Index cols = z.cols();
    if (!(rows > cols && cols == r && r >= 2)) {
        fail(ErrorCode::Dimension, "the case-8 check needs I > J = R >= 2");
    }
    const SvdResult s = svd(wide_unfold(z));
    const Matrix vr = s.v.leftCols(r);                 // 2J x R
    const Matrix sr = s.s.head(r).asDiagonal();
    const Matrix c1 = sr * vr.topRows(cols).transpose();
    const Matrix c2 = sr * vr.bottomRows(cols).transpose();
    Case8Result out{{}, false, diagnose_core(Array3(c1, c2), cfg),
                    from_wide_unfold(s.u.leftCols(r) * sr * vr.transpose()), s.u};
    out.eigenvalues = out.diagnosis.eigenvalues;
    out.exists = out.diagnosis.verdict == RankVerdict::RankR;
    return out;
}

ExistenceVerdict decide(const Array3& input, Eigen::Index r, const ExistenceConfig& cfg) {
    if (r < 2) fail(ErrorCode::InvalidArgument, "existence decisions need R >= 2");
    ExistenceVerdict v;
    v.transposed = input.rows() < input.cols();
    const Array3 z = v.transposed ? transpose_slices(input) : input;
    const Eigen::Index rows = z.rows();
    const Eigen::Index cols = z.cols();
    if (cols < 2) fail(ErrorCode::InvalidArgument, "existence decisions need both I, J >= 2");

    int rank = 0;
    if (cfg.rank_override) {
        rank = *cfg.rank_override;
    } else if (rows == cols) {
        GenericRank g = generic_rank_square(z, cfg.diagnosis);
        v.evidence = g.diagnosis.eigenvalues;
        v.evidence_diagnosis = g.diagnosis;
        if (!g.rank) {
            v.outcome = Outcome::Indeterminate;
            v.note = g.note;
            v.case_id = {0, rows, cols, 0, r, "rank undetermined"};
            return v;
        }
        rank = *g.rank;
    } else {
        rank = static_cast<int>(std::min(rows, 2 * cols));
    }
    v.case_id = classify(rows, cols, rank, r);

    auto set_witness = [&](const Array3& w) {
        v.witness = v.transposed ? transpose_slices(w) : w;
        v.witness_error = distance_sq(z, w);
    };

    switch (v.case_id.id) {
        case 1:
        case 4:
        case 6:
            v.outcome = Outcome::TrivialSelf;
            set_witness(z);
            break;
        case 2:
            v.outcome = Outcome::NotExists;
            attach_limit(z, r, cfg, v);
            break;
        case 7:
            v.outcome = Outcome::Exists;
            set_witness(case7_witness(z, r));
            break;
        case 8: {
            Case8Result c8 = case8_check(z, r, cfg.diagnosis);
            v.evidence = c8.eigenvalues;
            v.evidence_diagnosis = c8.diagnosis;
            v.outcome = outcome_from(c8.diagnosis.verdict);
            if (v.outcome == Outcome::Exists) {
                set_witness(c8.witness);
                if (cfg.consistency_fit) attach_consistency(z, r, cfg, c8_start(z, r), v);
            } else if (v.outcome == Outcome::NotExists) {
                attach_limit(z, r, cfg, v, c8_start(z, r));
            } else {
                v.note = indeterminate_note(c8.diagnosis);
            }
            break;
        }
        default: {  // 3, 5, 9
            MlrankConfig mc;
            mc.seed = cfg.seed;
            mc.restarts = cfg.mlrank_restarts;
            const MlrankSolution ml = fit_mlrank(z, r, mc);
            if (mc.restarts > 1 && ml.agreeing_starts < 2) {
                v.warnings.push_back("the best multilinear fit was reached by a single start");
            }
            PencilDiagnosis d = diagnose_core(ml.core_array(), cfg.diagnosis);
            v.evidence = d.eigenvalues;
            v.outcome = outcome_from(d.verdict);
            if (v.outcome == Outcome::Exists) {
                set_witness(ml.reconstruction());
                if (cfg.consistency_fit) {
                    attach_consistency(z, r, cfg, triangularizing_start(ml.full_u1, ml.full_u2, ml.g(0), ml.g(1)), v);
                }
            } else if (v.outcome == Outcome::NotExists) {
                attach_limit(z, r, cfg, v, triangularizing_start(ml.full_u1, ml.full_u2, ml.g(0), ml.g(1)));
            } else {
                v.note = indeterminate_note(d);
            }
            v.evidence_diagnosis = std::move(d);
            break;
        }
    }
    return v;
}

nlohmann::json to_json(const CaseId& id) {
    return {{"id", id.id}, {"I", id.rows}, {"J", id.cols}, {"rank", id.rank}, {"R", id.r},
            {"predicate", id.predicate}};
}

nlohmann::json to_json(const ExistenceVerdict& v) {
    nlohmann::json out = {
        {"caseId", v.case_id.id},
        {"case", to_json(v.case_id)},
        {"outcome", to_string(v.outcome)},
        {"transposed", v.transposed},
        {"evidence", eigen_json(v.evidence)},
        {"warnings", v.warnings},
    };
    if (v.evidence_diagnosis) out["evidenceDiagnosis"] = to_json(*v.evidence_diagnosis);
    if (v.witness) out["witnessError"] = v.witness_error;
    if (v.limit) {
        auto groups = nlohmann::json::array();
        for (const auto& g : v.diverging) groups.push_back(to_json(g));
        out["limit"] = {{"residual", v.limit->residual},
                        {"divergingGroups", groups},
                        {"diagnosis", to_json(*v.limit_diagnosis)},
                        {"report", to_json(*v.limit_report)}};
    }
    if (v.consistency) {
        out["consistency"] = {{"gsdResidual", v.consistency->residual},
                              {"init", v.consistency->init_label},
                              {"verdict", to_string(v.consistency_diagnosis->verdict)}};
    }
    if (!v.note.empty()) out["note"] = v.note;
    return out;
}

}  // namespace pencilrank
