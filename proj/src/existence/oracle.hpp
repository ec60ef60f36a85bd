#pragma once

#include "gsd/gsd_solver.hpp"
#include "gsd/optimality.hpp"
#include "mlrank/mlrank_solver.hpp"
#include "rank/pencil_diagnosis.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace pencilrank {

/// A row of the existence table for generic I x J x 2 arrays (I >= J >= 2, R >= 2).
struct CaseId {
    int id = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    int rank = 0;          // generic rank of the array
    Eigen::Index r = 0;    // requested approximation rank
    std::string predicate; // human-readable defining condition
};

/// Throws Error(InvalidArgument) for shapes outside I >= J >= 2, R >= 2 or a
/// rank that is not generic for the shape (I or I+1 when I = J, min(I, 2J) when I > J).
CaseId classify(Eigen::Index rows, Eigen::Index cols, int rank, Eigen::Index r);

enum class Outcome { Exists, NotExists, TrivialSelf, Indeterminate };

std::string to_string(Outcome outcome);

struct ExistenceConfig {
    std::uint64_t seed = 0;
    /// Starts of every GSD fit (first QZ, rest random).
    int gsd_restarts = 1;
    /// Starts of the multilinear rank solver (first SVD, rest random).
    int mlrank_restarts = 10;
    DiagnosisConfig diagnosis;
    /// Replace the generic rank used for classification (nongeneric studies).
    std::optional<int> rank_override;
    /// For Exists outcomes with R <= J, also fit the GSD (seeded from the
    /// witness plus a QZ start) so the closure property can be checked.
    bool consistency_fit = true;
};

struct ExistenceVerdict {
    CaseId case_id;
    Outcome outcome = Outcome::Indeterminate;
    /// Arrays with I < J are analyzed as their slice transposes.
    bool transposed = false;
    std::optional<Array3> witness;             // in the caller's orientation
    double witness_error = 0.0;                // ||Z - witness||^2
    std::optional<GsdSolution> limit;          // in the analyzed orientation
    std::optional<PencilDiagnosis> limit_diagnosis;
    std::vector<EigenCluster> diverging;
    std::optional<OptimalityReport> limit_report;
    std::optional<GsdSolution> consistency;    // GSD fit accompanying an Exists verdict
    std::optional<PencilDiagnosis> consistency_diagnosis;
    ComplexEigenList evidence;                 // eigenvalues the decision rests on
    std::optional<PencilDiagnosis> evidence_diagnosis;
    std::vector<std::string> warnings;
    std::string note;

    /// Limit point Qa R_k Qb^T in the caller's orientation.
    std::optional<Array3> limit_array() const;
};

/// Classifies z and runs the decisive check of its case.
ExistenceVerdict decide(const Array3& z, Eigen::Index r, const ExistenceConfig& cfg = {});

/// Truncated SVD of [Z1 | Z2] folded back into slices. Requires I > J >= 2 and
/// min(I, 2J) > R > J.
Array3 case7_witness(const Array3& z, Eigen::Index r);

struct Case8Result {
    ComplexEigenList eigenvalues;   // of V_{R,2}^T (V_{R,1}^T)^{-1}, after any slice mix
    bool exists = false;
    PencilDiagnosis diagnosis;      // of the core with slices S_R V_{R,k}^T
    Array3 witness;                 // truncated-SVD array
    Matrix u;                       // full left singular vectors of [Z1 | Z2]
};

/// Requires I > J = R >= 2. `exists` holds exactly when the diagnosis is RankR.
Case8Result case8_check(const Array3& z, Eigen::Index r, const DiagnosisConfig& cfg = {});

nlohmann::json to_json(const CaseId& id);
nlohmann::json to_json(const ExistenceVerdict& verdict);

}  // namespace pencilrank
