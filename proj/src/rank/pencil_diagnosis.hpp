#pragma once

#include "linalg/dense.hpp"
#include "tensor/array3.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace pencilrank {

enum class RankVerdict { RankR, RankExceedsR_Jordan, RankExceedsR_Complex, Indeterminate };

std::string to_string(RankVerdict verdict);

struct DiagnosisConfig {
    /// Relative eigenvalue clustering tolerance.
    double cluster_tol = 1e-8;
    /// Relative singular value threshold for numerical ranks.
    double rank_tol = 1e-10;
    /// |im| <= real_tol max(1, |lambda|) counts as real; up to 10x that is indeterminate.
    double real_tol = 1e-8;
};

struct EigenCluster {
    Complex value;      // mean of the members
    int algebraic = 0;
    int geometric = 0;
};

struct PencilDiagnosis {
    ComplexEigenList eigenvalues;   // of Y2 Y1^{-1} after any slice mix
    std::vector<EigenCluster> clusters;
    RankVerdict verdict = RankVerdict::Indeterminate;
    bool slices_mixed = false;
    Eigen::Matrix2d mix = Eigen::Matrix2d::Identity();
    std::string note;               // why the verdict is indeterminate, if it is
};

struct SliceMix {
    Array3 core;
    Eigen::Matrix2d mix;            // mixed slice k = sum_l mix(k, l) Y_l
    double angle = 0.0;
};

/// Orthonormal recombination of the two slices so both become nonsingular.
/// Tries angles k pi / 17, k = 0..16, and keeps the first where both mixed
/// slices satisfy sigma_min(Y) > 1e-12 sigma_max(Y). Throws Error(DegenerateCore) when none qualifies.
SliceMix slice_mix(const Array3& core);

/// Eigenstructure of the pencil of an R x R x 2 core and the rank verdict:
/// real and diagonalizable means rank R; a defective real eigenvalue or a
/// complex pair means rank above R.
///
/// Triangular pairs use the diagonal ratios as eigenvalues.
/// Eigenvalues within cluster_tol max(1, |lambda|) are merged (union-find). A
/// pair up to 1e-2 apart (relative) is also merged when M - mean I is singular to
/// rank_tol, since a perturbed Jordan block splits by roughly the square root
/// of the perturbation. Realness is judged on cluster means. The verdict is
/// Indeterminate when clustering at tol and 10 tol disagree or a cluster mean
/// sits in the realness band.
PencilDiagnosis diagnose_core(const Array3& core, const DiagnosisConfig& cfg = {});

/// Clusters with geometric multiplicity below the algebraic one, sorted by value.
std::vector<EigenCluster> diverging_groups(const PencilDiagnosis& diagnosis);

struct GenericRank {
    std::optional<int> rank;        // I or I + 1; empty when indeterminate
    PencilDiagnosis diagnosis;
    std::string note;
};

/// Typical rank of a square I x I x 2 array from the eigenvalues of Z2 Z1^{-1}.
/// Repeated eigenvalues (nongeneric input) give an empty rank with a note.
GenericRank generic_rank_square(const Array3& z, const DiagnosisConfig& cfg = {});

/// Rank-R CPD of a core with verdict RankR: Y_k = A diag(c_k) B^T.
struct CoreCpd {
    Matrix a;   // R x R
    Matrix b;   // R x R
    Matrix c;   // 2 x R
};

/// Built from the eigendecomposition of Y2 Y1^{-1}; empty unless the verdict is RankR.
std::optional<CoreCpd> core_cpd(const Array3& core, const DiagnosisConfig& cfg = {});

nlohmann::json to_json(const PencilDiagnosis& diagnosis);
nlohmann::json to_json(const EigenCluster& cluster);

}  // namespace pencilrank
