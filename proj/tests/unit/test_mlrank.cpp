#include "linalg/dense.hpp"
#include "mlrank/mlrank_solver.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace pencilrank;
using namespace pencilrank::testing;

namespace {

Matrix top_eigenvectors(const Matrix& sym, Eigen::Index r) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    return es.eigenvectors().rightCols(r);
}

double captured(const Array3& z, const Matrix& u1, const Matrix& u2) {
    return (u1.transpose() * z.slice(0) * u2).squaredNorm() + (u1.transpose() * z.slice(1) * u2).squaredNorm();
}

// Alternating eigen-subspace iteration: for fixed U2 the best U1 spans the top
// eigenvectors of sum_k Z_k U2 U2^T Z_k^T, and symmetrically for U2.
double alternating_subspace(const Array3& z, Eigen::Index r, Matrix u2) {
    double value = 0.0;
    for (int it = 0; it < 5000; ++it) {
        Matrix s1 = Matrix::Zero(z.rows(), z.rows());
        for (int k = 0; k < 2; ++k) s1 += z.slice(k) * u2 * u2.transpose() * z.slice(k).transpose();
        const Matrix u1 = top_eigenvectors(s1, r);
        Matrix s2 = Matrix::Zero(z.cols(), z.cols());
        for (int k = 0; k < 2; ++k) s2 += z.slice(k).transpose() * u1 * u1.transpose() * z.slice(k);
        u2 = top_eigenvectors(s2, r);
        const double next = captured(z, u1, u2);
        if (next - value <= 1e-15 * frobenius_norm_sq(z)) return next;
        value = next;
    }
    return value;
}

double oracle_best(const Array3& z, Eigen::Index r, int starts, std::uint64_t seed) {
    Rng rng(seed);
    double best = 0.0;
    for (int s = 0; s < starts; ++s) best = std::max(best, alternating_subspace(z, r, orthonormal(z.cols(), rng).leftCols(r)));
    return best;
}

MlrankSolution with_rotated_u1(const MlrankSolution& sol, const Array3& z, double angle) {
    MlrankSolution moved = sol;
    const Eigen::Index r = sol.rank;
    const Vector a = moved.full_u1.col(0), b = moved.full_u1.col(r);
    moved.full_u1.col(0) = std::cos(angle) * a + std::sin(angle) * b;
    moved.full_u1.col(r) = std::cos(angle) * b - std::sin(angle) * a;
    for (int k = 0; k < 2; ++k) moved.transformed[k] = moved.full_u1.transpose() * z.slice(k) * moved.full_u2;
    return moved;
}

}  // namespace

TEST(MlrankTest, RankOutOfRangeIsDimensionError) {
    const Array3 z = random_array(4, 3, 1);
    EXPECT_PR_ERROR(fit_mlrank(z, 0, {}), ErrorCode::Dimension);
    EXPECT_PR_ERROR(fit_mlrank(z, 4, {}), ErrorCode::Dimension);
    MlrankConfig bad;
    bad.restarts = 0;
    EXPECT_PR_ERROR(bad.validate(), ErrorCode::InvalidArgument);
}

TEST(MlrankTest, ExactMultilinearRankHasNoResidual) {
    Rng rng(2);
    const Matrix u1 = orthonormal(5, rng).leftCols(2);
    const Matrix u2 = orthonormal(4, rng).leftCols(2);
    const Array3 z(u1 * gaussian(2, 2, rng) * u2.transpose(), u1 * gaussian(2, 2, rng) * u2.transpose());
    const MlrankSolution sol = fit_mlrank(z, 2, {});
    EXPECT_LT(sol.residual, 1e-10 * frobenius_norm_sq(z));
    EXPECT_LT(distance_sq(sol.reconstruction(), z), 1e-10 * frobenius_norm_sq(z));
}

TEST(MlrankTest, MatchesAlternatingSubspaceOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Array3 z = random_array(4, 4, 100 + seed);
        MlrankConfig cfg;
        cfg.restarts = 20;
        cfg.seed = seed;
        const MlrankSolution sol = fit_mlrank(z, 2, cfg);
        const double oracle = oracle_best(z, 2, 20, 1000 + seed);
        EXPECT_NEAR(sol.objective, oracle, 1e-6 * frobenius_norm_sq(z)) << "seed " << seed;
        EXPECT_GE(sol.agreeing_starts, 2);
    }
}

TEST(MlrankTest, EnergyIdentityAndBounds) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Eigen::Index rows = 3 + seed % 4, cols = 2 + seed % 3;
        const Eigen::Index r = 1 + seed % std::min(rows, cols);
        const Array3 z = random_array(rows, cols, 200 + seed);
        const MlrankSolution sol = fit_mlrank(z, r, {});
        const double scale = frobenius_norm_sq(z);
        EXPECT_LE(sol.objective, scale * (1 + 1e-14));
        EXPECT_NEAR(sol.objective + sol.residual, scale, 1e-10 * scale);
        EXPECT_NEAR(distance_sq(z, sol.reconstruction()), scale - sol.objective, 1e-10 * scale);
        EXPECT_NEAR(sol.objective, frobenius_norm_sq(sol.core_array()), 1e-12 * scale);
        EXPECT_LT(orthonormality_defect(sol.full_u1), 1e-10);
        EXPECT_LT(orthonormality_defect(sol.full_u2), 1e-10);
        const Array3 x = sol.reconstruction();
        EXPECT_LE(numerical_rank(wide_unfold(x), 1e-10), r);
        EXPECT_LE(numerical_rank(tall_unfold(x), 1e-10), r);
    }
}

TEST(MlrankTest, ConvergedSolutionIsStationary) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Array3 z = random_array(5, 4, 300 + seed);
        const MlrankSolution sol = fit_mlrank(z, 2, {});
        const StationarityReport rep = stationarity_report(sol);
        EXPECT_NEAR(rep.scale, frobenius_norm_sq(z), 1e-12 * rep.scale);
        EXPECT_LT(rep.row, 1e-8 * rep.scale);
        EXPECT_LT(rep.col, 1e-8 * rep.scale);
        EXPECT_TRUE(sol.converged);
    }
}

TEST(MlrankTest, PerturbedFactorLosesStationarity) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Array3 z = random_array(5, 4, 400 + seed);
        const MlrankSolution sol = fit_mlrank(z, 2, {});
        const StationarityReport rep = stationarity_report(with_rotated_u1(sol, z, 0.1));
        EXPECT_GT(std::max(rep.row, rep.col), 1e-3 * rep.scale) << "seed " << seed;
    }
}

TEST(MlrankTest, FullBlockHasEmptyResidualBlocks) {
    const Array3 z = random_array(3, 3, 5);
    const MlrankSolution sol = fit_mlrank(z, 3, {});
    const StationarityReport rep = stationarity_report(sol);
    EXPECT_EQ(rep.row, 0.0);
    EXPECT_EQ(rep.col, 0.0);
    EXPECT_NEAR(sol.objective, frobenius_norm_sq(z), 1e-12 * frobenius_norm_sq(z));
}

TEST(MlrankTest, ObjectiveInvariantUnderReorthonormalization) {
    const Array3 z = random_array(5, 4, 6);
    const MlrankSolution sol = fit_mlrank(z, 2, {});
    Rng rng(3);
    // Rotations within the retained and discarded subspaces leave the objective unchanged.
    Matrix u1 = sol.full_u1, u2 = sol.full_u2;
    u1.leftCols(2) = u1.leftCols(2) * orthonormal(2, rng);
    u1.rightCols(3) = u1.rightCols(3) * orthonormal(3, rng);
    u2.leftCols(2) = u2.leftCols(2) * orthonormal(2, rng);
    EXPECT_NEAR(captured(z, u1.leftCols(2), u2.leftCols(2)), sol.objective, 1e-12 * frobenius_norm_sq(z));
    const MlrankSolution again = fit_mlrank_from(z, 2, u1, u2, {}, "given");
    EXPECT_NEAR(again.objective, sol.objective, 1e-10 * frobenius_norm_sq(z));
}

TEST(MlrankTest, DeterministicAndJson) {
    const Array3 z = random_array(4, 4, 8);
    MlrankConfig cfg;
    cfg.restarts = 4;
    cfg.seed = 21;
    const MlrankSolution a = fit_mlrank(z, 2, cfg);
    const MlrankSolution b = fit_mlrank(z, 2, cfg);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    EXPECT_EQ(a.start_objectives.size(), 4u);
}
