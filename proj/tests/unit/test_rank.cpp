#include "gsd/gsd_solver.hpp"
#include "linalg/dense.hpp"
#include "rank/pencil_diagnosis.hpp"

#include "constructions.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace pencilrank;
using namespace pencilrank::testing;

namespace {

Array3 diag_core(std::initializer_list<double> a, std::initializer_list<double> b) {
    Matrix y1 = Matrix::Zero(a.size(), a.size());
    Matrix y2 = y1;
    Eigen::Index k = 0;
    for (double v : a) y1(k, k) = v, ++k;
    k = 0;
    for (double v : b) y2(k, k) = v, ++k;
    return Array3(y1, y2);
}

void expect_consistent(const PencilDiagnosis& d, Eigen::Index order) {
    int total = 0;
    bool all_real = true, all_full = true;
    for (const EigenCluster& c : d.clusters) {
        total += c.algebraic;
        EXPECT_LE(c.geometric, c.algebraic);
        all_real = all_real && c.value.imag() == 0.0;
        all_full = all_full && c.geometric == c.algebraic;
    }
    EXPECT_EQ(total, order);
    EXPECT_EQ(d.eigenvalues.size(), std::size_t(order));
    if (d.verdict != RankVerdict::Indeterminate) {
        EXPECT_EQ(d.verdict == RankVerdict::RankR, all_real && all_full);
    }
}

}  // namespace

TEST(SliceMixTest, NonsingularSlicesKeepIdentity) {
    const Array3 core = random_array(3, 3, 4);
    const SliceMix m = slice_mix(core);
    EXPECT_EQ(m.angle, 0.0);
    EXPECT_EQ(m.mix, Eigen::Matrix2d::Identity());
    EXPECT_EQ(distance_sq(m.core, core), 0.0);
}

TEST(SliceMixTest, ComplementaryDiagonalsNeedProperRotation) {
    const SliceMix m = slice_mix(diag_core({1, 0}, {0, 1}));
    EXPECT_GT(std::abs(std::sin(m.angle) * std::cos(m.angle)), 1e-3);
    EXPECT_GT(std::abs(m.core.slice(0).determinant()), 1e-12);
    EXPECT_GT(std::abs(m.core.slice(1).determinant()), 1e-12);
    EXPECT_LT((m.mix * m.mix.transpose() - Eigen::Matrix2d::Identity()).norm(), 1e-15);
}

TEST(SliceMixTest, SingularFirstSliceGetsMixed) {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        Matrix y1 = gaussian(4, 4, rng);
        y1.col(2) = y1.col(0) - 0.5 * y1.col(1);
        const Array3 core(y1, gaussian(4, 4, rng));
        const SliceMix m = slice_mix(core);
        const double scale = std::pow(core.slice(0).norm() + core.slice(1).norm(), 4);
        EXPECT_GT(std::abs(m.core.slice(0).determinant()), 1e-12 * scale);
        EXPECT_GT(std::abs(m.core.slice(1).determinant()), 1e-12 * scale);
        EXPECT_NEAR(frobenius_norm_sq(m.core), frobenius_norm_sq(core), 1e-12 * frobenius_norm_sq(core));
    }
}

TEST(SliceMixTest, CommonNullVectorIsDegenerate) {
    EXPECT_PR_ERROR(slice_mix(diag_core({1, 0}, {2, 0})), ErrorCode::DegenerateCore);
}

TEST(DiagnoseCoreTest, CanonicalTwoByTwoExamples) {
    const Matrix id = Matrix::Identity(2, 2);
    EXPECT_EQ(diagnose_core(Array3(id, matrix(2, 2, {1, 0, 0, 2}))).verdict, RankVerdict::RankR);
    EXPECT_EQ(diagnose_core(Array3(id, matrix(2, 2, {1, 1, 0, 1}))).verdict, RankVerdict::RankExceedsR_Jordan);
    EXPECT_EQ(diagnose_core(Array3(id, matrix(2, 2, {0, -1, 1, 0}))).verdict, RankVerdict::RankExceedsR_Complex);
}

TEST(DiagnoseCoreTest, SingularFirstSliceIsMixedFirst) {
    const PencilDiagnosis d = diagnose_core(diag_core({1, 0}, {0, 1}));
    EXPECT_TRUE(d.slices_mixed);
    EXPECT_EQ(d.verdict, RankVerdict::RankR);
}

TEST(DiagnoseCoreTest, LabelledConstructionsAndInvariants) {
    Rng rng(11);
    for (int t = 0; t < 600; ++t) {
        const Eigen::Index order = 2 + t % 4;
        const CoreKind kind = static_cast<CoreKind>((t / 4) % 3);
        const Array3 core = labelled_core(order, kind, rng);
        const PencilDiagnosis d = diagnose_core(core);
        EXPECT_EQ(d.verdict, expected_verdict(kind)) << "order " << order << " trial " << t;
        expect_consistent(d, order);
    }
}

TEST(DiagnoseCoreTest, VerdictInvariantUnderTransformsAndMix) {
    Rng rng(12);
    for (int t = 0; t < 90; ++t) {
        const Eigen::Index order = 2 + t % 3;
        const CoreKind kind = static_cast<CoreKind>(t % 3);
        const Array3 core = labelled_core(order, kind, rng);
        const double angle = 0.1 + 0.05 * t;
        Eigen::Matrix2d mix;
        mix << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
        const Array3 moved = transform(mix_slices(core, mix), orthonormal(order, rng), orthonormal(order, rng));
        EXPECT_EQ(diagnose_core(moved).verdict, expected_verdict(kind)) << "trial " << t;
    }
}

TEST(DiagnoseCoreTest, TriangularCoreEigenvaluesAreDiagonalRatios) {
    Rng rng(13);
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index order = 2 + t % 5;
        Matrix r1 = gaussian(order, order, rng).triangularView<Eigen::Upper>();
        Matrix r2 = gaussian(order, order, rng).triangularView<Eigen::Upper>();
        const PencilDiagnosis d = diagnose_core(Array3(r1, r2));
        std::vector<double> ratios;
        for (Eigen::Index i = 0; i < order; ++i) ratios.push_back(r2(i, i) / r1(i, i));
        std::sort(ratios.begin(), ratios.end());
        ASSERT_EQ(d.eigenvalues.size(), ratios.size());
        for (std::size_t k = 0; k < ratios.size(); ++k) {
            EXPECT_NEAR(d.eigenvalues[k].real(), ratios[k], 1e-8 * std::max(1.0, std::abs(ratios[k])));
            EXPECT_EQ(d.eigenvalues[k].imag(), 0.0);
        }
    }
}

TEST(DiagnoseCoreTest, RankRCoresHaveExplicitCpd) {
    Rng rng(14);
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index order = 2 + t % 4;
        const Array3 core = labelled_core(order, CoreKind::Diagonalizable, rng);
        const std::optional<CoreCpd> cpd = core_cpd(core);
        ASSERT_TRUE(cpd.has_value());
        for (int k = 0; k < 2; ++k) {
            const Matrix rebuilt = cpd->a * cpd->c.row(k).asDiagonal() * cpd->b.transpose();
            EXPECT_LE((rebuilt - core.slice(k)).norm(), 1e-6 * core.slice(k).norm());
        }
    }
    Rng other(15);
    EXPECT_FALSE(core_cpd(labelled_core(3, CoreKind::Rotation, other)).has_value());
}

TEST(GenericRankTest, RotationRatioGivesOrderPlusOne) {
    const Matrix z1 = random_array(2, 2, 5).slice(0);
    const GenericRank r = generic_rank_square(Array3(z1, matrix(2, 2, {0, -1, 1, 0}) * z1));
    ASSERT_TRUE(r.rank.has_value());
    EXPECT_EQ(*r.rank, 3);
}

TEST(GenericRankTest, ProportionalSlicesAreIndeterminate) {
    const Matrix z1 = random_array(3, 3, 6).slice(0);
    const GenericRank r = generic_rank_square(Array3(z1, 2.0 * z1));
    EXPECT_FALSE(r.rank.has_value());
    EXPECT_FALSE(r.note.empty());
}

TEST(GenericRankTest, NonSquareRejected) {
    EXPECT_PR_ERROR(generic_rank_square(random_array(3, 2, 1)), ErrorCode::Dimension);
}

TEST(GenericRankTest, BothTypicalRanksOccur) {
    int three = 0, four = 0, other = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const GenericRank r = generic_rank_square(random_array(3, 3, mix_seed(99, seed)));
        if (r.rank && *r.rank == 3) ++three;
        else if (r.rank && *r.rank == 4) ++four;
        else ++other;
    }
    EXPECT_GT(three, 0);
    EXPECT_GT(four, 0);
    EXPECT_LT(other, 10);
}

TEST(DivergingGroupsTest, Examples) {
    const Matrix id = Matrix::Identity(2, 2);
    EXPECT_TRUE(diverging_groups(diagnose_core(Array3(id, matrix(2, 2, {1, 0, 0, 2})))).empty());
    const auto groups = diverging_groups(diagnose_core(Array3(id, matrix(2, 2, {1, 1, 0, 1}))));
    ASSERT_EQ(groups.size(), 1u);
    EXPECT_NEAR(groups[0].value.real(), 1.0, 1e-12);
    EXPECT_EQ(groups[0].algebraic, 2);
    EXPECT_EQ(groups[0].geometric, 1);
}

TEST(DivergingGroupsTest, GsdCoresOfRankAboveOrderArraysDiverge) {
    int fits = 0;
    for (std::uint64_t seed = 0; fits < 40; ++seed) {
        const Eigen::Index n = 2 + seed % 5;
        const Array3 z = random_array(n, n, 2000 + seed);
        const GenericRank g = generic_rank_square(z);
        if (!g.rank || *g.rank != n + 1) continue;
        ++fits;
        const PencilDiagnosis d = diagnose_core(fit_gsd(z, n, {}).core_array());
        EXPECT_FALSE(diverging_groups(d).empty()) << "I=" << n << " seed " << 2000 + seed;
        EXPECT_EQ(d.verdict, RankVerdict::RankExceedsR_Jordan);
    }
}

TEST(DiagnosisJsonTest, Fields) {
    const nlohmann::json j = to_json(diagnose_core(Array3(Matrix::Identity(2, 2), matrix(2, 2, {0, -1, 1, 0}))));
    EXPECT_EQ(j["verdict"], to_string(RankVerdict::RankExceedsR_Complex));
    EXPECT_EQ(j["eigenvalues"].size(), 2u);
    EXPECT_EQ(j["eigenvalues"][0].size(), 2u);
    EXPECT_TRUE(j.contains("clusters"));
    EXPECT_TRUE(j.contains("slicesMixed"));
}
