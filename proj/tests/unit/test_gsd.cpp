#include "gsd/gsd_solver.hpp"
#include "gsd/optimality.hpp"
#include "linalg/dense.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace pencilrank;
using namespace pencilrank::testing;

namespace {

bool has_complex_pencil(const Array3& z) {
    for (const Complex& e : pencil_eigenvalues(z.slice(0), z.slice(1))) {
        if (e.imag() != 0.0) return true;
    }
    return false;
}

Array3 complex_pencil_array(Eigen::Index n, std::uint64_t seed) {
    for (std::uint64_t s = seed;; ++s) {
        Array3 z = random_array(n, n, s);
        if (has_complex_pencil(z)) return z;
    }
}

// Minimizing unit vector (c, s) of ||c x + s y||^2 from the 2 x 2 Gram matrix.
Eigen::Vector2d min_direction(const std::vector<double>& x, const std::vector<double>& y) {
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    for (std::size_t k = 0; k < x.size(); ++k) {
        g(0, 0) += x[k] * x[k];
        g(1, 1) += y[k] * y[k];
        g(0, 1) += x[k] * y[k];
    }
    g(1, 0) = g(0, 1);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(g);
    return es.eigenvectors().col(0);
}

double upper_block_mass(const std::array<Matrix, 2>& t, Eigen::Index r) {
    double v = 0.0;
    for (const Matrix& m : t) v += m.topLeftCorner(r, r).triangularView<Eigen::Upper>().toDenseMatrix().squaredNorm();
    return v;
}

const PairValue& find(const std::vector<PairValue>& v, Eigen::Index i, Eigen::Index j) {
    for (const PairValue& p : v) {
        if (p.i == i && p.j == j) return p;
    }
    static const PairValue missing{-1, -1, std::nan("")};
    return missing;
}

}  // namespace

TEST(GsdConfigTest, ValidatesFields) {
    GsdConfig cfg;
    cfg.rel_tol = 0.0;
    EXPECT_PR_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
    cfg = {};
    cfg.restarts = 0;
    EXPECT_PR_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
    cfg = {};
    cfg.init = InitMode::Given;
    EXPECT_PR_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
    EXPECT_EQ(init_mode_from_string("random"), InitMode::Random);
    EXPECT_PR_ERROR(init_mode_from_string("bogus"), ErrorCode::InvalidArgument);
}

TEST(FitGsdTest, RankOutOfRangeIsDimensionError) {
    const Array3 z = random_array(4, 3, 1);
    EXPECT_PR_ERROR(fit_gsd(z, 0, {}), ErrorCode::Dimension);
    EXPECT_PR_ERROR(fit_gsd(z, 4, {}), ErrorCode::Dimension);
}

TEST(FitGsdTest, UpperTriangularSlicesFitExactly) {
    const Array3 z(matrix(3, 3, {1, 2, 3, 0, 4, 5, 0, 0, 6}), matrix(3, 3, {2, -1, 0, 0, 1, 7, 0, 0, -3}));
    GsdConfig cfg;
    cfg.init = InitMode::Given;
    cfg.given_qa = Matrix::Identity(3, 3);
    cfg.given_qb = Matrix::Identity(3, 3);
    const GsdSolution sol = fit_gsd(z, 3, cfg);
    EXPECT_EQ(sol.residual, 0.0);
    EXPECT_LT((sol.full_qa - Matrix::Identity(3, 3)).norm(), 1e-15);
    const GsdSolution qz = fit_gsd(z, 3, {});
    EXPECT_LT(qz.residual, 1e-20);
}

TEST(FitGsdTest, SaddleExampleFromQz) {
    const GsdSolution sol = fit_gsd(example_a1(), 3, {});
    EXPECT_GT(sol.residual, 0.0);
    const OptimalityReport report = optimality_report(sol, false);
    EXPECT_LT(report.max_abs_first, 1e-4);
    EXPECT_TRUE(sol.converged);
}

TEST(FitGsdTest, SolutionInvariants) {
    struct Shape {
        Eigen::Index rows, cols, rank;
    };
    for (const Shape s : {Shape{5, 5, 5}, Shape{6, 4, 3}, Shape{4, 6, 2}, Shape{5, 3, 3}, Shape{3, 3, 1}}) {
        const Array3 z = random_array(s.rows, s.cols, 31 + s.rows * 7 + s.cols);
        const GsdSolution sol = fit_gsd(z, s.rank, {});
        const double scale = frobenius_norm_sq(z);
        EXPECT_LT(orthonormality_defect(sol.qa()), 1e-10);
        EXPECT_LT(orthonormality_defect(sol.qb()), 1e-10);
        for (int k = 0; k < 2; ++k) {
            const Matrix r = sol.core(k);
            ASSERT_EQ(r.rows(), s.rank);
            for (Eigen::Index i = 0; i < s.rank; ++i) {
                for (Eigen::Index j = 0; j < i; ++j) EXPECT_EQ(r(i, j), 0.0);
            }
        }
        EXPECT_NEAR(distance_sq(z, sol.solution_array()), sol.residual, 1e-10 * scale);
        EXPECT_NEAR(scale, sol.residual + upper_block_mass(sol.transformed, s.rank), 1e-10 * scale);
    }
}

TEST(FitGsdTest, QzFitMatchesTwentyRandomStarts) {
    for (std::uint64_t seed : {101u, 202u, 303u}) {
        const Array3 z = complex_pencil_array(5, seed);
        const GsdSolution qz = fit_gsd(z, 5, {});
        GsdConfig random;
        random.init = InitMode::Random;
        random.restarts = 20;
        random.seed = seed;
        const GsdSolution best = fit_gsd(z, 5, random);
        EXPECT_GT(qz.residual, 0.0);
        EXPECT_NEAR(qz.residual, best.residual, 1e-6 * frobenius_norm_sq(z)) << "seed " << seed;
    }
}

TEST(FitGsdTest, BestOfRestartsNeverWorseThanFirstStart) {
    const Array3 z = complex_pencil_array(4, 77);
    GsdConfig one;
    GsdConfig many;
    many.restarts = 6;
    EXPECT_LE(fit_gsd(z, 4, many).residual, fit_gsd(z, 4, one).residual + 1e-14);
}

TEST(FitGsdTest, DeterministicForFixedSeed) {
    const Array3 z = random_array(5, 5, 12);
    GsdConfig cfg;
    cfg.restarts = 3;
    cfg.seed = 9;
    const GsdSolution a = fit_gsd(z, 4, cfg);
    const GsdSolution b = fit_gsd(z, 4, cfg);
    EXPECT_EQ(a.residual, b.residual);
    EXPECT_EQ(a.full_qa, b.full_qa);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(SweepTest, FirstSweepOnTwoByTwoMatchesClosedForm) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Array3 z = random_array(2, 2, 400 + seed);
        // Row rotation (1,2) then column rotation (1,2), each minimizing the (2,1) entries.
        std::array<Matrix, 2> t = {z.slice(0), z.slice(1)};
        Eigen::Vector2d d = min_direction({t[0](1, 0), t[1](1, 0)}, {t[0](0, 0), t[1](0, 0)});
        for (Matrix& m : t) {
            const Eigen::RowVectorXd r0 = m.row(0), r1 = m.row(1);
            m.row(1) = d(0) * r1 + d(1) * r0;
            m.row(0) = d(0) * r0 - d(1) * r1;
        }
        const double after_row = t[0](1, 0) * t[0](1, 0) + t[1](1, 0) * t[1](1, 0);
        d = min_direction({t[0](1, 0), t[1](1, 0)}, {t[0](1, 1), t[1](1, 1)});
        for (Matrix& m : t) {
            const Vector c0 = m.col(0), c1 = m.col(1);
            m.col(0) = d(0) * c0 + d(1) * c1;
            m.col(1) = d(0) * c1 - d(1) * c0;
        }
        const double expected = t[0](1, 0) * t[0](1, 0) + t[1](1, 0) * t[1](1, 0);

        const GsdState start = make_gsd_state(z, 2, Matrix::Identity(2, 2), Matrix::Identity(2, 2));
        const GsdState swept = sweep_once(start);
        const double scale = frobenius_norm_sq(z);
        EXPECT_NEAR(swept.objective, expected, 1e-14 * scale);
        EXPECT_LE(swept.objective, after_row + 1e-14 * scale);
        EXPECT_NEAR(swept.objective, gsd_objective(swept.rotated.slices, 2), 1e-14 * scale);
    }
}

TEST(SweepTest, ObjectiveMonotoneOverHundredSweeps) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Eigen::Index n = 3 + seed;
        const Array3 z = random_array(n + 1, n, 600 + seed);
        Rng rng(seed);
        GsdState state = make_gsd_state(z, n - 1, random_orthonormal(n + 1, rng), random_orthonormal(n, rng));
        const double scale = frobenius_norm_sq(z);
        for (int s = 0; s < 100; ++s) {
            const double before = state.objective;
            state = sweep_once(std::move(state), s % 2 ? SweepOrder::ColumnsFirst : SweepOrder::RowsFirst);
            EXPECT_LE(state.objective, before + 1e-13 * scale);
            EXPECT_NEAR(state.objective, gsd_objective(state.rotated.slices, n - 1), 1e-12 * scale);
            EXPECT_LT(orthonormality_defect(state.rotated.qa), 1e-10);
        }
    }
}

TEST(SweepTest, OptimumIsFixedPoint) {
    const Array3 z = complex_pencil_array(4, 55);
    const GsdSolution sol = fit_gsd(z, 4, {});
    const GsdState state = make_gsd_state(z, 4, sol.full_qa, sol.full_qb);
    const GsdState again = sweep_once(state);
    EXPECT_LE(std::abs(again.objective - state.objective), 1e-14 * frobenius_norm_sq(z));

    const Array3 tri(matrix(2, 2, {1, 2, 0, 3}), matrix(2, 2, {4, 5, 0, 6}));
    const GsdState zero = sweep_once(make_gsd_state(tri, 2, Matrix::Identity(2, 2), Matrix::Identity(2, 2)));
    EXPECT_EQ(zero.objective, 0.0);
}

TEST(FitGsdTest, StationaryAtConvergence) {
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
        const Eigen::Index n = 2 + seed % 6;
        const Array3 z = random_array(n + seed % 2, n, 700 + seed);
        GsdConfig cfg;
        const GsdSolution sol = fit_gsd(z, n, cfg);
        const OptimalityReport r = optimality_report(sol, false);
        EXPECT_TRUE(sol.converged);
        EXPECT_LT(r.max_abs_first, 10 * cfg.rel_tol * frobenius_norm_sq(z)) << "seed " << seed;
    }
}

TEST(FitGsdTest, SolutionArrayIndependentOfSweepOrder) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Eigen::Index n = 3 + seed % 3;
        const Array3 z = complex_pencil_array(n, 800 + 10 * seed);
        GsdConfig rows;
        GsdConfig cols;
        cols.order = SweepOrder::ColumnsFirst;
        const GsdSolution a = fit_gsd(z, n, rows);
        const GsdSolution b = fit_gsd(z, n, cols);
        const double scale = frobenius_norm_sq(z);
        EXPECT_NEAR(a.residual, b.residual, 1e-8 * scale);
        EXPECT_LT(distance_sq(a.solution_array(), b.solution_array()), 1e-8 * scale) << "seed " << seed;
    }
}

TEST(FitGsdTest, ResidualInvariantUnderTransformsAndSliceMix) {
    Rng rng(17);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Eigen::Index n = 2 + seed % 3;
        const Array3 z = complex_pencil_array(n, 1000 + 10 * seed);
        GsdConfig cfg;
        cfg.restarts = 5;
        const double base = fit_gsd(z, n, cfg).residual;
        const double scale = frobenius_norm_sq(z);

        const Array3 moved = transform(z, orthonormal(n, rng), orthonormal(n, rng));
        EXPECT_NEAR(fit_gsd(moved, n, cfg).residual, base, 1e-8 * scale);

        const double angle = 0.3 + 0.2 * double(seed);
        Eigen::Matrix2d mix;
        mix << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
        EXPECT_NEAR(fit_gsd(mix_slices(z, mix), n, cfg).residual, base, 1e-8 * scale);
    }
}

TEST(OptimalityTest, FixturesSatisfyFirstOrderConditions) {
    for (const Array3& z : {example_a1(), example_a2()}) {
        const OptimalityReport r = optimality_report(z, 3, false);
        EXPECT_EQ(r.first_row.size(), 3u);
        EXPECT_EQ(r.first_col.size(), 3u);
        EXPECT_LT(r.max_abs_first, 1e-12 * frobenius_norm_sq(z));
        EXPECT_GE(r.min_second, -1e-12);
    }
}

TEST(OptimalityTest, FixtureSecondOrderZeros) {
    const OptimalityReport a1 = optimality_report(example_a1(), 3, false);
    EXPECT_NEAR(find(a1.second_row, 0, 1).value, 0.0, 1e-12);
    const OptimalityReport a2 = optimality_report(example_a2(), 3, false);
    EXPECT_NEAR(find(a2.second_row, 0, 1).value, 0.0, 1e-12);
    EXPECT_NEAR(find(a2.second_col, 1, 2).value, 0.0, 1e-12);
}

TEST(OptimalityTest, ConditionsMatchDirectSums) {
    const Array3 z = random_array(5, 4, 3);
    const Eigen::Index r = 3;
    const OptimalityReport rep = optimality_report(z, r, false);
    auto fiber = [&](Eigen::Index m, Eigen::Index n) { return mode3_vector(z, m, n).value; };
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = i + 1; j < 5; ++j) {
            double first = 0.0;
            const Eigen::Index last = j < r ? j - 1 : r - 1;
            for (Eigen::Index c = i; c <= last; ++c) first += fiber(i, c).dot(fiber(j, c));
            EXPECT_NEAR(std::abs(find(rep.first_row, i, j).value), std::abs(first), 1e-13);
            if (j < r) {
                double second = 0.0;
                for (Eigen::Index c = i; c < j; ++c) second += fiber(i, c).squaredNorm() - fiber(j, c).squaredNorm();
                EXPECT_NEAR(find(rep.second_row, i, j).value, second, 1e-13);
            }
        }
        for (Eigen::Index j = i + 1; j < 4; ++j) {
            double first = 0.0;
            const Eigen::Index from = j < r ? i + 1 : 0;
            const Eigen::Index to = j < r ? j : i;
            for (Eigen::Index c = from; c <= to; ++c) first += fiber(c, i).dot(fiber(c, j));
            EXPECT_NEAR(std::abs(find(rep.first_col, i, j).value), std::abs(first), 1e-13);
            if (j < r) {
                double second = 0.0;
                for (Eigen::Index c = i + 1; c <= j; ++c) second += fiber(c, j).squaredNorm() - fiber(c, i).squaredNorm();
                EXPECT_NEAR(find(rep.second_col, i, j).value, second, 1e-13);
            }
        }
    }
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (const auto* v : {&rep.first_row, &rep.first_col}) {
        for (const PairValue& p : *v) mx = std::max(mx, std::abs(p.value));
    }
    for (const auto* v : {&rep.second_row, &rep.second_col}) {
        for (const PairValue& p : *v) mn = std::min(mn, p.value);
    }
    EXPECT_EQ(rep.max_abs_first, mx);
    EXPECT_EQ(rep.min_second, mn);
}

TEST(OptimalityTest, RandomRankAboveOrderFitsHavePositiveSecondOrder) {
    int fits = 0;
    for (std::uint64_t seed = 0; fits < 30; ++seed) {
        const Eigen::Index n = 2 + seed % 6;
        const Array3 z = random_array(n, n, 1500 + seed);
        if (!has_complex_pencil(z)) continue;
        ++fits;
        const OptimalityReport r = optimality_report(fit_gsd(z, n, {}), true);
        EXPECT_LT(r.max_abs_first, 1e-4);
        EXPECT_GT(r.min_second, 0.0) << "I=" << n << " seed " << 1500 + seed;
        EXPECT_GT(r.hessian_eigs->front(), -1e-6);
    }
}

TEST(HessianTest, SaddleExampleEigenvalues) {
    const HessianResult h = gsd_hessian({example_a1().slice(0), example_a1().slice(1)}, 3);
    const double expected[] = {-0.1, 0.0, 10.0, 22.1, 36.1, 63.7};
    ASSERT_EQ(h.eigenvalues.size(), 6u);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(h.eigenvalues[k], expected[k], 0.05);
    EXPECT_EQ(std::count_if(h.eigenvalues.begin(), h.eigenvalues.end(), [](double v) { return v < -0.05; }), 1);
}

TEST(HessianTest, LocalMinimumExampleEigenvalues) {
    const HessianResult h = gsd_hessian({example_a2().slice(0), example_a2().slice(1)}, 3);
    const double expected[] = {0.0, 0.0, 0.01, 20.9, 36.0, 54.9};
    ASSERT_EQ(h.eigenvalues.size(), 6u);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(h.eigenvalues[k], expected[k], 0.05);
    EXPECT_GE(h.eigenvalues.front(), -0.05);
}

TEST(HessianTest, DiagonalIsScaledSecondOrderValues) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Eigen::Index n = 3 + seed % 3;
        const Array3 z = random_array(n, n, 40 + seed);
        const std::array<Matrix, 2> t = {z.slice(0), z.slice(1)};
        const HessianResult h = gsd_hessian(t, n);
        const OptimalityReport rep = optimality_report(z, n, false);
        const std::vector<RotationPair> params = gsd_parameters(n, n, n);
        ASSERT_EQ(h.matrix.rows(), Eigen::Index(params.size()));
        ASSERT_EQ(h.matrix.rows(), n * (n - 1));
        for (std::size_t p = 0; p < params.size(); ++p) {
            const auto& list = params[p].side == RotationSide::Row ? rep.second_row : rep.second_col;
            EXPECT_NEAR(h.matrix(p, p), h.diagonal_scale * find(list, params[p].i, params[p].j).value,
                        1e-10 * frobenius_norm_sq(z));
        }
        EXPECT_EQ(h.diagonal_scale, 2.0);
    }
}

TEST(HessianTest, AnalyticMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Eigen::Index n = 2 + seed;
        const Array3 z = random_array(n, n, 60 + seed);
        const std::array<Matrix, 2> t = {z.slice(0), z.slice(1)};
        const double scale = frobenius_norm_sq(z);
        const Matrix analytic = gsd_hessian_analytic(t, n);
        const Matrix fd = gsd_hessian_finite_difference(t, n, 1e-4);
        EXPECT_LT((analytic - fd).cwiseAbs().maxCoeff(), 1e-6 * scale);
        const HessianResult reported = gsd_hessian(t, n);
        EXPECT_LT((reported.matrix - analytic).cwiseAbs().maxCoeff(), 1e-6 * scale);
    }
}

TEST(HessianTest, UnsupportedOutsideSquareFullRank) {
    const Array3 z = random_array(4, 3, 1);
    EXPECT_PR_ERROR(gsd_hessian({z.slice(0), z.slice(1)}, 3), ErrorCode::Unsupported);
    const Array3 sq = random_array(4, 4, 1);
    EXPECT_PR_ERROR(gsd_hessian({sq.slice(0), sq.slice(1)}, 3), ErrorCode::Unsupported);
}

TEST(RotationObjectiveTest, GradientAndHessianMatchFiniteDifferences) {
    struct Case {
        Eigen::Index rows, cols, rank;
        bool block;
    };
    for (const Case c : {Case{5, 5, 5, false}, Case{6, 4, 3, false}, Case{7, 5, 2, true}, Case{4, 6, 2, false}}) {
        const Array3 z = random_array(c.rows, c.cols, 99);
        Rng rng(7);
        const RotatedPair state = RotatedPair::start(z, orthonormal(c.rows, rng), orthonormal(c.cols, rng));
        const MaskedRotationObjective obj(c.block ? block_mask(c.rows, c.cols, c.rank) : gsd_mask(c.rows, c.cols, c.rank),
                                          c.block ? subspace_parameters(c.rows, c.cols, c.rank)
                                                  : gsd_parameters(c.rows, c.cols, c.rank));
        const Eigen::Index d = obj.dimension();
        const double h = 1e-5, scale = frobenius_norm_sq(z);
        const Vector g = obj.gradient(state);
        const Matrix hess = obj.hessian(state);
        EXPECT_LT((hess - hess.transpose()).cwiseAbs().maxCoeff(), 1e-10 * scale);
        for (Eigen::Index p = 0; p < d; ++p) {
            const Vector e = Vector::Unit(d, p) * h;
            const double fd = (obj.value_at(state, e) - obj.value_at(state, -e)) / (2 * h);
            EXPECT_NEAR(g(p), fd, 1e-7 * scale);
            // Mixed central second differences of the parameterized objective.
            const double k = 1e-4;
            for (Eigen::Index q = 0; q < d; ++q) {
                const Vector a = Vector::Unit(d, p) * k, b = Vector::Unit(d, q) * k;
                const double mixed = (obj.value_at(state, a + b) - obj.value_at(state, a - b) -
                                      obj.value_at(state, b - a) + obj.value_at(state, -a - b)) /
                                     (4 * k * k);
                EXPECT_NEAR(hess(p, q), mixed, 1e-5 * scale) << "entry " << p << "," << q;
            }
        }
    }
}

TEST(MultiStartTest, QzOnTwoByTwoArraysNeverSuboptimal) {
    GsdConfig cfg;
    cfg.restarts = 21;
    int arrays = 0;
    for (std::uint64_t seed = 0; arrays < 10; ++seed) {
        const Array3 z = random_array(2, 2, 3000 + seed);
        if (!has_complex_pencil(z)) continue;
        ++arrays;
        cfg.seed = seed;
        const std::vector<StudyEntry> runs = multi_start_study(z, 2, cfg, false);
        ASSERT_EQ(runs.size(), 21u);
        EXPECT_EQ(runs.front().init, "qz");
        double best = std::numeric_limits<double>::infinity();
        for (const StudyEntry& e : runs) best = std::min(best, e.residual);
        for (const StudyEntry& e : runs) {
            EXPECT_FALSE(e.suboptimal);
            EXPECT_GE(e.residual, best);
        }
    }
}

TEST(MultiStartTest, OrderFiveRandomStartsSometimesSuboptimal) {
    GsdConfig cfg;
    cfg.init = InitMode::Random;
    cfg.restarts = 100;
    int suboptimal = 0, total = 0, arrays = 0;
    for (std::uint64_t seed = 0; arrays < 10; ++seed) {
        const Array3 z = random_array(5, 5, 5000 + seed);
        if (!has_complex_pencil(z)) continue;
        ++arrays;
        cfg.seed = seed;
        for (const StudyEntry& e : multi_start_study(z, 5, cfg, false)) {
            ++total;
            suboptimal += e.suboptimal ? 1 : 0;
        }
    }
    const double fraction = double(suboptimal) / total;
    EXPECT_GT(fraction, 0.0);
    EXPECT_LT(fraction, 0.6);
}

TEST(OptimalityTest, ReportJsonFieldNames) {
    const nlohmann::json j = to_json(optimality_report(fit_gsd(example_a1(), 3, {}), true));
    for (const char* key : {"maxAbsFirst", "minSecond", "hessianEigs", "residual", "sweeps", "converged", "init", "seed",
                            "firstOrderRow", "firstOrderCol", "secondOrderRow", "secondOrderCol"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["hessianEigs"].size(), 6u);
    EXPECT_EQ(j["init"], "qz");
}
