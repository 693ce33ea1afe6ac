#include "oracles.hpp"

#include <gtest/gtest.h>

using lds::Matrix;

namespace {

lds::StateSpaceModel random_walk() { return lds::with_steady_state_init(lds::make_random_walk(1.0, 1.0, 1.0)); }

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

TEST(OptimalTruncatedFilter, MatchesOrthogonalityRoute) {
    const auto m = random_walk();
    for (long horizon : {10L, 40L, 100L})
        for (long h : {1L, 2L, 3L, 5L}) {
            const auto r = lds::optimal_truncated_filter(m, horizon, h);
            const double ref = oracle::orthogonality_excess(m, horizon, h);
            EXPECT_NEAR(r.excess_total, ref, 1e-7 * std::max(1.0, ref)) << "T=" << horizon << " h=" << h;
            EXPECT_NEAR(r.excess_per_step, r.excess_total / static_cast<double>(horizon - 1), 1e-15);
        }
}

TEST(OptimalTruncatedFilter, MatchesExplicitTargetRoute) {
    const auto m = random_walk();
    for (long horizon : {12L, 50L, 100L})
        for (long h : {1L, 2L, 4L}) {
            const double exact = lds::optimal_truncated_filter(m, horizon, h).excess_total;
            const double ref = oracle::explicit_target_excess(m, horizon, h);
            EXPECT_NEAR(exact, ref, 1e-7 * std::max(1.0, ref)) << "T=" << horizon << " h=" << h;
        }
}

TEST(OptimalTruncatedFilter, SkipWarmupMatchesOrthogonalityRoute) {
    const auto m = random_walk();
    for (long h : {1L, 3L}) {
        const auto r = lds::optimal_truncated_filter(m, 40, h, lds::Padding::skip_warmup);
        EXPECT_NEAR(r.excess_total, oracle::orthogonality_excess(m, 40, h, h + 1), 1e-7);
        EXPECT_NEAR(r.excess_per_step, r.excess_total / static_cast<double>(40 - 1 - h), 1e-15);
    }
}

TEST(OptimalTruncatedFilter, MatchesOrthogonalityRouteOnScalarModels) {
    const auto m = lds::with_steady_state_init(lds::make_jordan_system({{{0.8, 1}}}, 1.0, 0.7, 1.0, lds::ObservationMode::scalar));
    for (long h : {1L, 2L, 4L}) {
        const double ref = oracle::orthogonality_excess(m, 30, h);
        EXPECT_NEAR(lds::optimal_truncated_filter(m, 30, h).excess_total, ref, 1e-8 * std::max(1.0, ref));
    }
}

TEST(OptimalTruncatedFilter, FullContextReproducesKalman) {
    const auto m = random_walk();
    for (long horizon : {5L, 30L, 100L}) {
        const auto r = lds::optimal_truncated_filter(m, horizon, horizon - 1);
        EXPECT_LE(r.excess_total, 1e-8);
        EXPECT_LE(sum(lds::per_step_relaxed_bound(m, horizon, horizon - 1)), 1e-8);
        EXPECT_LE(lds::schur_lower_bound(m, horizon, horizon - 1), 1e-8);
    }
}

TEST(OptimalTruncatedFilter, TapsApproachKalmanCoefficients) {
    const auto m = random_walk();
    const auto f = lds::solve_dare(m);
    const auto r = lds::optimal_truncated_filter(m, 200, 8);
    const auto coeffs = lds::filter_coeffs(m, f, 8);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(r.filter.taps[k](0, 0), coeffs[k](0, 0), 1e-3);
}

TEST(OptimalTruncatedFilter, NonincreasingInWindow) {
    const auto m = random_walk();
    for (long horizon : {50L, 200L}) {
        double prev = std::numeric_limits<double>::infinity();
        for (long h = 1; h <= 12; ++h) {
            const double e = lds::optimal_truncated_filter(m, horizon, h).excess_total;
            EXPECT_LE(e, prev + 1e-12) << "T=" << horizon << " h=" << h;
            prev = e;
        }
    }
}

TEST(OptimalTruncatedFilter, Preconditions) {
    const auto m = random_walk();
    EXPECT_THROW(lds::optimal_truncated_filter(m, 10, 0), lds::ValidationError);
    EXPECT_THROW(lds::optimal_truncated_filter(m, 10, 10), lds::ValidationError);
    EXPECT_THROW(lds::optimal_truncated_filter(m, 5000, 2), lds::ValidationError);
    EXPECT_THROW(lds::optimal_truncated_filter(lds::make_random_walk(1.0, 1.0, 1.0), 10, 2), lds::ValidationError);
}

TEST(PerStepRelaxedBound, MatchesDenseSchurComplement) {
    const auto m = random_walk();
    const Matrix cov = lds::output_covariance(m, 60);
    for (long h : {1L, 2L, 5L}) {
        const auto relaxed = lds::per_step_relaxed_bound(m, 60, h);
        for (long t = 1; t <= 59; ++t) {
            const double ref = oracle::relaxed_step(m, cov, t, h);
            EXPECT_NEAR(relaxed[static_cast<std::size_t>(t - 1)], ref, 1e-8 * std::max(1.0, ref)) << "h=" << h << " t=" << t;
        }
    }
}

TEST(PerStepRelaxedBound, ZeroWhenWindowCoversPast) {
    const auto relaxed = lds::per_step_relaxed_bound(random_walk(), 30, 4);
    for (long t = 1; t <= 5; ++t) EXPECT_EQ(relaxed[static_cast<std::size_t>(t - 1)], 0.0);
    EXPECT_GT(relaxed[5], 0.0);
}

TEST(PerStepRelaxedBound, StrictlyBelowSharedFilter) {
    const auto m = random_walk();
    EXPECT_LT(sum(lds::per_step_relaxed_bound(m, 100, 2)), lds::optimal_truncated_filter(m, 100, 2).excess_total);
}

TEST(PerStepRelaxedBound, NondecreasingInTime) {
    const auto m = random_walk();
    for (long h : {1L, 3L}) {
        const auto relaxed = lds::per_step_relaxed_bound(m, 500, h);
        for (std::size_t t = 1; t < relaxed.size(); ++t) EXPECT_GE(relaxed[t], relaxed[t - 1] - 1e-12) << "t=" << t + 1;
    }
}

TEST(SchurLowerBound, RelaxationChain) {
    std::vector<lds::StateSpaceModel> models{random_walk(),
                                             lds::with_steady_state_init(lds::make_random_walk(1.0, 10.0, 1.0))};
    for (const auto& m : models)
        for (long horizon : {20L, 50L, 100L})
            for (long h : {1L, 2L, 4L, 8L}) {
                const double schur = lds::schur_lower_bound(m, horizon, h);
                const double relaxed = sum(lds::per_step_relaxed_bound(m, horizon, h));
                const double exact = lds::optimal_truncated_filter(m, horizon, h).excess_total;
                EXPECT_LE(schur, relaxed + 1e-6) << "T=" << horizon << " h=" << h;
                EXPECT_LE(relaxed, exact + 1e-6) << "T=" << horizon << " h=" << h;
                EXPECT_GE(schur, 0.0);
            }
}

TEST(SchurLowerBound, GrowsWithHorizon) {
    const auto m = random_walk();
    const double a = lds::schur_lower_bound(m, 100, 2);
    const double b = lds::schur_lower_bound(m, 200, 2);
    const double c = lds::schur_lower_bound(m, 400, 2);
    EXPECT_GT(b, a);
    EXPECT_GT(c, b);
}

TEST(SchurLowerBound, CapIsEnforced) {
    EXPECT_THROW(lds::schur_lower_bound(random_walk(), 200, 2, 100), lds::ValidationError);
}

TEST(Lemmas, SmallestCaseToMachinePrecision) {
    const auto closed = lds::lemma_toeplitz_closed_forms(3, 1);
    const auto dense = lds::lemma_toeplitz_brute_force(3, 1);
    EXPECT_LE((closed.r22_inv - dense.r22_inv).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((closed.cross_term - dense.cross_term).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lemmas, BlockConventionHoldsForOnesProduct) {
    for (long n : {4L, 9L})
        for (long h : {1L, 3L}) {
            const auto b = lds::ToeplitzBlocks::build(n, h);
            const Matrix l21 = b.lower.bottomLeftCorner(n - h, h);
            EXPECT_EQ(l21 * l21.transpose(), Matrix::Constant(n - h, n - h, static_cast<double>(h)));
        }
}

TEST(Lemmas, LargeCaseRelative) {
    const auto c = lds::verify_lemmas(200, 20, 0.9, 1e-8);
    EXPECT_TRUE(c.passed) << c.r22_inv_rel_err << " " << c.cross_term_rel_err << " " << c.q11_rel_err << " "
                          << c.q_cross_rel_err;
}

TEST(Lemmas, RhoZeroSelectsLastCoordinate) {
    for (long n : {5L, 20L})
        for (long h : {1L, 2L, 4L}) {
            const auto q = lds::lemma_quadratic_forms(0.0, n, h);
            const auto b = lds::lemma_quadratic_brute_force(0.0, n, h);
            EXPECT_NEAR(q.q11, static_cast<double>(h), 1e-12);  // θ = e_h, R_hh = h
            EXPECT_NEAR(q.q11, b.q11, 1e-12);
            EXPECT_NEAR(q.q_cross, b.q_cross, 1e-10 * b.q_cross);
        }
}

TEST(Lemmas, RhoOneIntegerSums) {
    for (long n = 2; n <= 100; n += 7)
        for (long h = 1; h < n && h <= 20; h += 3) {
            const auto q = lds::lemma_quadratic_forms(1.0, n, h);
            const auto b = lds::lemma_quadratic_brute_force(1.0, n, h);
            EXPECT_NEAR(q.q11, b.q11, 1e-10 * b.q11);
            EXPECT_NEAR(q.q_cross, b.q_cross, 1e-10 * b.q_cross);
        }
}

TEST(Lemmas, PropertyGrid) {
    for (double rho : {-0.8, 0.0, 0.3, 0.7, 1.2})
        for (long n : {6L, 15L, 40L, 90L, 150L})
            for (long h : {1L, 3L, 5L}) {
                const auto c = lds::verify_lemmas(n, h, rho, 1e-9);
                EXPECT_TRUE(c.passed) << "rho=" << rho << " n=" << n << " h=" << h;
            }
}

TEST(Lemmas, RejectInvalidSplit) {
    EXPECT_THROW(lds::lemma_toeplitz_closed_forms(5, 0), lds::ValidationError);
    EXPECT_THROW(lds::lemma_quadratic_forms(0.5, 5, 5), lds::ValidationError);
}
