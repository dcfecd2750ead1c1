#include <gtest/gtest.h>

#include <cmath>

#include <renewal_ldp/legendre_solver.hpp>

#include "support/property.hpp"

using namespace renewal_ldp;

TEST(RateLd, ZeroAtLawOfLargeNumbersPoint) {
    for (const auto& m : prop::builtin_models()) {
        const auto r = rate_ld(m, {m.mean(), m.mean() / 2.0});
        EXPECT_EQ(r.value, ExtendedReal(0.0));
        ASSERT_TRUE(r.argmax_tilt);
        EXPECT_EQ(*r.argmax_tilt, (Tilt{0.0, 0.0}));
    }
}

TEST(RateLd, InfiniteOutsideCone) {
    for (const auto& m : prop::builtin_models()) {
        for (ScaledPoint z : {ScaledPoint{1.0, 2.0}, ScaledPoint{1.0, -0.1}, ScaledPoint{-1.0, -2.0}}) {
            const auto r = rate_ld(m, z);
            EXPECT_TRUE(r.value.is_infinite());
            EXPECT_EQ(r.method, RateMethod::closed_form);
        }
    }
}

TEST(RateLd, ExponentialOnMidline) {
    const auto m = HoldingTimeModel::exponential(1.0);
    const auto r = rate_ld(m, {2.0, 1.0});
    EXPECT_NEAR(r.value.value(), 1.0 - std::log(2.0), 1e-10);
    EXPECT_NEAR(r.argmax_tilt->a1, 0.5, 1e-8);
    EXPECT_NEAR(r.argmax_tilt->a2, 0.0, 1e-8);
}

TEST(RateLd, GradientAtArgmaxEqualsPoint) {
    prop::Gen g(41);
    for (int i = 0; i < 120; ++i) {
        const auto m = g.model();
        const auto [z1, z2] = g.cone_point(m.mean());
        const auto r = rate_ld(m, {z1, z2});
        ASSERT_TRUE(r.value.is_finite());
        EXPECT_GE(r.value.value(), 0.0);
        if (r.converged && !r.on_boundary) {
            const auto gr = lambda_grad(m, *r.argmax_tilt);
            EXPECT_NEAR(gr.g1, z1, 1e-8 * std::max(1.0, z1)) << m.descriptor() << " " << z1 << "," << z2;
            EXPECT_NEAR(gr.g2, z2, 1e-8 * std::max(1.0, z1)) << m.descriptor() << " " << z1 << "," << z2;
        }
    }
}

TEST(RateLd, NewtonAndAscentAgree) {
    prop::Gen g(42);
    for (int i = 0; i < 40; ++i) {
        const auto m = g.model();
        const auto [z1, z2] = g.cone_point(m.mean());
        const auto n = rate_ld(m, {z1, z2});
        const auto a = rate_ld(m, {z1, z2}, {.solver = RateSolver::ascent});
        EXPECT_NEAR(n.value.value(), a.value.value(), 1e-8 * std::max(1.0, n.value.value()))
            << m.descriptor() << " " << z1 << "," << z2;
    }
}

// Oracle: the dual objective is concave, so a coarse grid search followed by
// coordinate-wise golden refinement reaches the supremum independently of Newton.
static double grid_sup(const HoldingTimeModel& m, const ScaledPoint& z) {
    auto f = [&](double a1, double a2) {
        try {
            const auto l = lambda_eval(m, {a1, a2});
            return l.is_finite() ? a1 * z.z1 + a2 * z.z2 - l.value() : -1e300;
        } catch (const SolverFailure&) {
            return -1e300;  // too close to the boundary to integrate; not a candidate
        }
    };
    double b1 = 0, b2 = 0, best = 0;
    for (double a1 = -10; a1 <= 3; a1 += 0.1)
        for (double a2 = -20; a2 <= 20; a2 += 0.25) {
            const double v = f(a1, a2);
            if (v > best) best = v, b1 = a1, b2 = a2;
        }
    double r = 0.1;
    for (int round = 0; round < 60; ++round, r *= 0.7) {
        for (double d1 : {-r, 0.0, r})
            for (double d2 : {-r, 0.0, r}) {
                const double v = f(b1 + d1, b2 + d2);
                if (v > best) best = v, b1 += d1, b2 += d2;
            }
    }
    return best;
}

TEST(RateLd, AgreesWithGridSupremum) {
    const std::vector<ScaledPoint> pts{{1.3, 0.4}, {0.7, 0.5}, {2.0, 0.5}, {0.9, 0.2}};
    for (const auto& m : prop::builtin_models())
        for (const auto& z : pts) {
            const double got = rate_ld(m, z).value.value();
            const double want = grid_sup(m, z);
            EXPECT_NEAR(got, want, 1e-5 * std::max(1.0, want)) << m.descriptor() << " " << z.z1 << "," << z.z2;
            EXPECT_GE(got, want - 1e-9);
        }
}

TEST(RateLd, PositiveAwayFromZero) {
    for (const auto& m : prop::builtin_models()) {
        const double mu = m.mean();
        for (int k = 0; k < 6; ++k) {
            const double th = k * std::numbers::pi / 3.0 + 0.3;
            const ScaledPoint z{mu + 0.05 * std::cos(th), mu / 2 + 0.05 * std::sin(th)};
            EXPECT_GT(rate_ld(m, z).value.value(), 1e-4) << m.descriptor() << " k=" << k;
        }
    }
}

TEST(RateLd, ConeBoundaryReportedNotConverged) {
    const auto m = HoldingTimeModel::exponential(1.0);
    const auto r = rate_ld(m, {1.0, 0.0});
    EXPECT_TRUE(r.on_boundary);
    EXPECT_FALSE(r.converged);
    EXPECT_GE(r.value.as_double(), 0.0);
}

TEST(Poisson, Examples) {
    const auto a = rate_ld_poisson(1.0, {1.0, 0.5});
    EXPECT_EQ(a.value, ExtendedReal(0.0));
    const auto b = rate_ld_poisson(1.0, {2.0, 1.0});
    EXPECT_NEAR(b.value.value(), 1.0 - std::log(2.0), 1e-12);
    EXPECT_NEAR(b.argmax_tilt->a1, 0.5, 1e-15);
    EXPECT_EQ(b.argmax_tilt->a2, 0.0);
    EXPECT_THROW(rate_ld_poisson(1.0, {1.0, 1.0}), DomainError);
    EXPECT_THROW(rate_ld_poisson(1.0, {1.0, 0.0}), DomainError);
}

TEST(Poisson, MatchesGenericSolverOnGrid) {
    for (double lam : {0.5, 1.0, 2.0}) {
        const auto m = HoldingTimeModel::exponential(lam);
        for (int i = 1; i <= 15; ++i)
            for (int j = 1; j <= 15; ++j) {
                const double z1 = (0.3 + 2.7 * (i - 1) / 14.0) / lam;
                const double z2 = z1 * j / 16.0;
                const double a = rate_ld(m, {z1, z2}).value.value();
                const double b = rate_ld_poisson(lam, {z1, z2}).value.value();
                EXPECT_NEAR(a, b, 1e-6 * std::max(1.0, a)) << lam << " " << z1 << "," << z2;
            }
    }
}

TEST(Poisson, GIsIncreasingWithUnitSlopeAtZero) {
    prop::Gen g(43);
    for (int i = 0; i < 100; ++i) {
        const auto [z1, z2] = g.cone_point(1.0);
        const ScaledPoint z{z1, z2};
        EXPECT_EQ(poisson_g(z, 0.0), 0.0);
        EXPECT_NEAR(poisson_g_prime(z, 0.0), z1, 1e-15);
        const double lo = -1.0 / z2, hi = 1.0 / (z1 - z2);
        double prev = -INFINITY;
        for (int k = 1; k < 200; ++k) {
            const double a = lo + (hi - lo) * k / 200.0;
            const double v = poisson_g(z, a);
            EXPECT_GT(v, prev);
            EXPECT_GT(poisson_g_prime(z, a), 0.0);
            prev = v;
        }
        const double h = 1e-6;
        EXPECT_NEAR((poisson_g(z, h) - poisson_g(z, -h)) / (2 * h), z1, 1e-6);
    }
}

TEST(Poisson, RootLiesOnSideOfGamma) {
    prop::Gen g(44);
    for (int i = 0; i < 200; ++i) {
        const auto [z1, z2] = g.cone_point(1.0);
        const ScaledPoint z{z1, z2};
        const double root = poisson_g_root(z).a2;
        const double gam = poisson_gamma(z);
        EXPECT_TRUE((root > 0) == (gam > 0)) << z1 << "," << z2;
        EXPECT_NEAR(poisson_g(z, root), root * z1, 1e-10 * std::max(1.0, std::abs(root * z1)));
    }
}

TEST(Marginals, I1Examples) {
    const auto m = HoldingTimeModel::exponential(1.0);
    EXPECT_EQ(marginal_I1(m, 1.0).value, ExtendedReal(0.0));
    EXPECT_NEAR(marginal_I1(m, 2.0).value.value(), 1.0 - std::log(2.0), 1e-14);
    EXPECT_NEAR(marginal_I1(m, 0.5).value.value(), std::log(2.0) - 0.5, 1e-14);
}

TEST(Marginals, I1IsInfOverZ2) {
    for (const auto& m : prop::builtin_models()) {
        for (double c : {0.6, 1.7}) {
            const double z1 = c * m.mean();
            double best = INFINITY;
            for (int k = 1; k < 400; ++k) best = std::min(best, rate_ld(m, {z1, z1 * k / 400.0}).value.value());
            const double i1 = marginal_I1(m, z1).value.value();
            EXPECT_LE(i1, best + 1e-9);
            EXPECT_NEAR(i1, best, 1e-4 * std::max(1.0, i1)) << m.descriptor();
        }
    }
}

TEST(Marginals, I2Examples) {
    for (const auto& m : prop::builtin_models()) {
        EXPECT_EQ(marginal_I2(m, m.mean() / 2.0).value, ExtendedReal(0.0));
        EXPECT_TRUE(marginal_I2(m, -1.0).value.is_infinite());
    }
}

TEST(Marginals, I2MatchesGridBruteForce) {
    const auto m = HoldingTimeModel::exponential(1.0);
    const double got = marginal_I2(m, 1.0).value.value();
    double best = INFINITY;
    for (int i = 0; i <= 9000; ++i) {
        const double z1 = 1.0 + i * 1e-3;
        if (z1 <= 1.0) continue;
        best = std::min(best, rate_ld(m, {z1, 1.0}).value.value());
    }
    EXPECT_GT(got, 0.0);
    EXPECT_LE(got, best + 1e-9);
    EXPECT_NEAR(got, best, 1e-4);
}

TEST(ConditionalJ, Examples) {
    const auto m = HoldingTimeModel::exponential(1.0);
    EXPECT_EQ(conditional_rate_J(m, 1.0, 0.5), ExtendedReal(0.0));
    for (double z1 : {0.5, 1.0, 2.0}) EXPECT_NEAR(conditional_rate_J(m, z1, z1 / 2).value(), 0.0, 1e-10);
    EXPECT_TRUE(conditional_rate_J(m, 1.0, 2.0).is_infinite());
}

TEST(ConditionalJ, Decomposition) {
    prop::Gen g(45);
    for (int i = 0; i < 60; ++i) {
        const auto m = g.model();
        const auto [z1, z2] = g.cone_point(m.mean());
        const double full = rate_ld(m, {z1, z2}).value.value();
        const double i1 = marginal_I1(m, z1).value.value();
        const double j = conditional_rate_J(m, z1, z2).value();
        EXPECT_GE(j, 0.0);
        EXPECT_NEAR(full, i1 + j, 1e-8 * std::max(1.0, full)) << m.descriptor();
    }
}

TEST(RegionInf, HalfPlaneAndBox) {
    const auto m = HoldingTimeModel::exponential(1.0);
    // tau/x >= 1.5: the infimum is the marginal rate phi*(1.5)
    const auto r = rate_inf_over_region(m, Region::parse("z1>=1.5"));
    EXPECT_NEAR(r.value.value(), 0.5 - std::log(1.5), 1e-7);
    EXPECT_EQ(rate_inf_over_region(m, Region::parse("z1<=2")).value, ExtendedReal(0.0));
    EXPECT_TRUE(rate_inf_over_region(m, Region::parse("z2>z1")).value.is_infinite() ||
                rate_inf_over_region(m, Region::parse("z2>z1")).value.value() > 0.0);
    const auto box = rate_inf_over_region(m, Region::parse("box:1.5,3,0,10"));
    EXPECT_NEAR(box.value.value(), 0.5 - std::log(1.5), 1e-7);
}
