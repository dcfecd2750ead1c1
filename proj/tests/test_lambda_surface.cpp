#include <gtest/gtest.h>

#include <cmath>

#include <renewal_ldp/lambda_surface.hpp>

#include "support/property.hpp"

using namespace renewal_ldp;

namespace {

// Composite Simpson on a fine mesh; independent of the library's quadrature.
double simpson_lambda(const HoldingTimeModel& m, const Tilt& t, int n = 4000) {
    auto f = [&](double y) { return m.cgf_raw(t.a1 + t.a2 * y); };
    double s = f(0.0) + f(1.0);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(static_cast<double>(i) / n);
    return s / (3.0 * n);
}

double poisson_closed(double lam, const Tilt& t) {
    const double u = lam - t.a1, b = t.a2;
    auto xlogx = [](double v) { return v == 0.0 ? 0.0 : v * std::log(v); };
    return std::log(lam) + 1.0 + (xlogx(u - b) - xlogx(u)) / b;
}

double gamma_closed(double s, double r, const Tilt& t) {
    const double v0 = 1.0 - t.a1 / r, v1 = 1.0 - (t.a1 + t.a2) / r;
    auto F = [](double v) { return v == 0.0 ? 0.0 : v * std::log(v) - v; };
    return -s * (r / t.a2) * (F(v0) - F(v1));
}

// A tilt strictly inside D(Lambda), at most `frac` of the way toward the boundary.
Tilt interior_tilt(prop::Gen& g, const HoldingTimeModel& m, double frac = 0.9) {
    const double bar = m.boundary();
    const double a1 = g.uniform(-3.0, frac * bar);
    const double a2 = g.integer(0, 1) ? g.uniform(0.0, frac * bar - a1) : -g.uniform(0.0, 4.0);
    return {a1, a2};
}

}  // namespace

TEST(LambdaEval, ReducesToPhiOnAxis) {
    for (const auto& m : prop::builtin_models())
        for (double a : {-2.0, -0.1, 0.0, 0.3})
            EXPECT_EQ(lambda_eval(m, {a, 0.0}), m.cgf(a));
}

TEST(LambdaEval, MatchesSimpsonOracle) {
    prop::Gen g(31);
    for (int i = 0; i < 200; ++i) {
        const auto m = g.model();
        const Tilt t = interior_tilt(g, m);
        const double want = simpson_lambda(m, t);
        EXPECT_NEAR(lambda_eval(m, t).value(), want, 1e-9 * std::max(1.0, std::abs(want)))
            << m.descriptor() << " " << t.a1 << "," << t.a2;
        EXPECT_NEAR(lambda_eval(m, t, {.force_quadrature = true}).value(), want, 1e-9 * std::max(1.0, std::abs(want)));
    }
}

TEST(LambdaEval, PoissonClosedFormOnGrid) {
    for (double lam : {0.5, 1.0, 2.0}) {
        const auto m = HoldingTimeModel::exponential(lam);
        for (int i = 0; i < 20; ++i)
            for (int j = 0; j < 20; ++j) {
                const double a1 = -2.0 + (0.9 * lam + 2.0) * i / 19.0;
                const double a2 = -3.0 + (0.95 * lam - a1 + 3.0) * j / 19.0;
                if (a2 == 0.0) continue;
                const Tilt t{a1, a2};
                const double want = poisson_closed(lam, t);
                EXPECT_NEAR(lambda_eval(m, t, {.force_quadrature = true}).value(), want, 1e-9);
                EXPECT_NEAR(lambda_eval(m, t).value(), want, 1e-9);
            }
    }
}

TEST(LambdaEval, OpenIntegrableBoundaryIsFinite) {
    // a1 + a2 on the boundary of D(phi): Lambda stays finite for exponential and gamma
    const auto e = HoldingTimeModel::exponential(1.0);
    for (double a1 : {-1.0, 0.0, 0.5}) {
        const Tilt t{a1, 1.0 - a1};
        EXPECT_NEAR(lambda_eval(e, t).value(), poisson_closed(1.0, t), 1e-12);
        EXPECT_NEAR(lambda_eval(e, t, {.force_quadrature = true}).value(), poisson_closed(1.0, t), 1e-8);
    }
    const auto ga = HoldingTimeModel::gamma(2.5, 1.5);
    for (double a1 : {-1.0, 0.7}) {
        const Tilt t{a1, 1.5 - a1};
        EXPECT_NEAR(lambda_eval(ga, t).value(), gamma_closed(2.5, 1.5, t), 1e-8);
    }
    // a1 on the boundary with a2 < 0
    const Tilt back{1.0, -0.7};
    EXPECT_NEAR(lambda_eval(e, back).value(), poisson_closed(1.0, back), 1e-12);
    EXPECT_NEAR(lambda_eval(ga, {1.5, -0.4}).value(), gamma_closed(2.5, 1.5, {1.5, -0.4}), 1e-8);
}

TEST(LambdaEval, GammaClosedFormInterior) {
    prop::Gen g(32);
    for (int i = 0; i < 100; ++i) {
        const double s = g.log_uniform(0.5, 4.0), r = g.log_uniform(0.5, 3.0);
        const auto m = HoldingTimeModel::gamma(s, r);
        Tilt t = interior_tilt(g, m);
        if (std::abs(t.a2) < 1e-3) continue;
        EXPECT_NEAR(lambda_eval(m, t).value(), gamma_closed(s, r, t), 1e-9 * std::max(1.0, gamma_closed(s, r, t)));
    }
}

TEST(LambdaEval, ClosedBoundaryAttained) {
    const auto ig = HoldingTimeModel::inverse_gaussian(1.0);
    const Tilt t{0.2, 0.3};
    ASSERT_TRUE(lambda_eval(ig, t).is_finite());
    EXPECT_NEAR(lambda_eval(ig, t).value(), simpson_lambda(ig, t, 200000), 1e-7);
    EXPECT_TRUE(lambda_eval(ig, {0.2, 0.31}).is_infinite());
    EXPECT_TRUE(lambda_eval(ig, {0.5, -1.0}).is_finite());
    EXPECT_TRUE(lambda_eval(ig, {0.51, -1.0}).is_infinite());
}

TEST(LambdaEval, NonIntegrableBoundaryExcluded) {
    const auto nc = HoldingTimeModel::noncentral_chi_squared(1.0, 1.0);
    EXPECT_TRUE(lambda_eval(nc, {0.1, 0.4}).is_infinite());
    EXPECT_TRUE(lambda_eval(nc, {0.5, -0.4}).is_infinite());
    EXPECT_TRUE(lambda_eval(nc, {0.1, 0.3999}).is_finite());
}

TEST(TiltDomainTest, CasesMatchTaxonomy) {
    const TiltDomain e(HoldingTimeModel::exponential(1.0));
    EXPECT_TRUE(e.contains({0.0, 1.0}));
    EXPECT_TRUE(e.contains({1.0, -2.0}));
    EXPECT_FALSE(e.interior_contains({0.0, 1.0}));
    EXPECT_FALSE(e.contains({1.0, 0.0}));
    const TiltDomain nc(HoldingTimeModel::noncentral_chi_squared(1.0, 1.0));
    EXPECT_FALSE(nc.contains({0.0, 0.5}));
    const TiltDomain ga(HoldingTimeModel::gamma(1.0, 1.0));
    EXPECT_TRUE(ga.in_envelope({5.0, -4.0}) == false);
    EXPECT_TRUE(ga.in_envelope({1.0, -4.0}));
}

TEST(TiltDomainTest, FiniteXDomains) {
    const auto m = HoldingTimeModel::exponential(1.0);
    const TiltDomain d(m);
    // integer x: a1 + a2 x < 1 for a2 >= 0, a1 + a2 < 1 for a2 < 0
    EXPECT_TRUE(d.finite_x_contains(5.0, {-0.5, 0.25}));
    EXPECT_FALSE(d.finite_x_contains(5.0, {-0.5, 0.3}));
    EXPECT_TRUE(d.finite_x_contains(5.0, {1.2, -0.3}));
    EXPECT_FALSE(d.finite_x_contains(5.0, {1.2, -0.1}));
    // non-integer x: smallest weight is x - [x]
    EXPECT_TRUE(d.finite_x_contains(5.5, {1.2, -0.5}));
    EXPECT_FALSE(d.finite_x_contains(5.5, {1.2, -0.3}));
    EXPECT_THROW(d.finite_x_contains(0.0, {0.0, 0.0}), DomainError);
}

TEST(LambdaGrad, MatchesFiniteDifferences) {
    prop::Gen g(33);
    const double h = 1e-5;
    for (int i = 0; i < 300; ++i) {
        const auto m = g.model();
        const Tilt t = interior_tilt(g, m, 0.8);
        const auto gr = lambda_grad(m, t);
        auto L = [&](double a1, double a2) { return lambda_eval(m, {a1, a2}).value(); };
        const double fd1 = (L(t.a1 + h, t.a2) - L(t.a1 - h, t.a2)) / (2 * h);
        const double fd2 = (L(t.a1, t.a2 + h) - L(t.a1, t.a2 - h)) / (2 * h);
        EXPECT_NEAR(gr.g1, fd1, 1e-6 * std::max(1.0, std::abs(fd1))) << m.descriptor() << " " << t.a1 << "," << t.a2;
        EXPECT_NEAR(gr.g2, fd2, 1e-6 * std::max(1.0, std::abs(fd2))) << m.descriptor() << " " << t.a1 << "," << t.a2;
        const auto df = lambda_grad_difference_form(m, t);
        if (std::abs(t.a2) > 1e-2) {
            EXPECT_NEAR(gr.g1, df.g1, 1e-9 * std::max(1.0, std::abs(df.g1)));
            EXPECT_NEAR(gr.g2, df.g2, 1e-9 * std::max(1.0, std::abs(df.g2)));
        }
    }
}

TEST(LambdaGrad, ContinuousAcrossSmallTiltSwitch) {
    for (const auto& m : prop::builtin_models()) {
        const double a1 = 0.1 * m.boundary();
        const double lo = 0.999 * kSmallTiltA2, hi = 1.001 * kSmallTiltA2;
        const auto below = lambda_grad(m, {a1, lo});
        const auto above = lambda_grad(m, {a1, hi});
        const auto H = lambda_hessian(m, {a1, kSmallTiltA2});
        EXPECT_NEAR(above.g1 - below.g1, H[0][1] * (hi - lo), 1e-11) << m.descriptor();
        EXPECT_NEAR(above.g2 - below.g2, H[1][1] * (hi - lo), 1e-11) << m.descriptor();
        const auto at0 = lambda_grad(m, {a1, 0.0});
        EXPECT_NEAR(at0.g1, m.cgf_d1(a1), 1e-15);
        EXPECT_NEAR(at0.g2, m.cgf_d1(a1) / 2.0, 1e-15);
    }
}

TEST(LambdaGrad, RejectsBoundaryTilts) {
    EXPECT_THROW(lambda_grad(HoldingTimeModel::exponential(1.0), {0.0, 1.0}), DomainError);
    EXPECT_THROW(lambda_hessian(HoldingTimeModel::exponential(1.0), {2.0, 0.0}), DomainError);
}

TEST(LambdaHessian, MatchesFiniteDifferencesOfGradient) {
    prop::Gen g(34);
    const double h = 1e-5;
    for (int i = 0; i < 200; ++i) {
        const auto m = g.model();
        const Tilt t = interior_tilt(g, m, 0.8);
        const auto H = lambda_hessian(m, t);
        const auto p1 = lambda_grad(m, {t.a1 + h, t.a2}), m1 = lambda_grad(m, {t.a1 - h, t.a2});
        const auto p2 = lambda_grad(m, {t.a1, t.a2 + h}), m2 = lambda_grad(m, {t.a1, t.a2 - h});
        const double h11 = (p1.g1 - m1.g1) / (2 * h), h12 = (p2.g1 - m2.g1) / (2 * h);
        const double h21 = (p1.g2 - m1.g2) / (2 * h), h22 = (p2.g2 - m2.g2) / (2 * h);
        const double tol = 1e-6;
        EXPECT_NEAR(H[0][0], h11, tol * std::max(1.0, std::abs(h11))) << m.descriptor();
        EXPECT_NEAR(H[0][1], h12, tol * std::max(1.0, std::abs(h12))) << m.descriptor();
        EXPECT_NEAR(H[1][0], h21, tol * std::max(1.0, std::abs(h21))) << m.descriptor();
        EXPECT_NEAR(H[1][1], h22, tol * std::max(1.0, std::abs(h22))) << m.descriptor();
        // convexity
        EXPECT_GT(H[0][0], 0.0);
        EXPECT_GT(H[0][0] * H[1][1] - H[0][1] * H[1][0], 0.0);
    }
}

TEST(HessianOrigin, MatchesFiniteDifferencesAndInverse) {
    for (const auto& m : prop::builtin_models()) {
        const auto cs = hessian_origin(m);
        EXPECT_NEAR(cs.phi2, m.variance(), 1e-15);
        const double h = 1e-4;
        auto L = [&](double a1, double a2) { return lambda_eval(m, {a1, a2}).value(); };
        const double f11 = (L(h, 0) - 2 * L(0, 0) + L(-h, 0)) / (h * h);
        const double f22 = (L(0, h) - 2 * L(0, 0) + L(0, -h)) / (h * h);
        const double f12 = (L(h, h) - L(h, -h) - L(-h, h) + L(-h, -h)) / (4 * h * h);
        EXPECT_NEAR(cs.C[0][0], f11, 1e-6 * std::max(1.0, f11)) << m.descriptor();
        EXPECT_NEAR(cs.C[1][1], f22, 1e-6 * std::max(1.0, f22)) << m.descriptor();
        EXPECT_NEAR(cs.C[0][1], f12, 1e-6 * std::max(1.0, f12)) << m.descriptor();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double p = cs.C[i][0] * cs.C_inv[0][j] + cs.C[i][1] * cs.C_inv[1][j];
                EXPECT_NEAR(p, i == j ? 1.0 : 0.0, 1e-12);
            }
    }
}

TEST(Regularity, Taxonomy) {
    const auto ig = regularity_report(HoldingTimeModel::inverse_gaussian(1.0));
    EXPECT_TRUE(ig.lsc);
    EXPECT_FALSE(ig.steep);
    const auto ex = regularity_report(HoldingTimeModel::exponential(1.0));
    EXPECT_FALSE(ex.lsc);
    EXPECT_TRUE(ex.steep);
    EXPECT_EQ(ex.full_ldp_certificate, FullLdpCertificate::gradient_image);
    const auto nc = regularity_report(HoldingTimeModel::noncentral_chi_squared(1.0, 1.0));
    EXPECT_TRUE(nc.lsc);
    EXPECT_TRUE(nc.steep);
    EXPECT_EQ(nc.full_ldp_certificate, FullLdpCertificate::gartner_ellis_c);
}
