#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <renewal_ldp/quadrature.hpp>

namespace q = renewal_ldp::quadrature;

TEST(GaussLegendre, WeightsSumToIntervalLength) {
    for (int n : {2, 5, 10, 32, 64}) {
        const auto& r = q::gauss_legendre(n);
        double s = 0.0;
        for (double w : r.weights) s += w;
        EXPECT_NEAR(s, 2.0, 1e-14) << n;
    }
}

TEST(GaussLegendre, ExactForPolynomialsUpToDegree2nMinus1) {
    for (int n : {3, 7, 12}) {
        for (int deg = 0; deg <= 2 * n - 1; ++deg) {
            const double got = q::fixed_rule(q::gauss_legendre(n), [&](double x) { return std::pow(x, deg); }, 0.0, 1.0);
            EXPECT_NEAR(got, 1.0 / (deg + 1.0), 1e-13) << "n=" << n << " deg=" << deg;
        }
    }
}

TEST(GaussLegendre, ThreePointNodes) {
    const auto& r = q::gauss_legendre(3);
    ASSERT_EQ(r.nodes.size(), 3u);
    EXPECT_NEAR(std::abs(r.nodes[0]), std::sqrt(0.6), 1e-15);
    EXPECT_NEAR(r.nodes[1], 0.0, 1e-15);
    EXPECT_NEAR(r.weights[1], 8.0 / 9.0, 1e-15);
}

TEST(Adaptive, SmoothIntegrand) {
    const auto res = q::adaptive([](double x) { return std::exp(-x * x); }, 0.0, 2.0);
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(res.value, 0.5 * std::sqrt(std::numbers::pi) * std::erf(2.0), 1e-12);
}

TEST(Adaptive, OscillatoryIntegrand) {
    const auto res = q::adaptive([](double x) { return std::sin(40.0 * x); }, 0.0, 1.0);
    EXPECT_NEAR(res.value, (1.0 - std::cos(40.0)) / 40.0, 1e-11);
}

TEST(Graded, LogSingularityAtLeftEnd) {
    const auto res = q::graded([](double x) { return std::log(x); }, 0.0, 1.0, q::SingularEnd::left);
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(res.value, -1.0, 1e-9);
}

TEST(Graded, LogSingularityAtRightEnd) {
    const auto res = q::graded([](double x) { return -std::log(1.0 - x); }, 0.0, 1.0, q::SingularEnd::right);
    EXPECT_NEAR(res.value, 1.0, 1e-9);
}
