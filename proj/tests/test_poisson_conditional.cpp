#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <renewal_ldp/poisson_conditional.hpp>

#include "support/property.hpp"

using namespace renewal_ldp;

namespace {

// log of (1/z1) * integral_0^z1 e^{beta u} du by composite Simpson
double kappa_by_quadrature(double beta, double z1) {
    const int n = 2000;
    const double h = z1 / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * std::exp(beta * i * h);
    }
    return std::log(s * h / 3.0 / z1);
}

// sup over a grid of beta, refined around the best point
double kappa_star_by_grid(double z2, double z1) {
    double best = -1e300, arg = 0.0;
    for (double b = -50.0; b <= 50.0; b += 1e-2) {
        const double v = b * z2 - kappa(b, z1);
        if (v > best) best = v, arg = b;
    }
    for (double step = 1e-3; step >= 1e-7; step /= 10.0) {
        const double centre = arg;
        for (int i = -20; i <= 20; ++i) {
            const double b = centre + i * step;
            const double v = b * z2 - kappa(b, z1);
            if (v > best) best = v, arg = b;
        }
    }
    return best;
}

// P(U_1 + ... + U_n >= s) from the Irwin-Hall distribution function in 200-bit arithmetic
double irwin_hall_upper_exact(int n, double s) {
    using big = boost::multiprecision::cpp_bin_float_100;
    big sum = 0, binom = 1, fact = 1;
    for (int i = 2; i <= n; ++i) fact *= i;
    const double mirrored = n - s;  // P(S >= s) = P(S <= n - s)
    for (int k = 0; k <= static_cast<int>(std::floor(mirrored)); ++k) {
        const big term = binom * boost::multiprecision::pow(big(mirrored) - k, n);
        sum += (k % 2 ? -term : term);
        binom = binom * (n - k) / (k + 1);
    }
    return static_cast<double>(sum / fact);
}

}  // namespace

TEST(Kappa, Examples) {
    EXPECT_EQ(kappa(0.0, 3.0), 0.0);
    EXPECT_EQ(kappa(2.5, 0.0), 0.0);
    EXPECT_NEAR(kappa(1.0, 1.0), std::log(std::numbers::e - 1.0), 1e-15);
    EXPECT_NEAR(kappa(1.0, 1.0), 0.54132485461291810, 1e-14);
}

TEST(Kappa, MatchesQuadratureOfUniformMgf) {
    prop::Gen g(3);
    for (int i = 0; i < 60; ++i) {
        const double beta = g.uniform(-8.0, 8.0), z1 = g.uniform(0.05, 3.0);
        EXPECT_NEAR(kappa(beta, z1), kappa_by_quadrature(beta, z1), 1e-10) << beta << " " << z1;
    }
    // series branch agrees with the closed form just outside it
    EXPECT_NEAR(kappa(1.01e-8, 1.0), 0.5 * 1.01e-8 + 1.01e-8 * 1.01e-8 / 24.0, 1e-22);
    EXPECT_NEAR(kappa(0.0999, 1.0), kappa_by_quadrature(0.0999, 1.0), 1e-13);
    EXPECT_NEAR(kappa(0.1001, 1.0), kappa_by_quadrature(0.1001, 1.0), 1e-13);
    EXPECT_NEAR(kappa(-2e-8, 1.0), kappa_by_quadrature(-2e-8, 1.0), 1e-12);
}

TEST(Kappa, DerivativesMatchFiniteDifferences) {
    prop::Gen g(5);
    for (int i = 0; i < 60; ++i) {
        const double beta = g.uniform(-20.0, 20.0), z1 = g.uniform(0.1, 2.0), h = 1e-5;
        EXPECT_NEAR(kappa_prime(beta, z1), (kappa(beta + h, z1) - kappa(beta - h, z1)) / (2 * h), 1e-7);
        EXPECT_NEAR(kappa_second(beta, z1), (kappa_prime(beta + h, z1) - kappa_prime(beta - h, z1)) / (2 * h), 1e-7);
    }
}

TEST(KappaStar, Examples) {
    EXPECT_EQ(kappa_star(0.5, 1.0).value, ExtendedReal(0.0));
    EXPECT_NEAR(kappa_star(0.25, 1.0).value.value(), kappa_star_by_grid(0.25, 1.0), 1e-6);
    EXPECT_TRUE(kappa_star(-0.1, 1.0).value.is_infinite());
    EXPECT_TRUE(kappa_star(1.2, 1.0).value.is_infinite());
    for (double end : {0.0, 1.0}) {
        const auto r = kappa_star(end, 1.0);
        EXPECT_TRUE(r.value.is_infinite());
        EXPECT_FALSE(r.attained);
    }
    EXPECT_EQ(kappa_star(0.0, 0.0).value, ExtendedReal(0.0));
    EXPECT_TRUE(kappa_star(0.1, 0.0).value.is_infinite());
    EXPECT_THROW(kappa_star(0.1, -1.0), DomainError);
}

TEST(KappaStar, MatchesGridLegendreTransform) {
    prop::Gen g(11);
    for (int i = 0; i < 15; ++i) {
        const double z1 = g.uniform(0.3, 3.0), z2 = z1 * g.uniform(0.08, 0.92);
        EXPECT_NEAR(kappa_star(z2, z1).value.value(), kappa_star_by_grid(z2, z1), 1e-6) << z1 << " " << z2;
    }
}

TEST(KappaStar, ConvexSymmetricAndZeroOnlyAtMidpoint) {
    for (double z1 : {0.4, 1.0, 2.5}) {
        for (int k = 1; k < 40; ++k) {
            const double z2 = z1 * k / 40.0;
            const double v = kappa_star(z2, z1).value.value();
            EXPECT_NEAR(v, kappa_star(z1 - z2, z1).value.value(), 1e-10);
            if (k == 20) EXPECT_EQ(v, 0.0);
            else EXPECT_GT(v, 0.0);
            if (k > 1 && k < 39) {
                const double lo = kappa_star(z1 * (k - 1) / 40.0, z1).value.value();
                const double hi = kappa_star(z1 * (k + 1) / 40.0, z1).value.value();
                EXPECT_LE(2.0 * v, lo + hi + 1e-12);
            }
        }
    }
}

TEST(ConditionalMgf, Examples) {
    EXPECT_EQ(conditional_mgf(5, 2.0, 0.0), 1.0);
    for (double y : {0.3, 1.0, 4.0})
        for (double beta : {-1.5, 0.2, 2.0}) EXPECT_NEAR(conditional_mgf(1, y, beta), std::exp(beta * y), 1e-13 * std::exp(beta * y));
    const double triangulated = 2.0 * std::exp(0.5 * 3 * 2.0) / (2.0 * 2.0) * nested_integral(3, 2.0, 0.5, NestedMode::brute_force);
    EXPECT_NEAR(conditional_mgf(3, 2.0, 0.5), triangulated, 1e-8 * triangulated);
}

TEST(ConditionalMgf, TriangulatesWithNestedIntegral) {
    for (int x = 2; x <= 5; ++x)
        for (double y : {0.5, 1.0, 2.0})
            for (double beta : {-2.0, -0.5, 0.5, 2.0}) {
                const double rhs = std::exp(std::lgamma(x) + beta * x * y - (x - 1) * std::log(y)) *
                                   nested_integral(x, y, beta, NestedMode::closed_form);
                EXPECT_NEAR(conditional_mgf(x, y, beta), rhs, 1e-8 * rhs);
            }
}

TEST(ConditionalMgf, LogConvexInBeta) {
    prop::Gen g(13);
    for (int i = 0; i < 200; ++i) {
        const int x = g.integer(1, 40);
        const double y = g.uniform(0.1, 5.0), b0 = g.uniform(-3.0, 3.0), b1 = g.uniform(-3.0, 3.0);
        const double mid = log_conditional_mgf(x, y, 0.5 * (b0 + b1));
        EXPECT_LE(mid, 0.5 * (log_conditional_mgf(x, y, b0) + log_conditional_mgf(x, y, b1)) + 1e-12);
    }
}

TEST(NestedIntegral, Examples) {
    for (double y : {0.5, 1.0, 2.0})
        for (double beta : {-2.0, 0.5, 2.0})
            EXPECT_EQ(nested_integral(2, y, beta), -std::expm1(-beta * y) / beta);
    const double expected = std::pow(1.0 - std::exp(-1.0), 2) / 2.0;
    EXPECT_NEAR(nested_integral(3, 1.0, 1.0), expected, 1e-15);
    EXPECT_NEAR(nested_integral(3, 1.0, 1.0), 0.19978, 1e-5);
    EXPECT_NEAR(nested_integral(3, 1.0, 1.0, NestedMode::brute_force), expected, 1e-8);
}

TEST(NestedIntegral, SmallBetaLimitIsSimplexVolume) {
    for (int x = 2; x <= 5; ++x) {
        const double y = 1.7;
        const double volume = std::pow(y, x - 1) / std::tgamma(x);
        EXPECT_NEAR(nested_integral(x, y, 0.0), volume, 1e-14 * volume);
        EXPECT_NEAR(nested_integral(x, y, 1e-6), volume, 1e-5 * volume);
        EXPECT_NEAR(nested_integral(x, y, 1e-6, NestedMode::brute_force), nested_integral(x, y, 1e-6), 1e-10 * volume);
    }
}

TEST(NestedIntegral, ClosedFormMatchesBruteForce) {
    for (int x = 2; x <= 5; ++x)
        for (double y : {0.5, 1.0, 2.0})
            for (double beta : {-2.0, -0.5, 0.5, 2.0})
                EXPECT_NEAR(nested_integral(x, y, beta, NestedMode::brute_force), nested_integral(x, y, beta), 1e-8)
                    << x << " " << y << " " << beta;
}

TEST(NestedIntegral, RefusesExpensiveBruteForce) {
    EXPECT_THROW(nested_integral(7, 1.0, 1.0, NestedMode::brute_force), DomainError);
    EXPECT_NO_THROW(nested_integral(40, 1.0, 1.0));
    EXPECT_THROW(nested_integral(1, 1.0, 1.0), DomainError);
}

TEST(AreaGivenTau, SingleTermIsExact) {
    Stream s(1, 0);
    EXPECT_EQ(sample_area_given_tau(1, 2.75, s), 2.75);
}

TEST(AreaGivenTau, MeanAndMgf) {
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        Stream s(2024, i);
        const double a = sample_area_given_tau(3, 2.0, s);
        sum += a;
        sum2 += a * a;
    }
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, 4.0, 4.0 * se);

    double mgf = 0.0;
    for (int i = 0; i < n; ++i) {
        Stream s(77, i);
        mgf += std::exp(0.3 * sample_area_given_tau(4, 1.0, s));
    }
    EXPECT_NEAR(mgf / n, conditional_mgf(4, 1.0, 0.3), 0.01 * conditional_mgf(4, 1.0, 0.3));
}

TEST(AreaGivenTau, UniformMgfIsExpKappa) {
    const int n = 1000000;
    for (double beta : {-2.0, 1.0}) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            Stream s(5, i);
            sum += std::exp(beta * 0.8 * s.uniform());
        }
        EXPECT_NEAR(sum / n, std::exp(kappa(beta, 0.8)), 0.01 * std::exp(kappa(beta, 0.8)));
    }
}

TEST(ConditionalLdp, ConvergesToKappa) {
    const auto zero = conditional_ldp_check({10, 100}, [](int) { return 1.3; }, 1.3, 0.0);
    for (const auto& r : zero) EXPECT_EQ(r.value, 0.0);

    const auto rows = conditional_ldp_check({100, 1000, 10000}, [](int x) { return 1.0 + 1.0 / x; }, 1.0, 1.0);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
        EXPECT_NEAR(r.limit, std::log(std::numbers::e - 1.0), 1e-15);
        EXPECT_LT(r.abs_error, 10.0 / r.x);
    }
    EXPECT_GT(rows[0].abs_error, rows[2].abs_error);

    const auto neg = conditional_ldp_check({1000}, [](int) { return 0.5; }, 0.5, -2.0);
    EXPECT_NEAR(neg[0].limit, std::log(1.0 - std::exp(-1.0)), 1e-15);
    EXPECT_LT(neg[0].abs_error, 10.0 / 1000);
}

TEST(Chaganty, Examples) {
    const auto mid = chaganty_equality(1.0, 1.0, 0.5);
    EXPECT_EQ(mid.kappa_star_value, ExtendedReal(0.0));
    EXPECT_NEAR(mid.J_value.value(), 0.0, 1e-12);
    EXPECT_LT(chaganty_equality(1.0, 1.0, 0.25).abs_diff, 1e-6);
    EXPECT_LT(chaganty_equality(2.0, 1.0, 0.75).abs_diff, 1e-6);
    EXPECT_THROW(chaganty_equality(1.0, 1.0, 1.0), DomainError);
}

TEST(Chaganty, HoldsOnInteriorGrid) {
    for (double lambda : {0.5, 1.0, 3.0})
        for (int i = 1; i <= 7; ++i)
            for (int j = 1; j <= 7; ++j) {
                const double z1 = 0.25 * i, z2 = z1 * j / 8.0;
                EXPECT_LT(chaganty_equality(lambda, z1, z2).abs_diff, 1e-6) << lambda << " " << z1 << " " << z2;
            }
}

TEST(UniformSumTail, MatchesIrwinHall) {
    for (int n : {20, 50, 100}) {
        for (double frac : {0.52, 0.6, 0.7, 0.8, 0.9}) {
            const double s = frac * n;
            const double exact = irwin_hall_upper_exact(n, s);
            EXPECT_NEAR(uniform_sum_upper_tail(n, s), exact, 0.25 / n * exact) << n << " " << s;
            EXPECT_NEAR(uniform_sum_upper_tail(n, s) + uniform_sum_upper_tail(n, n - s), 1.0, 1e-13);
        }
    }
    EXPECT_EQ(uniform_sum_upper_tail(10, 0.0), 1.0);
    EXPECT_EQ(uniform_sum_upper_tail(10, 10.0), 0.0);
    EXPECT_EQ(uniform_sum_upper_tail(10, 5.0), 0.5);
}
