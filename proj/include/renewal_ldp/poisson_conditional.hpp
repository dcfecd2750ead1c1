#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "extended_real.hpp"
#include "legendre_solver.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "special_functions.hpp"

namespace renewal_ldp {

/// CGF of the uniform law on (0, z1): log((e^{beta z1} - 1)/(beta z1)).
inline double kappa(double beta, double z1) {
    if (z1 < 0.0) throw DomainError("kappa: z1 must be nonnegative");
    const double t = beta * z1;
    if (t == 0.0) return 0.0;
    if (std::abs(t) < 1e-8) return t / 2.0 + t * t / 24.0;
    if (std::abs(t) < 0.1) {
        const double t2 = t * t;
        return t / 2.0 + t2 * (1.0 / 24.0 + t2 * (-1.0 / 2880.0 + t2 * (1.0 / 181440.0 - t2 / 9676800.0)));
    }
    if (t > 0.0) return t + std::log(-std::expm1(-t)) - std::log(t);
    return std::log(-std::expm1(t)) - std::log(-t);
}

/// d kappa / d beta = z1/(1 - e^{-beta z1}) - 1/beta.
inline double kappa_prime(double beta, double z1) {
    const double t = beta * z1;
    if (std::abs(t) < 1e-4) return z1 * (0.5 + t / 12.0 - t * t * t / 720.0);
    return z1 * (1.0 / (-std::expm1(-t)) - 1.0 / t);
}

/// d^2 kappa / d beta^2 = z1^2 (1/t^2 - e^{-|t|}/(1 - e^{-|t|})^2), t = beta z1.
inline double kappa_second(double beta, double z1) {
    const double t = beta * z1;
    if (std::abs(t) < 1e-3) return z1 * z1 * (1.0 / 12.0 - t * t / 240.0);
    const double e = std::exp(-std::abs(t)), d = -std::expm1(-std::abs(t));
    return z1 * z1 * (1.0 / (t * t) - e / (d * d));
}

struct ConjugateValue {
    ExtendedReal value = ExtendedReal::infinity();
    double argmax = 0.0;
    bool attained = false;
    int iterations = 0;
};

namespace detail {

// beta with kappa'(beta; z1) = target, for target in (0, z1).
inline ConjugateValue kappa_prime_root(double target, double z1) {
    ConjugateValue out;
    auto f = [&](double b) { return kappa_prime(b, z1) - target; };
    double bound = 1.0 / z1;
    int it = 0;
    while (f(-bound) > 0.0 || f(bound) < 0.0) {
        bound *= 2.0;
        if (++it > 1100 || !std::isfinite(bound)) throw SolverFailure("kappa_star: no bracket for kappa'", 0.0, it);
    }
    double lo = -bound, hi = bound;
    double b = 0.0;
    for (; it < 400; ++it) {
        const double v = f(b);
        if (v == 0.0) break;
        if (v < 0.0) lo = b; else hi = b;
        if (hi - lo <= 1e-15 * std::max(1.0 / z1, std::abs(b))) break;
        const double slope = kappa_second(b, z1);
        double next = slope > 0.0 ? b - v / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == b) break;
        b = next;
    }
    if (it >= 400) throw SolverFailure("kappa_star: root-finder iteration cap", b, it);
    out.argmax = b;
    out.iterations = it;
    out.attained = true;
    return out;
}

}  // namespace detail

/// Legendre transform of kappa(.; z1) at z2.
inline ConjugateValue kappa_star(double z2, double z1) {
    if (z1 < 0.0) throw DomainError("kappa_star: z1 must be nonnegative");
    ConjugateValue out;
    if (z1 == 0.0) {
        if (z2 == 0.0) {
            out.value = 0.0;
            out.attained = true;
        }
        return out;
    }
    if (z2 <= 0.0 || z2 >= z1) return out;  // endpoints: supremum not attained and infinite
    if (2.0 * z2 == z1) {
        out.value = 0.0;
        out.attained = true;
        return out;
    }
    out = detail::kappa_prime_root(z2, z1);
    out.value = std::max(0.0, out.argmax * z2 - kappa(out.argmax, z1));
    return out;
}

inline double log_conditional_mgf(int x, double y, double beta) {
    if (x < 1) throw DomainError("conditional_mgf: x must be a positive integer");
    if (!(y > 0.0)) throw DomainError("conditional_mgf: y must be positive");
    if (beta == 0.0) return 0.0;
    return beta * y + (x - 1) * kappa(beta, y);
}

/// E[exp(beta A(x)) | tau(x) = y] for exponential holding times and integer x.
inline double conditional_mgf(int x, double y, double beta) { return std::exp(log_conditional_mgf(x, y, beta)); }

enum class NestedMode { closed_form, brute_force };

inline constexpr int kBruteForceMaxLevel = 6;
inline constexpr int kBruteForceNodes = 64;

/// The simplex integral of exp(-beta sum_k (x-k) t_k) over t_1 + ... + t_{x-1} <= y.
inline double nested_integral(int x, double y, double beta, NestedMode mode = NestedMode::closed_form) {
    if (x < 2) throw DomainError("nested_integral: x must be at least 2");
    if (!(y > 0.0)) throw DomainError("nested_integral: y must be positive");
    if (beta == 0.0 && mode == NestedMode::closed_form) return std::exp((x - 1) * std::log(y) - std::lgamma(x));
    if (mode == NestedMode::closed_form) {
        const double base = -std::expm1(-beta * y) / beta;
        if (x == 2) return base;
        return std::exp((x - 1) * std::log(base) - std::lgamma(x));
    }
    if (x > kBruteForceMaxLevel)
        throw DomainError("nested_integral: brute force needs " + std::to_string(kBruteForceNodes) + "^" +
                          std::to_string(x - 1) + " integrand evaluations; refused for x > " +
                          std::to_string(kBruteForceMaxLevel));
    const auto& rule = quadrature::gauss_legendre(kBruteForceNodes);
    // level k integrates t_k over [0, r] with weight (x - k); the innermost level is k = x - 1
    std::function<double(int, double)> level = [&](int k, double r) -> double {
        if (k == x) return 1.0;
        const double half = 0.5 * r;
        double sum = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double t = half * (1.0 + rule.nodes[i]);
            sum += rule.weights[i] * std::exp(-beta * (x - k) * t) * level(k + 1, r - t);
        }
        return half * sum;
    };
    return level(1, y);
}

/// Draw of A(x) given tau(x) = y: y plus x - 1 independent uniforms on (0, y).
inline double sample_area_given_tau(int x, double y, Stream& stream) {
    if (x < 1) throw DomainError("sample_area_given_tau: x must be a positive integer");
    if (!(y > 0.0)) throw DomainError("sample_area_given_tau: y must be positive");
    double a = y;
    for (int i = 1; i < x; ++i) a += y * stream.uniform();
    return a;
}

struct ConditionalLdpRow {
    double x = 0.0;
    double z1_x = 0.0;
    double value = 0.0;
    double limit = 0.0;
    double abs_error = 0.0;
};

/// (1/x) log E[exp(x beta A(x)/x^2) | tau(x)/x = z1_x] along a grid, against kappa(beta; z1).
inline std::vector<ConditionalLdpRow> conditional_ldp_check(const std::vector<int>& x_grid,
                                                            const std::function<double(int)>& z1_of_x, double z1,
                                                            double beta) {
    std::vector<ConditionalLdpRow> rows;
    for (int x : x_grid) {
        ConditionalLdpRow r;
        r.x = x;
        r.z1_x = z1_of_x(x);
        r.value = log_conditional_mgf(x, x * r.z1_x, beta / x) / x;
        r.limit = kappa(beta, z1);
        r.abs_error = std::abs(r.value - r.limit);
        rows.push_back(r);
    }
    return rows;
}

struct ChagantyCheck {
    ExtendedReal kappa_star_value;
    ExtendedReal J_value;
    double abs_diff = 0.0;
};

inline ChagantyCheck chaganty_equality(double lambda, double z1, double z2) {
    if (!(z1 > 0.0) || !(z2 > 0.0 && z2 < z1)) throw DomainError("chaganty_equality: need 0 < z2 < z1");
    ChagantyCheck c;
    c.kappa_star_value = kappa_star(z2, z1).value;
    c.J_value = conditional_rate_J(HoldingTimeModel::exponential(lambda), z1, z2);
    c.abs_diff = std::abs(c.kappa_star_value.value() - c.J_value.value());
    return c;
}

/// P(U_1 + ... + U_n >= s) for independent uniforms on (0, 1), by the
/// Lugannani-Rice saddlepoint formula with cumulant function n kappa(t; 1).
inline double uniform_sum_upper_tail(int n, double s) {
    if (n < 1) throw DomainError("uniform_sum_upper_tail: n must be positive");
    if (s <= 0.0) return 1.0;
    if (s >= n) return 0.0;
    const double mean = 0.5 * n;
    if (s == mean) return 0.5;
    const ConjugateValue root = detail::kappa_prime_root(s / n, 1.0);
    const double t = root.argmax;
    const double rate = std::max(0.0, t * (s / n) - kappa(t, 1.0));
    const double w = (s > mean ? 1.0 : -1.0) * std::sqrt(2.0 * n * rate);
    const double u = t * std::sqrt(n * kappa_second(t, 1.0));
    if (std::abs(w) < 1e-4) return special::normal_sf((s - mean) / std::sqrt(n / 12.0));
    return special::normal_sf(w) + special::normal_pdf(w) * (1.0 / u - 1.0 / w);
}

}  // namespace renewal_ldp
