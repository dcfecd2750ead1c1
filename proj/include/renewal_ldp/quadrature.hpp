#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

namespace renewal_ldp::quadrature {

struct Rule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights by Newton iteration on P_n, started from
/// the Tricomi approximation of the roots.
inline Rule compute_gauss_legendre(int n) {
    Rule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute the derivative at the converged root
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

/// Cached rule; safe to call from several threads.
inline const Rule& gauss_legendre(int n) {
    static std::mutex mutex;
    static std::map<int, Rule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

template <class F>
double fixed_rule(const Rule& rule, F&& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

struct Result {
    double value = 0.0;
    double error_estimate = 0.0;
    int subintervals = 0;
    bool converged = true;
};

struct Options {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    int max_subintervals = 1 << 14;
    int order = 10;
};

/// Adaptive Gauss-Legendre with interval bisection: a panel is accepted when
/// the rule on the whole panel agrees with the rule on its two halves.
template <class F>
Result adaptive(F&& f, double a, double b, const Options& opt = {}) {
    Result res;
    if (a == b) return res;
    const Rule& rule = gauss_legendre(opt.order);
    const double total = std::abs(b - a);

    struct Panel {
        double lo, hi, whole;
    };
    std::vector<Panel> stack;
    stack.push_back({a, b, fixed_rule(rule, f, a, b)});
    int panels = 1;
    while (!stack.empty()) {
        const Panel p = stack.back();
        stack.pop_back();
        const double mid = 0.5 * (p.lo + p.hi);
        if (mid == p.lo || mid == p.hi) {
            // panel at the resolution limit of the abscissa
            res.value += p.whole;
            continue;
        }
        const double left = fixed_rule(rule, f, p.lo, mid);
        const double right = fixed_rule(rule, f, mid, p.hi);
        const double refined = left + right;
        const double err = std::abs(refined - p.whole);
        const double share = std::abs(p.hi - p.lo) / total;
        const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(left) + std::abs(right));
        const double tol = std::max({opt.abs_tol * share, opt.rel_tol * std::abs(refined), roundoff});
        if (err <= tol || !std::isfinite(refined) || panels >= opt.max_subintervals) {
            if (err > tol) res.converged = false;
            res.value += refined;
            res.error_estimate += err;
            continue;
        }
        stack.push_back({p.lo, mid, left});
        stack.push_back({mid, p.hi, right});
        ++panels;
    }
    res.subintervals = panels;
    return res;
}

enum class SingularEnd { none, left, right };

/// Adaptive integration where one endpoint carries an integrable singularity:
/// the interval is cut into a graded mesh with ratio 1/2 toward that endpoint
/// and each piece is integrated adaptively.
template <class F>
Result graded(F&& f, double a, double b, SingularEnd end, const Options& opt = {}) {
    if (end == SingularEnd::none) return adaptive(f, a, b, opt);
    const double sing = end == SingularEnd::right ? b : a;
    const double other = end == SingularEnd::right ? a : b;
    const double width = sing - other;  // signed
    Options piece_opt = opt;
    piece_opt.abs_tol = opt.abs_tol / 64.0;
    piece_opt.max_subintervals = std::min(opt.max_subintervals, 512);

    Result res;
    double from = other;
    double w = width;
    // halve toward the singular end until the next cut is no longer representable
    for (int k = 0; k < 1100; ++k) {
        w *= 0.5;
        const double to = sing - w;
        if (to == from || to == sing) break;
        Result piece = adaptive(f, from, to, piece_opt);
        res.value += piece.value;
        res.error_estimate += piece.error_estimate;
        res.subintervals += piece.subintervals;
        from = to;
    }
    if (std::isfinite(f(sing))) {
        // bounded endpoint (a sharp peak rather than a true singularity); the
        // remaining gap is a few ulps wide
        res.value += 0.5 * (f(from) + f(sing)) * (sing - from);
        res.subintervals += 1;
    }
    if (end == SingularEnd::left) res.value = -res.value;  // integrated from b down to a
    // pieces next to the endpoint sit at the resolution limit of the abscissa,
    // so convergence is judged on the accumulated error
    res.converged = std::isfinite(res.value) &&
                    res.error_estimate <= std::max(100.0 * opt.abs_tol, 1e-9 * std::abs(res.value));
    return res;
}

}  // namespace renewal_ldp::quadrature
