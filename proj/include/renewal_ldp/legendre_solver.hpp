#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cgf_catalog.hpp"
#include "errors.hpp"
#include "extended_real.hpp"
#include "lambda_surface.hpp"
#include "region.hpp"
#include "types.hpp"

namespace renewal_ldp {

enum class RateSolver { automatic, newton, ascent };

struct RateOptions {
    RateSolver solver = RateSolver::automatic;
    int newton_max_iterations = 200;
    int ascent_max_iterations = 4000;
};

/// Closure of the support cone T = {0 <= z2 <= z1}.
inline bool in_cone_closure(const ScaledPoint& z) { return z.z2 >= 0.0 && z.z2 <= z.z1; }
inline bool in_cone_interior(const ScaledPoint& z) { return z.z2 > 0.0 && z.z2 < z.z1; }

namespace detail {

inline double dual_objective(const HoldingTimeModel& m, const Tilt& a, const ScaledPoint& z) {
    const ExtendedReal lam = lambda_eval(m, a);
    if (lam.is_infinite()) return -std::numeric_limits<double>::infinity();
    return a.a1 * z.z1 + a.a2 * z.z2 - lam.value();
}

inline double residual_norm(const Gradient& g, const ScaledPoint& z) {
    return std::max(std::abs(z.z1 - g.g1), std::abs(z.z2 - g.g2));
}

struct SolveOutcome {
    Tilt tilt;
    double value = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

inline SolveOutcome newton_solve(const HoldingTimeModel& m, const ScaledPoint& z, int max_iterations) {
    const TiltDomain dom(m);
    const double tol = 1e-10 * std::max({1.0, std::abs(z.z1), std::abs(z.z2)});
    SolveOutcome out;
    Tilt a{0.0, 0.0};
    double f = dual_objective(m, a, z);
    Gradient g = lambda_grad(m, a);
    double res = residual_norm(g, z);
    int stagnant = 0;
    int it = 0;
    for (; it < max_iterations; ++it) {
        if (res <= tol) {
            out.converged = true;
            break;
        }
        Matrix2 h;
        try {
            h = lambda_hessian(m, a);
        } catch (const SolverFailure&) {
            break;  // curvature unresolvable this close to the boundary; leave it to the ascent
        }
        const double r1 = z.z1 - g.g1, r2 = z.z2 - g.g2;
        const double det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        double d1 = r1, d2 = r2;
        if (det > 0.0 && std::isfinite(det)) {
            d1 = (h[1][1] * r1 - h[0][1] * r2) / det;
            d2 = (h[0][0] * r2 - h[1][0] * r1) / det;
        }
        double step = 1.0;
        bool accepted = false;
        Tilt next{};
        double f_next = 0.0;
        Gradient g_next{};
        double res_next = 0.0;
        for (int halving = 0; halving <= 60; ++halving, step *= 0.5) {
            next = Tilt{a.a1 + step * d1, a.a2 + step * d2};
            if (!dom.interior_contains(next)) continue;
            try {
                f_next = dual_objective(m, next, z);
            } catch (const SolverFailure&) {
                continue;
            }
            if (!std::isfinite(f_next)) continue;
            const bool rises = f_next > f;
            const bool level = f_next >= f - 1e-13 * (1.0 + std::abs(f));
            if (!rises && !level) continue;
            try {
                g_next = lambda_grad(m, next);
            } catch (const SolverFailure&) {
                continue;
            }
            res_next = residual_norm(g_next, z);
            if (rises || res_next < res) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        stagnant = (std::abs(f_next - f) <= 1e-14 * (1.0 + std::abs(f))) ? stagnant + 1 : 0;
        a = next;
        f = f_next;
        g = g_next;
        res = res_next;
        if (stagnant >= 5) {
            out.converged = res <= 1e-7 * std::max(1.0, std::abs(z.z1));
            break;
        }
    }
    if (res <= tol) out.converged = true;
    out.tilt = a;
    out.value = f;
    out.residual = res;
    out.iterations = it;
    return out;
}

inline bool near_domain_boundary(const HoldingTimeModel& m, const Tilt& a) {
    const double bar = m.boundary();
    if (!std::isfinite(bar)) return false;
    return bar - (a.a1 + std::max(a.a2, 0.0)) <= 1e-9 * std::max(1.0, std::abs(bar));
}

// Euclidean projection onto {a1 + max(a2, 0) <= c}.
inline Tilt project_onto_domain(const Tilt& p, double c) {
    if (p.a1 + std::max(p.a2, 0.0) <= c) return p;
    Tilt best{c, 0.0};
    double best_d = std::hypot(p.a1 - c, p.a2);
    const double shift = 0.5 * (p.a1 + p.a2 - c);
    const Tilt on_line{p.a1 - shift, p.a2 - shift};
    if (on_line.a2 >= 0.0) {
        const double d = std::hypot(p.a1 - on_line.a1, p.a2 - on_line.a2);
        if (d < best_d) best = on_line, best_d = d;
    }
    if (p.a2 <= 0.0) {
        const double d = p.a1 - c;
        if (d < best_d) best = Tilt{c, p.a2}, best_d = d;
    }
    return best;
}

// Gradient of Lambda usable at points on a closed boundary: nudged into the interior.
inline Gradient gradient_on_closure(const HoldingTimeModel& m, const Tilt& a) {
    const TiltDomain dom(m);
    if (dom.interior_contains(a)) return lambda_grad(m, a);
    double shift = std::max(a.a1 + std::max(a.a2, 0.0) - m.boundary(), 0.0) +
                   1e-10 * std::max({1.0, std::abs(m.boundary()), std::abs(a.a1), std::abs(a.a2)});
    Tilt inside{a.a1 - shift, a.a2};
    while (!dom.interior_contains(inside)) {
        shift *= 2.0;
        inside.a1 = a.a1 - shift;
    }
    return lambda_grad(m, inside);
}

// Projected gradient ascent on a -> a.z - Lambda(a) with Barzilai-Borwein
// step lengths and Armijo backtracking. When the boundary of D(phi) is open
// the feasible set approaches D(Lambda) through a decreasing sequence of
// margins, so iterates never sit where Lambda is infinite.
inline SolveOutcome ascent_solve(const HoldingTimeModel& m, const ScaledPoint& z, Tilt start, int max_iterations) {
    const DomainClassification cls = classify_domain(m);
    const double bar = m.boundary();
    const bool bounded = std::isfinite(bar);
    std::vector<double> margins;
    if (!bounded || cls.lsc_case == LscCase::closed_boundary) {
        margins = {0.0};
    } else {
        const double scale = std::max(1.0, std::abs(bar));
        for (double mg = 1e-2; mg >= 1e-12; mg *= 1e-2) margins.push_back(mg * scale);
    }
    const double tol = 1e-10 * std::max({1.0, std::abs(z.z1), std::abs(z.z2)});

    SolveOutcome out;
    Tilt a = start;
    int total = 0;
    double stationarity = std::numeric_limits<double>::infinity();
    for (double margin : margins) {
        const double c = bar - margin;
        auto project = [&](const Tilt& p) { return bounded ? project_onto_domain(p, c) : p; };
        a = project(a);
        double f = dual_objective(m, a, z);
        Gradient lg;
        try {
            lg = gradient_on_closure(m, a);
        } catch (const SolverFailure&) {
            continue;
        }
        double d1 = z.z1 - lg.g1, d2 = z.z2 - lg.g2;
        double step = 1.0;
        int flat = 0;
        const int budget = max_iterations / static_cast<int>(margins.size()) + 1;
        for (int it = 0; it < budget; ++it, ++total) {
            if (!std::isfinite(d1) || !std::isfinite(d2)) break;
            const Tilt probe = project(Tilt{a.a1 + d1, a.a2 + d2});
            stationarity = std::max(std::abs(probe.a1 - a.a1), std::abs(probe.a2 - a.a2));
            if (stationarity <= tol) break;

            bool moved = false;
            Tilt next{};
            double f_next = f;
            for (int k = 0; k < 80; ++k, step *= 0.5) {
                next = project(Tilt{a.a1 + step * d1, a.a2 + step * d2});
                try {
                    f_next = dual_objective(m, next, z);
                } catch (const SolverFailure&) {
                    continue;
                }
                const double lin = d1 * (next.a1 - a.a1) + d2 * (next.a2 - a.a2);
                if (std::isfinite(f_next) && f_next >= f + 1e-4 * lin) {
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
            Gradient lg_next;
            try {
                lg_next = gradient_on_closure(m, next);
            } catch (const SolverFailure&) {
                a = next;
                break;
            }
            const double n1 = z.z1 - lg_next.g1, n2 = z.z2 - lg_next.g2;
            const double s1 = next.a1 - a.a1, s2 = next.a2 - a.a2;
            const double y1 = d1 - n1, y2 = d2 - n2;
            const double sy = s1 * y1 + s2 * y2;
            step = sy > 0.0 ? (s1 * s1 + s2 * s2) / sy : std::min(step * 2.0, 1e12);
            flat = (f_next - f <= 1e-15 * (1.0 + std::abs(f))) ? flat + 1 : 0;
            a = next;
            f = f_next;
            d1 = n1;
            d2 = n2;
            if (flat >= 20) break;
        }
    }
    out.tilt = a;
    out.value = dual_objective(m, a, z);
    out.iterations = total;
    try {
        out.residual = residual_norm(gradient_on_closure(m, a), z);
    } catch (const SolverFailure&) {
        out.residual = std::numeric_limits<double>::infinity();
    }
    out.converged = stationarity <= 1e3 * tol;
    return out;
}

}  // namespace detail

/// Lambda*(z) = sup_a {a.z - Lambda(a)}.
inline RateEvaluation rate_ld(const HoldingTimeModel& model, const ScaledPoint& z, const RateOptions& opt = {}) {
    RateEvaluation r;
    if (!std::isfinite(z.z1) || !std::isfinite(z.z2)) throw DomainError("rate_ld: non-finite point");
    if (!in_cone_closure(z)) {
        r.value = ExtendedReal::infinity();
        r.method = RateMethod::closed_form;
        return r;
    }
    const double mean = model.mean();
    if (z.z1 == mean && z.z2 == mean / 2.0) {
        r.value = 0.0;
        r.argmax_tilt = Tilt{0.0, 0.0};
        r.method = RateMethod::closed_form;
        return r;
    }

    auto from_outcome = [&](const detail::SolveOutcome& o, RateMethod method) {
        RateEvaluation e;
        e.value = std::max(0.0, o.value);
        e.argmax_tilt = o.tilt;
        e.converged = o.converged;
        e.iterations = o.iterations;
        e.method = method;
        return e;
    };

    if (!in_cone_interior(z)) {
        auto o = detail::ascent_solve(model, z, Tilt{0.0, 0.0}, opt.ascent_max_iterations);
        RateEvaluation e = from_outcome(o, RateMethod::ascent);
        e.converged = false;
        e.on_boundary = true;
        return e;
    }

    if (opt.solver != RateSolver::ascent) {
        auto o = detail::newton_solve(model, z, opt.newton_max_iterations);
        if (o.converged) return from_outcome(o, RateMethod::newton);
        if (opt.solver == RateSolver::newton)
            throw SolverFailure("rate_ld: Newton did not converge", std::max(0.0, o.value), o.iterations);
        auto a = detail::ascent_solve(model, z, o.tilt, opt.ascent_max_iterations);
        if (o.value > a.value && std::isfinite(o.value)) a.value = std::max(a.value, o.value);
        RateEvaluation e = from_outcome(a, RateMethod::ascent);
        e.iterations += o.iterations;
        e.on_boundary = detail::near_domain_boundary(model, a.tilt);
        return e;
    }
    auto a = detail::ascent_solve(model, z, Tilt{0.0, 0.0}, opt.ascent_max_iterations);
    RateEvaluation e = from_outcome(a, RateMethod::ascent);
    e.on_boundary = detail::near_domain_boundary(model, a.tilt);
    return e;
}

// ---------------------------------------------------------------------------
// Poisson (exponential holding times) path

/// g(a2) = log((1 + a2 z2) / (1 + a2 (z2 - z1))) on (-1/z2, 1/(z1 - z2)).
inline double poisson_g(const ScaledPoint& z, double a2) {
    return std::log1p(a2 * z.z2) - std::log1p(a2 * (z.z2 - z.z1));
}

inline double poisson_g_prime(const ScaledPoint& z, double a2) {
    return z.z2 / (1.0 + a2 * z.z2) - (z.z2 - z.z1) / (1.0 + a2 * (z.z2 - z.z1));
}

/// The point where g changes from concave to convex.
inline double poisson_gamma(const ScaledPoint& z) {
    return (2.0 * z.z2 - z.z1) / (2.0 * z.z2 * (z.z1 - z.z2));
}

struct GRoot {
    double a2 = 0.0;
    // log of the factor 1 + a2 c that vanishes at the end of the domain on the
    // root's side (c = z2 for a negative root, z2 - z1 for a positive one)
    double log_gap = 0.0;
    int iterations = 0;
};

/// Nonzero solution of g(a2) = a2 z1, zero when 2 z2 = z1. The root is
/// searched in the log of the vanishing factor, so roots exponentially close
/// to the end of the domain stay resolved.
inline GRoot poisson_g_root(const ScaledPoint& z) {
    if (!in_cone_interior(z)) throw DomainError("poisson_g_root: z must lie in the interior of T");
    if (2.0 * z.z2 == z.z1) return {0.0, 0.0, 0};
    const bool negative = poisson_gamma(z) < 0.0;
    const double c = negative ? z.z2 : z.z2 - z.z1;
    const double d = negative ? z.z2 - z.z1 : z.z2;
    const double sgn = negative ? 1.0 : -1.0;
    auto tilt = [&](double l) { return std::expm1(l) / c; };
    auto H = [&](double l) {
        const double a = tilt(l);
        return sgn * (l - std::log1p(a * d)) - a * z.z1;
    };
    auto dH = [&](double l) {
        const double a = tilt(l), el = std::exp(l);
        return sgn * (1.0 - d * el / (c * (1.0 + a * d))) - z.z1 * el / c;
    };
    // H has sign near_sign between 0 and the root and the opposite sign beyond
    const double near_sign = negative ? 1.0 : -1.0;
    int iterations = 0;

    double inner = -1e-3;
    while (!(near_sign * H(inner) > 0.0)) {
        inner *= 0.5;
        if (++iterations > 200) throw SolverFailure("poisson_g_root: no sign change near zero", 0.0, iterations);
    }
    double outer = 2.0 * inner;
    while (!(near_sign * H(outer) < 0.0)) {
        inner = outer;
        outer *= 2.0;
        if (++iterations > 400 || !std::isfinite(outer))
            throw SolverFailure("poisson_g_root: root not bracketed", tilt(inner), iterations);
    }

    double lo = outer, hi = inner;  // H(lo) has sign -near_sign
    double l = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it, ++iterations) {
        const double v = H(l);
        if (v == 0.0) break;
        if (near_sign * v < 0.0) lo = l; else hi = l;
        if (hi - lo <= 4e-16 * std::max(1.0, std::abs(l))) break;
        const double slope = dH(l);
        double next = slope != 0.0 ? l - v / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - l) <= 1e-16 * std::max(1.0, std::abs(l))) {
            l = next;
            break;
        }
        l = next;
    }
    return {tilt(l), l, iterations};
}

/// Lambda* for exponential(lambda) holding times through the scalar g-root.
inline RateEvaluation rate_ld_poisson(double lambda, const ScaledPoint& z) {
    if (!(lambda > 0.0)) throw DomainError("rate_ld_poisson: lambda must be positive");
    if (!in_cone_interior(z)) throw DomainError("rate_ld_poisson: z must lie in the interior of T");
    const GRoot root = poisson_g_root(z);
    const double a = root.a2;
    RateEvaluation r;
    r.method = RateMethod::poisson_g_root;
    r.iterations = root.iterations;
    if (a == 0.0) {
        r.value = std::max(0.0, lambda * z.z1 - 1.0 - std::log(lambda * z.z1));
        r.argmax_tilt = Tilt{lambda - 1.0 / z.z1, 0.0};
        return r;
    }
    // with u = lambda - a1 = (1 + a z2)/z1 and s = a/u the value is
    // lambda z1 - 1 - log(lambda) + log(u) - psi(s)
    const bool negative = a < 0.0;
    const double l = root.log_gap;
    const double log_uz1 = negative ? l : std::log1p(a * z.z2);
    const double u = std::exp(log_uz1) / z.z1;
    double psi;
    const double s = a / u;
    if (std::abs(s) < detail::kSeriesCut) {
        psi = detail::exp_psi(s);
    } else {
        // log(1 - s) and 1/s without forming u - a z1 by subtraction
        const double log_1ms = negative ? std::log(std::exp(l) - a * z.z1) - l : l - std::log1p(a * z.z2);
        const double inv_s = std::exp(log_uz1) / (a * z.z1);
        psi = 1.0 + (inv_s - 1.0) * log_1ms;
    }
    r.value = std::max(0.0, lambda * z.z1 - 1.0 - std::log(lambda) + log_uz1 - std::log(z.z1) - psi);
    r.argmax_tilt = Tilt{lambda - u, a};
    return r;
}

// ---------------------------------------------------------------------------
// Marginal and conditional rates

inline RateEvaluation marginal_I1(const HoldingTimeModel& model, double z1) { return phi_star(model, z1); }

namespace detail {

struct ScalarMin {
    double arg = 0.0;
    double value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

// Golden-section search on a bracket lo < mid < hi with f(mid) <= f(lo), f(hi).
template <class F>
ScalarMin golden_section(F&& f, double lo, double hi, double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    ScalarMin out;
    double c = hi - invphi * (hi - lo), d = lo + invphi * (hi - lo);
    double fc = f(c), fd = f(d);
    out.evaluations = 2;
    while (hi - lo > tol * (1.0 + std::abs(c))) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = f(d);
        }
        if (++out.evaluations > 500) break;
    }
    if (fc <= fd) out.arg = c, out.value = fc;
    else out.arg = d, out.value = fd;
    return out;
}

// Minimum of a convex f over [lo, hi] (either end may be infinite). The
// bracket is grown geometrically from `start` until f rises on both sides.
template <class F>
ScalarMin minimize_convex(F&& f, double lo, double hi, double start, double scale, double tol) {
    start = std::clamp(start, lo, hi);
    const double f0 = f(start);
    ScalarMin best{start, f0, 1};
    auto probe_side = [&](double dir) {
        double prev = start, fprev = f0;
        double step = scale;
        const double bound = dir > 0.0 ? hi : lo;
        for (int k = 0; k < 80; ++k) {
            double s = prev + dir * step;
            if ((dir > 0.0 && s >= bound) || (dir < 0.0 && s <= bound)) s = bound;
            const double fs = f(s);
            ++best.evaluations;
            if (fs < best.value) best = {s, fs, best.evaluations};
            if (fs > fprev || s == bound) return s;
            prev = s;
            fprev = fs;
            step *= 2.0;
        }
        throw SolverFailure("minimize_convex: bracket expansion cap", best.value, best.evaluations);
    };
    const double right = hi > start ? probe_side(1.0) : start;
    const double left = lo < start ? probe_side(-1.0) : start;
    if (right - left <= 0.0) return best;
    ScalarMin g = golden_section(f, left, right, tol);
    g.evaluations += best.evaluations;
    if (best.value < g.value) {
        g.arg = best.arg;
        g.value = best.value;
    }
    return g;
}

}  // namespace detail

/// I2(z2) = inf over z1 >= z2 of Lambda*(z1, z2).
inline RateEvaluation marginal_I2(const HoldingTimeModel& model, double z2) {
    RateEvaluation r;
    if (!(z2 >= 0.0)) {
        r.value = ExtendedReal::infinity();
        r.method = RateMethod::closed_form;
        return r;
    }
    const double mean = model.mean();
    if (z2 == mean / 2.0) {
        r.value = 0.0;
        r.argmax_tilt = Tilt{0.0, 0.0};
        r.method = RateMethod::closed_form;
        return r;
    }
    // parametrize z1 = z2 + scale * e^u so the search runs over the open ray
    const double scale = z2 > 0.0 ? z2 : mean;
    std::optional<RateEvaluation> best_eval;
    double best_value = std::numeric_limits<double>::infinity();
    auto objective = [&](double u) {
        const ScaledPoint p{z2 + scale * std::exp(u), z2};
        const RateEvaluation e = rate_ld(model, p);
        const double v = e.value.as_double();
        if (v < best_value) {
            best_value = v;
            best_eval = e;
        }
        return v;
    };
    const double u0 = z2 > 0.0 ? std::log(std::max(mean - z2, 0.5 * z2) / scale) : 0.0;
    const auto m = detail::minimize_convex(objective, -40.0, 40.0, u0, 1.0, 1e-9);
    if (!best_eval) throw SolverFailure("marginal_I2: no finite evaluation", m.value, m.evaluations);
    r = *best_eval;
    r.iterations = m.evaluations;
    if (z2 == 0.0) {
        r.on_boundary = true;
        r.converged = false;
    }
    return r;
}

/// J(z2 | z1) = Lambda*(z1, z2) - I1(z1).
inline ExtendedReal conditional_rate_J(const HoldingTimeModel& model, double z1, double z2) {
    const RateEvaluation full = rate_ld(model, ScaledPoint{z1, z2});
    if (full.value.is_infinite()) return ExtendedReal::infinity();
    const RateEvaluation i1 = marginal_I1(model, z1);
    if (i1.value.is_infinite()) return ExtendedReal::infinity();
    const double j = full.value.value() - i1.value.value();
    if (j < -1e-8) throw SolverFailure("conditional_rate_J: negative conditional rate", j, full.iterations);
    return std::max(0.0, j);
}

// ---------------------------------------------------------------------------
// Infimum of Lambda* over a region

struct RegionRate {
    ExtendedReal value = ExtendedReal::infinity();
    std::optional<ScaledPoint> minimizer;
};

namespace detail {

// Minimum of Lambda* over the segment p0 + s d, s in [s_lo, s_hi], intersected with T.
inline RegionRate min_rate_on_segment(const HoldingTimeModel& model, ScaledPoint p0, ScaledPoint d, double s_lo,
                                      double s_hi) {
    // T constraints: z2 >= 0 and z1 - z2 >= 0, each linear in s
    auto clip = [&](double c0, double c1) {
        // c0 + c1 s >= 0
        if (c1 == 0.0) {
            if (c0 < 0.0) s_hi = -std::numeric_limits<double>::infinity();
            return;
        }
        const double root = -c0 / c1;
        if (c1 > 0.0) s_lo = std::max(s_lo, root);
        else s_hi = std::min(s_hi, root);
    };
    clip(p0.z2, d.z2);
    clip(p0.z1 - p0.z2, d.z1 - d.z2);
    RegionRate out;
    if (!(s_lo <= s_hi)) return out;

    const double mean = model.mean();
    const double norm2 = d.z1 * d.z1 + d.z2 * d.z2;
    const double s_star = ((mean - p0.z1) * d.z1 + (mean / 2.0 - p0.z2) * d.z2) / norm2;
    // stay off the edges of T where the dual problem is not attained
    const double width = std::isfinite(s_hi - s_lo) ? s_hi - s_lo : 1.0;
    const double pad = 1e-9 * std::max(1.0, width);
    double lo = s_lo, hi = s_hi;
    if (std::isfinite(lo) && hi - lo > 2.0 * pad) lo += pad;
    if (std::isfinite(hi) && hi - lo > 2.0 * pad) hi -= pad;
    auto f = [&](double s) {
        const ScaledPoint p{p0.z1 + s * d.z1, p0.z2 + s * d.z2};
        return rate_ld(model, p).value.as_double();
    };
    const double scale = std::max(1e-3, std::isfinite(width) ? 0.1 * width : std::max(1.0, std::abs(mean)));
    const ScalarMin m = minimize_convex(f, lo, hi, s_star, scale, 1e-9);
    if (std::isfinite(m.value)) {
        out.value = m.value;
        out.minimizer = ScaledPoint{p0.z1 + m.arg * d.z1, p0.z2 + m.arg * d.z2};
    }
    return out;
}

}  // namespace detail

/// inf of Lambda* over a finite union of half-planes and rectangles. By
/// convexity the infimum over each piece not containing the zero of Lambda*
/// is attained on the piece's boundary.
inline RegionRate rate_inf_over_region(const HoldingTimeModel& model, const Region& region) {
    const double mean = model.mean();
    const ScaledPoint centre{mean, mean / 2.0};
    RegionRate best;
    const double inf = std::numeric_limits<double>::infinity();
    auto consider = [&](const RegionRate& r) {
        if (r.value < best.value) best = r;
    };
    for (const auto& piece : region.pieces) {
        if (const auto* hp = std::get_if<HalfPlane>(&piece)) {
            if (hp->n1 * centre.z1 + hp->n2 * centre.z2 >= hp->c) {
                consider({0.0, centre});
                continue;
            }
            const double nn = hp->n1 * hp->n1 + hp->n2 * hp->n2;
            const ScaledPoint p0{hp->c * hp->n1 / nn, hp->c * hp->n2 / nn};
            consider(detail::min_rate_on_segment(model, p0, {-hp->n2, hp->n1}, -inf, inf));
        } else {
            const Box& b = std::get<Box>(piece);
            if (b.contains(centre)) {
                consider({0.0, centre});
                continue;
            }
            if (std::isfinite(b.lo1)) consider(detail::min_rate_on_segment(model, {b.lo1, 0.0}, {0.0, 1.0}, b.lo2, b.hi2));
            if (std::isfinite(b.hi1)) consider(detail::min_rate_on_segment(model, {b.hi1, 0.0}, {0.0, 1.0}, b.lo2, b.hi2));
            if (std::isfinite(b.lo2)) consider(detail::min_rate_on_segment(model, {0.0, b.lo2}, {1.0, 0.0}, b.lo1, b.hi1));
            if (std::isfinite(b.hi2)) consider(detail::min_rate_on_segment(model, {0.0, b.hi2}, {1.0, 0.0}, b.lo1, b.hi1));
        }
    }
    return best;
}

}  // namespace renewal_ldp
