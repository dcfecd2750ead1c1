#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "cgf_catalog.hpp"
#include "errors.hpp"
#include "lambda_surface.hpp"
#include "legendre_solver.hpp"
#include "region.hpp"
#include "special_functions.hpp"

namespace renewal_ldp {

/// a_x = x^(-p) by default, or an arbitrary map x -> a_x.
struct ModerateScaling {
    double p = 0.5;
    std::function<double(double)> map;

    double a(double x) const { return map ? map(x) : std::pow(x, -p); }
    double speed(double x) const { return 1.0 / a(x); }

    /// a_x decreasing and x a_x increasing along an ascending grid.
    bool valid_on(const std::vector<double>& grid) const {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!(a(grid[i]) > 0.0)) return false;
            if (i == 0) continue;
            if (!(grid[i] > grid[i - 1])) return false;
            if (!(a(grid[i]) < a(grid[i - 1]))) return false;
            if (!(grid[i] * a(grid[i]) > grid[i - 1] * a(grid[i - 1]))) return false;
        }
        return true;
    }
};

inline double quadratic_form(const Matrix2& m, double u, double v) {
    return m[0][0] * u * u + 2.0 * m[0][1] * u * v + m[1][1] * v * v;
}

inline double psi(const HoldingTimeModel& model, const Tilt& t) {
    return 0.5 * quadratic_form(hessian_origin(model).C, t.a1, t.a2);
}

inline double psi_star(const HoldingTimeModel& model, const ScaledPoint& z) {
    return 0.5 * quadratic_form(hessian_origin(model).C_inv, z.z1, z.z2);
}

struct MomentReport {
    double x = 0.0;
    int n_terms = 0;
    double mean_tau = 0.0;
    double var_tau = 0.0;
    double mean_area = 0.0;
    double var_area = 0.0;
    double cov = 0.0;
};

inline bool is_integer_level(double x) { return x == std::floor(x); }

/// Number of holding times making up tau(x).
inline int holding_time_count(double x) {
    if (!(x > 0.0)) throw DomainError("holding_time_count: x must be positive");
    if (x > 1e9) throw DomainError("holding_time_count: x too large");
    return is_integer_level(x) ? static_cast<int>(x) : static_cast<int>(std::floor(x)) + 1;
}

inline MomentReport exact_moments(const HoldingTimeModel& model, double x) {
    if (!(x > 0.0)) throw DomainError("exact_moments: x must be positive");
    const double m1 = model.cgf_d1(0.0), m2 = model.cgf_d2(0.0);
    MomentReport r;
    r.x = x;
    r.n_terms = holding_time_count(x);
    if (is_integer_level(x)) {
        r.mean_tau = x * m1;
        r.var_tau = x * m2;
        r.mean_area = m1 * x * (x + 1.0) / 2.0;
        r.var_area = m2 * x * (x + 1.0) * (2.0 * x + 1.0) / 6.0;
        r.cov = m2 * x * (x + 1.0) / 2.0;
    } else {
        const double m = std::floor(x);
        r.mean_tau = (m + 1.0) * m1;
        r.var_tau = (m + 1.0) * m2;
        r.mean_area = m1 * (m + 1.0) * (x - m / 2.0);
        r.var_area = m2 * (m + 1.0) * (12.0 * x * (x - m) + 2.0 * m * (2.0 * m + 1.0)) / 12.0;
        r.cov = m2 * (m + 1.0) * (x - m / 2.0);
    }
    return r;
}

struct CorrelationLimit {
    double rho_x = 0.0;
    double limit = std::numbers::sqrt3 / 2.0;
};

inline CorrelationLimit correlation_limit(const HoldingTimeModel& model, double x) {
    const MomentReport r = exact_moments(model, x);
    CorrelationLimit c;
    c.rho_x = r.cov / std::sqrt(r.var_tau * r.var_area);
    return c;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    double centre() const { return 0.5 * (lo + hi); }
};

/// Two asymptotic intervals for phi'(0): one from tau(x)/x, one from 2 A(x)/x^2.
struct ConfidenceIntervals {
    Interval from_tau;
    Interval from_area;
};

inline ConfidenceIntervals confidence_intervals(const HoldingTimeModel& model, double tau_over_x,
                                                double area_over_x2, double x, double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence_intervals: level must lie in (0,1)");
    if (!(x > 0.0)) throw DomainError("confidence_intervals: x must be positive");
    const double q = special::normal_quantile((1.0 + level) / 2.0);
    const double v = model.cgf_d2(0.0);
    const double h_tau = std::sqrt(v / x) * q;
    const double h_area = std::sqrt(v / (3.0 * x)) * q;
    ConfidenceIntervals ci;
    ci.from_tau = {tau_over_x - h_tau, tau_over_x + h_tau};
    ci.from_area = {2.0 * (area_over_x2 - h_area), 2.0 * (area_over_x2 + h_area)};
    return ci;
}

namespace detail {

// Minimum of 0.5 z'Qz over p0 + s d, s in [lo, hi].
inline RegionRate min_quadratic_on_segment(const Matrix2& Q, ScaledPoint p0, ScaledPoint d, double lo,
                                           double hi) {
    const double dqd = quadratic_form(Q, d.z1, d.z2);
    const double dqp = Q[0][0] * d.z1 * p0.z1 + Q[0][1] * (d.z1 * p0.z2 + d.z2 * p0.z1) + Q[1][1] * d.z2 * p0.z2;
    const double s = std::clamp(dqd > 0.0 ? -dqp / dqd : 0.0, lo, hi);
    const ScaledPoint z{p0.z1 + s * d.z1, p0.z2 + s * d.z2};
    return {0.5 * quadratic_form(Q, z.z1, z.z2), z};
}

}  // namespace detail

/// inf of psi_star over a region; strict and non-strict constraints give the same infimum.
inline RegionRate md_event_rate(const HoldingTimeModel& model, const Region& region) {
    const CovarianceStructure cs = hessian_origin(model);
    RegionRate best;
    auto consider = [&](const RegionRate& r) {
        if (r.value < best.value) best = r;
    };
    const ScaledPoint origin{0.0, 0.0};
    for (const auto& piece : region.pieces) {
        if (const auto* hp = std::get_if<HalfPlane>(&piece)) {
            if (hp->c <= 0.0) {
                consider({0.0, origin});
                continue;
            }
            const double ncn = quadratic_form(cs.C, hp->n1, hp->n2);
            const double k = hp->c / ncn;
            const ScaledPoint z{k * (cs.C[0][0] * hp->n1 + cs.C[0][1] * hp->n2),
                                k * (cs.C[1][0] * hp->n1 + cs.C[1][1] * hp->n2)};
            consider({0.5 * hp->c * hp->c / ncn, z});
        } else {
            const Box& b = std::get<Box>(piece);
            if (!(b.lo1 <= b.hi1 && b.lo2 <= b.hi2)) continue;
            if (b.contains(origin)) {
                consider({0.0, origin});
                continue;
            }
            const Matrix2& Q = cs.C_inv;
            if (std::isfinite(b.lo1)) consider(detail::min_quadratic_on_segment(Q, {b.lo1, 0.0}, {0.0, 1.0}, b.lo2, b.hi2));
            if (std::isfinite(b.hi1)) consider(detail::min_quadratic_on_segment(Q, {b.hi1, 0.0}, {0.0, 1.0}, b.lo2, b.hi2));
            if (std::isfinite(b.lo2)) consider(detail::min_quadratic_on_segment(Q, {0.0, b.lo2}, {1.0, 0.0}, b.lo1, b.hi1));
            if (std::isfinite(b.hi2)) consider(detail::min_quadratic_on_segment(Q, {0.0, b.hi2}, {1.0, 0.0}, b.lo1, b.hi1));
        }
    }
    return best;
}

enum class CenteringMode { theoretical, expectation };

inline ScaledPoint centering(const HoldingTimeModel& model, double x, CenteringMode mode) {
    if (!(x > 0.0)) throw DomainError("centering: x must be positive");
    if (mode == CenteringMode::theoretical) return {model.mean(), model.mean() / 2.0};
    const MomentReport r = exact_moments(model, x);
    return {r.mean_tau / x, r.mean_area / (x * x)};
}

}  // namespace renewal_ldp
