#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "cgf_catalog.hpp"
#include "errors.hpp"
#include "extended_real.hpp"
#include "quadrature.hpp"
#include "types.hpp"

namespace renewal_ldp {

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// Below this |a2| the surface and its derivatives use the Taylor expansion in a2.
inline constexpr double kSmallTiltA2 = 1e-6;

/// Effective-domain logic for Lambda and for the finite-x MGF.
class TiltDomain {
public:
    explicit TiltDomain(const HoldingTimeModel& model)
        : bar_(model.boundary()), cls_(classify_domain(model)), model_(&model) {}

    double boundary() const { return bar_; }
    LscCase lsc_case() const { return cls_.lsc_case; }

    /// The set {a2 >= 0, a1 + a2 in D(phi)} u {a2 < 0, a1 <= boundary}.
    bool in_envelope(const Tilt& t) const {
        if (t.a2 >= 0.0) return model_->in_domain(t.a1 + t.a2);
        return t.a1 <= bar_;
    }

    /// Finiteness set of the integral form of Lambda. When phi is integrable at
    /// an open boundary this is the closure of the envelope minus the corner;
    /// when it is not, only the interior is kept.
    bool contains(const Tilt& t) const {
        switch (cls_.lsc_case) {
            case LscCase::full_line: return true;
            case LscCase::open_nonintegrable: return interior_contains(t);
            case LscCase::open_integrable:
                // the integral stays finite with one endpoint on the boundary
                if (t.a2 == 0.0) return t.a1 < bar_;
                return t.a1 + std::max(t.a2, 0.0) <= bar_;
            case LscCase::closed_boundary: return in_envelope(t);
        }
        return false;
    }

    bool interior_contains(const Tilt& t) const {
        if (!std::isfinite(bar_)) return true;
        if (t.a2 > 0.0) return t.a1 + t.a2 < bar_;
        return t.a1 < bar_;
    }

    /// Domain of the joint MGF of (tau(x), A(x)) at finite x: D_x^(1) for integer
    /// x and D_x^(2) otherwise.
    bool finite_x_contains(double x, const Tilt& t) const {
        if (!(x > 0.0)) throw DomainError("finite_x_contains: x must be positive");
        if (t.a2 >= 0.0) return model_->in_domain(t.a1 + t.a2 * x);
        const double fl = std::floor(x);
        const double lowest_weight = (x == fl) ? 1.0 : x - fl;
        return model_->in_domain(t.a1 + t.a2 * lowest_weight);
    }

    std::string describe() const {
        switch (cls_.lsc_case) {
            case LscCase::full_line: return "R^2";
            case LscCase::open_nonintegrable:
                return "interior of {a2>=0, a1+a2 in D(phi)} u {a2<0, a1<=abar}";
            default: return "{a2>=0, a1+a2 in D(phi)} u {a2<0, a1<=abar}";
        }
    }

private:
    double bar_;
    DomainClassification cls_;
    const HoldingTimeModel* model_;
};

struct LambdaOptions {
    /// Ignore the closed-form surfaces (exponential, gamma, inverse Gaussian)
    /// and integrate numerically.
    bool force_quadrature = false;
};

struct Gradient {
    double g1 = 0.0;
    double g2 = 0.0;
};

namespace detail {

// Power series tails used by the exponential closed form when |s| is small.
// psi(s)   = 1 + (1-s) log(1-s)/s        = sum_{n>=1} s^n / (n(n+1))
// chi1(s)  = -log(1-s)/s                 = sum_{n>=0} s^n / (n+1)
// chi2(s)  = (-s - log(1-s))/s^2         = sum_{n>=0} s^n / (n+2)
// eta0(s)  = 1/(1-s)
// eta1(s)  = (s/(1-s) + log(1-s))/s^2    = sum_{n>=0} s^n (n+1)/(n+2)
// eta2(s)  = (1/(1-s) - 1 + s + 2log(1-s))/s^3 = sum_{n>=0} s^n (n+1)/(n+3)
inline constexpr double kSeriesCut = 0.1;

template <class Coef>
double power_series(double s, Coef coef) {
    double sum = 0.0, pw = 1.0;
    for (int n = 0; n < 40; ++n) {
        sum += coef(n) * pw;
        pw *= s;
    }
    return sum;
}

inline double exp_psi(double s) {
    if (std::abs(s) < kSeriesCut) return s * power_series(s, [](int n) { return 1.0 / ((n + 1.0) * (n + 2.0)); });
    if (s == 1.0) return 1.0;
    return 1.0 + (1.0 - s) * std::log1p(-s) / s;
}
inline double exp_chi1(double s) {
    if (std::abs(s) < kSeriesCut) return power_series(s, [](int n) { return 1.0 / (n + 1.0); });
    return -std::log1p(-s) / s;
}
inline double exp_chi2(double s) {
    if (std::abs(s) < kSeriesCut) return power_series(s, [](int n) { return 1.0 / (n + 2.0); });
    return (-s - std::log1p(-s)) / (s * s);
}
inline double exp_eta1(double s) {
    if (std::abs(s) < kSeriesCut) return power_series(s, [](int n) { return (n + 1.0) / (n + 2.0); });
    return (s / (1.0 - s) + std::log1p(-s)) / (s * s);
}
inline double exp_eta2(double s) {
    if (std::abs(s) < kSeriesCut) return power_series(s, [](int n) { return (n + 1.0) / (n + 3.0); });
    return (1.0 / (1.0 - s) - 1.0 + s + 2.0 * std::log1p(-s)) / (s * s * s);
}

inline quadrature::Options surface_quadrature_options() {
    quadrature::Options o;
    o.abs_tol = 1e-10;
    o.rel_tol = 1e-12;
    return o;
}

// Integral over y in [0,1] of weight(y) * f(a1 + a2 y), with graded refinement
// when an endpoint sits on an open boundary of D(phi).
template <class F>
double integrate_along_tilt(const HoldingTimeModel& m, const Tilt& t, F&& f, const char* what) {
    auto integrand = [&](double y) { return f(y, t.a1 + t.a2 * y); };
    const double bar = m.boundary();
    const bool open = !m.domain().boundary_closed;
    quadrature::SingularEnd end = quadrature::SingularEnd::none;
    if (open && t.a1 == bar) end = quadrature::SingularEnd::left;
    if (open && t.a1 + t.a2 == bar) end = quadrature::SingularEnd::right;

    // an endpoint close to the boundary makes the integrand sharply peaked there
    if (end == quadrature::SingularEnd::none && std::isfinite(bar) && t.a2 != 0.0) {
        const double gap_left = bar - t.a1, gap_right = bar - (t.a1 + t.a2);
        const double near = 0.05 * std::abs(t.a2);
        if (std::min(gap_left, gap_right) < near)
            end = gap_left < gap_right ? quadrature::SingularEnd::left : quadrature::SingularEnd::right;
    }

    const auto opt = surface_quadrature_options();
    quadrature::Result res;
    if (end != quadrature::SingularEnd::none) {
        res = quadrature::graded(integrand, 0.0, 1.0, end, opt);
    } else {
        res = quadrature::adaptive(integrand, 0.0, 1.0, opt);
        if (!res.converged && std::isfinite(bar)) {
            end = (bar - t.a1 < bar - (t.a1 + t.a2)) ? quadrature::SingularEnd::left : quadrature::SingularEnd::right;
            res = quadrature::graded(integrand, 0.0, 1.0, end, opt);
        }
    }
    if (!res.converged || std::isnan(res.value)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, " at (%.17g, %.17g)", t.a1, t.a2);
        throw SolverFailure(std::string(what) + ": quadrature did not converge for " + m.descriptor() + buf,
                            res.value, res.subintervals);
    }
    return res.value;
}

inline bool both_ends_interior(const HoldingTimeModel& m, const Tilt& t) {
    return m.in_interior(t.a1) && m.in_interior(t.a1 + t.a2);
}

}  // namespace detail

namespace detail {

// Exponential and gamma laws share phi(a) = -shape * log(1 - a/rate); the
// surface then depends on a1 through u = rate - a1 and on s = a2/u.
struct ScaledLog {
    double shape;
    double rate;
};

inline std::optional<ScaledLog> scaled_log_form(const HoldingTimeModel& m) {
    if (m.kind() == ModelKind::exponential) return ScaledLog{1.0, m.params()[0]};
    if (m.kind() == ModelKind::gamma) return ScaledLog{m.params()[0], m.params()[1]};
    return std::nullopt;
}

// Inverse Gaussian: with v = sqrt(mu^2 - 2a) every integral along the tilt is
// a rational function of the endpoint values v0 (at a1) and v1 (at a1 + a2).
struct RootPair {
    double v0;
    double v1;
};

inline RootPair ig_roots(const HoldingTimeModel& m, const Tilt& t) {
    const double mu = m.params()[0];
    return {std::sqrt(std::max(0.0, mu * mu - 2.0 * t.a1)), std::sqrt(std::max(0.0, mu * mu - 2.0 * (t.a1 + t.a2)))};
}

inline bool has_closed_surface(const HoldingTimeModel& m, const LambdaOptions& opt) {
    return !opt.force_quadrature && (scaled_log_form(m) || m.kind() == ModelKind::inverse_gaussian);
}

}  // namespace detail

/// Lambda(a1, a2) = int_0^1 phi(a1 + a2 y) dy on D(Lambda), +inf elsewhere.
inline ExtendedReal lambda_eval(const HoldingTimeModel& model, const Tilt& t, const LambdaOptions& opt = {}) {
    const TiltDomain dom(model);
    if (!dom.contains(t)) return ExtendedReal::infinity();
    if (t.a2 == 0.0) return model.cgf(t.a1);
    const double b = t.a2;

    if (detail::has_closed_surface(model, opt)) {
        if (const auto sl = detail::scaled_log_form(model)) {
            const double u = sl->rate - t.a1;
            if (u > 0.0) return sl->shape * (std::log(sl->rate / u) + detail::exp_psi(b / u));
            // a1 on the boundary with a2 < 0
            return sl->shape * (1.0 + std::log(sl->rate / -b));
        }
        const auto [v0, v1] = detail::ig_roots(model, t);
        return model.params()[0] - (2.0 / 3.0) * (v0 * v0 + v0 * v1 + v1 * v1) / (v0 + v1);
    }

    if (std::abs(b) < kSmallTiltA2 && detail::both_ends_interior(model, t)) {
        const double a = t.a1;
        return model.cgf_raw(a) + b * model.cgf_d1(a) / 2.0 + b * b * model.cgf_d2(a) / 6.0 +
               b * b * b * model.cgf_d3(a) / 24.0;
    }
    return detail::integrate_along_tilt(
        model, t, [&](double, double a) { return model.cgf_raw(a); }, "lambda_eval");
}

/// Gradient of Lambda on the interior of D(Lambda).
inline Gradient lambda_grad(const HoldingTimeModel& model, const Tilt& t, const LambdaOptions& opt = {}) {
    const TiltDomain dom(model);
    if (!dom.interior_contains(t)) throw DomainError("lambda_grad: tilt outside the interior of D(Lambda)");
    const double a = t.a1, b = t.a2;
    if (detail::has_closed_surface(model, opt)) {
        if (const auto sl = detail::scaled_log_form(model)) {
            const double u = sl->rate - a;
            const double s = b / u;
            return {sl->shape * detail::exp_chi1(s) / u, sl->shape * detail::exp_chi2(s) / u};
        }
        const auto [v0, v1] = detail::ig_roots(model, t);
        const double w = v0 + v1;
        return {2.0 / w, (2.0 / 3.0) * (2.0 * v0 + v1) / (w * w)};
    }
    if (std::abs(b) < kSmallTiltA2) {
        const double d1 = model.cgf_d1(a), d2 = model.cgf_d2(a), d3 = model.cgf_d3(a);
        return {d1 + b * d2 / 2.0 + b * b * d3 / 6.0, d1 / 2.0 + b * d2 / 3.0 + b * b * d3 / 8.0};
    }
    const double g1 = detail::integrate_along_tilt(
        model, t, [&](double, double x) { return model.cgf_d1(x); }, "lambda_grad");
    const double g2 = detail::integrate_along_tilt(
        model, t, [&](double y, double x) { return y * model.cgf_d1(x); }, "lambda_grad");
    return {g1, g2};
}

/// The gradient written as the difference quotients of phi and Lambda; agrees
/// with lambda_grad but loses accuracy to cancellation when |a2| is small.
inline Gradient lambda_grad_difference_form(const HoldingTimeModel& model, const Tilt& t) {
    if (t.a2 == 0.0) return {model.cgf_d1(t.a1), model.cgf_d1(t.a1) / 2.0};
    const double phi_end = model.cgf_raw(t.a1 + t.a2);
    const double lam = lambda_eval(model, t).value();
    return {(phi_end - model.cgf_raw(t.a1)) / t.a2, (phi_end - lam) / t.a2};
}

/// Hessian of Lambda on the interior of D(Lambda).
inline Matrix2 lambda_hessian(const HoldingTimeModel& model, const Tilt& t, const LambdaOptions& opt = {}) {
    const TiltDomain dom(model);
    if (!dom.interior_contains(t)) throw DomainError("lambda_hessian: tilt outside the interior of D(Lambda)");
    const double a = t.a1, b = t.a2;
    double h11, h12, h22;
    if (detail::has_closed_surface(model, opt)) {
        if (const auto sl = detail::scaled_log_form(model)) {
            const double u = sl->rate - a;
            const double s = b / u;
            const double scale = sl->shape / (u * u);
            h11 = scale / (1.0 - s);
            h12 = scale * detail::exp_eta1(s);
            h22 = scale * detail::exp_eta2(s);
        } else {
            const auto [v0, v1] = detail::ig_roots(model, t);
            const double w = v0 + v1;
            h11 = 2.0 / (v0 * v1 * w);
            h12 = 2.0 / (v1 * w * w);
            h22 = 2.0 * (3.0 * v0 + v1) / (3.0 * v1 * w * w * w);
        }
    } else if (std::abs(b) < kSmallTiltA2) {
        const double d2 = model.cgf_d2(a), d3 = model.cgf_d3(a);
        h11 = d2 + b * d3 / 2.0;
        h12 = d2 / 2.0 + b * d3 / 3.0;
        h22 = d2 / 3.0 + b * d3 / 4.0;
    } else {
        h11 = detail::integrate_along_tilt(model, t, [&](double, double x) { return model.cgf_d2(x); }, "lambda_hessian");
        h12 = detail::integrate_along_tilt(model, t, [&](double y, double x) { return y * model.cgf_d2(x); }, "lambda_hessian");
        h22 = detail::integrate_along_tilt(model, t, [&](double y, double x) { return y * y * model.cgf_d2(x); }, "lambda_hessian");
    }
    return Matrix2{{{h11, h12}, {h12, h22}}};
}

/// phi''(0), the Hessian C of Lambda at the origin, and its inverse.
struct CovarianceStructure {
    double phi2 = 0.0;
    Matrix2 C{};
    Matrix2 C_inv{};
};

inline CovarianceStructure hessian_origin(const HoldingTimeModel& model) {
    const double v = model.cgf_d2(0.0);
    CovarianceStructure cs;
    cs.phi2 = v;
    cs.C = {{{v, v / 2.0}, {v / 2.0, v / 3.0}}};
    cs.C_inv = {{{4.0 / v, -6.0 / v}, {-6.0 / v, 12.0 / v}}};
    return cs;
}

enum class FullLdpCertificate { gartner_ellis_c, gradient_image, weak_only };

inline std::string_view to_string(FullLdpCertificate c) {
    switch (c) {
        case FullLdpCertificate::gartner_ellis_c: return "gartner_ellis_c";
        case FullLdpCertificate::gradient_image: return "gradient_image";
        case FullLdpCertificate::weak_only: return "weak_only";
    }
    return "unknown";
}

struct RegularityReport {
    bool lsc = false;
    LscCase lsc_witness = LscCase::full_line;
    bool steep = false;
    bool differentiable = true;
    bool essentially_smooth = false;
    FullLdpCertificate full_ldp_certificate = FullLdpCertificate::weak_only;
};

/// Lower semicontinuity and steepness of Lambda, and which argument (if any)
/// upgrades the weak LDP to a full one.
inline RegularityReport regularity_report(const HoldingTimeModel& model) {
    RegularityReport r;
    r.lsc_witness = classify_domain(model).lsc_case;
    r.lsc = r.lsc_witness != LscCase::open_integrable;
    // a closed boundary leaves the gradient bounded there; open or absent boundaries are steep
    r.steep = r.lsc_witness != LscCase::closed_boundary;
    r.differentiable = true;
    r.essentially_smooth = r.steep && r.differentiable;
    if (r.lsc && r.essentially_smooth)
        r.full_ldp_certificate = FullLdpCertificate::gartner_ellis_c;
    else if (model.kind() == ModelKind::exponential)
        r.full_ldp_certificate = FullLdpCertificate::gradient_image;
    else
        r.full_ldp_certificate = FullLdpCertificate::weak_only;
    return r;
}

}  // namespace renewal_ldp
