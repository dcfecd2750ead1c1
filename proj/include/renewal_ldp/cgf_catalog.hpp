#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "extended_real.hpp"
#include "types.hpp"

namespace renewal_ldp {

enum class ModelKind { exponential, inverse_gaussian, noncentral_chi_squared, gamma };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::exponential: return "exponential";
        case ModelKind::inverse_gaussian: return "inverse_gaussian";
        case ModelKind::noncentral_chi_squared: return "noncentral_chi_squared";
        case ModelKind::gamma: return "gamma";
    }
    return "unknown";
}

inline ModelKind parse_model_kind(std::string_view s) {
    if (s == "exponential") return ModelKind::exponential;
    if (s == "inverse_gaussian") return ModelKind::inverse_gaussian;
    if (s == "noncentral_chi_squared") return ModelKind::noncentral_chi_squared;
    if (s == "gamma") return ModelKind::gamma;
    throw DomainError("unknown model kind '" + std::string(s) + "'");
}

/// Parameter names per kind, in positional order.
inline std::vector<std::string> parameter_names(ModelKind k) {
    switch (k) {
        case ModelKind::exponential: return {"lambda"};
        case ModelKind::inverse_gaussian: return {"mu"};
        case ModelKind::noncentral_chi_squared: return {"lambda", "k"};
        case ModelKind::gamma: return {"shape", "rate"};
    }
    return {};
}

/// Effective domain of the CGF: (-inf, boundary) or (-inf, boundary].
struct DomainSpec {
    ExtendedReal boundary = ExtendedReal::infinity();
    bool boundary_closed = true;
    bool integrable_at_boundary = true;
};

enum class LscCase { closed_boundary, open_integrable, open_nonintegrable, full_line };

inline std::string_view to_string(LscCase c) {
    switch (c) {
        case LscCase::closed_boundary: return "closed_boundary";
        case LscCase::open_integrable: return "open_integrable";
        case LscCase::open_nonintegrable: return "open_nonintegrable";
        case LscCase::full_line: return "full_line";
    }
    return "unknown";
}

enum class SamplerSpec { inverse_cdf, michael_schucany_haas, poisson_mixed_chi_squared, marsaglia_tsang };

inline std::string_view to_string(SamplerSpec s) {
    switch (s) {
        case SamplerSpec::inverse_cdf: return "inverse_cdf";
        case SamplerSpec::michael_schucany_haas: return "michael_schucany_haas";
        case SamplerSpec::poisson_mixed_chi_squared: return "poisson_mixed_chi_squared";
        case SamplerSpec::marsaglia_tsang: return "marsaglia_tsang";
    }
    return "unknown";
}

/// A light-tailed positive holding-time law, described by its cumulant
/// generating function phi(a) = log E[exp(a T)]. Immutable after construction.
class HoldingTimeModel {
public:
    static HoldingTimeModel exponential(double lambda) { return make(ModelKind::exponential, {lambda}); }
    static HoldingTimeModel inverse_gaussian(double mu) { return make(ModelKind::inverse_gaussian, {mu}); }
    static HoldingTimeModel noncentral_chi_squared(double lambda, double k) {
        return make(ModelKind::noncentral_chi_squared, {lambda, k});
    }
    static HoldingTimeModel gamma(double shape, double rate) { return make(ModelKind::gamma, {shape, rate}); }

    static HoldingTimeModel make(ModelKind kind, std::vector<double> params) {
        const auto names = parameter_names(kind);
        if (params.size() != names.size())
            throw DomainError(std::string(to_string(kind)) + " expects " + std::to_string(names.size()) +
                              " parameter(s)");
        for (std::size_t i = 0; i < params.size(); ++i)
            if (!(params[i] > 0.0) || !std::isfinite(params[i]))
                throw DomainError(std::string(to_string(kind)) + ": parameter " + names[i] +
                                  " must be positive and finite");
        return HoldingTimeModel(kind, std::move(params));
    }

    /// Named-parameter form; unknown or missing names are rejected.
    static HoldingTimeModel make_named(ModelKind kind, const std::map<std::string, double>& named) {
        const auto names = parameter_names(kind);
        std::vector<double> params;
        for (const auto& n : names) {
            auto it = named.find(n);
            if (it == named.end())
                throw DomainError(std::string(to_string(kind)) + ": missing parameter " + n);
            params.push_back(it->second);
        }
        if (named.size() != names.size())
            throw DomainError(std::string(to_string(kind)) + ": unexpected parameter name");
        return make(kind, std::move(params));
    }

    ModelKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }

    DomainSpec domain() const {
        switch (kind_) {
            case ModelKind::exponential: return {params_[0], false, true};
            case ModelKind::inverse_gaussian: return {0.5 * params_[0] * params_[0], true, true};
            case ModelKind::noncentral_chi_squared: return {0.5, false, false};
            case ModelKind::gamma: return {params_[1], false, true};
        }
        return {};
    }

    /// Right end of D(phi) as a double (IEEE +inf when D(phi) is the whole line).
    double boundary() const { return domain().boundary.as_double(); }

    bool in_domain(double a) const {
        const DomainSpec d = domain();
        if (d.boundary.is_infinite()) return true;
        return d.boundary_closed ? a <= d.boundary.value() : a < d.boundary.value();
    }

    bool in_interior(double a) const { return a < boundary(); }

    ExtendedReal cgf(double a) const { return ExtendedReal::from_double(cgf_raw(a)); }

    /// phi(a) with IEEE +inf outside D(phi); the fast path used inside integrands.
    double cgf_raw(double a) const {
        if (!in_domain(a)) return std::numeric_limits<double>::infinity();
        switch (kind_) {
            case ModelKind::exponential: {
                const double l = params_[0];
                return -std::log1p(-a / l);
            }
            case ModelKind::inverse_gaussian: {
                const double mu = params_[0];
                // mu - sqrt(mu^2 - 2a), written to avoid cancellation near a = 0
                const double r = std::sqrt(std::max(0.0, mu * mu - 2.0 * a));
                return 2.0 * a / (mu + r);
            }
            case ModelKind::noncentral_chi_squared: {
                const double l = params_[0], k = params_[1];
                return l * a / (1.0 - 2.0 * a) - 0.5 * k * std::log1p(-2.0 * a);
            }
            case ModelKind::gamma: {
                const double s = params_[0], r = params_[1];
                return -s * std::log1p(-a / r);
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// Derivatives on the interior of D(phi); +inf at or beyond the boundary.
    double cgf_d1(double a) const {
        if (!in_interior(a)) return std::numeric_limits<double>::infinity();
        switch (kind_) {
            case ModelKind::exponential: return 1.0 / (params_[0] - a);
            case ModelKind::inverse_gaussian: return 1.0 / std::sqrt(params_[0] * params_[0] - 2.0 * a);
            case ModelKind::noncentral_chi_squared: {
                const double u = 1.0 - 2.0 * a;
                return params_[0] / (u * u) + params_[1] / u;
            }
            case ModelKind::gamma: return params_[0] / (params_[1] - a);
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    double cgf_d2(double a) const {
        if (!in_interior(a)) return std::numeric_limits<double>::infinity();
        switch (kind_) {
            case ModelKind::exponential: {
                const double u = params_[0] - a;
                return 1.0 / (u * u);
            }
            case ModelKind::inverse_gaussian: {
                const double v = params_[0] * params_[0] - 2.0 * a;
                return 1.0 / (v * std::sqrt(v));
            }
            case ModelKind::noncentral_chi_squared: {
                const double u = 1.0 - 2.0 * a;
                return 4.0 * params_[0] / (u * u * u) + 2.0 * params_[1] / (u * u);
            }
            case ModelKind::gamma: {
                const double u = params_[1] - a;
                return params_[0] / (u * u);
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    double cgf_d3(double a) const {
        if (!in_interior(a)) return std::numeric_limits<double>::infinity();
        switch (kind_) {
            case ModelKind::exponential: {
                const double u = params_[0] - a;
                return 2.0 / (u * u * u);
            }
            case ModelKind::inverse_gaussian: {
                const double v = params_[0] * params_[0] - 2.0 * a;
                return 3.0 / (v * v * std::sqrt(v));
            }
            case ModelKind::noncentral_chi_squared: {
                const double u = 1.0 - 2.0 * a;
                return 24.0 * params_[0] / (u * u * u * u) + 8.0 * params_[1] / (u * u * u);
            }
            case ModelKind::gamma: {
                const double u = params_[1] - a;
                return 2.0 * params_[0] / (u * u * u);
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// Closed-form antiderivative of phi, vanishing at 0. Only the exponential
    /// law exposes one; every other kind goes through quadrature.
    bool has_antiderivative() const { return kind_ == ModelKind::exponential; }

    std::optional<double> antiderivative(double a) const {
        if (kind_ != ModelKind::exponential) return std::nullopt;
        const double l = params_[0];
        if (a > l) return std::nullopt;
        const double u = l - a;
        const double ulogu = u > 0.0 ? u * std::log(u) : 0.0;
        return a * std::log(l) + ulogu + a - l * std::log(l);
    }

    double mean() const { return cgf_d1(0.0); }
    double variance() const { return cgf_d2(0.0); }

    SamplerSpec sampler_spec() const {
        switch (kind_) {
            case ModelKind::exponential: return SamplerSpec::inverse_cdf;
            case ModelKind::inverse_gaussian: return SamplerSpec::michael_schucany_haas;
            case ModelKind::noncentral_chi_squared: return SamplerSpec::poisson_mixed_chi_squared;
            case ModelKind::gamma: return SamplerSpec::marsaglia_tsang;
        }
        return SamplerSpec::inverse_cdf;
    }

    /// Compact descriptor "kind:p1[,p2]".
    std::string descriptor() const {
        std::string out(to_string(kind_));
        out += ':';
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (i) out += ',';
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", params_[i]);
            out += buf;
        }
        return out;
    }

private:
    HoldingTimeModel(ModelKind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) {}

    ModelKind kind_;
    std::vector<double> params_;
};

/// Inverse of HoldingTimeModel::descriptor: "kind:p1[,p2]", e.g. "gamma:2,2".
inline HoldingTimeModel parse_model_descriptor(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw DomainError("model descriptor '" + text + "' must look like kind:param[,param]");
    const ModelKind kind = parse_model_kind(text.substr(0, colon));
    std::vector<double> params;
    std::size_t pos = colon + 1;
    while (true) {
        const auto comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (item.empty() || used != item.size())
            throw DomainError("model descriptor '" + text + "': '" + item + "' is not a number");
        params.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return HoldingTimeModel::make(kind, std::move(params));
}

struct DomainClassification {
    DomainSpec domain;
    LscCase lsc_case;
};

inline DomainClassification classify_domain(const HoldingTimeModel& model) {
    const DomainSpec d = model.domain();
    LscCase c;
    if (d.boundary.is_infinite())
        c = LscCase::full_line;
    else if (d.boundary_closed)
        c = LscCase::closed_boundary;
    else
        c = d.integrable_at_boundary ? LscCase::open_integrable : LscCase::open_nonintegrable;
    return {d, c};
}

enum class PhiStarMethod { automatic, closed_form, root_finding };

namespace detail {

inline std::optional<double> phi_star_argmax_closed(const HoldingTimeModel& m, double z) {
    const auto& p = m.params();
    switch (m.kind()) {
        case ModelKind::exponential: return p[0] - 1.0 / z;
        case ModelKind::gamma: return p[1] - p[0] / z;
        case ModelKind::inverse_gaussian: return 0.5 * (p[0] * p[0] - 1.0 / (z * z));
        case ModelKind::noncentral_chi_squared: {
            const double l = p[0], k = p[1];
            const double u = (k + std::sqrt(k * k + 4.0 * z * l)) / (2.0 * z);
            return 0.5 * (1.0 - u);
        }
    }
    return std::nullopt;
}

inline double phi_star_value_closed(const HoldingTimeModel& m, double z, double argmax) {
    switch (m.kind()) {
        case ModelKind::exponential: {
            const double t = m.params()[0] * z;
            return t - 1.0 - std::log(t);
        }
        case ModelKind::gamma: {
            const double s = m.params()[0];
            const double t = m.params()[1] * z / s;
            return s * (t - 1.0 - std::log(t));
        }
        default: return argmax * z - m.cgf_raw(argmax);
    }
}

// Root of phi'(a) = z by bracketed Newton with bisection fallback. The upper
// bracket approaches the domain boundary geometrically.
inline RateEvaluation phi_star_root(const HoldingTimeModel& m, double z) {
    const double bar = m.boundary();
    const double d0 = m.cgf_d1(0.0);
    double lo, hi;
    int iterations = 0;
    if (z > d0) {
        lo = 0.0;
        hi = std::isfinite(bar) ? 0.5 * bar : 1.0;
        while (m.cgf_d1(hi) < z) {
            lo = hi;
            hi = std::isfinite(bar) ? bar - 0.5 * (bar - hi) : 2.0 * hi;
            if (++iterations > 1100 || (std::isfinite(bar) && hi >= bar)) {
                // phi' stays below z up to the boundary: the sup sits at a closed boundary
                if (m.domain().boundary_closed && std::isfinite(bar)) {
                    RateEvaluation r;
                    r.value = bar * z - m.cgf_raw(bar);
                    r.argmax_tilt = Tilt{bar, 0.0};
                    r.iterations = iterations;
                    r.method = RateMethod::newton;
                    r.on_boundary = true;
                    return r;
                }
                throw SolverFailure("phi_star: could not bracket the root", lo * z - m.cgf_raw(lo),
                                    iterations);
            }
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        while (m.cgf_d1(lo) > z) {
            hi = lo;
            lo *= 2.0;
            if (++iterations > 1100)
                throw SolverFailure("phi_star: could not bracket the root", hi * z - m.cgf_raw(hi),
                                    iterations);
        }
    }

    double a = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it, ++iterations) {
        const double f = m.cgf_d1(a) - z;
        if (f == 0.0) break;
        if (f > 0.0) hi = a; else lo = a;
        if (std::abs(f) <= 1e-15 * z || hi - lo <= 1e-15 * std::max(1.0, std::abs(a))) break;
        double next = a - f / m.cgf_d2(a);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        a = next;
        if (it == 199)
            throw SolverFailure("phi_star: iteration cap", std::max(0.0, a * z - m.cgf_raw(a)), iterations);
    }
    RateEvaluation r;
    r.value = std::max(0.0, a * z - m.cgf_raw(a));
    r.argmax_tilt = Tilt{a, 0.0};
    r.iterations = iterations;
    r.method = RateMethod::newton;
    return r;
}

}  // namespace detail

/// One-dimensional Legendre transform phi*(z) = sup_a {a z - phi(a)}.
inline RateEvaluation phi_star(const HoldingTimeModel& model, double z,
                               PhiStarMethod method = PhiStarMethod::automatic) {
    RateEvaluation r;
    if (!(z > 0.0)) {
        r.value = ExtendedReal::infinity();
        r.method = RateMethod::closed_form;
        return r;
    }
    if (z == model.mean()) {
        r.value = 0.0;
        r.argmax_tilt = Tilt{0.0, 0.0};
        r.method = RateMethod::closed_form;
        return r;
    }
    if (method == PhiStarMethod::root_finding) return detail::phi_star_root(model, z);

    const auto argmax = detail::phi_star_argmax_closed(model, z);
    if (!argmax) return detail::phi_star_root(model, z);
    r.value = std::max(0.0, detail::phi_star_value_closed(model, z, *argmax));
    r.argmax_tilt = Tilt{*argmax, 0.0};
    r.method = RateMethod::closed_form;
    return r;
}

}  // namespace renewal_ldp
