#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cgf_catalog.hpp"
#include "errors.hpp"
#include "legendre_solver.hpp"
#include "moderate_clt.hpp"
#include "parallel.hpp"
#include "poisson_conditional.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "region.hpp"
#include "special_functions.hpp"

namespace renewal_ldp {

// ---------------------------------------------------------------------------
// Samplers

namespace detail {

/// Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 through the U^(1/shape) boost.
inline double sample_gamma_unit(double shape, Stream& s) {
    if (shape < 1.0) {
        const double g = sample_gamma_unit(shape + 1.0, s);
        return g * std::pow(s.uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z, v;
        do {
            z = s.normal();
            v = 1.0 + c * z;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = s.uniform();
        const double z2 = z * z;
        if (u < 1.0 - 0.0331 * z2 * z2) return d * v;
        if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

/// Poisson(mean): sequential inversion for small means, Hormann's PTRS otherwise.
inline std::uint64_t sample_poisson(double mean, Stream& s) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) {
        const double limit = std::exp(-mean);
        double prod = s.uniform();
        std::uint64_t k = 0;
        while (prod > limit) {
            prod *= s.uniform();
            ++k;
        }
        return k;
    }
    const double slam = std::sqrt(mean), loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = s.uniform() - 0.5;
        const double v = s.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <= -mean + k * loglam - std::lgamma(k + 1.0))
            return static_cast<std::uint64_t>(k);
    }
}

/// Inverse Gaussian with the given mean and shape by Michael-Schucany-Haas.
inline double sample_inverse_gaussian(double mean, double shape, Stream& s) {
    const double nu = s.normal();
    const double q = mean * nu * nu / (2.0 * shape);
    // smaller root of the quadratic, written without cancellation
    const double root = mean / (1.0 + q + std::sqrt(q * (2.0 + q)));
    return s.uniform() <= mean / (mean + root) ? root : mean * mean / root;
}

}  // namespace detail

/// One holding time from the model's exact sampler.
inline double sample_holding_time(const HoldingTimeModel& m, Stream& s) {
    const auto& p = m.params();
    switch (m.kind()) {
        case ModelKind::exponential: return -std::log(s.uniform()) / p[0];
        case ModelKind::inverse_gaussian: return detail::sample_inverse_gaussian(1.0 / p[0], 1.0, s);
        case ModelKind::noncentral_chi_squared: {
            const auto j = detail::sample_poisson(p[0] / 2.0, s);
            return 2.0 * detail::sample_gamma_unit(p[1] / 2.0 + static_cast<double>(j), s);
        }
        case ModelKind::gamma: return detail::sample_gamma_unit(p[0], s) / p[1];
    }
    throw DomainError("sample_holding_time: unknown model");
}

struct PassageSample {
    double x = 0.0;
    double tau = 0.0;
    double area = 0.0;
    int n_terms = 0;
};

/// (tau(x), A(x)) = (sum T_j, sum (x - j + 1) T_j) over the holding times making up tau(x).
inline PassageSample sample_passage(const HoldingTimeModel& model, double x, Stream& stream) {
    PassageSample out;
    out.x = x;
    out.n_terms = holding_time_count(x);
    for (int j = 1; j <= out.n_terms; ++j) {
        const double t = sample_holding_time(model, stream);
        out.tau += t;
        out.area += (x - j + 1.0) * t;
    }
    return out;
}

/// Independent seed for the k-th sub-experiment of a run (splitmix64 finaliser).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (k + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Tail probabilities

inline constexpr double kWilson99 = 2.5758293035489004;

inline Interval wilson_interval(std::uint64_t hits, std::uint64_t n, double z = kWilson99) {
    if (n == 0) throw DomainError("wilson_interval: no samples");
    const double nn = static_cast<double>(n), p = hits / nn, z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
    return {hits == 0 ? 0.0 : std::max(0.0, centre - half), hits == n ? 1.0 : std::min(1.0, centre + half)};
}

/// Acceptance band for p_hat around a known probability p0: the set of p_hat
/// whose Wilson interval contains p0.
inline Interval wilson_band(double p0, std::uint64_t n, double z = kWilson99) {
    const double half = z * std::sqrt(p0 * (1.0 - p0) / static_cast<double>(n));
    return {std::max(0.0, p0 - half), std::min(1.0, p0 + half)};
}

struct SimulationConfig {
    HoldingTimeModel model;
    double x = 1.0;
    std::uint64_t n_samples = 1;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct TailEstimate {
    std::string event;
    double x = 0.0;
    std::uint64_t n_samples = 0;
    std::uint64_t hit_count = 0;
    double p_hat = 0.0;
    Interval ci;
    std::optional<double> empirical_rate;  // -(1/x) log p_hat when there are hits
    double rate_lower_bound = 0.0;         // -(1/x) log(3/n) when there are none
    std::optional<double> predicted_rate;  // inf of Lambda* over the event
    std::optional<double> exact_probability;
    std::optional<double> exact_rate;
};

namespace detail {

struct HitCount {
    std::uint64_t hits = 0;
    void merge(const HitCount& o) { hits += o.hits; }
};

inline void validate(const SimulationConfig& c) {
    if (!(c.x > 0.0)) throw DomainError("simulation: x must be positive");
    if (c.n_samples < 1) throw DomainError("simulation: sample count must be at least 1");
    if (c.workers < 1) throw DomainError("simulation: worker count must be at least 1");
}

}  // namespace detail

/// Exact tail for exponential holding times when the event is a threshold on tau(x)/x alone.
inline std::optional<double> gamma_tail_oracle(const HoldingTimeModel& model, double x, const Region& event) {
    if (model.kind() != ModelKind::exponential || event.pieces.size() != 1) return std::nullopt;
    const auto* hp = std::get_if<HalfPlane>(&event.pieces.front());
    if (!hp || hp->n2 != 0.0 || hp->n1 == 0.0) return std::nullopt;
    const double lambda = model.params()[0];
    const double n = holding_time_count(x);
    const double c = hp->c / hp->n1;
    if (hp->n1 > 0.0) return c <= 0.0 ? 1.0 : special::gamma_q(n, lambda * x * c);
    return c <= 0.0 ? 0.0 : special::gamma_p(n, lambda * x * c);
}

inline std::uint64_t count_hits(const SimulationConfig& config, const Region& event) {
    detail::validate(config);
    const double x = config.x;
    const auto acc = parallel_accumulate<detail::HitCount>(
        config.n_samples, config.workers, [&](std::uint64_t begin, std::uint64_t end, detail::HitCount& a) {
            for (std::uint64_t i = begin; i < end; ++i) {
                Stream s(config.seed, i);
                const PassageSample p = sample_passage(config.model, x, s);
                if (event.contains({p.tau / x, p.area / (x * x)})) ++a.hits;
            }
        });
    return acc.hits;
}

inline TailEstimate estimate_tail(const SimulationConfig& config, const Region& event, const std::string& descriptor = "") {
    TailEstimate t;
    t.event = descriptor;
    t.x = config.x;
    t.n_samples = config.n_samples;
    t.hit_count = count_hits(config, event);
    t.p_hat = static_cast<double>(t.hit_count) / static_cast<double>(t.n_samples);
    t.ci = wilson_interval(t.hit_count, t.n_samples);
    if (t.hit_count > 0) t.empirical_rate = -std::log(t.p_hat) / config.x;
    t.rate_lower_bound = -std::log(std::min(1.0, 3.0 / static_cast<double>(t.n_samples))) / config.x;
    try {
        const RegionRate r = rate_inf_over_region(config.model, event);
        t.predicted_rate = r.value.as_double();
    } catch (const std::exception&) {
        t.predicted_rate.reset();
    }
    t.exact_probability = gamma_tail_oracle(config.model, config.x, event);
    if (t.exact_probability && *t.exact_probability > 0.0) t.exact_rate = -std::log(*t.exact_probability) / config.x;
    return t;
}

// ---------------------------------------------------------------------------
// Central limit and moment checks

struct CltResult {
    std::uint64_t n = 0;
    double mean[2] = {0.0, 0.0};
    Matrix2 cov{};
    double correlation = 0.0;
};

namespace detail {

struct MomentSums {
    std::uint64_t n = 0;
    CompensatedSum s1, s2, s11, s22, s12;
    void merge(const MomentSums& o) {
        n += o.n;
        s1.add(o.s1);
        s2.add(o.s2);
        s11.add(o.s11);
        s22.add(o.s22);
        s12.add(o.s12);
    }
    void add(double u, double v) {
        ++n;
        s1.add(u);
        s2.add(v);
        s11.add(u * u);
        s22.add(v * v);
        s12.add(u * v);
    }
};

}  // namespace detail

/// Mean and covariance of sqrt(x) (tau/x - c1, A/x^2 - c2) with (c1, c2) from the centering mode.
inline CltResult empirical_clt(const HoldingTimeModel& model, double x, std::uint64_t n, std::uint64_t seed,
                               int workers, CenteringMode mode = CenteringMode::theoretical) {
    if (n < 2) throw DomainError("empirical_clt: need at least two samples");
    const ScaledPoint c = centering(model, x, mode);
    const double rx = std::sqrt(x);
    const auto sums = parallel_accumulate<detail::MomentSums>(
        n, workers, [&](std::uint64_t begin, std::uint64_t end, detail::MomentSums& acc) {
            for (std::uint64_t i = begin; i < end; ++i) {
                Stream s(seed, i);
                const PassageSample p = sample_passage(model, x, s);
                acc.add(rx * (p.tau / x - c.z1), rx * (p.area / (x * x) - c.z2));
            }
        });
    CltResult r;
    r.n = n;
    const double nn = static_cast<double>(n);
    r.mean[0] = sums.s1.value() / nn;
    r.mean[1] = sums.s2.value() / nn;
    r.cov[0][0] = (sums.s11.value() - nn * r.mean[0] * r.mean[0]) / (nn - 1.0);
    r.cov[1][1] = (sums.s22.value() - nn * r.mean[1] * r.mean[1]) / (nn - 1.0);
    r.cov[0][1] = r.cov[1][0] = (sums.s12.value() - nn * r.mean[0] * r.mean[1]) / (nn - 1.0);
    r.correlation = r.cov[0][1] / std::sqrt(r.cov[0][0] * r.cov[1][1]);
    return r;
}

struct MomentComparison {
    std::string name;
    double estimate = 0.0;
    double exact = 0.0;
    double standard_error = 0.0;
    double z_score() const { return standard_error > 0.0 ? (estimate - exact) / standard_error : 0.0; }
};

/// Sample moments of (tau, A) against exact_moments. Second moments are taken
/// about the exact means, so each comparison is a plain sample mean with its
/// own standard error.
inline std::vector<MomentComparison> moment_check(const HoldingTimeModel& model, double x, std::uint64_t n,
                                                  std::uint64_t seed, int workers) {
    if (n < 2) throw DomainError("moment_check: need at least two samples");
    const MomentReport ex = exact_moments(model, x);
    struct Acc {
        CompensatedSum sum[5], sq[5];
        void merge(const Acc& o) {
            for (int k = 0; k < 5; ++k) {
                sum[k].add(o.sum[k]);
                sq[k].add(o.sq[k]);
            }
        }
    };
    const auto acc = parallel_accumulate<Acc>(n, workers, [&](std::uint64_t begin, std::uint64_t end, Acc& a) {
        for (std::uint64_t i = begin; i < end; ++i) {
            Stream s(seed, i);
            const PassageSample p = sample_passage(model, x, s);
            const double d1 = p.tau - ex.mean_tau, d2 = p.area - ex.mean_area;
            const double v[5] = {d1, d2, d1 * d1, d2 * d2, d1 * d2};
            for (int k = 0; k < 5; ++k) {
                a.sum[k].add(v[k]);
                a.sq[k].add(v[k] * v[k]);
            }
        }
    });
    const double nn = static_cast<double>(n);
    const char* names[5] = {"mean_tau", "mean_area", "var_tau", "var_area", "cov"};
    const double offsets[5] = {ex.mean_tau, ex.mean_area, 0.0, 0.0, 0.0};
    const double exact[5] = {ex.mean_tau, ex.mean_area, ex.var_tau, ex.var_area, ex.cov};
    std::vector<MomentComparison> out;
    for (int k = 0; k < 5; ++k) {
        const double m = acc.sum[k].value() / nn;
        const double var = std::max(0.0, (acc.sq[k].value() - nn * m * m) / (nn - 1.0));
        out.push_back({names[k], m + offsets[k], exact[k], std::sqrt(var / nn)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Moderate deviations

struct MdRow {
    double x = 0.0;
    double a_x = 0.0;
    std::uint64_t n_samples = 0;
    std::uint64_t hit_count = 0;
    double p_hat = 0.0;
    std::optional<double> exponent;  // a_x log p_hat
    double exponent_bound = 0.0;     // a_x log(3/n) when there are no hits
    double predicted = 0.0;          // -inf psi_star over {||z||_inf > delta}
};

inline Region linf_exceedance(double delta) {
    Region r;
    r.pieces = {HalfPlane{1.0, 0.0, delta, true}, HalfPlane{-1.0, 0.0, delta, true}, HalfPlane{0.0, 1.0, delta, true},
                HalfPlane{0.0, -1.0, delta, true}};
    return r;
}

/// a_x log P(||sqrt(x a_x) (tau/x - c1, A/x^2 - c2)||_inf > delta) by plain Monte Carlo.
inline std::vector<MdRow> empirical_md(const HoldingTimeModel& model, const std::vector<double>& x_grid,
                                       const ModerateScaling& scaling, double delta, std::uint64_t n,
                                       std::uint64_t seed, int workers,
                                       CenteringMode mode = CenteringMode::theoretical) {
    if (!(delta >= 0.0)) throw DomainError("empirical_md: delta must be nonnegative");
    if (n < 1) throw DomainError("empirical_md: need at least one sample");
    const double predicted = -md_event_rate(model, linf_exceedance(delta)).value.as_double();
    std::vector<MdRow> rows;
    for (std::size_t k = 0; k < x_grid.size(); ++k) {
        const double x = x_grid[k];
        const double ax = scaling.a(x);
        const double scale = std::sqrt(x * ax);
        const ScaledPoint c = centering(model, x, mode);
        const std::uint64_t sub_seed = derive_seed(seed, k);
        const auto acc = parallel_accumulate<detail::HitCount>(
            n, workers, [&](std::uint64_t begin, std::uint64_t end, detail::HitCount& a) {
                for (std::uint64_t i = begin; i < end; ++i) {
                    Stream s(sub_seed, i);
                    const PassageSample p = sample_passage(model, x, s);
                    const double u = scale * (p.tau / x - c.z1), v = scale * (p.area / (x * x) - c.z2);
                    if (std::max(std::abs(u), std::abs(v)) > delta) ++a.hits;
                }
            });
        MdRow r;
        r.x = x;
        r.a_x = ax;
        r.n_samples = n;
        r.hit_count = acc.hits;
        r.p_hat = static_cast<double>(acc.hits) / static_cast<double>(n);
        if (acc.hits > 0) r.exponent = ax * std::log(r.p_hat);
        r.exponent_bound = ax * std::log(std::min(1.0, 3.0 / static_cast<double>(n)));
        r.predicted = predicted;
        rows.push_back(r);
    }
    return rows;
}

struct MdProbability {
    double log_probability = 0.0;
    double tau_part = 0.0;   // P(|tau/x - 1/lambda| > eps)
    double area_part = 0.0;  // P(|tau/x - 1/lambda| <= eps, |A/x^2 - 1/(2 lambda)| > eps)
};

/// The moderate-deviation probability for exponential(lambda) holding times and
/// integer x, computed without sampling: tau(x) is Gamma(x, lambda), and given
/// tau(x) = y the area is y (1 + U_1 + ... + U_{x-1}) with uniform U_i, whose
/// tails come from the saddlepoint formula.
inline MdProbability md_probability_exponential(double lambda, int x, double a_x, double delta) {
    if (x < 2) throw DomainError("md_probability_exponential: x must be an integer >= 2");
    if (!(lambda > 0.0) || !(a_x > 0.0) || !(delta > 0.0)) throw DomainError("md_probability_exponential: bad arguments");
    const double xd = x, m = 1.0 / lambda;
    const double eps = delta / std::sqrt(xd * a_x);
    MdProbability out;
    out.tau_part = special::gamma_q(xd, lambda * xd * (m + eps));
    if (m - eps > 0.0) out.tau_part += special::gamma_p(xd, lambda * xd * (m - eps));

    const int n_u = x - 1;
    auto log_integrand = [&](double y) {
        const double log_density = xd * std::log(lambda) + (xd - 1.0) * std::log(y) - lambda * y - std::lgamma(xd);
        const double s_hi = xd * xd * (0.5 * m + eps) / y - 1.0;
        const double s_lo = xd * xd * (0.5 * m - eps) / y - 1.0;
        const double tail = uniform_sum_upper_tail(n_u, s_hi) + uniform_sum_upper_tail(n_u, n_u - s_lo);
        return tail > 0.0 ? log_density + std::log(tail) : -std::numeric_limits<double>::infinity();
    };
    const double lo = std::max(0.0, xd * (m - eps)), hi = xd * (m + eps);
    double peak = -std::numeric_limits<double>::infinity();
    const int grid = 4000;
    for (int i = 0; i <= grid; ++i) {
        const double y = lo + (hi - lo) * i / grid;
        if (y > 0.0) peak = std::max(peak, log_integrand(y));
    }
    double scaled = 0.0;
    if (std::isfinite(peak)) {
        quadrature::Options opt;
        opt.abs_tol = 1e-13 * (hi - lo);
        opt.rel_tol = 1e-10;
        const auto q = quadrature::adaptive(
            [&](double y) { return y > 0.0 ? std::exp(log_integrand(y) - peak) : 0.0; }, lo, hi, opt);
        scaled = q.value;
        out.area_part = std::exp(peak) * scaled;
    }
    // combine in logs: the area part can be far below the tau part or vice versa
    const double log_tau = out.tau_part > 0.0 ? std::log(out.tau_part) : -std::numeric_limits<double>::infinity();
    const double log_area = scaled > 0.0 ? peak + std::log(scaled) : -std::numeric_limits<double>::infinity();
    const double big = std::max(log_tau, log_area);
    out.log_probability = big + std::log(std::exp(log_tau - big) + std::exp(log_area - big));
    return out;
}

// ---------------------------------------------------------------------------
// Joint MGF check

struct MgfCheck {
    double empirical = 0.0;
    double exact = 0.0;
    double relative_error = 0.0;
};

/// Empirical E[exp(a1 tau + a2 A)] against the product of holding-time MGFs.
inline MgfCheck mgf_empirical_check(const HoldingTimeModel& model, double x, const Tilt& tilt, std::uint64_t n,
                                    std::uint64_t seed, int workers) {
    const int terms = holding_time_count(x);
    double log_exact = 0.0;
    for (int j = 1; j <= terms; ++j) {
        const double a = tilt.a1 + tilt.a2 * (x - j + 1.0);
        if (!model.in_interior(a))
            throw DomainError("mgf_empirical_check: tilt outside the finite-x domain of the joint MGF");
        log_exact += model.cgf_raw(a);
    }
    struct Acc {
        CompensatedSum sum;
        void merge(const Acc& o) { sum.add(o.sum); }
    };
    const auto acc = parallel_accumulate<Acc>(n, workers, [&](std::uint64_t begin, std::uint64_t end, Acc& a) {
        for (std::uint64_t i = begin; i < end; ++i) {
            Stream s(seed, i);
            const PassageSample p = sample_passage(model, x, s);
            a.sum.add(std::exp(tilt.a1 * p.tau + tilt.a2 * p.area));
        }
    });
    MgfCheck c;
    c.exact = std::exp(log_exact);
    c.empirical = acc.sum.value() / static_cast<double>(n);
    c.relative_error = std::abs(c.empirical - c.exact) / c.exact;
    return c;
}

}  // namespace renewal_ldp
