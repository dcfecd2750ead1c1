#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <renewal_ldp/renewal_ldp.hpp>

namespace renewal_ldp::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Serialization

inline std::string num17(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Finite doubles as JSON numbers; infinities as the strings "inf" / "-inf", NaN as null.
inline Json number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline Json number(ExtendedReal v) { return number(v.as_double()); }

inline Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

inline Json pair_json(double a, double b) { return Json::array({number(a), number(b)}); }

inline Json matrix_json(const Matrix2& m) {
    return Json::array({pair_json(m[0][0], m[0][1]), pair_json(m[1][0], m[1][1])});
}

inline Json model_json(const HoldingTimeModel& m) {
    Json params = Json::object();
    const auto names = parameter_names(m.kind());
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = m.params()[i];
    return {{"kind", std::string(to_string(m.kind()))}, {"params", params}};
}

inline HoldingTimeModel model_from_json(const Json& j) {
    if (j.is_string()) return parse_model_descriptor(j.get<std::string>());
    const char* shape = "model must be a descriptor string \"kind:p1[,p2]\" or {\"kind\": string, \"params\": {name: number}}";
    if (!j.is_object() || j.size() != 2 || !j.contains("kind") || !j.contains("params") || !j["kind"].is_string() ||
        !j["params"].is_object())
        throw UsageError(shape);
    std::map<std::string, double> named;
    for (const auto& [k, v] : j["params"].items()) {
        if (!v.is_number()) throw UsageError(shape);
        named[k] = v.get<double>();
    }
    return HoldingTimeModel::make_named(parse_model_kind(j["kind"].get<std::string>()), named);
}

inline Json envelope(const std::string& command) { return {{"schema", "v1"}, {"command", command}}; }

/// Rows of doubles as CSV with a header line; every value printed with %.17g.
inline std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + num17(r[i]);
        out += '\n';
    }
    return out;
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    f.close();
    if (!f) throw IoError("write to '" + path + "' failed");
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Argument helpers

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    int n = 1;

    double at(int i) const { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); }
};

inline double parse_double(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size()) throw UsageError(what + ": '" + s + "' is not a number");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

/// "lo:hi:n"
inline Range parse_range(const std::string& s, const std::string& what) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw UsageError(what + ": expected lo:hi:n, got '" + s + "'");
    Range r{parse_double(parts[0], what), parse_double(parts[1], what), 0};
    const double n = parse_double(parts[2], what);
    if (n < 1 || n != std::floor(n) || n > 1e6) throw UsageError(what + ": n must be an integer in [1, 1e6]");
    r.n = static_cast<int>(n);
    return r;
}

/// "lo:hi:n,lo:hi:n"
inline std::pair<Range, Range> parse_grid(const std::string& s, const std::string& what) {
    const auto parts = split(s, ',');
    if (parts.size() != 2) throw UsageError(what + ": expected lo:hi:n,lo:hi:n, got '" + s + "'");
    return {parse_range(parts[0], what), parse_range(parts[1], what)};
}

inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split(s, ',')) out.push_back(parse_double(item, what));
    if (out.empty()) throw UsageError(what + ": empty list");
    return out;
}

inline Region parse_region(const std::string& s) {
    try {
        return Region::parse(s);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
}

// ---------------------------------------------------------------------------
// Subcommands

struct ModelArgs {
    std::string model;
    std::vector<double> alpha;
};

inline int cmd_model(const ModelArgs& a, std::ostream& out) {
    const auto m = parse_model_descriptor(a.model);
    const auto cls = classify_domain(m);
    const auto reg = regularity_report(m);
    const auto cs = hessian_origin(m);
    Json j = envelope("model");
    j["model"] = model_json(m);
    j["descriptor"] = m.descriptor();
    j["domain"] = {{"boundary", number(cls.domain.boundary)},
                   {"boundary_closed", cls.domain.boundary_closed},
                   {"integrable_at_boundary", cls.domain.integrable_at_boundary},
                   {"lsc_case", std::string(to_string(cls.lsc_case))}};
    j["mean"] = m.mean();
    j["variance"] = m.variance();
    j["sampler"] = std::string(to_string(m.sampler_spec()));
    j["regularity"] = {{"lsc", reg.lsc},
                       {"steep", reg.steep},
                       {"essentially_smooth", reg.essentially_smooth},
                       {"full_ldp_certificate", std::string(to_string(reg.full_ldp_certificate))}};
    j["covariance"] = {{"phi2", cs.phi2}, {"C", matrix_json(cs.C)}, {"C_inv", matrix_json(cs.C_inv)}};
    Json cgf = Json::array();
    for (double al : a.alpha) {
        Json row = {{"alpha", al}, {"value", number(m.cgf(al))}};
        const bool inner = m.in_interior(al);
        row["d1"] = inner ? number(m.cgf_d1(al)) : Json(nullptr);
        row["d2"] = inner ? number(m.cgf_d2(al)) : Json(nullptr);
        cgf.push_back(row);
    }
    j["cgf"] = cgf;
    out << dump(j);
    return kExitOk;
}

struct LambdaArgs {
    std::string model;
    std::optional<double> a1, a2;
    std::string grid;
    std::string format = "csv";
    std::string out;
    bool quadrature = false;
};

inline int cmd_lambda(const LambdaArgs& a, std::ostream& out) {
    const auto m = parse_model_descriptor(a.model);
    std::vector<Tilt> tilts;
    if (!a.grid.empty()) {
        if (a.a1 || a.a2) throw UsageError("lambda: give either --grid or --a1/--a2");
        const auto [g1, g2] = parse_grid(a.grid, "--grid");
        for (int i = 0; i < g1.n; ++i)
            for (int k = 0; k < g2.n; ++k) tilts.push_back({g1.at(i), g2.at(k)});
    } else {
        if (!a.a1 || !a.a2) throw UsageError("lambda: --a1 and --a2 (or --grid) are required");
        tilts.push_back({*a.a1, *a.a2});
    }
    const LambdaOptions opt{.force_quadrature = a.quadrature};
    std::vector<std::vector<double>> rows;
    for (const auto& t : tilts) {
        const ExtendedReal v = lambda_eval(m, t, opt);
        double g1 = std::nan(""), g2 = std::nan("");
        if (v.is_finite()) {
            try {
                const Gradient g = lambda_grad(m, t, opt);
                g1 = g.g1;
                g2 = g.g2;
            } catch (const DomainError&) {
                // gradient undefined on the boundary of the domain
            }
        }
        rows.push_back({t.a1, t.a2, v.as_double(), g1, g2, v.is_finite() ? 1.0 : 0.0});
    }
    if (a.format == "csv") {
        emit(csv({"a1", "a2", "value", "grad1", "grad2", "finite"}, rows), a.out, out);
        return kExitOk;
    }
    Json j = envelope("lambda");
    j["model"] = model_json(m);
    Json arr = Json::array();
    for (const auto& r : rows)
        arr.push_back({{"a1", r[0]}, {"a2", r[1]}, {"value", number(r[2])}, {"grad1", number(r[3])},
                       {"grad2", number(r[4])}, {"finite", r[5] == 1.0}});
    j["rows"] = arr;
    emit(dump(j), a.out, out);
    return kExitOk;
}

struct RateArgs {
    std::string model;
    std::optional<double> z1, z2;
    std::string grid;
    std::string method = "auto";
    std::string region;
    int g_curve = 0;
    std::string format = "json";
    std::string out;
};

inline RateEvaluation evaluate_rate(const HoldingTimeModel& m, const ScaledPoint& z, const std::string& method) {
    if (method == "poisson") {
        if (m.kind() != ModelKind::exponential) throw UsageError("rate: --method poisson needs an exponential model");
        return rate_ld_poisson(m.params()[0], z);
    }
    RateOptions opt;
    if (method == "newton") opt.solver = RateSolver::newton;
    if (method == "ascent") opt.solver = RateSolver::ascent;
    return rate_ld(m, z, opt);
}

inline Json rate_row(const ScaledPoint& z, const RateEvaluation& r) {
    Json j = {{"z1", z.z1}, {"z2", z.z2}, {"value", number(r.value)}};
    j["tilt"] = r.argmax_tilt ? pair_json(r.argmax_tilt->a1, r.argmax_tilt->a2) : Json(nullptr);
    j["converged"] = r.converged;
    j["method"] = std::string(to_string(r.method));
    j["iterations"] = r.iterations;
    j["on_boundary"] = r.on_boundary;
    return j;
}

inline int cmd_rate(const RateArgs& a, std::ostream& out) {
    const auto m = parse_model_descriptor(a.model);
    Json j = envelope("rate");
    j["model"] = model_json(m);

    if (a.g_curve > 0) {
        if (!a.z1 || !a.z2) throw UsageError("rate: --g-curve needs --z1 and --z2");
        const ScaledPoint z{*a.z1, *a.z2};
        if (!in_cone_interior(z)) throw UsageError("rate: --g-curve needs 0 < z2 < z1");
        const double lo = -1.0 / z.z2, hi = 1.0 / (z.z1 - z.z2);
        std::vector<std::vector<double>> rows;
        for (int i = 1; i <= a.g_curve; ++i) {
            const double a2 = lo + (hi - lo) * i / (a.g_curve + 1.0);
            rows.push_back({a2, poisson_g(z, a2), a2 * z.z1});
        }
        if (a.format == "csv") {
            emit(csv({"a2", "g", "h"}, rows), a.out, out);
            return kExitOk;
        }
        j["z1"] = z.z1;
        j["z2"] = z.z2;
        j["root_a2"] = poisson_g_root(z).a2;
        j["inflection"] = number(poisson_gamma(z));
        Json arr = Json::array();
        for (const auto& r : rows) arr.push_back({{"a2", r[0]}, {"g", r[1]}, {"h", r[2]}});
        j["rows"] = arr;
        emit(dump(j), a.out, out);
        return kExitOk;
    }

    if (!a.region.empty()) {
        const RegionRate r = rate_inf_over_region(m, parse_region(a.region));
        j["region"] = a.region;
        j["value"] = number(r.value);
        j["minimizer"] = r.minimizer ? pair_json(r.minimizer->z1, r.minimizer->z2) : Json(nullptr);
        emit(dump(j), a.out, out);
        return kExitOk;
    }

    std::vector<ScaledPoint> points;
    if (!a.grid.empty()) {
        if (a.z1 || a.z2) throw UsageError("rate: give either --grid or --z1/--z2");
        const auto [g1, g2] = parse_grid(a.grid, "--grid");
        for (int i = 0; i < g1.n; ++i)
            for (int k = 0; k < g2.n; ++k) points.push_back({g1.at(i), g2.at(k)});
    } else {
        if (!a.z1 || !a.z2) throw UsageError("rate: --z1 and --z2 (or --grid, --region, --g-curve) are required");
        points.push_back({*a.z1, *a.z2});
    }
    std::vector<Json> rows;
    for (const auto& z : points) rows.push_back(rate_row(z, evaluate_rate(m, z, a.method)));

    if (a.format == "csv") {
        std::string text = "z1,z2,value,a1,a2,converged,iterations\n";
        for (const auto& r : rows) {
            const bool has_tilt = !r["tilt"].is_null();
            const double v = r["value"].is_string() ? INFINITY : r["value"].get<double>();
            text += num17(r["z1"].get<double>()) + "," + num17(r["z2"].get<double>()) + "," + num17(v) + "," +
                    (has_tilt ? num17(r["tilt"][0].get<double>()) : "nan") + "," +
                    (has_tilt ? num17(r["tilt"][1].get<double>()) : "nan") + "," +
                    (r["converged"].get<bool>() ? "1" : "0") + "," + std::to_string(r["iterations"].get<int>()) + "\n";
        }
        emit(text, a.out, out);
        return kExitOk;
    }
    if (points.size() == 1 && a.grid.empty()) {
        for (const auto& [k, v] : rows.front().items()) j[k] = v;
    } else {
        j["rows"] = rows;
    }
    emit(dump(j), a.out, out);
    return kExitOk;
}

struct ModerateArgs {
    std::string model;
    double p = 0.5;
    std::string region;
    std::string x_grid = "100,1000,10000";
    std::string out;
};

inline int cmd_moderate(const ModerateArgs& a, std::ostream& out) {
    const auto m = parse_model_descriptor(a.model);
    if (!(a.p > 0.0 && a.p < 1.0)) throw UsageError("moderate: --p must lie in (0, 1) so that a_x -> 0 and x a_x -> inf");
    const ModerateScaling scaling{a.p, {}};
    const auto grid = parse_list(a.x_grid, "--x-grid");
    if (!scaling.valid_on(grid)) throw UsageError("moderate: --x-grid must be positive and strictly increasing");
    const auto cs = hessian_origin(m);
    Json j = envelope("moderate");
    j["model"] = model_json(m);
    j["p"] = a.p;
    j["covariance"] = {{"C", matrix_json(cs.C)}, {"C_inv", matrix_json(cs.C_inv)}};
    std::optional<RegionRate> rate;
    if (!a.region.empty()) {
        rate = md_event_rate(m, parse_region(a.region));
        j["region"] = a.region;
        j["rate"] = number(rate->value);
        j["minimizer"] = rate->minimizer ? pair_json(rate->minimizer->z1, rate->minimizer->z2) : Json(nullptr);
    }
    Json rows = Json::array();
    for (double x : grid) {
        const auto mo = exact_moments(m, x);
        Json r = {{"x", x}, {"a_x", scaling.a(x)}, {"speed", scaling.speed(x)}};
        if (rate) r["predicted_exponent"] = number(-rate->value.as_double());
        r["moments"] = {{"n_terms", mo.n_terms}, {"mean_tau", mo.mean_tau}, {"var_tau", mo.var_tau},
                        {"mean_area", mo.mean_area}, {"var_area", mo.var_area}, {"cov", mo.cov}};
        r["correlation"] = correlation_limit(m, x).rho_x;
        rows.push_back(r);
    }
    j["correlation_limit"] = std::sqrt(3.0) / 2.0;
    j["rows"] = rows;
    emit(dump(j), a.out, out);
    return kExitOk;
}

struct SimulateArgs {
    std::string model;
    double x = 0.0;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string event;
    bool moments = false;
    bool clt = false;
    std::string format = "json";
    std::string out;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const auto m = parse_model_descriptor(a.model);
    const int modes = !a.event.empty() + a.moments + a.clt;
    if (modes > 1) throw UsageError("simulate: --event, --moments and --clt are mutually exclusive");
    Json j = envelope("simulate");
    j["model"] = model_json(m);
    j["x"] = a.x;
    j["n"] = a.n;
    j["seed"] = a.seed;
    if (!a.event.empty()) {
        const auto t = estimate_tail({m, a.x, a.n, a.seed, a.workers}, parse_region(a.event), a.event);
        j["event"] = a.event;
        j["hit_count"] = t.hit_count;
        j["p_hat"] = t.p_hat;
        j["ci"] = pair_json(t.ci.lo, t.ci.hi);
        j["empirical_rate"] = optional_number(t.empirical_rate);
        j["rate_lower_bound"] = number(t.rate_lower_bound);
        j["predicted_rate"] = optional_number(t.predicted_rate);
        j["exact_probability"] = optional_number(t.exact_probability);
        j["exact_rate"] = optional_number(t.exact_rate);
        emit(dump(j), a.out, out);
        return kExitOk;
    }
    if (a.moments) {
        Json rows = Json::array();
        for (const auto& c : moment_check(m, a.x, a.n, a.seed, a.workers))
            rows.push_back({{"name", c.name},
                            {"estimate", c.estimate},
                            {"exact", c.exact},
                            {"standard_error", c.standard_error},
                            {"z_score", c.z_score()}});
        j["moments"] = rows;
        emit(dump(j), a.out, out);
        return kExitOk;
    }
    if (a.clt) {
        const auto c = empirical_clt(m, a.x, a.n, a.seed, a.workers);
        j["mean"] = pair_json(c.mean[0], c.mean[1]);
        j["cov"] = matrix_json(c.cov);
        j["correlation"] = c.correlation;
        j["limit_cov"] = matrix_json(hessian_origin(m).C);
        j["limit_correlation"] = std::sqrt(3.0) / 2.0;
        emit(dump(j), a.out, out);
        return kExitOk;
    }
    if (!(a.x > 0.0)) throw UsageError("simulate: --x must be positive");
    std::vector<std::vector<double>> rows;
    rows.reserve(a.n);
    for (std::uint64_t i = 0; i < a.n; ++i) {
        Stream s(a.seed, i);
        const auto p = sample_passage(m, a.x, s);
        rows.push_back({a.x, p.tau, p.area, static_cast<double>(p.n_terms)});
    }
    if (a.format == "csv") {
        emit(csv({"x", "tau", "area", "n_terms"}, rows), a.out, out);
        return kExitOk;
    }
    Json arr = Json::array();
    for (const auto& r : rows) arr.push_back({{"tau", r[1]}, {"area", r[2]}, {"n_terms", static_cast<int>(r[3])}});
    j["samples"] = arr;
    emit(dump(j), a.out, out);
    return kExitOk;
}

struct ConditionalArgs {
    int x = 0;
    double y = 0.0;
    double beta = 0.0;
    std::string mode = "closed_form";
    std::optional<double> z1, z2;
    double lambda = 1.0;
    std::uint64_t samples = 0;
    std::optional<std::uint64_t> seed;
    std::string out;
};

inline int cmd_conditional(const ConditionalArgs& a, std::ostream& out) {
    const NestedMode mode = a.mode == "brute_force" ? NestedMode::brute_force : NestedMode::closed_form;
    if (a.samples > 0 && !a.seed) throw UsageError("conditional: --samples needs an explicit --seed");
    Json j = envelope("conditional");
    j["x"] = a.x;
    j["y"] = a.y;
    j["beta"] = a.beta;
    j["mode"] = a.mode;
    j["log_conditional_mgf"] = log_conditional_mgf(a.x, a.y, a.beta);
    j["conditional_mgf"] = number(conditional_mgf(a.x, a.y, a.beta));
    j["kappa"] = kappa(a.beta, a.y);
    if (a.x >= 2) {
        const double nested = nested_integral(a.x, a.y, a.beta, mode);
        j["nested_integral"] = nested;
        j["triangulated_mgf"] =
            number(std::exp(std::lgamma(a.x) + a.beta * a.x * a.y - (a.x - 1) * std::log(a.y)) * nested);
    }
    if (a.samples > 0) {
        CompensatedSum s;
        for (std::uint64_t i = 0; i < a.samples; ++i) {
            Stream st(*a.seed, i);
            s.add(std::exp(a.beta * sample_area_given_tau(a.x, a.y, st)));
        }
        j["samples"] = a.samples;
        j["seed"] = *a.seed;
        j["empirical_mgf"] = number(s.value() / static_cast<double>(a.samples));
    }
    if (a.z1 || a.z2) {
        if (!a.z1 || !a.z2) throw UsageError("conditional: --z1 and --z2 go together");
        const auto ks = kappa_star(*a.z2, *a.z1);
        Json c = {{"z1", *a.z1}, {"z2", *a.z2}, {"lambda", a.lambda}, {"kappa_star", number(ks.value)},
                  {"kappa_star_argmax", ks.attained ? number(ks.argmax) : Json(nullptr)}};
        if (*a.z2 > 0.0 && *a.z2 < *a.z1) {
            const auto ch = chaganty_equality(a.lambda, *a.z1, *a.z2);
            c["J"] = number(ch.J_value);
            c["abs_diff"] = ch.abs_diff;
        }
        j["conjugate"] = c;
    }
    emit(dump(j), a.out, out);
    return kExitOk;
}

struct ValidateArgs {
    bool quick = false;
    std::vector<int> only;
    std::optional<std::uint64_t> seed;
    int workers = 0;
    std::string format = "text";
    std::string out;
};

inline int cmd_validate(const ValidateArgs& a, std::ostream& out) {
    acceptance::Options opt;
    opt.quick = a.quick;
    opt.workers = a.workers;
    if (a.seed) opt.seed = *a.seed;
    const bool text = a.format == "text";
    const bool to_stdout = a.out.empty() || a.out == "-";
    std::string table;
    const auto results = acceptance::run(opt, a.only, [&](const acceptance::CriterionResult& r) {
        const std::string line = acceptance::format_line(r) + "\n";
        if (text && to_stdout) out << line << std::flush;
        table += line;
    });
    int failed = 0;
    for (const auto& r : results) failed += !r.passed;
    if (text) {
        const std::string summary = std::to_string(results.size() - failed) + "/" + std::to_string(results.size()) +
                                    " criteria passed\n";
        if (to_stdout) out << summary;
        else emit(table + summary, a.out, out);
    } else {
        Json j = envelope("validate");
        j["quick"] = a.quick;
        j["seed"] = opt.seed;
        Json rows = Json::array();
        for (const auto& r : results)
            rows.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
        j["criteria"] = rows;
        j["failed"] = failed;
        emit(dump(j), a.out, out);
    }
    return failed == 0 ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// Config files

/// Splices the keys of a JSON config file into the argument list, ahead of the
/// command-line arguments so that those take precedence. Keys are long option
/// names of the chosen subcommand; "schema" and "subcommand" are also accepted.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
    std::string path;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file path");
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (path.empty()) return rest;

    const std::string schema =
        "config '" + path + "': expected a JSON object {\"schema\": \"v1\", \"subcommand\": name, <option>: value, ...}"
        " whose keys are long option names of the subcommand";
    std::ifstream f(path);
    if (!f) throw UsageError("config '" + path + "': cannot be read");
    Json cfg;
    try {
        cfg = Json::parse(f);
    } catch (const Json::parse_error& e) {
        throw UsageError(schema + " (" + e.what() + ")");
    }
    if (!cfg.is_object()) throw UsageError(schema);
    if (cfg.contains("schema") && cfg["schema"] != "v1") throw UsageError(schema + " (unsupported schema version)");

    std::string sub;
    std::size_t sub_pos = rest.size();
    for (std::size_t i = 0; i < rest.size(); ++i)
        if (!rest[i].empty() && rest[i][0] != '-') {
            sub = rest[i];
            sub_pos = i;
            break;
        }
    if (cfg.contains("subcommand")) {
        if (!cfg["subcommand"].is_string()) throw UsageError(schema + " (subcommand must be a string)");
        const std::string from_cfg = cfg["subcommand"].get<std::string>();
        if (sub.empty()) {
            sub = from_cfg;
            rest.insert(rest.begin(), sub);
            sub_pos = 0;
        } else if (sub != from_cfg) {
            throw UsageError(schema + " (config is for '" + from_cfg + "', command line asks for '" + sub + "')");
        }
    }
    if (sub.empty()) throw UsageError(schema + " (no subcommand given)");
    CLI::App* sc = nullptr;
    try {
        sc = app.get_subcommand(sub);
    } catch (const CLI::OptionNotFound&) {
        throw UsageError("unknown subcommand '" + sub + "'");
    }

    std::vector<std::string> injected;
    for (const auto& [key, value] : cfg.items()) {
        if (key == "schema" || key == "subcommand") continue;
        const CLI::Option* opt = sc->get_option_no_throw("--" + key);
        if (!opt) {
            std::string allowed;
            for (const CLI::Option* o : sc->get_options())
                if (!o->get_lnames().empty() && o->get_lnames().front() != "help" &&
                    o->get_lnames().front() != "help-all")
                    allowed += (allowed.empty() ? "" : ", ") + o->get_lnames().front();
            throw UsageError(schema + " (unknown key '" + key + "' for " + sub + "; allowed: " + allowed + ")");
        }
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (opt->get_expected_min() != 0) throw UsageError(schema + " (key '" + key + "' takes a value, not a boolean)");
            if (value.get<bool>()) injected.push_back(flag);
        } else if (key == "model") {
            injected.push_back(flag);
            injected.push_back(model_from_json(value).descriptor());
        } else if (value.is_array()) {
            injected.push_back(flag);
            for (const auto& v : value) injected.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        } else if (value.is_string()) {
            injected.push_back(flag);
            injected.push_back(value.get<std::string>());
        } else if (value.is_number()) {
            injected.push_back(flag);
            injected.push_back(value.dump());
        } else {
            throw UsageError(schema + " (key '" + key + "' has an unsupported value type)");
        }
    }
    rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, injected.begin(), injected.end());
    return rest;
}

// ---------------------------------------------------------------------------

inline constexpr const char* kModelHelp =
    "Model descriptor kind:param[,param]: exponential:lambda, inverse_gaussian:mu, "
    "noncentral_chi_squared:lambda,k, gamma:shape,rate";

inline constexpr const char* kRegionHelp =
    "Region in the (z1, z2) plane, pieces joined by '|': z1>=1.5, z2<0.2, z2>z1, z1-z2<=0.3, "
    "box:lo1,hi1,lo2,hi2, linf>0.5";

/// Runs the command line `args` (program name excluded) and returns the exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Large and moderate deviations of renewal passage times and areas"};
    app.name("renewal_ldp");
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.set_help_all_flag("--help-all", "Help for every subcommand");
    std::string config_path;
    app.add_option("--config", config_path, "JSON config: {\"schema\":\"v1\",\"subcommand\":..., <option>: value}");

    const auto models = CLI::IsMember({"csv", "json"});

    ModelArgs ma;
    auto* model = app.add_subcommand("model", "Describe a holding-time model: domain, moments, regularity");
    model->add_option("--model", ma.model, kModelHelp)->required();
    model->add_option("--alpha", ma.alpha, "Points at which to evaluate the CGF");

    LambdaArgs la;
    auto* lambda = app.add_subcommand("lambda", "Evaluate the limit CGF Lambda and its gradient");
    lambda->add_option("--model", la.model, kModelHelp)->required();
    lambda->add_option("--a1", la.a1, "Tilt conjugate to tau(x)/x");
    lambda->add_option("--a2", la.a2, "Tilt conjugate to A(x)/x^2");
    lambda->add_option("--grid", la.grid, "a1lo:a1hi:n1,a2lo:a2hi:n2");
    lambda->add_flag("--quadrature", la.quadrature, "Integrate numerically even when a closed form exists");
    lambda->add_option("--format", la.format, "csv or json")->check(models);
    lambda->add_option("--out", la.out, "Output file (default stdout)");

    RateArgs ra;
    auto* rate = app.add_subcommand("rate", "Large-deviation rate function of (tau(x)/x, A(x)/x^2)");
    rate->add_option("--model", ra.model, kModelHelp)->required();
    rate->add_option("--z1", ra.z1, "Scaled passage time");
    rate->add_option("--z2", ra.z2, "Scaled area");
    rate->add_option("--grid", ra.grid, "z1lo:z1hi:n1,z2lo:z2hi:n2");
    rate->add_option("--method", ra.method, "auto, newton, ascent or poisson")
        ->check(CLI::IsMember({"auto", "newton", "ascent", "poisson"}));
    rate->add_option("--region", ra.region, std::string("Infimum of the rate over a region. ") + kRegionHelp);
    rate->add_option("--g-curve", ra.g_curve, "Emit N points of the curves g(a2) and h(a2) = a2 z1 (exponential case)")
        ->check(CLI::Range(1, 1000000));
    rate->add_option("--format", ra.format, "json or csv")->check(models);
    rate->add_option("--out", ra.out, "Output file (default stdout)");

    ModerateArgs mda;
    auto* moderate = app.add_subcommand("moderate", "Moderate-deviation rates, covariance and exact moments");
    moderate->add_option("--model", mda.model, kModelHelp)->required();
    moderate->add_option("--p", mda.p, "Scaling exponent: a_x = x^-p");
    moderate->add_option("--region", mda.region, kRegionHelp);
    moderate->add_option("--x-grid", mda.x_grid, "Comma-separated levels x");
    moderate->add_option("--out", mda.out, "Output file (default stdout)");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo passage times and areas");
    simulate->add_option("--model", sa.model, kModelHelp)->required();
    simulate->add_option("--x", sa.x, "Level x")->required();
    simulate->add_option("--n", sa.n, "Number of samples")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sa.seed, "Seed (required)")->required();
    simulate->add_option("--workers", sa.workers, "Worker threads (default RENEWAL_LDP_WORKERS or all cores)")
        ->check(CLI::Range(1, 4096));
    simulate->add_option("--event", sa.event, std::string("Estimate P((tau/x, A/x^2) in event). ") + kRegionHelp);
    simulate->add_flag("--moments", sa.moments, "Compare sample moments with exact moments");
    simulate->add_flag("--clt", sa.clt, "Empirical covariance of the sqrt(x)-scaled centred pair");
    simulate->add_option("--format", sa.format, "json or csv (csv only for raw samples)")->check(models);
    simulate->add_option("--out", sa.out, "Output file (default stdout)");

    ConditionalArgs ca;
    auto* conditional = app.add_subcommand("conditional", "Area given passage time, exponential holding times");
    conditional->add_option("--x", ca.x, "Integer level x")->required()->check(CLI::PositiveNumber);
    conditional->add_option("--y", ca.y, "Conditioning value of tau(x)")->required()->check(CLI::PositiveNumber);
    conditional->add_option("--beta", ca.beta, "MGF argument")->required();
    conditional->add_option("--mode", ca.mode, "closed_form or brute_force")
        ->check(CLI::IsMember({"closed_form", "brute_force"}));
    conditional->add_option("--z1", ca.z1, "Scaled passage time for kappa* and J");
    conditional->add_option("--z2", ca.z2, "Scaled area for kappa* and J");
    conditional->add_option("--lambda", ca.lambda, "Exponential rate for J")->check(CLI::PositiveNumber);
    conditional->add_option("--samples", ca.samples, "Monte Carlo draws of the conditional area");
    conditional->add_option("--seed", ca.seed, "Seed (required with --samples)");
    conditional->add_option("--out", ca.out, "Output file (default stdout)");

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "Run the acceptance suite and print a pass/fail table");
    validate->add_flag("--quick", va.quick, "Divide Monte Carlo sample sizes by 10");
    validate->add_option("--only", va.only, "Criterion ids to run")->check(CLI::Range(1, 12));
    validate->add_option("--seed", va.seed, "Base seed (default: the suite's fixed seed)");
    validate->add_option("--workers", va.workers, "Worker threads (default RENEWAL_LDP_WORKERS or all cores)")
        ->check(CLI::Range(1, 4096));
    validate->add_option("--format", va.format, "text or json")->check(CLI::IsMember({"text", "json"}));
    validate->add_option("--out", va.out, "Output file (default stdout)");

    try {
        std::vector<std::string> expanded = expand_config(args, app);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (sa.workers == 0 && *simulate) sa.workers = default_workers();
        if (va.workers == 0 && *validate) va.workers = default_workers();
        if (*model) return cmd_model(ma, out);
        if (*lambda) return cmd_lambda(la, out);
        if (*rate) return cmd_rate(ra, out);
        if (*moderate) return cmd_moderate(mda, out);
        if (*simulate) return cmd_simulate(sa, out);
        if (*conditional) return cmd_conditional(ca, out);
        if (*validate) return cmd_validate(va, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace renewal_ldp::cli
