#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bounds.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "expectation.hpp"
#include "function_spec.hpp"
#include "pearson.hpp"
#include "rodrigues.hpp"
#include "stein.hpp"

namespace steinpearson::cli {

using Json = nlohmann::ordered_json;

enum class Format { json, csv, text };

struct RunConfig {
    std::string command;
    std::string dist_spec;
    std::string g_spec;
    std::string g2_spec;
    int order = 1;
    std::uint64_t seed = 20240611;
    Format format = Format::json;
    std::optional<double> rel_tol;
    std::optional<double> abs_tol;
    std::optional<int> max_k;
    std::size_t samples = 100000;
    std::string suite;
    int nu = 1;
    double theta = 0.5;
    double lambda = 1.0;
    std::optional<int> n;
    std::optional<int> m;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c = {"polys", "bound", "poincare", "parseval", "cov", "check", "estimators"};
    return c;
}

struct Report {
    Json inputs = Json::object();
    Json terms = Json::array();
    Json values = Json::object();
    Json oracle = Json::object();
    Json diagnostics = Json::object();
    std::vector<std::string> csv_header = {"k", "numerator", "sq_norm", "term", "partial_sum"};
    std::vector<std::vector<Json>> csv_rows;
};

namespace detail {

inline Json number(double v) {
    if (!std::isfinite(v))
        return nullptr;
    return v;
}

inline Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

inline FunctionSpec parse_g(const std::string& spec, const std::string& flag) {
    if (spec.empty())
        throw Error(ErrorKind::usage, flag + " is required for this command");
    if (auto u = umvue::parse_umvue_spec(spec))
        return std::move(*u);
    return parse_function_spec(spec);
}

inline Distribution parse_dist(const std::string& spec) {
    if (spec.empty())
        throw Error(ErrorKind::usage, "--dist is required for this command (grammar: name:key=value[,key=value...])");
    return parse_distribution(spec);
}

inline SteinOptions stein_options(const RunConfig& c) {
    SteinOptions o;
    if (c.rel_tol)
        o.expect.rel_tol = *c.rel_tol;
    if (c.abs_tol)
        o.expect.abs_tol = *c.abs_tol;
    return o;
}

inline SeriesOptions series_options(const RunConfig& c) {
    SeriesOptions o;
    if (c.rel_tol)
        o.rel_tol = *c.rel_tol;
    if (c.max_k)
        o.max_k = *c.max_k;
    return o;
}

inline Json term_json(const TermRecord& t, double partial, bool covariance) {
    Json j;
    j["k"] = t.k;
    j["numerator"] = number(t.numerator);
    if (covariance)
        j["numerator2"] = number(t.numerator2);
    j["sq_norm"] = number(t.sq_norm);
    j["term"] = number(t.term);
    j["partial_sum"] = number(partial);
    j["zero_norm"] = t.zero_norm;
    return j;
}

inline void add_term_rows(Report& r, const std::vector<TermRecord>& terms, const std::vector<double>& partial,
                          bool covariance) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& t = terms[i];
        r.terms.push_back(term_json(t, partial[i], covariance));
        r.csv_rows.push_back({t.k, number(t.numerator), number(t.sq_norm), number(t.term), number(partial[i])});
    }
}

inline Json series_json(const SeriesReport& s) {
    Json j;
    j["value"] = number(s.value);
    j["converged"] = s.converged;
    j["truncation_k"] = s.truncation_k;
    j["applicability"] = to_string(s.applicability);
    j["accelerated"] = s.accelerated;
    j["stop_reason"] = s.stop_reason;
    j["moment_ceiling"] = s.moment_ceiling ? Json(*s.moment_ceiling) : Json(nullptr);
    return j;
}

inline void run_polys(const RunConfig& c, Report& r) {
    const auto d = parse_dist(c.dist_spec);
    const auto sys = build_system(d, c.order, stein_options(c).expect);
    r.inputs["dist"] = d.spec();
    r.inputs["order"] = c.order;
    r.csv_header = {"k", "lead", "sq_norm", "coefficients"};
    for (int k = 0; k <= c.order; ++k) {
        const auto i = static_cast<std::size_t>(k);
        Json j;
        j["k"] = k;
        Json coeffs = Json::array();
        std::string joined;
        for (double v : sys.polys[i].coeffs()) {
            coeffs.push_back(number(v));
            if (!joined.empty())
                joined += ';';
            joined += Json(number(v)).dump();
        }
        j["coefficients"] = coeffs;
        j["lead"] = number(sys.leads[i]);
        j["sq_norm"] = number(sys.sq_norms[i]);
        j["degenerate"] = static_cast<bool>(sys.degenerate[i]);
        r.terms.push_back(j);
        r.csv_rows.push_back({k, number(sys.leads[i]), number(sys.sq_norms[i]), joined});
    }
    r.values["exact_construction"] = sys.exact;
    r.values["degenerate_order"] = sys.degenerate_order;
    const auto& q = d.quadratic();
    r.values["quadratic"] = {{"delta", number(q.delta)}, {"beta", number(q.beta)}, {"gamma", number(q.gamma)}};
    r.values["mean"] = number(d.mean());
}

inline void run_bound(const RunConfig& c, Report& r) {
    const auto d = parse_dist(c.dist_spec);
    const auto g = parse_g(c.g_spec, "--g");
    BoundOptions bo;
    bo.stein = stein_options(c);
    const auto b = variance_lower_bound(d, g, c.order, bo);
    r.inputs["dist"] = d.spec();
    r.inputs["g"] = g.label();
    r.inputs["order"] = c.order;
    add_term_rows(r, b.terms, b.partial_sums, false);
    r.values["bound"] = number(b.lower_bound);
    r.values["equality_expected"] = b.equality_expected;
    r.oracle["variance"] = optional_number(b.variance_oracle);
    r.oracle["gap"] = optional_number(b.gap);
}

inline void run_poincare(const RunConfig& c, Report& r) {
    const auto d = parse_dist(c.dist_spec);
    const auto g = parse_g(c.g_spec, "--g");
    BoundOptions bo;
    bo.stein = stein_options(c);
    const auto p = poincare_comparison(d, g, c.order, bo);
    r.inputs["dist"] = d.spec();
    r.inputs["g"] = g.label();
    r.inputs["order"] = c.order;
    r.csv_header = {"k", "moment", "coefficient", "partial_sum", "signed_gap"};
    bool all_ok = true;
    for (int k = 1; k <= p.order; ++k) {
        const auto i = static_cast<std::size_t>(k - 1);
        Json j;
        j["k"] = k;
        j["moment"] = number(p.moments[i]);
        j["coefficient"] = number(p.coefficients[i]);
        j["partial_sum"] = number(p.partial_sums[i]);
        const auto gap = i < p.signed_gaps.size() ? std::optional<double>(p.signed_gaps[i]) : std::nullopt;
        j["signed_gap"] = optional_number(gap);
        if (i < p.sign_ok.size()) {
            j["sign_ok"] = static_cast<bool>(p.sign_ok[i]);
            all_ok = all_ok && p.sign_ok[i];
        }
        r.terms.push_back(j);
        r.csv_rows.push_back({k, number(p.moments[i]), number(p.coefficients[i]), number(p.partial_sums[i]),
                              optional_number(gap)});
    }
    r.values["s_n"] = number(p.partial_sums.back());
    r.values["sign_pattern_ok"] = p.variance_oracle ? Json(all_ok) : Json(nullptr);
    r.oracle["variance"] = optional_number(p.variance_oracle);
}

inline void run_parseval(const RunConfig& c, Report& r) {
    const auto d = parse_dist(c.dist_spec);
    const auto g = parse_g(c.g_spec, "--g");
    BoundOptions bo;
    bo.stein = stein_options(c);
    const auto s = parseval_variance(d, g, series_options(c), bo);
    r.inputs["dist"] = d.spec();
    r.inputs["g"] = g.label();
    add_term_rows(r, s.terms, s.partial_sums, false);
    r.values = series_json(s);
    r.oracle["variance"] = optional_number(s.oracle);
    r.diagnostics["stopping_rule"] = "heuristic: three consecutive small terms, or agreeing Levin u estimates";
}

inline void run_cov(const RunConfig& c, Report& r) {
    const auto d = parse_dist(c.dist_spec);
    const auto g1 = parse_g(c.g_spec, "--g");
    const auto g2 = parse_g(c.g2_spec, "--g2");
    BoundOptions bo;
    bo.stein = stein_options(c);
    const auto s = parseval_covariance(d, g1, g2, series_options(c), bo);
    r.inputs["dist"] = d.spec();
    r.inputs["g"] = g1.label();
    r.inputs["g2"] = g2.label();
    add_term_rows(r, s.terms, s.partial_sums, true);
    r.values = series_json(s);
    r.oracle["covariance"] = optional_number(s.oracle);
    r.diagnostics["stopping_rule"] = "heuristic: three consecutive |terms| below rel_tol (1 + |sum|)";
}

inline void run_check(const RunConfig& c, Report& r) {
    const auto d = parse_dist(c.dist_spec);
    const auto g = parse_g(c.g_spec, "--g");
    const auto opts = stein_options(c);
    const auto sys = build_system(d, c.order, opts.expect);
    r.inputs["dist"] = d.spec();
    r.inputs["g"] = g.label();
    r.inputs["order"] = c.order;
    r.inputs["seed"] = c.seed;
    r.inputs["samples"] = c.samples;
    r.csv_header = {"k", "projection", "numerator", "residual", "sq_norm"};
    double worst = 0.0;
    for (int k = 0; k <= c.order; ++k) {
        const double proj = stein_projection(sys, g, k, opts);
        const double num = stein_numerator(sys, g, k, opts);
        const double res = std::abs(proj - num) / (1.0 + std::abs(num));
        worst = std::max(worst, res);
        const auto i = static_cast<std::size_t>(k);
        Json j;
        j["k"] = k;
        j["projection"] = number(proj);
        j["numerator"] = number(num);
        j["residual"] = number(res);
        j["sq_norm"] = number(sys.sq_norms[i]);
        r.terms.push_back(j);
        r.csv_rows.push_back({k, number(proj), number(num), number(res), number(sys.sq_norms[i])});
    }
    r.values["max_residual"] = number(worst);
    r.values["identity_holds"] = worst <= 1e-6;
    if (d.has_sampler()) {
        const auto mc = monte_carlo_oracle(d, [&](double x) { return g(x); }, c.seed, c.samples);
        r.oracle["monte_carlo_mean"] = number(mc.estimate);
        r.oracle["monte_carlo_stderr"] = number(mc.std_error);
        r.oracle["engine_mean"] = number(expect(d, [&](double x) { return g(x); }, opts.expect));
    }
}

inline void run_estimators(const RunConfig& c, Report& r) {
    r.inputs["suite"] = c.suite;
    r.inputs["nu"] = c.nu;
    const auto sopts = series_options(c);
    if (c.suite == "geometric_log_theta") {
        r.inputs["theta"] = c.theta;
        r.inputs["seed"] = c.seed;
        r.inputs["samples"] = c.samples;
        const auto v = umvue::var_t_nu(c.nu, c.theta, sopts);
        r.csv_header = {"k", "term"};
        for (std::size_t i = 0; i < v.series.first_terms.size(); ++i) {
            r.terms.push_back({{"k", i + 1}, {"term", number(v.series.first_terms[i])}});
            r.csv_rows.push_back({i + 1, number(v.series.first_terms[i])});
        }
        r.values["var_t_series"] = number(v.series.value);
        r.values["series_terms"] = v.series.terms;
        r.values["cramer_rao"] = number(v.cramer_rao);
        r.values["var_t_parseval"] = number(v.parseval->value);
        r.values["parseval_truncation_k"] = v.parseval->truncation_k;
        const auto suite = umvue::geometric_suite(c.nu, c.theta);
        const auto mc = monte_carlo_variance(suite.dist, [&](double x) { return umvue::t_nu(x, c.nu); }, c.seed, c.samples);
        r.oracle["var_t_direct"] = optional_number(v.parseval->oracle);
        r.oracle["monte_carlo_variance"] = number(mc.estimate);
        r.oracle["monte_carlo_stderr"] = number(mc.std_error);
        if (c.n || c.m) {
            const auto cov = umvue::geometric_covariances(c.nu, c.theta, c.n.value_or(1), c.m.value_or(1), sopts);
            r.inputs["n"] = cov.n;
            r.inputs["m"] = cov.m;
            Json list = Json::array();
            for (const auto& e : cov.entries)
                list.push_back({{"name", e.name},
                                {"closed_form", number(e.closed_form)},
                                {"closed_terms", e.closed_terms},
                                {"parseval", number(e.parseval)},
                                {"direct", number(e.direct)}});
            r.values["covariances"] = list;
        }
    } else if (c.suite == "exp_log_rate") {
        r.inputs["lambda"] = c.lambda;
        const auto v = umvue::var_l_nu(c.nu, c.lambda, sopts);
        r.csv_header = {"k", "term"};
        for (std::size_t i = 0; i < v.series.first_terms.size(); ++i) {
            r.terms.push_back({{"k", i + 1}, {"term", number(v.series.first_terms[i])}});
            r.csv_rows.push_back({i + 1, number(v.series.first_terms[i])});
        }
        r.values["var_l_series"] = number(v.series.value);
        r.values["series_terms"] = v.series.terms;
        r.values["closed_form"] = number(v.closed_form);
        r.values["efficiency"] = number(v.efficiency);
        r.values["efficiency_sandwich"] = v.sandwich;
        r.values["var_l_parseval"] = number(v.parseval->value);
        r.oracle["var_l_direct"] = optional_number(v.parseval->oracle);
    } else {
        throw Error(ErrorKind::usage, "--suite must be geometric_log_theta or exp_log_rate");
    }
}

inline std::string csv_cell(const Json& j) {
    if (j.is_null())
        return "";
    if (j.is_string())
        return j.get<std::string>();
    return j.dump();
}

inline std::string text_cell(const Json& j) {
    if (j.is_string())
        return j.get<std::string>();
    return j.dump();
}

} // namespace detail

/// Executes one command and writes its report. Returns the process exit
/// code: 0 success, 1 usage error, 2 hypothesis or convergence failure.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    Report r;
    try {
        if (c.command == "polys")
            detail::run_polys(c, r);
        else if (c.command == "bound")
            detail::run_bound(c, r);
        else if (c.command == "poincare")
            detail::run_poincare(c, r);
        else if (c.command == "parseval")
            detail::run_parseval(c, r);
        else if (c.command == "cov")
            detail::run_cov(c, r);
        else if (c.command == "check")
            detail::run_check(c, r);
        else if (c.command == "estimators")
            detail::run_estimators(c, r);
        else
            throw Error(ErrorKind::usage, "unknown command '" + c.command + "'");
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.is_usage() ? 1 : 2;
    }

    switch (c.format) {
    case Format::json: {
        Json doc;
        doc["command"] = c.command;
        doc["inputs"] = r.inputs;
        doc["terms"] = r.terms;
        doc["values"] = r.values;
        doc["oracle"] = r.oracle;
        doc["diagnostics"] = r.diagnostics;
        out << doc.dump(2) << '\n';
        break;
    }
    case Format::csv: {
        for (std::size_t i = 0; i < r.csv_header.size(); ++i)
            out << (i ? "," : "") << r.csv_header[i];
        out << '\n';
        for (const auto& row : r.csv_rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << detail::csv_cell(row[i]);
            out << '\n';
        }
        break;
    }
    case Format::text: {
        out << c.command << '\n';
        for (const auto& [k, v] : r.inputs.items())
            out << "  " << k << ": " << detail::text_cell(v) << '\n';
        if (!r.csv_rows.empty()) {
            for (const auto& h : r.csv_header)
                out << std::setw(16) << h << ' ';
            out << '\n';
            for (const auto& row : r.csv_rows) {
                for (const auto& cell : row)
                    out << std::setw(16) << detail::text_cell(cell) << ' ';
                out << '\n';
            }
        }
        for (const auto* section : {&r.values, &r.oracle, &r.diagnostics})
            for (const auto& [k, v] : section->items())
                out << k << ": " << detail::text_cell(v) << '\n';
        break;
    }
    }
    return 0;
}

/// Parses argv and runs. --help prints usage and returns 0.
inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Orthogonal polynomials, Stein-type identities and variance series for Pearson and Ord families"};
    app.set_help_flag("-h,--help", "Print this help message and exit");
    RunConfig c;
    std::string format = "json";
    std::string seed_text;
    app.add_option("command", c.command, "polys | bound | poincare | parseval | cov | check | estimators")
        ->required()
        ->check(CLI::IsMember(commands()));
    app.add_option("--dist", c.dist_spec, "distribution, name:key=value[,key=value...]");
    app.add_option("--g", c.g_spec, "target function: poly:c0,c1,... | exp:t=<t> | geom_pow:t=<t> | log_shift:a=<a> | gauss:s=<s> | umvue_*");
    app.add_option("--g2", c.g2_spec, "second function for cov");
    app.add_option("--order", c.order, "order n")->check(CLI::Range(0, 200));
    app.add_option("--seed", c.seed, "seed for Monte Carlo oracles");
    app.add_option("--format", format, "json | csv | text")->check(CLI::IsMember({"json", "csv", "text"}));
    app.add_option("--rel-tol", c.rel_tol, "relative tolerance override")->check(CLI::PositiveNumber);
    app.add_option("--abs-tol", c.abs_tol, "lattice tail tolerance override")->check(CLI::PositiveNumber);
    app.add_option("--max-k", c.max_k, "series term cap")->check(CLI::Range(1, 100000));
    app.add_option("--samples", c.samples, "Monte Carlo sample count")->check(CLI::Range(2, 100000000));
    app.add_option("--suite", c.suite, "geometric_log_theta | exp_log_rate");
    app.add_option("--nu", c.nu, "sample size nu")->check(CLI::Range(1, 100000));
    app.add_option("--theta", c.theta, "geometric success probability");
    app.add_option("--lambda", c.lambda, "exponential rate");
    app.add_option("--n", c.n, "index n of W or U")->check(CLI::Range(1, 100000));
    app.add_option("--m", c.m, "index m of W or U")->check(CLI::Range(1, 100000));
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    }
    c.format = format == "csv" ? Format::csv : format == "text" ? Format::text : Format::json;
    const bool needs_order = c.command != "parseval" && c.command != "cov" && c.command != "estimators";
    if (needs_order && c.order < 1 && c.command != "polys") {
        err << "usage error: --order must be at least 1\n";
        return 1;
    }
    return run(c, out, err);
}

} // namespace steinpearson::cli
