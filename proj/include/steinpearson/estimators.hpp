#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "error.hpp"
#include "function_spec.hpp"
#include "pearson.hpp"
#include "series.hpp"

namespace steinpearson::umvue {

/// Sample of size nu from Geometric(theta); X = sum is negative_binomial(nu, theta).
struct GeometricUmvueSuite {
    int nu;
    double theta;
    Distribution dist;
};

/// Sample of size nu from Exp(lambda); X = sum is gamma(nu, lambda).
struct ExponentialUmvueSuite {
    int nu;
    double lambda;
    Distribution dist;
};

inline GeometricUmvueSuite geometric_suite(int nu, double theta) {
    if (nu < 1)
        throw Error(ErrorKind::invalid_parameter, "geometric suite: nu >= 1");
    if (!(theta > 0.0 && theta < 1.0))
        throw Error(ErrorKind::invalid_parameter, "geometric suite: 0 < theta < 1");
    return {nu, theta, make_builtin("negative_binomial", {{"r", double(nu)}, {"p", theta}})};
}

inline ExponentialUmvueSuite exponential_suite(int nu, double lambda) {
    if (nu < 1)
        throw Error(ErrorKind::invalid_parameter, "exponential suite: nu >= 1");
    if (!(lambda > 0.0))
        throw Error(ErrorKind::invalid_parameter, "exponential suite: lambda > 0");
    return {nu, lambda, make_builtin("gamma", {{"a", double(nu)}, {"lambda", lambda}})};
}

namespace detail {

/// log [a]_n = sum_{i<n} log(a + i), a > 0.
inline double log_rising(double a, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += std::log(a + i);
    return acc;
}

inline double log_falling(double a, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += std::log(a - i);
    return acc;
}

inline double harmonic(int n) {
    CompensatedSum s;
    for (int j = 1; j <= n; ++j)
        s.add(1.0 / j);
    return s.value();
}

inline void require_u_index(int nu, int n) {
    if (n < 1 || n > nu - 1)
        throw Error(ErrorKind::invalid_index,
                    "U needs 1 <= n <= nu - 1, got n = " + std::to_string(n) + " with nu = " + std::to_string(nu));
}

} // namespace detail

/// 1/nu + 1/(nu+1) + ... + 1/(nu+x-1); 0 at x = 0.
inline double t_nu(double x, int nu) {
    CompensatedSum s;
    for (int j = 0; j < static_cast<int>(x); ++j)
        s.add(1.0 / (nu + j));
    return s.value();
}

/// T_nu with Δ^k T = (-1)^{k-1} (k-1)! / [nu+x]_k.
inline FunctionSpec t_spec(int nu) {
    return FunctionSpec::analytic(
        "umvue_t:nu=" + std::to_string(nu), [nu](double x) { return t_nu(x, nu); }, {},
        [nu](int k, double x) {
            return LogValue{k % 2 == 1 ? 1.0 : -1.0, std::lgamma(static_cast<double>(k)) - detail::log_rising(nu + x, k)};
        });
}

/// W_{nu;n} = [nu+x]_n / [nu]_n.
inline double w_nu(double x, int nu, int n) {
    return std::exp(detail::log_rising(nu + x, n) - detail::log_rising(nu, n));
}

/// W_{nu;n} with Δ^k W = (n)_k [nu+x+k]_{n-k} / [nu]_n for k <= n, 0 beyond.
inline FunctionSpec w_spec(int nu, int n) {
    if (n < 1)
        throw Error(ErrorKind::invalid_index, "W needs n >= 1");
    return FunctionSpec::analytic(
        "umvue_w:nu=" + std::to_string(nu) + ",n=" + std::to_string(n), [nu, n](double x) { return w_nu(x, nu, n); }, {},
        [nu, n](int k, double x) {
            if (k > n)
                return LogValue::zero();
            return LogValue{1.0, detail::log_falling(n, k) + detail::log_rising(nu + x + k, n - k) -
                                     detail::log_rising(nu, n)};
        });
}

/// U_{nu;n} = (nu-1)_n / [nu-n+x]_n.
inline double u_nu(double x, int nu, int n) {
    detail::require_u_index(nu, n);
    return std::exp(detail::log_falling(nu - 1.0, n) - detail::log_rising(nu - n + x, n));
}

/// U_{nu;n} with Δ^k U = (-1)^k [n]_k (nu-1)_n / [nu-n+x]_{n+k}.
inline FunctionSpec u_spec(int nu, int n) {
    detail::require_u_index(nu, n);
    return FunctionSpec::analytic(
        "umvue_u:nu=" + std::to_string(nu) + ",n=" + std::to_string(n), [nu, n](double x) { return u_nu(x, nu, n); },
        {},
        [nu, n](int k, double x) {
            return LogValue{k % 2 == 0 ? 1.0 : -1.0, detail::log_rising(n, k) + detail::log_falling(nu - 1.0, n) -
                                                         detail::log_rising(nu - n + x, n + k)};
        });
}

inline constexpr double euler_gamma = std::numbers::egamma;

/// L_nu = -log x - gamma + sum_{j<nu} 1/j.
inline double l_nu(double x, int nu) {
    if (!(x > 0.0))
        throw Error(ErrorKind::nonpositive_x, "L_nu needs x > 0");
    return -std::log(x) - euler_gamma + detail::harmonic(nu - 1);
}

/// L_nu with L^(k) = (-1)^k (k-1)! x^{-k}.
inline FunctionSpec l_spec(int nu) {
    return FunctionSpec::analytic(
        "umvue_l:nu=" + std::to_string(nu), [nu](double x) { return l_nu(x, nu); },
        [](int k, double x) {
            if (!(x > 0.0))
                throw Error(ErrorKind::nonpositive_x, "L_nu needs x > 0");
            return LogValue{k % 2 == 0 ? 1.0 : -1.0, std::lgamma(static_cast<double>(k)) - k * std::log(x)};
        },
        {});
}

/// A directly summed closed-form series.
struct ClosedSeries {
    double value = 0.0;
    int terms = 0;
    bool accelerated = false;
    std::vector<double> first_terms; ///< up to the first 10 terms
};

namespace detail {

template <class Term>
ClosedSeries sum_closed(Term&& term, std::optional<int> last, SeriesAccumulator::Mode mode, SeriesOptions opts) {
    ClosedSeries out;
    SeriesAccumulator acc(mode, opts);
    for (int k = 1;; ++k) {
        if (last && k > *last) {
            out.value = acc.partial_sum();
            return out;
        }
        if (k > opts.max_k)
            throw Error(ErrorKind::nonconvergent, "closed-form series did not converge by k = " + std::to_string(opts.max_k));
        const double t = term(k);
        if (out.first_terms.size() < 10)
            out.first_terms.push_back(t);
        acc.add(t);
        out.terms = k;
        if (acc.converged()) {
            out.value = acc.value();
            out.accelerated = acc.accelerated();
            return out;
        }
    }
}

inline SeriesOptions closed_series_options(SeriesOptions o) {
    o.max_k = std::max(o.max_k, 100000);
    o.accel_rel_tol = o.rel_tol;
    return o;
}

/// sum_{k>=1} x^k / (k^2 C(nu+k-1, k)), with the binomial updated by ratio.
inline ClosedSeries harmonic_binomial_series(int nu, double x, const SeriesOptions& opts) {
    double r = 1.0; // x^k / C(nu+k-1, k)
    int last_k = 0;
    auto term = [&](int k) {
        while (last_k < k) {
            ++last_k;
            r *= x * last_k / (nu + last_k - 1.0);
        }
        return r / (static_cast<double>(k) * k);
    };
    return sum_closed(term, std::nullopt, SeriesAccumulator::Mode::variance, closed_series_options(opts));
}

} // namespace detail

struct VarTResult {
    int nu = 0;
    double theta = 0.0;
    ClosedSeries series;
    double cramer_rao = 0.0; ///< (1 - theta) / nu, the first term
    std::optional<SeriesReport> parseval;
};

/// Var T_nu = sum_k (1-theta)^k / (k^2 C(nu+k-1, k)), summed directly and,
/// optionally, through the Parseval engine.
inline VarTResult var_t_nu(int nu, double theta, const SeriesOptions& opts = {}, bool with_parseval = true) {
    auto suite = geometric_suite(nu, theta);
    VarTResult r;
    r.nu = nu;
    r.theta = theta;
    r.series = detail::harmonic_binomial_series(nu, 1.0 - theta, opts);
    r.cramer_rao = (1.0 - theta) / nu;
    if (with_parseval)
        r.parseval = parseval_variance(suite.dist, t_spec(nu), opts);
    return r;
}

struct VarLResult {
    int nu = 0;
    ClosedSeries series;
    double closed_form = 0.0; ///< pi^2/6 - sum_{k<nu} 1/k^2
    double efficiency = 0.0;  ///< nu * Var L_nu
    bool sandwich = false;    ///< 1 < nu Var L_nu < 1 + 1/nu
    std::optional<SeriesReport> parseval;
};

/// Var L_nu = sum_k 1 / (k^2 C(nu+k-1, k)); independent of lambda.
inline VarLResult var_l_nu(int nu, std::optional<double> lambda = std::nullopt, const SeriesOptions& opts = {}) {
    if (nu < 1)
        throw Error(ErrorKind::invalid_parameter, "nu >= 1");
    VarLResult r;
    r.nu = nu;
    r.series = detail::harmonic_binomial_series(nu, 1.0, opts);
    CompensatedSum s;
    s.add(std::numbers::pi * std::numbers::pi / 6.0);
    for (int k = 1; k < nu; ++k)
        s.add(-1.0 / (static_cast<double>(k) * k));
    r.closed_form = s.value();
    r.efficiency = nu * r.closed_form;
    r.sandwich = r.efficiency > 1.0 && r.efficiency < 1.0 + 1.0 / nu;
    if (lambda) {
        auto suite = exponential_suite(nu, *lambda);
        r.parseval = parseval_variance(suite.dist, l_spec(nu), opts);
    }
    return r;
}

struct CovarianceEntry {
    std::string name;
    double closed_form = 0.0;
    int closed_terms = 0;
    double parseval = 0.0;
    double direct = 0.0;
};

struct GeometricCovariances {
    int nu = 0;
    double theta = 0.0;
    int n = 0;
    int m = 0;
    std::vector<CovarianceEntry> entries;
};

/// The five covariances among T_nu, W_{nu;n}, W_{nu;m}, U_{nu;n}, U_{nu;m},
/// each by its closed-form series, the Parseval engine and direct expectation.
inline GeometricCovariances geometric_covariances(int nu, double theta, int n, int m, const SeriesOptions& opts = {}) {
    auto suite = geometric_suite(nu, theta);
    if (n < 1 || m < 1)
        throw Error(ErrorKind::invalid_index, "n and m must be at least 1");
    detail::require_u_index(nu, n);
    detail::require_u_index(nu, m);
    const double p = 1.0 - theta;

    // Term factors (1-theta)^k / [nu]_k and k!, built in log space.
    auto log_base = [&](int k) { return k * std::log(p) - detail::log_rising(nu, k); };
    auto lfact = [](int k) { return std::lgamma(k + 1.0); };
    const auto signed_mode = SeriesAccumulator::Mode::signed_terms;
    const auto copts = detail::closed_series_options(opts);

    GeometricCovariances out{nu, theta, n, m, {}};
    auto add = [&](std::string name, ClosedSeries cs, double factor, const FunctionSpec& g1, const FunctionSpec& g2) {
        CovarianceEntry e;
        e.name = std::move(name);
        e.closed_form = factor * cs.value;
        e.closed_terms = cs.terms;
        BoundOptions bo;
        bo.compute_oracle = false;
        e.parseval = parseval_covariance(suite.dist, g1, g2, opts, bo).value;
        e.direct = steinpearson::detail::covariance_oracle(suite.dist, g1, g2, {}).value_or(std::nan(""));
        out.entries.push_back(std::move(e));
    };

    const auto T = t_spec(nu);
    const auto Wn = w_spec(nu, n);
    const auto Wm = w_spec(nu, m);
    const auto Un = u_spec(nu, n);
    const auto Um = u_spec(nu, m);

    add("cov_t_w",
        detail::sum_closed([&](int k) { return (k % 2 == 1 ? 1.0 : -1.0) * std::exp(detail::log_falling(n, k) + log_base(k)) / k; },
                           n, signed_mode, copts),
        std::pow(theta, -n), T, Wn);
    add("cov_t_u",
        detail::sum_closed([&](int k) { return std::exp(detail::log_rising(m, k) + log_base(k)) / k; }, std::nullopt,
                           signed_mode, copts),
        -std::pow(theta, m), T, Um);
    add("cov_w_w",
        detail::sum_closed(
            [&](int k) { return std::exp(detail::log_falling(n, k) + detail::log_falling(m, k) - lfact(k) + log_base(k)); },
            std::min(n, m), signed_mode, copts),
        std::pow(theta, -n - m), Wn, Wm);
    add("cov_u_u",
        detail::sum_closed(
            [&](int k) { return std::exp(detail::log_rising(n, k) + detail::log_rising(m, k) - lfact(k) + log_base(k)); },
            std::nullopt, signed_mode, copts),
        std::pow(theta, n + m), Un, Um);
    add("cov_w_u",
        detail::sum_closed(
            [&](int k) {
                return (k % 2 == 0 ? 1.0 : -1.0) *
                       std::exp(detail::log_falling(n, k) + detail::log_rising(m, k) - lfact(k) + log_base(k));
            },
            n, signed_mode, copts),
        std::pow(theta, m - n), Wn, Um);
    return out;
}

/// Parses `umvue_t:nu=<nu>`, `umvue_w:nu=<nu>,n=<n>`, `umvue_u:nu=<nu>,n=<n>`
/// or `umvue_l:nu=<nu>`.
inline std::optional<FunctionSpec> parse_umvue_spec(std::string_view spec) {
    const auto colon = spec.find(':');
    const auto name = spec.substr(0, colon);
    if (name != "umvue_t" && name != "umvue_w" && name != "umvue_u" && name != "umvue_l")
        return std::nullopt;
    constexpr std::string_view grammar = "umvue_t:nu=<nu> | umvue_w:nu=<nu>,n=<n> | umvue_u:nu=<nu>,n=<n> | umvue_l:nu=<nu>";
    if (colon == std::string_view::npos)
        throw Error(ErrorKind::usage, "missing parameters (grammar: " + std::string(grammar) + ")");
    const auto params = parse_params(spec.substr(colon + 1), grammar);
    auto integer = [&](const std::string& key) {
        const auto it = params.find(key);
        if (it == params.end() || it->second != std::floor(it->second) || it->second < 1 || it->second > 1e6)
            throw Error(ErrorKind::invalid_parameter, std::string(name) + " needs a positive integer " + key);
        return static_cast<int>(it->second);
    };
    const bool indexed = name == "umvue_w" || name == "umvue_u";
    for (const auto& [k, v] : params)
        if (k != "nu" && !(indexed && k == "n"))
            throw Error(ErrorKind::invalid_parameter, std::string(name) + ": unknown parameter '" + k + "'");
    const int nu = integer("nu");
    if (name == "umvue_t")
        return t_spec(nu);
    if (name == "umvue_l")
        return l_spec(nu);
    if (name == "umvue_w")
        return w_spec(nu, integer("n"));
    return u_spec(nu, integer("n"));
}

} // namespace steinpearson::umvue
