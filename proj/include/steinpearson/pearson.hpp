#pragma once

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "polynomial.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "summation.hpp"

namespace steinpearson {

enum class Lattice { continuous, integer };

inline constexpr double infinity = std::numeric_limits<double>::infinity();

struct Support {
    Lattice kind = Lattice::continuous;
    double lower = -infinity;
    double upper = infinity;

    bool is_discrete() const noexcept { return kind == Lattice::integer; }
    bool bounded() const noexcept { return std::isfinite(lower) && std::isfinite(upper); }

    bool contains(double x) const noexcept {
        if (is_discrete())
            return x == std::floor(x) && x >= lower && x <= upper;
        return x > lower && x < upper;
    }
};

/// q(x) = delta x^2 + beta x + gamma
template <class T>
struct BasicQuadratic {
    T delta{0};
    T beta{0};
    T gamma{0};

    T operator()(const T& x) const { return (delta * x + beta) * x + gamma; }
    Poly<T> poly() const { return Poly<T>{gamma, beta, delta}; }
};

using Quadratic = BasicQuadratic<double>;

/// Quadratic and mean held exactly, for drift-free polynomial construction.
struct ExactCoefficients {
    BasicQuadratic<Rational> quadratic;
    Rational mean;
};

using ParamMap = std::map<std::string, double>;

/// Everything needed to assemble a distribution. Optional hooks are closed
/// forms; when absent the generic expectation engine is used instead.
struct DistributionDefinition {
    std::string name;
    ParamMap params;
    Support support;
    Quadratic quadratic;
    double mean = 0.0;
    std::function<double(double)> log_weight;
    std::optional<int> max_finite_moment; ///< nullopt: moments of every order
    bool mgf_finite_near_zero = true;
    std::function<double(SplitMix64&)> draw;
    std::optional<ExactCoefficients> exact;
    /// log E[q^[k](X)] (discrete) or log E[q^k(X)] (continuous); -inf when zero.
    std::function<std::optional<double>(int)> log_q_moment;
    /// E[X^j]
    std::function<std::optional<double>(int)> raw_moment;
};

/// A member of the Pearson (continuous) or Ord (discrete) family:
/// sum_{j<=x} (mu - j) p(j) = q(x) p(x), or int_r^x (mu - t) f(t) dt = q(x) f(x).
/// Immutable once built.
class Distribution {
public:
    explicit Distribution(DistributionDefinition def) : def_(std::move(def)) {}

    const std::string& name() const noexcept { return def_.name; }
    const ParamMap& params() const noexcept { return def_.params; }
    const Support& support() const noexcept { return def_.support; }
    const Quadratic& quadratic() const noexcept { return def_.quadratic; }
    double mean() const noexcept { return def_.mean; }
    bool is_discrete() const noexcept { return def_.support.is_discrete(); }
    Lattice lattice() const noexcept { return def_.support.kind; }
    std::optional<int> max_finite_moment() const noexcept { return def_.max_finite_moment; }
    bool mgf_finite_near_zero() const noexcept { return def_.mgf_finite_near_zero; }
    const std::optional<ExactCoefficients>& exact() const noexcept { return def_.exact; }

    bool has_moments(int order) const noexcept {
        return !def_.max_finite_moment || order <= *def_.max_finite_moment;
    }

    double log_weight(double x) const {
        if (!def_.support.contains(x))
            return -infinity;
        return def_.log_weight(x);
    }
    /// Probability mass p(x) or density f(x).
    double weight(double x) const {
        const double lw = log_weight(x);
        return lw == -infinity ? 0.0 : std::exp(lw);
    }

    /// Var X = E[q(X)] = q(mu) / (1 - delta) whenever two moments exist.
    double variance() const {
        if (!has_moments(2) || def_.quadratic.delta >= 1.0)
            return infinity;
        return def_.quadratic(def_.mean) / (1.0 - def_.quadratic.delta);
    }

    /// Length scale for quadrature maps and test grids.
    double scale() const {
        const double v = variance();
        return std::isfinite(v) && v > 0.0 ? std::sqrt(v) : 1.0;
    }

    std::optional<double> closed_form_log_q_moment(int k) const {
        if (!def_.log_q_moment)
            return std::nullopt;
        return def_.log_q_moment(k);
    }
    std::optional<double> closed_form_raw_moment(int j) const {
        if (!def_.raw_moment)
            return std::nullopt;
        return def_.raw_moment(j);
    }

    bool has_sampler() const noexcept { return static_cast<bool>(def_.draw); }
    double draw(SplitMix64& rng) const {
        if (!def_.draw)
            throw Error(ErrorKind::invalid_parameter, "distribution '" + def_.name + "' has no sampler");
        return def_.draw(rng);
    }
    std::vector<double> sample(std::uint64_t seed, std::size_t count) const {
        SplitMix64 rng(seed);
        std::vector<double> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(draw(rng));
        return out;
    }

    /// Canonical spec string, e.g. "poisson:lambda=2".
    std::string spec() const;

private:
    DistributionDefinition def_;
};

namespace detail {

inline double lbeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

/// Stirling numbers of the second kind S(n, 0..n).
inline std::vector<double> stirling2_row(int n) {
    std::vector<double> row(static_cast<std::size_t>(n) + 1, 0.0);
    row[0] = 1.0;
    for (int m = 1; m <= n; ++m) {
        std::vector<double> next(row.size(), 0.0);
        for (int i = 1; i <= m; ++i)
            next[i] = i * row[i] + row[i - 1];
        row = std::move(next);
    }
    return row;
}

/// E[X^j] from factorial moments E[(X)_i] via Stirling numbers.
template <class FactorialMoment>
double raw_from_factorial(int j, FactorialMoment&& fm) {
    const auto s = stirling2_row(j);
    double acc = 0.0;
    for (int i = 0; i <= j; ++i)
        acc += s[i] * fm(i);
    return acc;
}

inline double format_number_check(double v) { return v; }

class ParamReader {
public:
    ParamReader(std::string family, const ParamMap& params) : family_(std::move(family)), params_(params) {}

    double get(const std::vector<std::string>& keys, std::optional<double> fallback = std::nullopt) {
        for (const auto& k : keys) {
            if (auto it = params_.find(k); it != params_.end()) {
                used_.push_back(k);
                if (!std::isfinite(it->second))
                    fail(k + " must be finite");
                return it->second;
            }
        }
        if (fallback)
            return *fallback;
        fail("missing parameter '" + keys.front() + "'");
        return 0.0;
    }

    void require(bool ok, const std::string& constraint) const {
        if (!ok)
            fail("violates " + constraint);
    }

    int integer(double v, const std::string& key) const {
        if (v != std::floor(v) || std::abs(v) > 1e9)
            fail(key + " must be an integer");
        return static_cast<int>(v);
    }

    void finish() const {
        for (const auto& [k, v] : params_) {
            if (std::find(used_.begin(), used_.end(), k) == used_.end())
                fail("unknown parameter '" + k + "'");
        }
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorKind::invalid_parameter, family_ + ": " + why);
    }

private:
    std::string family_;
    const ParamMap& params_;
    std::vector<std::string> used_;
};

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline DistributionDefinition discrete_definition(std::string name, ParamMap params, Support support,
                                                  ExactCoefficients exact) {
    DistributionDefinition def;
    def.name = std::move(name);
    def.params = std::move(params);
    def.support = support;
    def.quadratic = {to_double(exact.quadratic.delta), to_double(exact.quadratic.beta),
                     to_double(exact.quadratic.gamma)};
    def.mean = to_double(exact.mean);
    def.exact = std::move(exact);
    return def;
}

inline Distribution make_poisson(ParamMap params) {
    ParamReader r("poisson", params);
    const double lambda = r.get({"lambda", "mean"});
    r.require(lambda > 0.0, "lambda > 0");
    r.finish();
    const Rational lam(lambda);
    auto def = discrete_definition("poisson", {{"lambda", lambda}}, {Lattice::integer, 0.0, infinity},
                                   {{Rational(0), Rational(0), lam}, lam});
    def.log_weight = [lambda](double x) { return x * std::log(lambda) - lambda - std::lgamma(x + 1.0); };
    def.draw = [lambda](SplitMix64& rng) { return sampling::poisson(rng, lambda); };
    def.log_q_moment = [lambda](int k) -> std::optional<double> { return k * std::log(lambda); };
    def.raw_moment = [lambda](int j) -> std::optional<double> {
        return raw_from_factorial(j, [&](int i) { return std::pow(lambda, i); });
    };
    return Distribution(std::move(def));
}

inline Distribution make_binomial(ParamMap params) {
    ParamReader r("binomial", params);
    const double nv = r.get({"n", "N"});
    const int n = r.integer(nv, "n");
    const double p = r.get({"p"});
    r.require(n >= 1, "n >= 1");
    r.require(p > 0.0 && p < 1.0, "0 < p < 1");
    r.finish();
    const Rational pr(p);
    const Rational nr(n);
    auto def = discrete_definition("binomial", {{"n", nv}, {"p", p}}, {Lattice::integer, 0.0, double(n)},
                                   {{Rational(0), -pr, nr * pr}, nr * pr});
    def.log_weight = [n, p](double x) {
        return std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) + x * std::log(p) +
               (n - x) * std::log1p(-p);
    };
    def.draw = [n, p](SplitMix64& rng) { return sampling::binomial(rng, n, p); };
    def.log_q_moment = [n, p](int k) -> std::optional<double> {
        if (k > n)
            return -infinity;
        return std::lgamma(n + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) + k * std::log1p(-p);
    };
    def.raw_moment = [n, p](int j) -> std::optional<double> {
        return raw_from_factorial(j, [&](int i) { return falling_factorial(double(n), i) * std::pow(p, i); });
    };
    return Distribution(std::move(def));
}

inline Distribution make_negative_binomial(std::string name, double rr, double p) {
    const Rational pr(p);
    const Rational odds = (Rational(1) - pr) / pr;
    const Rational rrat(rr);
    ParamMap stored = name == "geometric" ? ParamMap{{"p", p}} : ParamMap{{"r", rr}, {"p", p}};
    auto def = discrete_definition(std::move(name), std::move(stored), {Lattice::integer, 0.0, infinity},
                                   {{Rational(0), odds, rrat * odds}, rrat * odds});
    def.log_weight = [rr, p](double x) {
        return std::lgamma(rr + x) - std::lgamma(rr) - std::lgamma(x + 1.0) + rr * std::log(p) + x * std::log1p(-p);
    };
    def.draw = [rr, p](SplitMix64& rng) { return sampling::negative_binomial(rng, rr, p); };
    def.log_q_moment = [rr, p](int k) -> std::optional<double> {
        return k * std::log1p(-p) + std::lgamma(rr + k) - std::lgamma(rr) - 2.0 * k * std::log(p);
    };
    def.raw_moment = [rr, p](int j) -> std::optional<double> {
        const double odds_d = (1.0 - p) / p;
        return raw_from_factorial(j, [&](int i) { return rising_factorial(rr, i) * std::pow(odds_d, i); });
    };
    return Distribution(std::move(def));
}

inline Distribution make_discrete_uniform(ParamMap params) {
    ParamReader r("discrete_uniform", params);
    const double nv = r.get({"n", "N"});
    const int n = r.integer(nv, "n");
    r.require(n >= 1, "n >= 1");
    r.finish();
    const Rational nr(n);
    auto def = discrete_definition("discrete_uniform", {{"n", nv}}, {Lattice::integer, 1.0, double(n)},
                                   {{Rational(-1, 2), nr / 2, Rational(0)}, (nr + 1) / 2});
    def.log_weight = [n](double) { return -std::log(double(n)); };
    def.draw = [n](SplitMix64& rng) { return 1.0 + std::floor(rng.uniform() * n); };
    // E[q^[k]] = (k!)^2 (N+k)! / (N (2k+1) (N-k-1)! 2^k (2k)!) for k < N, zero beyond.
    def.log_q_moment = [n](int k) -> std::optional<double> {
        if (k >= n)
            return -infinity;
        return 2.0 * std::lgamma(k + 1.0) + std::lgamma(double(n) + k + 1.0) - std::log(double(n)) -
               std::log(2.0 * k + 1.0) - std::lgamma(double(n) - k) - k * std::numbers::ln2 -
               std::lgamma(2.0 * k + 1.0);
    };
    def.raw_moment = [n](int j) -> std::optional<double> {
        CompensatedSum s;
        for (int x = 1; x <= n; ++x)
            s.add(std::pow(double(x), j));
        return s.value() / n;
    };
    return Distribution(std::move(def));
}

inline Distribution make_normal(ParamMap params) {
    ParamReader r("normal", params);
    const double mu = r.get({"mu", "mean"}, 0.0);
    double sigma = 1.0;
    if (params.count("var") || params.count("sigma2")) {
        const double var = r.get({"var", "sigma2"});
        r.require(var > 0.0, "var > 0");
        sigma = std::sqrt(var);
    } else {
        sigma = r.get({"sigma", "sd"}, 1.0);
    }
    r.require(sigma > 0.0, "sigma > 0");
    r.finish();
    DistributionDefinition def;
    def.name = "normal";
    def.params = {{"mu", mu}, {"sigma", sigma}};
    def.support = {Lattice::continuous, -infinity, infinity};
    def.quadratic = {0.0, 0.0, sigma * sigma};
    def.mean = mu;
    def.log_weight = [mu, sigma](double x) {
        const double z = (x - mu) / sigma;
        return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
    };
    def.draw = [mu, sigma](SplitMix64& rng) { return mu + sigma * sampling::normal(rng); };
    def.log_q_moment = [sigma](int k) -> std::optional<double> { return 2.0 * k * std::log(sigma); };
    def.raw_moment = [mu, sigma](int j) -> std::optional<double> {
        double acc = 0.0;
        double dfact = 1.0; // (i-1)!! for even i
        for (int i = 0; i <= j; i += 2) {
            if (i > 0)
                dfact *= (i - 1);
            acc += binomial_coefficient(j, i) * std::pow(mu, j - i) * std::pow(sigma, i) * dfact;
        }
        return acc;
    };
    return Distribution(std::move(def));
}

inline Distribution make_gamma(std::string name, double a, double lambda) {
    DistributionDefinition def;
    def.name = name;
    def.params = name == "exponential" ? ParamMap{{"lambda", lambda}} : ParamMap{{"a", a}, {"lambda", lambda}};
    def.support = {Lattice::continuous, 0.0, infinity};
    def.quadratic = {0.0, 1.0 / lambda, 0.0};
    def.mean = a / lambda;
    def.log_weight = [a, lambda](double x) {
        return a * std::log(lambda) + (a - 1.0) * std::log(x) - lambda * x - std::lgamma(a);
    };
    def.draw = [a, lambda](SplitMix64& rng) { return sampling::gamma(rng, a) / lambda; };
    def.log_q_moment = [a, lambda](int k) -> std::optional<double> {
        return std::lgamma(a + k) - std::lgamma(a) - 2.0 * k * std::log(lambda);
    };
    def.raw_moment = [a, lambda](int j) -> std::optional<double> {
        return rising_factorial(a, j) / std::pow(lambda, j);
    };
    return Distribution(std::move(def));
}

inline Distribution make_beta(ParamMap params) {
    ParamReader r("beta", params);
    const double a = r.get({"a", "alpha"});
    const double b = r.get({"b", "beta"});
    r.require(a > 0.0 && b > 0.0, "a > 0 and b > 0");
    r.finish();
    DistributionDefinition def;
    def.name = "beta";
    def.params = {{"a", a}, {"b", b}};
    def.support = {Lattice::continuous, 0.0, 1.0};
    def.quadratic = {-1.0 / (a + b), 1.0 / (a + b), 0.0};
    def.mean = a / (a + b);
    def.log_weight = [a, b](double x) {
        return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta(a, b);
    };
    def.draw = [a, b](SplitMix64& rng) { return sampling::beta(rng, a, b); };
    def.log_q_moment = [a, b](int k) -> std::optional<double> {
        return std::lgamma(a + k) - std::lgamma(a) + std::lgamma(b + k) - std::lgamma(b) -
               (std::lgamma(a + b + 2.0 * k) - std::lgamma(a + b)) - k * std::log(a + b);
    };
    def.raw_moment = [a, b](int j) -> std::optional<double> {
        return rising_factorial(a, j) / rising_factorial(a + b, j);
    };
    return Distribution(std::move(def));
}

inline Distribution make_uniform(ParamMap params) {
    ParamReader r("uniform", params);
    const double a = r.get({"a", "lower"}, 0.0);
    const double b = r.get({"b", "upper"}, 1.0);
    r.require(a < b, "a < b");
    r.finish();
    DistributionDefinition def;
    def.name = "uniform";
    def.params = {{"a", a}, {"b", b}};
    def.support = {Lattice::continuous, a, b};
    def.quadratic = {-0.5, 0.5 * (a + b), -0.5 * a * b};
    def.mean = 0.5 * (a + b);
    def.log_weight = [a, b](double) { return -std::log(b - a); };
    def.draw = [a, b](SplitMix64& rng) { return a + (b - a) * rng.uniform(); };
    def.log_q_moment = [a, b](int k) -> std::optional<double> {
        return 2.0 * k * std::log(b - a) + 2.0 * std::lgamma(k + 1.0) - k * std::numbers::ln2 -
               std::lgamma(2.0 * k + 2.0);
    };
    def.raw_moment = [a, b](int j) -> std::optional<double> {
        return (std::pow(b, j + 1) - std::pow(a, j + 1)) / ((j + 1) * (b - a));
    };
    return Distribution(std::move(def));
}

inline Distribution make_student_t(ParamMap params) {
    ParamReader r("student_t", params);
    const double n = r.get({"n", "dof", "N"});
    r.require(n > 1.0, "degrees of freedom n > 1");
    r.finish();
    DistributionDefinition def;
    def.name = "student_t";
    def.params = {{"n", n}};
    def.support = {Lattice::continuous, -infinity, infinity};
    def.quadratic = {1.0 / (n - 1.0), 0.0, n / (n - 1.0)};
    def.mean = 0.0;
    // Moments of order < n exist.
    def.max_finite_moment = static_cast<int>(std::ceil(n)) - 1;
    def.mgf_finite_near_zero = false;
    const double norm = std::lgamma(0.5 * (n + 1.0)) - std::lgamma(0.5 * n) - 0.5 * std::log(n * std::numbers::pi);
    def.log_weight = [n, norm](double x) { return norm - 0.5 * (n + 1.0) * std::log1p(x * x / n); };
    def.draw = [n](SplitMix64& rng) { return sampling::student_t(rng, n); };
    def.log_q_moment = [n](int k) -> std::optional<double> {
        if (2.0 * k > n - 1.0)
            return std::nullopt;
        double acc = k * std::log(n / (n - 1.0));
        for (int j = 1; j <= k; ++j)
            acc += std::log1p(1.0 / (n - 2.0 * j));
        return acc;
    };
    return Distribution(std::move(def));
}

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace detail

inline std::string Distribution::spec() const {
    std::string out = def_.name;
    char sep = ':';
    for (const auto& [k, v] : def_.params) {
        out += sep;
        out += k + "=" + detail::format_double(v);
        sep = ',';
    }
    return out;
}

inline const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = {"poisson", "binomial",    "negative_binomial", "geometric",
                                                   "discrete_uniform", "normal", "gamma", "exponential",
                                                   "beta",    "uniform",     "student_t"};
    return names;
}

/// Builds one of the built-in families from named parameters.
inline Distribution make_builtin(std::string_view name, const ParamMap& params) {
    if (name == "poisson")
        return detail::make_poisson(params);
    if (name == "binomial")
        return detail::make_binomial(params);
    if (name == "negative_binomial") {
        detail::ParamReader r("negative_binomial", params);
        const double rr = r.get({"r"});
        const double p = r.get({"p"});
        r.require(rr > 0.0, "r > 0");
        r.require(p > 0.0 && p < 1.0, "0 < p < 1");
        r.finish();
        return detail::make_negative_binomial("negative_binomial", rr, p);
    }
    if (name == "geometric") {
        detail::ParamReader r("geometric", params);
        const double p = r.get({"p", "theta"});
        r.require(p > 0.0 && p < 1.0, "0 < p < 1");
        r.finish();
        return detail::make_negative_binomial("geometric", 1.0, p);
    }
    if (name == "discrete_uniform")
        return detail::make_discrete_uniform(params);
    if (name == "normal")
        return detail::make_normal(params);
    if (name == "gamma") {
        detail::ParamReader r("gamma", params);
        const double a = r.get({"a", "shape"});
        const double lambda = r.get({"lambda", "rate"}, 1.0);
        r.require(a > 0.0, "a > 0");
        r.require(lambda > 0.0, "lambda > 0");
        r.finish();
        return detail::make_gamma("gamma", a, lambda);
    }
    if (name == "exponential") {
        detail::ParamReader r("exponential", params);
        const double lambda = r.get({"lambda", "rate"}, 1.0);
        r.require(lambda > 0.0, "lambda > 0");
        r.finish();
        return detail::make_gamma("exponential", 1.0, lambda);
    }
    if (name == "beta")
        return detail::make_beta(params);
    if (name == "uniform")
        return detail::make_uniform(params);
    if (name == "student_t")
        return detail::make_student_t(params);
    throw Error(ErrorKind::unknown_name, "no built-in distribution named '" + std::string(name) + "'");
}

/// Locale-independent decimal parse of a whole token.
inline double parse_number(std::string_view text, std::string_view what) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+')
        ++first;
    auto res = std::from_chars(first, last, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != last)
        throw Error(ErrorKind::usage, "expected a number for " + std::string(what) + ", got '" + std::string(text) + "'");
    return v;
}

/// Parses "key=value[,key=value...]".
inline ParamMap parse_params(std::string_view text, std::string_view grammar) {
    ParamMap out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = text.substr(0, comma);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0)
            throw Error(ErrorKind::usage, "expected key=value in '" + std::string(item) + "' (grammar: " +
                                              std::string(grammar) + ")");
        const std::string key(item.substr(0, eq));
        if (out.count(key))
            throw Error(ErrorKind::usage, "duplicate key '" + key + "'");
        out[key] = parse_number(item.substr(eq + 1), key);
        if (comma == std::string_view::npos)
            break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

/// Parses the grammar `name:key=value[,key=value...]`, e.g. "poisson:lambda=2".
inline Distribution parse_distribution(std::string_view spec) {
    constexpr std::string_view grammar = "name:key=value[,key=value...]";
    const auto colon = spec.find(':');
    const auto name = spec.substr(0, colon);
    if (name.empty())
        throw Error(ErrorKind::usage, "empty distribution name (grammar: " + std::string(grammar) + ")");
    ParamMap params;
    if (colon != std::string_view::npos)
        params = parse_params(spec.substr(colon + 1), grammar);
    return make_builtin(name, params);
}

/// Ascending product q^[k](x) = q(x) q(x+1) ... q(x+k-1).
template <class T>
Poly<T> q_ascending_product(const BasicQuadratic<T>& q, int k) {
    Poly<T> out = Poly<T>::constant(T(1));
    const auto base = q.poly();
    for (int i = 0; i < k; ++i)
        out = out * poly_shift(base, T(i));
    return out;
}

template <class T>
Poly<T> q_power(const BasicQuadratic<T>& q, int k) {
    Poly<T> out = Poly<T>::constant(T(1));
    const auto base = q.poly();
    for (int i = 0; i < k; ++i)
        out = out * base;
    return out;
}

inline Poly<double> q_ascending_product(const Distribution& d, int k) {
    if (!d.is_discrete())
        throw Error(ErrorKind::discrete_only, "q^[k] is defined for the discrete family only");
    if (d.exact())
        return q_ascending_product(d.exact()->quadratic, k).cast<double>();
    return q_ascending_product(d.quadratic(), k);
}

inline Poly<double> q_power(const Distribution& d, int k) {
    if (d.is_discrete())
        throw Error(ErrorKind::continuous_only, "q^k is used for the continuous family only");
    return q_power(d.quadratic(), k);
}

/// The weight polynomial of order k for either family: q^[k] or q^k.
inline Poly<double> q_weight_poly(const Distribution& d, int k) {
    return d.is_discrete() ? q_ascending_product(d, k) : q_power(d, k);
}

/// Inputs for a distribution outside the built-in list.
struct CustomDefinition {
    std::string name = "custom";
    Support support;
    Quadratic quadratic;
    double mean = 0.0;
    std::function<double(double)> log_weight;
    std::optional<int> max_finite_moment;
    bool mgf_finite_near_zero = false;
    std::function<double(SplitMix64&)> draw;
};

namespace detail {

inline std::vector<double> validation_grid(const Distribution& d, int count) {
    const auto& s = d.support();
    const double sd = d.scale();
    double lo = std::max(s.lower, d.mean() - 4.0 * sd);
    double hi = std::min(s.upper, d.mean() + 4.0 * sd);
    std::vector<double> out;
    if (s.is_discrete()) {
        for (double x = std::ceil(lo); x <= hi && static_cast<int>(out.size()) < 4 * count; x += 1.0)
            out.push_back(x);
        return out;
    }
    if (std::isfinite(s.lower))
        lo = std::max(lo, s.lower + 1e-3 * (hi - s.lower));
    if (std::isfinite(s.upper))
        hi = std::min(hi, s.upper - 1e-3 * (s.upper - lo));
    for (int i = 0; i < count; ++i)
        out.push_back(lo + (hi - lo) * (i + 0.5) / count);
    return out;
}

} // namespace detail

/// Admits a distribution that is not built in, after checking numerically
/// that it really belongs to the family. Failure is a hard error.
inline Distribution make_custom(CustomDefinition in) {
    const auto& s = in.support;
    auto fail = [&](const std::string& why) { throw Error(ErrorKind::validation_failed, in.name + ": " + why); };
    if (!(s.lower < s.upper))
        fail("support must satisfy lower < upper");
    if (!in.log_weight)
        fail("a weight function is required");
    if (s.is_discrete()) {
        if (!std::isfinite(s.lower))
            fail("discrete support needs a finite lower end");
        if (s.lower != std::floor(s.lower) || (std::isfinite(s.upper) && s.upper != std::floor(s.upper)))
            fail("discrete support endpoints must be integers");
    }
    if (in.max_finite_moment && in.mgf_finite_near_zero)
        fail("a finite moment generating function implies moments of every order");

    DistributionDefinition def;
    def.name = in.name;
    def.support = in.support;
    def.quadratic = in.quadratic;
    def.mean = in.mean;
    def.log_weight = in.log_weight;
    def.max_finite_moment = in.max_finite_moment;
    def.mgf_finite_near_zero = in.mgf_finite_near_zero;
    def.draw = in.draw;
    Distribution d(std::move(def));
    const double mu = d.mean();
    const auto& q = d.quadratic();

    auto expect_raw = [&](auto&& h) {
        if (s.is_discrete())
            return sum_lattice([&](double x) { const double w = d.weight(x); return w == 0.0 ? 0.0 : h(x) * w; },
                               s.lower, s.upper, mu)
                .value;
        QuadratureOptions qo;
        qo.rel_tol = 1e-12;
        return integrate([&](double x) { const double w = d.weight(x); return w == 0.0 ? 0.0 : h(x) * w; },
                         s.lower, s.upper, qo, mu, d.scale())
            .value;
    };

    const double mass = expect_raw([](double) { return 1.0; });
    if (std::abs(mass - 1.0) > 1e-10)
        fail("weights sum to " + detail::format_double(mass) + ", not 1");
    const double spread = expect_raw([&](double x) { return std::abs(x - mu); });
    const double mean_err = expect_raw([&](double x) { return x - mu; });
    if (std::abs(mean_err) > 1e-9 * (1.0 + std::abs(mu) + spread))
        fail("mean does not match the weight function");

    const auto grid = detail::validation_grid(d, 25);
    for (double x : grid) {
        if (!(q(x) > 0.0) && d.weight(x) > 0.0 && !(s.is_discrete() && x == s.upper))
            fail("q must be positive on the interior of the support, fails at x = " + detail::format_double(x));
    }
    if (s.is_discrete()) {
        CompensatedSum cum;
        const double last = grid.empty() ? s.lower : grid.back();
        for (double x = s.lower; x <= last; x += 1.0) {
            cum.add((mu - x) * d.weight(x));
            const double rhs = q(x) * d.weight(x);
            if (std::abs(cum.value() - rhs) > 1e-9 * std::abs(rhs) + 1e-12 * spread)
                fail("sum_{j<=x} (mu - j) p(j) != q(x) p(x) at x = " + detail::format_double(x));
        }
    } else {
        QuadratureOptions qo;
        qo.rel_tol = 1e-12;
        for (double x : grid) {
            const double lhs = integrate([&](double t) { return (mu - t) * d.weight(t); }, s.lower, x, qo, mu, d.scale()).value;
            const double rhs = q(x) * d.weight(x);
            if (std::abs(lhs - rhs) > 1e-8 * std::abs(rhs) + 1e-10 * spread)
                fail("int_r^x (mu - t) f(t) dt != q(x) f(x) at x = " + detail::format_double(x));
        }
    }
    return d;
}

} // namespace steinpearson
