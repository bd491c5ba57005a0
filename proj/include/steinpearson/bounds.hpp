#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "expectation.hpp"
#include "function_spec.hpp"
#include "moments.hpp"
#include "parallel.hpp"
#include "pearson.hpp"
#include "rodrigues.hpp"
#include "series.hpp"
#include "stein.hpp"

namespace steinpearson {

struct TermRecord {
    int k = 0;
    double numerator = 0.0;
    double numerator2 = 0.0; ///< second function's numerator (covariance series)
    double sq_norm = 0.0;
    double log_sq_norm = 0.0;
    double term = 0.0;
    bool zero_norm = false;
};

struct BoundOptions {
    SteinOptions stein;
    bool compute_oracle = true;
};

struct BoundReport {
    int order = 0;
    std::vector<TermRecord> terms;
    std::vector<double> partial_sums;
    double lower_bound = 0.0;
    std::optional<double> variance_oracle;
    std::optional<double> gap;
    bool equality_expected = false;
};

namespace detail {

/// Builds a term from normalised coefficients c_i = numerator_i / sqrt(norm).
inline TermRecord make_term_scaled(int k, double c1, double c2, double log_norm) {
    TermRecord t;
    t.k = k;
    t.log_sq_norm = log_norm;
    t.zero_norm = log_norm == -infinity;
    if (t.zero_norm) {
        t.numerator = c1;
        t.numerator2 = c2;
        return t;
    }
    const double half = std::exp(0.5 * log_norm);
    t.sq_norm = std::exp(log_norm);
    t.numerator = c1 * half;
    t.numerator2 = c2 * half;
    t.term = c1 * c2;
    return t;
}

/// One term of the series: numerators are computed already divided by the
/// root norm, so factorial growth in k cannot overflow.
inline TermRecord series_term(const Distribution& d, const FunctionSpec& g1, const FunctionSpec* g2, int k,
                              const SteinOptions& opts, std::optional<double> known_log_norm = std::nullopt) {
    const double lg = known_log_norm ? *known_log_norm : log_squared_norm(d, k, opts.expect);
    const double shift = lg == -infinity ? 0.0 : -0.5 * lg;
    const double c1 = stein_numerator(d, g1, k, opts, shift);
    const double c2 = g2 ? stein_numerator(d, *g2, k, opts, shift) : c1;
    return make_term_scaled(k, c1, c2, lg);
}

/// Var g(X) when it exists and converges; nullopt otherwise.
inline std::optional<double> variance_oracle(const Distribution& d, const FunctionSpec& g, const ExpectOptions& opts) {
    if (auto deg = g.degree(); deg && !d.has_moments(2 * std::max(0, *deg)))
        return std::nullopt;
    try {
        const double v = variance_of(d, [&](double x) { return g(x); }, opts);
        if (!std::isfinite(v))
            return std::nullopt;
        return v;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::nonconvergent)
            return std::nullopt;
        throw;
    }
}

inline std::optional<double> covariance_oracle(const Distribution& d, const FunctionSpec& g1, const FunctionSpec& g2,
                                               const ExpectOptions& opts) {
    const auto d1 = g1.degree();
    const auto d2 = g2.degree();
    if (d1 && d2 && !d.has_moments(std::max(0, *d1) + std::max(0, *d2)))
        return std::nullopt;
    try {
        const double m1 = expect(d, [&](double x) { return g1(x); }, opts);
        const double m2 = expect(d, [&](double x) { return g2(x); }, opts);
        return expect(d, [&](double x) { return (g1(x) - m1) * (g2(x) - m2); }, opts);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::nonconvergent)
            return std::nullopt;
        throw;
    }
}

inline std::vector<TermRecord> bound_terms(const Distribution& d, const FunctionSpec& g, int n,
                                           const std::vector<double>* log_norms, const SteinOptions& opts) {
    std::vector<TermRecord> terms(static_cast<std::size_t>(n));
    parallel_for(terms.size(), [&](std::size_t i) {
        const int k = static_cast<int>(i) + 1;
        std::optional<double> lg;
        if (log_norms)
            lg = (*log_norms)[static_cast<std::size_t>(k)];
        terms[i] = series_term(d, g, nullptr, k, opts, lg);
    });
    return terms;
}

inline BoundReport assemble_bound(const Distribution& d, const FunctionSpec& g, int n, std::vector<TermRecord> terms,
                                  const BoundOptions& opts) {
    BoundReport r;
    r.order = n;
    r.terms = std::move(terms);
    double acc = 0.0;
    for (const auto& t : r.terms) {
        acc += t.term;
        r.partial_sums.push_back(acc);
    }
    r.lower_bound = acc;
    r.equality_expected = g.is_polynomial() && g.poly().degree() <= n;
    if (opts.compute_oracle) {
        r.variance_oracle = variance_oracle(d, g, opts.stein.expect);
        if (r.variance_oracle)
            r.gap = *r.variance_oracle - r.lower_bound;
    }
    return r;
}

} // namespace detail

/// Var g(X) >= sum_{k=1}^n E^2[q-weight_k g_k] / E[P_k^2].
inline BoundReport variance_lower_bound(const Distribution& d, const FunctionSpec& g, int n,
                                        const BoundOptions& opts = {}) {
    if (n < 1)
        throw Error(ErrorKind::invalid_parameter, "order must be at least 1");
    require_moments(d, 2 * n, "a variance bound of order " + std::to_string(n));
    auto terms = detail::bound_terms(d, g, n, nullptr, opts.stein);
    return detail::assemble_bound(d, g, n, std::move(terms), opts);
}

inline BoundReport variance_lower_bound(const RodriguesSystem& sys, const FunctionSpec& g, int n,
                                        const BoundOptions& opts = {}) {
    if (n < 1 || n > sys.order)
        throw Error(ErrorKind::invalid_parameter, "order must lie in [1, system order]");
    auto terms = detail::bound_terms(sys.dist, g, n, &sys.log_sq_norms, opts.stein);
    return detail::assemble_bound(sys.dist, g, n, std::move(terms), opts);
}

struct PoincareReport {
    int order = 0;
    std::vector<double> moments;      ///< E[q^[k] (Δ^k g)^2], k = 1..n
    std::vector<double> coefficients; ///< (-1)^{k+1} / (k! prod_{j<k} (1 - j delta))
    std::vector<double> partial_sums; ///< S_1 .. S_n
    std::optional<double> variance_oracle;
    std::vector<double> signed_gaps;  ///< (-1)^n (Var - S_n)
    std::vector<bool> sign_ok;        ///< signed gap >= -1e-7 (1 + Var)
};

/// The alternating comparison sums S_n around Var g(X), discrete family.
inline PoincareReport poincare_comparison(const Distribution& d, const FunctionSpec& g, int n,
                                          const BoundOptions& opts = {}) {
    if (!d.is_discrete())
        throw Error(ErrorKind::discrete_only, "the alternating comparison is stated for the discrete family");
    if (n < 1)
        throw Error(ErrorKind::invalid_parameter, "order must be at least 1");
    require_moments(d, 2 * n, "a comparison of order " + std::to_string(n));
    PoincareReport r;
    r.order = n;
    r.moments.resize(static_cast<std::size_t>(n));
    parallel_for(r.moments.size(), [&](std::size_t i) {
        const int k = static_cast<int>(i) + 1;
        detail::check_order(d, g, k);
        r.moments[i] = detail::checked_expectation(
            d,
            [&](double x) {
                const double lw = d.log_weight(x);
                if (lw == -infinity)
                    return 0.0;
                const auto [qs, ql] = log_q_weight(d, k, x);
                const auto gk = g.eval_k(d.lattice(), k, x);
                if (qs == 0.0 || gk.sign == 0.0)
                    return 0.0;
                return qs * std::exp(lw + ql + 2.0 * gk.log_abs);
            },
            opts.stein, "E[q^[" + std::to_string(k) + "] (Δ^k g)^2]");
    });
    const double delta = d.quadratic().delta;
    double acc = 0.0;
    for (int k = 1; k <= n; ++k) {
        double denom = std::exp(std::lgamma(k + 1.0));
        for (int j = 0; j < k; ++j)
            denom *= 1.0 - j * delta;
        const double c = (k % 2 == 1 ? 1.0 : -1.0) / denom;
        r.coefficients.push_back(c);
        acc += c * r.moments[static_cast<std::size_t>(k - 1)];
        r.partial_sums.push_back(acc);
    }
    if (opts.compute_oracle)
        r.variance_oracle = detail::variance_oracle(d, g, opts.stein.expect);
    if (r.variance_oracle) {
        const double var = *r.variance_oracle;
        for (int k = 1; k <= n; ++k) {
            const double gap = (k % 2 == 0 ? 1.0 : -1.0) * (var - r.partial_sums[static_cast<std::size_t>(k - 1)]);
            r.signed_gaps.push_back(gap);
            r.sign_ok.push_back(gap >= -1e-7 * (1.0 + std::abs(var)));
        }
    }
    return r;
}

enum class Applicability { parseval_guaranteed, bessel_only };

inline const char* to_string(Applicability a) {
    return a == Applicability::parseval_guaranteed ? "parseval-guaranteed" : "bessel-only";
}

struct SeriesReport {
    std::vector<TermRecord> terms;
    std::vector<double> partial_sums;
    bool converged = false;
    bool accelerated = false;
    double value = 0.0;
    int truncation_k = 0;
    Applicability applicability = Applicability::bessel_only;
    std::string stop_reason;
    std::optional<int> moment_ceiling;
    std::optional<double> oracle; ///< Var g or Cov[g1, g2] by direct expectation
};

namespace detail {

inline Applicability applicability_of(const Distribution& d) {
    const auto& s = d.support();
    return d.mgf_finite_near_zero() || s.bounded() ? Applicability::parseval_guaranteed : Applicability::bessel_only;
}

/// Shared driver for the variance (g2 == nullptr) and covariance series.
inline SeriesReport run_series(const Distribution& d, const FunctionSpec& g1, const FunctionSpec* g2,
                               const SeriesOptions& sopts, const SteinOptions& opts, bool oracle) {
    SeriesReport r;
    r.applicability = applicability_of(d);
    const bool variance = g2 == nullptr;
    SeriesAccumulator acc(variance ? SeriesAccumulator::Mode::variance : SeriesAccumulator::Mode::signed_terms, sopts);

    std::optional<int> last_nonzero;
    if (g1.degree())
        last_nonzero = std::max(0, *g1.degree());
    if (g2 && g2->degree())
        last_nonzero = std::min(last_nonzero.value_or(*g2->degree()), std::max(0, *g2->degree()));
    std::optional<int> support_points;
    if (d.is_discrete() && d.support().bounded())
        support_points = static_cast<int>(d.support().upper - d.support().lower) + 1;
    if (const auto m = d.max_finite_moment())
        r.moment_ceiling = *m / 2;

    auto compute = [&](int k) { return series_term(d, g1, g2, k, opts); };

    const int batch = static_cast<int>(std::max(1u, thread_count()));
    int k = 1;
    while (true) {
        if (r.moment_ceiling && k > *r.moment_ceiling) {
            r.stop_reason = "moment-ceiling";
            break;
        }
        if (last_nonzero && k > *last_nonzero) {
            r.converged = true;
            r.stop_reason = "exact-termination";
            break;
        }
        if (support_points && k >= *support_points) {
            r.converged = true;
            r.stop_reason = "finite-support";
            break;
        }
        if (k > sopts.max_k)
            throw Error(ErrorKind::nonconvergent,
                        "series stopping rule not met by k = " + std::to_string(sopts.max_k));

        int hi = k + batch - 1;
        if (r.moment_ceiling)
            hi = std::min(hi, *r.moment_ceiling);
        if (last_nonzero)
            hi = std::min(hi, *last_nonzero);
        if (support_points)
            hi = std::min(hi, *support_points - 1);
        hi = std::min(hi, sopts.max_k);
        const std::size_t count = static_cast<std::size_t>(hi - k + 1);
        std::vector<TermRecord> block(count);
        const int base = k;
        const auto errors = parallel_for_collect(count, [&](std::size_t i) { block[i] = compute(base + static_cast<int>(i)); });

        bool done = false;
        for (std::size_t i = 0; i < count && !done; ++i) {
            if (errors[i])
                std::rethrow_exception(errors[i]);
            acc.add(block[i].term);
            r.terms.push_back(block[i]);
            r.partial_sums.push_back(acc.partial_sum());
            if (acc.converged()) {
                done = true;
                r.converged = true;
                r.stop_reason = acc.accelerated() ? "levin-u" : "small-terms";
            }
            ++k;
        }
        if (done)
            break;
    }
    r.accelerated = acc.accelerated();
    r.value = acc.value();
    r.truncation_k = r.terms.empty() ? 0 : r.terms.back().k;
    if (oracle)
        r.oracle = variance ? variance_oracle(d, g1, opts.expect) : covariance_oracle(d, g1, *g2, opts.expect);
    return r;
}

} // namespace detail

/// Var g(X) = sum_k c_k^2 where the polynomials are dense; a Bessel lower
/// bound otherwise.
inline SeriesReport parseval_variance(const Distribution& d, const FunctionSpec& g, const SeriesOptions& sopts = {},
                                      const BoundOptions& opts = {}) {
    return detail::run_series(d, g, nullptr, sopts, opts.stein, opts.compute_oracle);
}

/// Cov[g1(X), g2(X)] = sum_k alpha_k beta_k.
inline SeriesReport parseval_covariance(const Distribution& d, const FunctionSpec& g1, const FunctionSpec& g2,
                                        const SeriesOptions& sopts = {}, const BoundOptions& opts = {}) {
    return detail::run_series(d, g1, &g2, sopts, opts.stein, opts.compute_oracle);
}

} // namespace steinpearson
