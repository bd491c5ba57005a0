#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"
#include "pearson.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "summation.hpp"

namespace steinpearson {

struct ExpectOptions {
    double abs_tol = 1e-12;            ///< lattice tail bound, relative to sum |terms|
    double rel_tol = 1e-10;            ///< quadrature
    std::size_t max_terms = 10'000'000;
    std::size_t max_panels = 100'000;
};

struct Expectation {
    double value = 0.0;
    double abs_value = 0.0; ///< E|h| as seen by the engine; a cancellation scale
    std::size_t evaluations = 0;
};

/// E[h(X)]. Discrete: lattice sum outward from the integer nearest the mean.
/// Continuous: adaptive Gauss-Kronrod over the support. h is never called
/// where the weight vanishes or underflows.
template <class H>
Expectation expect_detailed(const Distribution& d, H&& h, const ExpectOptions& opts = {}) {
    auto integrand = [&](double x) {
        const double lw = d.log_weight(x);
        const double w = std::exp(lw);
        if (w == 0.0)
            return 0.0;
        return h(x) * w;
    };
    const auto& s = d.support();
    Expectation out;
    if (s.is_discrete()) {
        SummationOptions so;
        so.abs_tol = opts.abs_tol;
        so.max_terms = opts.max_terms;
        const auto r = sum_lattice(integrand, s.lower, s.upper, d.mean(), so);
        out.value = r.value;
        out.abs_value = r.abs_value;
        out.evaluations = r.terms;
    } else {
        QuadratureOptions qo;
        qo.rel_tol = opts.rel_tol;
        qo.max_panels = opts.max_panels;
        const auto r = integrate(integrand, s.lower, s.upper, qo, d.mean(), d.scale());
        out.value = r.value;
        out.abs_value = r.abs_value;
        out.evaluations = r.evaluations;
    }
    return out;
}

template <class H>
double expect(const Distribution& d, H&& h, const ExpectOptions& opts = {}) {
    return expect_detailed(d, std::forward<H>(h), opts).value;
}

/// Var h(X) as E[(h - E h)^2].
template <class H>
double variance_of(const Distribution& d, H&& h, const ExpectOptions& opts = {}) {
    const double m = expect(d, h, opts);
    return expect(d, [&](double x) { const double c = h(x) - m; return c * c; }, opts);
}

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Sample mean of h over n seeded draws, with its standard error.
template <class H>
MonteCarloEstimate monte_carlo_oracle(const Distribution& d, H&& h, std::uint64_t seed, std::size_t n) {
    if (n < 2)
        throw Error(ErrorKind::invalid_parameter, "monte carlo needs at least 2 samples");
    SplitMix64 rng(seed);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double v = h(d.draw(rng));
        const double delta = v - mean;
        mean += delta / static_cast<double>(i);
        m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

/// Sample variance of h over n seeded draws. The standard error uses the
/// fourth central moment, sqrt((m4 - m2^2) / n).
template <class H>
MonteCarloEstimate monte_carlo_variance(const Distribution& d, H&& h, std::uint64_t seed, std::size_t n) {
    if (n < 2)
        throw Error(ErrorKind::invalid_parameter, "monte carlo needs at least 2 samples");
    SplitMix64 rng(seed);
    std::vector<double> v(n);
    for (auto& x : v)
        x = h(d.draw(rng));
    CompensatedSum s;
    for (double x : v)
        s.add(x);
    const double mean = s.value() / static_cast<double>(n);
    CompensatedSum s2;
    CompensatedSum s4;
    for (double x : v) {
        const double c = (x - mean) * (x - mean);
        s2.add(c);
        s4.add(c * c);
    }
    const double m2 = s2.value() / static_cast<double>(n);
    const double m4 = s4.value() / static_cast<double>(n);
    const double unbiased = s2.value() / static_cast<double>(n - 1);
    return {unbiased, std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(n)), n};
}

} // namespace steinpearson
