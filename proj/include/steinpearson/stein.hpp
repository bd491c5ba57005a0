#pragma once

#include <cmath>
#include <string>

#include "error.hpp"
#include "expectation.hpp"
#include "function_spec.hpp"
#include "moments.hpp"
#include "pearson.hpp"
#include "rodrigues.hpp"

namespace steinpearson {

struct SteinOptions {
    ExpectOptions expect;
    bool check_hypothesis = true;
};

namespace detail {

/// w(x) q-weight_k(x) g_k(x) e^{log_scale}, assembled in log space.
inline double stein_integrand(const Distribution& d, const FunctionSpec& g, int k, double x, double log_scale = 0.0) {
    const double lw = d.log_weight(x);
    if (lw == -infinity)
        return 0.0;
    const auto [qs, ql] = log_q_weight(d, k, x);
    if (qs == 0.0)
        return 0.0;
    const auto gk = g.eval_k(d.lattice(), k, x);
    if (gk.sign == 0.0)
        return 0.0;
    return qs * gk.sign * std::exp(lw + ql + gk.log_abs + log_scale);
}

template <class H>
double expect_raw(const Distribution& d, H&& integrand, const ExpectOptions& opts) {
    const auto& s = d.support();
    if (s.is_discrete()) {
        SummationOptions so;
        so.abs_tol = opts.abs_tol;
        so.max_terms = opts.max_terms;
        return sum_lattice(integrand, s.lower, s.upper, d.mean(), so).value;
    }
    QuadratureOptions qo;
    qo.rel_tol = opts.rel_tol;
    qo.max_panels = opts.max_panels;
    return integrate(integrand, s.lower, s.upper, qo, d.mean(), d.scale()).value;
}

/// Runs the absolute-value expectation first; failure there means the
/// identity's integrability hypothesis is not met.
template <class H>
double checked_expectation(const Distribution& d, H&& integrand, const SteinOptions& opts, const std::string& what) {
    if (opts.check_hypothesis) {
        double abs_value = 0.0;
        try {
            abs_value = expect_raw(d, [&](double x) { return std::abs(integrand(x)); }, opts.expect);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::nonconvergent)
                throw Error(ErrorKind::nonconvergent_hypothesis, what + ": " + e.what());
            throw;
        }
        if (!std::isfinite(abs_value))
            throw Error(ErrorKind::nonconvergent_hypothesis, what + ": absolute expectation is not finite");
    }
    return expect_raw(d, integrand, opts.expect);
}

inline void check_order(const Distribution& d, const FunctionSpec& g, int k) {
    if (k < 0)
        throw Error(ErrorKind::invalid_index, "k must be nonnegative");
    if (!g.supports(d.lattice(), k))
        throw Error(ErrorKind::order_exceeded, g.label() + " is not trusted to order " + std::to_string(k));
    require_moments(d, 2 * k, "order " + std::to_string(k));
    if (const auto deg = g.degree(); deg && !d.has_moments(k + std::max(0, *deg)))
        throw Error(ErrorKind::nonconvergent_hypothesis, "E[q-weight * g_" + std::to_string(k) + "] needs moments of order " +
                                                             std::to_string(k + *deg));
}

} // namespace detail

/// E[q^[k](X) Δ^k g(X)] (discrete) or E[q^k(X) g^(k)(X)] (continuous),
/// multiplied by e^{log_scale} inside the expectation so that large orders
/// can be normalised without overflow.
inline double stein_numerator(const Distribution& d, const FunctionSpec& g, int k, const SteinOptions& opts = {},
                              double log_scale = 0.0) {
    detail::check_order(d, g, k);
    return detail::checked_expectation(
        d, [&](double x) { return detail::stein_integrand(d, g, k, x, log_scale); }, opts,
        "E[q-weight * g_" + std::to_string(k) + "]");
}

inline double stein_numerator(const RodriguesSystem& sys, const FunctionSpec& g, int k, const SteinOptions& opts = {}) {
    return stein_numerator(sys.dist, g, k, opts);
}

/// E[P_k(X) g(X)] using the system's polynomial.
inline double stein_projection(const RodriguesSystem& sys, const FunctionSpec& g, int k, const SteinOptions& opts = {}) {
    const auto& d = sys.dist;
    if (k < 0 || k > sys.order)
        throw Error(ErrorKind::invalid_index, "k must lie in [0, order]");
    detail::check_order(d, g, k);
    const auto& pk = sys.polys[static_cast<std::size_t>(k)];
    return detail::checked_expectation(
        d,
        [&](double x) {
            const double w = std::exp(d.log_weight(x));
            if (w == 0.0)
                return 0.0;
            return pk.eval(x) * g(x) * w;
        },
        opts, "E[P_" + std::to_string(k) + " g]");
}

struct FourierCoefficient {
    int k = 0;
    double numerator = 0.0;
    double sq_norm = 0.0;
    double value = 0.0; ///< numerator / sqrt(sq_norm), 0 when the norm vanishes
};

inline FourierCoefficient fourier_coefficient(const RodriguesSystem& sys, const FunctionSpec& g, int k,
                                              const SteinOptions& opts = {}) {
    if (k < 0 || k > sys.order)
        throw Error(ErrorKind::invalid_index, "k must lie in [0, order]");
    FourierCoefficient c;
    c.k = k;
    c.numerator = stein_numerator(sys.dist, g, k, opts);
    c.sq_norm = sys.sq_norms[static_cast<std::size_t>(k)];
    const double lg = sys.log_sq_norms[static_cast<std::size_t>(k)];
    c.value = lg == -infinity ? 0.0 : c.numerator * std::exp(-0.5 * lg);
    return c;
}

} // namespace steinpearson
