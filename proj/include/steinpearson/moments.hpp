#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "error.hpp"
#include "expectation.hpp"
#include "pearson.hpp"
#include "polynomial.hpp"

namespace steinpearson {

inline void require_moments(const Distribution& d, int order, const std::string& what) {
    if (!d.has_moments(order))
        throw Error(ErrorKind::insufficient_moments,
                    what + " needs " + std::to_string(order) + " finite moments but " + d.name() + " has " +
                        std::to_string(*d.max_finite_moment()));
}

/// E[p(X)], from closed-form raw moments when the family has them.
inline double moment_of_weighted_poly(const Distribution& d, const Poly<double>& p) {
    if (!d.has_moments(std::max(0, p.degree())))
        throw Error(ErrorKind::moment_does_not_exist,
                    "E[X^" + std::to_string(p.degree()) + "] does not exist for " + d.name());
    if (p.is_zero())
        return 0.0;
    CompensatedSum acc;
    bool closed = true;
    for (int j = 0; j <= p.degree() && closed; ++j) {
        const auto m = d.closed_form_raw_moment(j);
        if (!m)
            closed = false;
        else
            acc.add(p.coeff(static_cast<std::size_t>(j)) * *m);
    }
    if (closed)
        return acc.value();
    return expect(d, [&](double x) { return p.eval(x); });
}

/// q^[k](x) (discrete) or q(x)^k (continuous), evaluated as a product of
/// factors rather than from expanded coefficients.
inline double q_weight(const Distribution& d, int k, double x) {
    const auto& q = d.quadratic();
    double acc = 1.0;
    if (d.is_discrete()) {
        for (int i = 0; i < k; ++i)
            acc *= q(x + i);
    } else {
        acc = std::pow(q(x), k);
    }
    return acc;
}

/// Sign and log-magnitude of q^[k](x) or q(x)^k.
inline std::pair<double, double> log_q_weight(const Distribution& d, int k, double x) {
    const auto& q = d.quadratic();
    double sign = 1.0;
    double lg = 0.0;
    for (int i = 0; i < k; ++i) {
        const double v = d.is_discrete() ? q(x + i) : q(x);
        if (v == 0.0)
            return {0.0, -infinity};
        if (v < 0.0)
            sign = -sign;
        lg += std::log(std::abs(v));
    }
    return {sign, lg};
}

/// log E[q^[k](X)] or log E[q^k(X)]; -inf when the expectation is zero.
inline double log_expected_q_weight(const Distribution& d, int k, const ExpectOptions& opts = {}) {
    require_moments(d, 2 * k, "E[q-weight of order " + std::to_string(k) + "]");
    if (k == 0)
        return 0.0;
    if (auto c = d.closed_form_log_q_moment(k))
        return *c;
    const double v = expect(d, [&](double x) { return q_weight(d, k, x); }, opts);
    if (!(v > 0.0))
        return -infinity;
    return std::log(v);
}

inline double expected_q_weight(const Distribution& d, int k, const ExpectOptions& opts = {}) {
    const double lg = log_expected_q_weight(d, k, opts);
    return lg == -infinity ? 0.0 : std::exp(lg);
}

/// Engine value of E[q^[k]] / E[q^k], ignoring any closed form.
inline double expected_q_weight_engine(const Distribution& d, int k, const ExpectOptions& opts = {}) {
    require_moments(d, 2 * k, "E[q-weight of order " + std::to_string(k) + "]");
    return expect(d, [&](double x) { return q_weight(d, k, x); }, opts);
}

} // namespace steinpearson
