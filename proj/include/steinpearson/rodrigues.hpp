#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "moments.hpp"
#include "parallel.hpp"
#include "pearson.hpp"
#include "polynomial.hpp"

namespace steinpearson {

/// Rows Q_{0,n} .. Q_{n,n} of the order-n recurrence.
template <PolyScalar T>
struct RecurrenceTable {
    int n = 0;
    std::vector<Poly<T>> rows;
};

template <PolyScalar T>
RecurrenceTable<T> recurrence_table(const BasicQuadratic<T>& q, const T& mu, Lattice lattice, int n) {
    RecurrenceTable<T> out;
    out.n = n;
    out.rows.reserve(static_cast<std::size_t>(n) + 1);
    out.rows.push_back(Poly<T>::constant(T(1)));
    const auto qp = q.poly();
    const auto x = Poly<T>::monomial(1);
    for (int i = 0; i < n; ++i) {
        const auto& cur = out.rows.back();
        Poly<T> next;
        if (lattice == Lattice::integer) {
            // P_{i,n}(x) = mu - (x - n + i + 1) + q(x) - q(x - n + i + 1)
            const T s(-n + i + 1);
            const auto p_in = Poly<T>::constant(mu - s) - x + qp - poly_shift(qp, s);
            next = p_in * cur + qp * poly_forward_difference(cur);
        } else {
            // (mu - x + (n - i - 1)(2 delta x + beta)) Q + q Q'
            const T c(n - i - 1);
            const auto lin = Poly<T>{mu + c * q.beta, T(-1) + c * T(2) * q.delta};
            next = lin * cur + qp * poly_derivative(cur);
        }
        out.rows.push_back(std::move(next));
    }
    return out;
}

/// prod_{j=k-1}^{2k-2} (1 - j delta); 1 for k = 0.
template <class T>
T leading_coefficient(const T& delta, int k) {
    T acc(1);
    for (int j = k - 1; j <= 2 * k - 2; ++j)
        acc *= T(1) - T(j) * delta;
    return acc;
}

/// P_k built from the row-k recurrence, P_k = (-1)^k Q_{k,k}.
template <PolyScalar T>
Poly<T> rodrigues_polynomial(const BasicQuadratic<T>& q, const T& mu, Lattice lattice, int k) {
    auto table = recurrence_table(q, mu, lattice, k);
    auto p = std::move(table.rows.back());
    if (k % 2 == 1)
        p *= T(-1);
    return p;
}

/// log of the squared norm E[P_k^2] = k! E[q-weight_k] lead_k; -inf when the
/// norm vanishes (finite support or a vanishing leading coefficient).
inline double log_squared_norm(const Distribution& d, int k, const ExpectOptions& opts = {}) {
    const double lead = leading_coefficient(d.quadratic().delta, k);
    if (!(lead > 0.0))
        return -infinity;
    const double le = log_expected_q_weight(d, k, opts);
    if (le == -infinity)
        return -infinity;
    return std::lgamma(k + 1.0) + le + std::log(lead);
}

inline double squared_norm(const Distribution& d, int k, const ExpectOptions& opts = {}) {
    const double lg = log_squared_norm(d, k, opts);
    return lg == -infinity ? 0.0 : std::exp(lg);
}

/// The orthogonal polynomials P_0 .. P_n of a distribution.
struct RodriguesSystem {
    Distribution dist;
    int order = 0;
    std::vector<Poly<double>> polys;
    std::vector<double> leads;
    std::vector<double> sq_norms;
    std::vector<double> log_sq_norms;
    std::vector<bool> degenerate; ///< lead_k <= 0 at this k
    bool degenerate_order = false;
    bool exact = false; ///< built in rational arithmetic
};

inline RodriguesSystem build_system(const Distribution& d, int n, const ExpectOptions& opts = {}) {
    if (n < 0)
        throw Error(ErrorKind::invalid_parameter, "order must be nonnegative");
    require_moments(d, 2 * n, "an orthogonal system of order " + std::to_string(n));
    RodriguesSystem sys{d};
    sys.order = n;
    const std::size_t count = static_cast<std::size_t>(n) + 1;
    sys.polys.resize(count);
    sys.leads.resize(count);
    sys.sq_norms.resize(count);
    sys.log_sq_norms.resize(count);
    sys.degenerate.assign(count, false);
    sys.exact = d.exact().has_value();

    parallel_for(count, [&](std::size_t i) {
        const int k = static_cast<int>(i);
        if (const auto& ex = d.exact()) {
            sys.polys[i] = rodrigues_polynomial(ex->quadratic, ex->mean, d.lattice(), k).cast<double>();
            sys.leads[i] = leading_coefficient(ex->quadratic.delta, k).convert_to<double>();
        } else {
            const auto& q = d.quadratic();
            sys.polys[i] = rodrigues_polynomial(q, d.mean(), d.lattice(), k);
            sys.leads[i] = leading_coefficient(q.delta, k);
        }
        sys.log_sq_norms[i] = log_squared_norm(d, k, opts);
        sys.sq_norms[i] = sys.log_sq_norms[i] == -infinity ? 0.0 : std::exp(sys.log_sq_norms[i]);
        sys.degenerate[i] = !(sys.leads[i] > 0.0);
    });
    for (bool b : sys.degenerate)
        sys.degenerate_order = sys.degenerate_order || b;
    return sys;
}

namespace detail {

/// Central k-th difference quotient of h at x with step s.
template <class H>
double central_difference(H& h, int k, double x, double s) {
    double acc = 0.0;
    for (int j = 0; j <= k; ++j) {
        const double c = binomial_coefficient(k, j) * ((k - j) % 2 == 0 ? 1.0 : -1.0);
        acc += c * h(x + (j - 0.5 * k) * s);
    }
    return acc / std::pow(s, k);
}

} // namespace detail

/// P_k(x) from the Rodrigues-type formula directly, independent of the
/// recurrence. Discrete: alternating sum over pmf values. Continuous: the
/// k-th derivative of q^k f by Richardson-extrapolated central differences.
inline double rodrigues_direct(const Distribution& d, int k, double x) {
    if (k < 0)
        throw Error(ErrorKind::invalid_parameter, "k must be nonnegative");
    const double lwx = d.log_weight(x);
    if (lwx == -infinity)
        throw Error(ErrorKind::zero_weight_point, "weight vanishes at x = " + detail::format_double(x));
    if (k == 0)
        return 1.0;
    if (d.is_discrete()) {
        CompensatedSum acc;
        for (int j = 0; j <= k; ++j) {
            const double lw = d.log_weight(x - j);
            if (lw == -infinity)
                continue;
            const double sign = (k - j) % 2 == 0 ? 1.0 : -1.0;
            acc.add(sign * binomial_coefficient(k, j) * q_weight(d, k, x - j) * std::exp(lw - lwx));
        }
        return acc.value();
    }

    const auto& s = d.support();
    auto h = [&](double y) {
        const double lw = d.log_weight(y);
        if (lw == -infinity)
            return 0.0;
        return std::pow(d.quadratic()(y), k) * std::exp(lw - lwx);
    };
    double step = 0.5 * d.scale();
    const double room = std::min(x - s.lower, s.upper - x);
    step = std::min(step, 0.9 * 2.0 * room / k);
    if (!(step > 0.0))
        throw Error(ErrorKind::step_underflow, "no room for a difference stencil at x = " + detail::format_double(x));

    // Ridders' tableau: rows halve the step, columns cancel h^2, h^4, ...
    constexpr int levels = 12;
    std::vector<std::vector<double>> t(levels, std::vector<double>(levels, 0.0));
    double best = 0.0;
    double best_err = infinity;
    for (int i = 0; i < levels; ++i) {
        if (step < 1e-150)
            break;
        t[i][0] = detail::central_difference(h, k, x, step);
        double fac = 4.0;
        for (int m = 1; m <= i; ++m) {
            t[i][m] = t[i][m - 1] + (t[i][m - 1] - t[i - 1][m - 1]) / (fac - 1.0);
            fac *= 4.0;
            const double err = std::max(std::abs(t[i][m] - t[i][m - 1]), std::abs(t[i][m] - t[i - 1][m - 1]));
            if (err <= best_err) {
                best_err = err;
                best = t[i][m];
            }
        }
        if (i > 2 && std::abs(t[i][i] - t[i - 1][i - 1]) >= 2.0 * best_err)
            break;
        step *= 0.5;
    }
    if (!(best_err <= 1e-5 * (1.0 + std::abs(best))))
        throw Error(ErrorKind::step_underflow,
                    "difference extrapolation did not stabilise at x = " + detail::format_double(x));
    return (k % 2 == 0 ? 1.0 : -1.0) * best;
}

/// |LHS - RHS| / (1 + |LHS|) for the inversion identity
/// q-weight_k(x) w(x) = tail sum or integral of (y - x - 1)_{k-1} P_k(y) w(y) / (k-1)!.
inline double inversion_residual(const RodriguesSystem& sys, int k, double x, const ExpectOptions& opts = {}) {
    const auto& d = sys.dist;
    if (k < 1 || k > sys.order)
        throw Error(ErrorKind::invalid_index, "k must lie in [1, order]");
    require_moments(d, 2 * k - 1, "the inversion formula");
    const auto& pk = sys.polys[static_cast<std::size_t>(k)];
    const double lhs = q_weight(d, k, x) * d.weight(x);
    const double fact = std::exp(std::lgamma(static_cast<double>(k)));
    const auto& s = d.support();
    double rhs = 0.0;
    try {
        if (d.is_discrete()) {
            auto term = [&](double y) {
                const double w = d.weight(y);
                return w == 0.0 ? 0.0 : falling_factorial(y - x - 1.0, k - 1) * pk.eval(y) * w;
            };
            SummationOptions so;
            so.abs_tol = opts.abs_tol;
            so.max_terms = opts.max_terms;
            const double first = x + 1.0;
            if (first <= s.upper)
                rhs = sum_lattice(term, first, s.upper, std::max(first, std::round(d.mean())), so).value / fact;
        } else {
            QuadratureOptions qo;
            qo.rel_tol = opts.rel_tol;
            qo.abs_tol = 1e-15;
            qo.max_panels = opts.max_panels;
            if (x >= d.mean()) {
                auto f = [&](double y) { const double w = d.weight(y); return w == 0.0 ? 0.0 : std::pow(y - x, k - 1) * pk.eval(y) * w; };
                rhs = integrate(f, x, s.upper, qo, x, d.scale()).value / fact;
            } else {
                auto f = [&](double y) { const double w = d.weight(y); return w == 0.0 ? 0.0 : std::pow(x - y, k - 1) * pk.eval(y) * w; };
                rhs = (k % 2 == 0 ? 1.0 : -1.0) * integrate(f, s.lower, x, qo, x, d.scale()).value / fact;
            }
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::nonconvergent)
            throw Error(ErrorKind::nonconvergent_tail, e.what());
        throw;
    }
    return std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
}

} // namespace steinpearson
