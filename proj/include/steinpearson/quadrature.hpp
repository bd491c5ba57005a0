#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "error.hpp"

namespace steinpearson {

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    std::size_t max_panels = 100000;
    std::size_t initial_panels = 8;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    double abs_value = 0.0; ///< integral of |f|, used as a cancellation scale
    std::size_t panels = 0;
    std::size_t evaluations = 0;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1].
inline constexpr std::array<double, 8> gk15_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk15_kronrod = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk15_gauss = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;
    double abs_value;
    friend bool operator<(const Panel& l, const Panel& r) { return l.error < r.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::array<double, 15> fv{};
    for (std::size_t i = 0; i < 7; ++i) {
        fv[2 * i] = f(mid - half * gk15_nodes[i]);
        fv[2 * i + 1] = f(mid + half * gk15_nodes[i]);
    }
    fv[14] = f(mid);

    double kronrod = gk15_kronrod[7] * fv[14];
    double gauss = gk15_gauss[3] * fv[14];
    double resabs = std::abs(kronrod);
    for (std::size_t i = 0; i < 7; ++i) {
        const double pair = fv[2 * i] + fv[2 * i + 1];
        kronrod += gk15_kronrod[i] * pair;
        resabs += gk15_kronrod[i] * (std::abs(fv[2 * i]) + std::abs(fv[2 * i + 1]));
        if (i % 2 == 1)
            gauss += gk15_gauss[i / 2] * pair;
    }
    const double mean = 0.5 * kronrod;
    double resasc = gk15_kronrod[7] * std::abs(fv[14] - mean);
    for (std::size_t i = 0; i < 7; ++i)
        resasc += gk15_kronrod[i] * (std::abs(fv[2 * i] - mean) + std::abs(fv[2 * i + 1] - mean));

    kronrod *= half;
    gauss *= half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);

    // QUADPACK's scaled error estimate, floored at the roundoff level.
    double err = std::abs(kronrod - gauss);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double roundoff = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    if (roundoff > std::numeric_limits<double>::min())
        err = std::max(err, roundoff);
    return {a, b, kronrod, err, resabs};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature of f over [a, b]. Infinite
/// endpoints are mapped onto a bounded interval by a rational transform
/// centred at `center` with length scale `scale`.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opts = {},
                           double center = 0.0, double scale = 1.0) {
    if (!(a < b))
        return {};
    std::size_t evaluations = 0;

    const bool lo_inf = std::isinf(a);
    const bool hi_inf = std::isinf(b);
    double t0 = a;
    double t1 = b;
    if (lo_inf && hi_inf) {
        t0 = -1.0;
        t1 = 1.0;
    } else if (lo_inf || hi_inf) {
        t0 = 0.0;
        t1 = 1.0;
    }

    auto mapped = [&](double t) -> double {
        ++evaluations;
        double x = t;
        double jac = 1.0;
        if (lo_inf && hi_inf) {
            const double d = 1.0 - t * t;
            x = center + scale * t / d;
            jac = scale * (1.0 + t * t) / (d * d);
        } else if (hi_inf) {
            const double d = 1.0 - t;
            x = a + scale * t / d;
            jac = scale / (d * d);
        } else if (lo_inf) {
            const double d = 1.0 - t;
            x = b - scale * t / d;
            jac = scale / (d * d);
        }
        if (!std::isfinite(x) || !std::isfinite(jac))
            return 0.0;
        const double v = f(x);
        if (!std::isfinite(v))
            throw Error(ErrorKind::nonconvergent, "integrand is not finite at x = " + std::to_string(x));
        const double out = v * jac;
        return std::isfinite(out) ? out : 0.0;
    };

    std::priority_queue<detail::Panel> heap;
    double value = 0.0;
    double error = 0.0;
    double abs_value = 0.0;
    const std::size_t n0 = std::max<std::size_t>(1, opts.initial_panels);
    for (std::size_t i = 0; i < n0; ++i) {
        const double pa = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n0);
        const double pb = i + 1 == n0 ? t1 : t0 + (t1 - t0) * static_cast<double>(i + 1) / static_cast<double>(n0);
        auto p = detail::gk15(mapped, pa, pb);
        value += p.value;
        error += p.error;
        abs_value += p.abs_value;
        heap.push(p);
    }

    // Near-zero integrals (orthogonality checks) converge against the
    // roundoff level of the absolute integral instead of their own value.
    auto tolerance = [&] {
        return std::max({opts.abs_tol, opts.rel_tol * std::abs(value),
                         100.0 * std::numeric_limits<double>::epsilon() * abs_value});
    };
    while (error > tolerance()) {
        if (heap.size() >= opts.max_panels)
            throw Error(ErrorKind::nonconvergent,
                        "adaptive quadrature exhausted " + std::to_string(opts.max_panels) + " panels");
        const auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(worst.a < mid && mid < worst.b)) {
            // Panel can no longer be split; accept whatever accuracy remains.
            break;
        }
        heap.pop();
        auto left = detail::gk15(mapped, worst.a, mid);
        auto right = detail::gk15(mapped, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        abs_value += left.abs_value + right.abs_value - worst.abs_value;
        heap.push(left);
        heap.push(right);
        // The running error drifts with cancellation; recompute occasionally.
        if (heap.size() % 1024 == 0) {
            auto copy = heap;
            double v = 0.0, e = 0.0, s = 0.0;
            while (!copy.empty()) {
                v += copy.top().value;
                e += copy.top().error;
                s += copy.top().abs_value;
                copy.pop();
            }
            value = v;
            error = e;
            abs_value = s;
        }
    }

    // Final re-summation, smallest contributions first.
    std::vector<detail::Panel> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
    QuadratureResult out;
    for (const auto& p : panels) {
        out.value += p.value;
        out.error += p.error;
        out.abs_value += p.abs_value;
    }
    out.panels = panels.size();
    out.evaluations = evaluations;
    return out;
}

} // namespace steinpearson
