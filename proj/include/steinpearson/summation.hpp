#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <string>

#include "error.hpp"

namespace steinpearson {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct SummationOptions {
    double abs_tol = 1e-12; ///< relative to the running sum of |terms|
    std::size_t max_terms = 10'000'000;
    int decreasing_run = 25;
    double max_ratio = 0.999;
};

struct SummationResult {
    double value = 0.0;
    double abs_value = 0.0; ///< sum of |terms|
    std::size_t terms = 0;
};

/// Sums term(x) over the integers of [lower, upper] (either end may be
/// infinite), expanding outward from `start`.
///
/// A side stops once its terms have shrunk in magnitude for
/// `decreasing_run` consecutive steps and the geometric tail bound built
/// from the largest ratio in that window (capped at `max_ratio`) falls to
/// abs_tol * sum |terms| or below.
template <class Term>
SummationResult sum_lattice(Term&& term, double lower, double upper, double start,
                            const SummationOptions& opts = {}) {
    SummationResult out;
    CompensatedSum sum;
    start = std::clamp(std::round(start), lower, upper);

    const bool finite = std::isfinite(lower) && std::isfinite(upper);
    if (finite && upper - lower < static_cast<double>(opts.max_terms)) {
        for (double x = lower; x <= upper; x += 1.0) {
            const double t = term(x);
            sum.add(t);
            out.abs_value += std::abs(t);
            ++out.terms;
        }
        out.value = sum.value();
        return out;
    }

    auto walk = [&](double first, double step, double limit) {
        std::deque<double> ratios;
        double prev = -1.0;
        for (double x = first; step > 0 ? x <= limit : x >= limit; x += step) {
            if (++out.terms > opts.max_terms)
                throw Error(ErrorKind::nonconvergent,
                            "lattice sum exceeded " + std::to_string(opts.max_terms) + " terms");
            const double t = term(x);
            if (!std::isfinite(t))
                throw Error(ErrorKind::nonconvergent, "summand is not finite at x = " + std::to_string(x));
            sum.add(t);
            const double a = std::abs(t);
            out.abs_value += a;
            if (prev >= 0.0 && a <= prev) {
                ratios.push_back(prev > 0.0 ? a / prev : 0.0);
                if (static_cast<int>(ratios.size()) > opts.decreasing_run)
                    ratios.pop_front();
            } else {
                ratios.clear();
            }
            prev = a;
            if (static_cast<int>(ratios.size()) >= opts.decreasing_run) {
                const double r = std::min(*std::max_element(ratios.begin(), ratios.end()), opts.max_ratio);
                const double tail = a * r / (1.0 - r);
                if (tail <= opts.abs_tol * out.abs_value)
                    return;
            }
        }
    };

    walk(start, 1.0, upper);
    if (start - 1.0 >= lower)
        walk(start - 1.0, -1.0, lower);
    out.value = sum.value();
    return out;
}

} // namespace steinpearson
