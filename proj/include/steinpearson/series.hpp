#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace steinpearson {

/// Levin u-transform, built one term at a time (beta = 1). The tableau is
/// kept in 50-digit arithmetic; in binary64 it loses accuracy after about a
/// dozen terms.
class LevinU {
    using Wide = boost::multiprecision::cpp_bin_float_50;

public:
    explicit LevinU(int capacity = 40, double beta = 1.0) : capacity_(capacity), beta_(beta) {
        numer_.reserve(static_cast<std::size_t>(capacity));
        denom_.reserve(static_cast<std::size_t>(capacity));
    }

    /// Feeds term a_n; partial sums are kept internally in wide precision.
    /// Returns the new estimate, or nullopt once the transform is exhausted or
    /// a zero term has made it undefined.
    std::optional<double> add(double term) {
        if (broken_ || n_ >= capacity_ || term == 0.0 || !std::isfinite(term)) {
            broken_ = true;
            return std::nullopt;
        }
        const Wide omega = Wide(beta_ + n_) * Wide(term);
        Wide t = Wide(1) / Wide(beta_ + n_);
        denom_.push_back(t / omega);
        sum_ += Wide(term);
        numer_.push_back(sum_ * denom_.back());
        if (n_ > 0) {
            const Wide ratio = Wide(beta_ + n_ - 1) * t;
            for (int j = 1; j <= n_; ++j) {
                const Wide fact = Wide(n_ - j + beta_) * t;
                const auto i = static_cast<std::size_t>(n_ - j);
                numer_[i] = numer_[i + 1] - fact * numer_[i];
                denom_[i] = denom_[i + 1] - fact * denom_[i];
                t *= ratio;
            }
        }
        ++n_;
        if (denom_[0] == 0)
            return std::nullopt;
        const double est = static_cast<double>(numer_[0] / denom_[0]);
        if (!std::isfinite(est))
            return std::nullopt;
        return est;
    }

    int size() const noexcept { return n_; }

private:
    int capacity_;
    double beta_;
    int n_ = 0;
    bool broken_ = false;
    Wide sum_ = 0;
    std::vector<Wide> numer_;
    std::vector<Wide> denom_;
};

struct SeriesOptions {
    double rel_tol = 1e-10;
    int max_k = 200;
    int consecutive = 3;
    bool accelerate = true;
    int levin_terms = 40;
    int levin_min_terms = 8;
    /// Agreement required between successive Levin estimates. Looser than
    /// rel_tol because the transform amplifies term noise of ~1e-14.
    double accel_rel_tol = 1e-9;
};

/// Running sum of a series with the stopping rules shared by the variance
/// and covariance expansions.
///
/// Plain rule: `consecutive` terms in a row below rel_tol * sum (variance) or
/// rel_tol * (1 + |sum|) (signed). Accelerated rule: the same number of Levin
/// estimates in a row agreeing to max(rel_tol, accel_rel_tol).
class SeriesAccumulator {
public:
    enum class Mode { variance, signed_terms };

    explicit SeriesAccumulator(Mode mode, SeriesOptions opts = {})
        : mode_(mode), opts_(opts), levin_(opts.levin_terms) {}

    void add(double term) {
        sum_ += term;
        ++count_;
        const double scale = mode_ == Mode::variance ? std::abs(sum_) : 1.0 + std::abs(sum_);
        small_run_ = std::abs(term) <= opts_.rel_tol * scale ? small_run_ + 1 : 0;
        if (small_run_ >= opts_.consecutive) {
            converged_ = true;
            accelerated_ = false;
            value_ = sum_;
            return;
        }
        if (!opts_.accelerate)
            return;
        const auto est = levin_.add(term);
        if (!est) {
            levin_run_ = 0;
            return;
        }
        if (last_estimate_) {
            const double rel = std::max(opts_.rel_tol, opts_.accel_rel_tol);
            const double tol = rel * (mode_ == Mode::variance ? std::abs(*est) : 1.0 + std::abs(*est));
            const double diff = std::abs(*est - *last_estimate_);
            if (diff <= tol) {
                if (levin_run_ == 0 || diff < best_diff_) {
                    best_diff_ = diff;
                    best_estimate_ = *est;
                }
                ++levin_run_;
            } else {
                levin_run_ = 0;
            }
        }
        last_estimate_ = est;
        // The estimate closest to its predecessor within the run is kept; the
        // transform amplifies rounding noise as terms accumulate.
        if (levin_.size() >= opts_.levin_min_terms && levin_run_ >= opts_.consecutive) {
            converged_ = true;
            accelerated_ = true;
            value_ = best_estimate_;
        }
    }

    bool converged() const noexcept { return converged_; }
    bool accelerated() const noexcept { return accelerated_; }
    int count() const noexcept { return count_; }
    double partial_sum() const noexcept { return sum_; }
    /// The converged value, or the partial sum when not converged.
    double value() const noexcept { return converged_ ? value_ : sum_; }

private:
    Mode mode_;
    SeriesOptions opts_;
    LevinU levin_;
    double sum_ = 0.0;
    double value_ = 0.0;
    int count_ = 0;
    int small_run_ = 0;
    int levin_run_ = 0;
    std::optional<double> last_estimate_;
    double best_estimate_ = 0.0;
    double best_diff_ = 0.0;
    bool converged_ = false;
    bool accelerated_ = false;
};

} // namespace steinpearson
