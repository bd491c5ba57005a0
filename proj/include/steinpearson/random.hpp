#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace steinpearson {

/// SplitMix64 generator. Every sampler takes one of these by reference, so
/// a fixed seed reproduces a run exactly.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

namespace sampling {

inline double normal(SplitMix64& rng) {
    // Box-Muller; the sine branch is discarded to keep the generator stateless.
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Marsaglia-Tsang for shape >= 1, boosted by U^(1/shape) below 1. Unit rate.
inline double gamma(SplitMix64& rng, double shape) {
    if (shape < 1.0) {
        const double u = rng.uniform();
        return gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x)
            return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v;
    }
}

/// Knuth's multiplication method on chunks of mean at most 30.
inline double poisson(SplitMix64& rng, double mean) {
    double total = 0.0;
    while (mean > 0.0) {
        const double chunk = std::min(mean, 30.0);
        mean -= chunk;
        const double limit = std::exp(-chunk);
        double prod = rng.uniform();
        double count = 0.0;
        while (prod > limit) {
            prod *= rng.uniform();
            count += 1.0;
        }
        total += count;
    }
    return total;
}

/// Sequential inversion of the binomial cdf.
inline double binomial(SplitMix64& rng, int trials, double p) {
    if (p > 0.5)
        return trials - binomial(rng, trials, 1.0 - p);
    const double u = rng.uniform();
    const double odds = p / (1.0 - p);
    double pmf = std::pow(1.0 - p, trials);
    double cdf = pmf;
    int x = 0;
    while (u > cdf && x < trials) {
        pmf *= odds * (trials - x) / (x + 1);
        ++x;
        cdf += pmf;
    }
    return x;
}

/// Gamma-Poisson mixture: NB(r, p) counts failures before the r-th success.
inline double negative_binomial(SplitMix64& rng, double r, double p) {
    const double rate = gamma(rng, r) * (1.0 - p) / p;
    return poisson(rng, rate);
}

inline double beta(SplitMix64& rng, double a, double b) {
    const double x = gamma(rng, a);
    const double y = gamma(rng, b);
    return x / (x + y);
}

inline double student_t(SplitMix64& rng, double dof) {
    const double z = normal(rng);
    const double chi2 = 2.0 * gamma(rng, 0.5 * dof);
    return z / std::sqrt(chi2 / dof);
}

} // namespace sampling
} // namespace steinpearson
