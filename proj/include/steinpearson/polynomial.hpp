#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace steinpearson {

using Rational = boost::multiprecision::cpp_rational;

template <class T>
struct scalar_traits;

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    static double to_double(double v) { return v; }
    static double from_double(double v) { return v; }
    static double magnitude(double v) { return std::abs(v); }
};

template <>
struct scalar_traits<Rational> {
    static constexpr bool exact = true;
    static double to_double(const Rational& v) { return v.convert_to<double>(); }
    // Finite doubles are dyadic rationals, so this conversion is exact.
    static Rational from_double(double v) { return Rational(v); }
    static double magnitude(const Rational& v) { return std::abs(to_double(v)); }
};

template <class T>
concept PolyScalar = requires { scalar_traits<T>::exact; };

/// Dense real polynomial in the monomial basis; coeffs()[i] multiplies x^i.
///
/// Trailing (highest-order) zeros are trimmed after every operation. In
/// floating mode a coefficient counts as zero when |c| <= 1e-12 * max|c|.
template <PolyScalar T>
class Poly {
public:
    using scalar_type = T;

    static constexpr double trim_tolerance = 1e-12;

    Poly() = default;
    explicit Poly(std::vector<T> coeffs) : coeffs_(std::move(coeffs)) { trim(); }
    Poly(std::initializer_list<T> coeffs) : coeffs_(coeffs) { trim(); }

    static Poly constant(T c) { return Poly(std::vector<T>{std::move(c)}); }
    static Poly monomial(std::size_t degree, T c = T(1)) {
        std::vector<T> v(degree + 1, T(0));
        v[degree] = std::move(c);
        return Poly(std::move(v));
    }
    /// x + a
    static Poly linear_shifted(T a) { return Poly(std::vector<T>{std::move(a), T(1)}); }

    const std::vector<T>& coeffs() const noexcept { return coeffs_; }

    bool is_zero() const noexcept { return coeffs_.empty(); }

    /// Degree of the polynomial; the zero polynomial reports -1.
    int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }

    T lead() const { return coeffs_.empty() ? T(0) : coeffs_.back(); }

    T coeff(std::size_t i) const { return i < coeffs_.size() ? coeffs_[i] : T(0); }

    /// Horner evaluation in the scalar type.
    T operator()(const T& x) const {
        T acc(0);
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it)
            acc = acc * x + *it;
        return acc;
    }

    /// Horner evaluation in binary64 regardless of the scalar type.
    double eval(double x) const {
        double acc = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it)
            acc = acc * x + scalar_traits<T>::to_double(*it);
        return acc;
    }

    Poly& operator+=(const Poly& o) {
        if (o.coeffs_.size() > coeffs_.size())
            coeffs_.resize(o.coeffs_.size(), T(0));
        for (std::size_t i = 0; i < o.coeffs_.size(); ++i)
            coeffs_[i] += o.coeffs_[i];
        trim();
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        if (o.coeffs_.size() > coeffs_.size())
            coeffs_.resize(o.coeffs_.size(), T(0));
        for (std::size_t i = 0; i < o.coeffs_.size(); ++i)
            coeffs_[i] -= o.coeffs_[i];
        trim();
        return *this;
    }
    Poly& operator*=(const T& s) {
        for (auto& c : coeffs_)
            c *= s;
        trim();
        return *this;
    }

    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(Poly a, const T& s) { return a *= s; }
    friend Poly operator*(const T& s, Poly a) { return a *= s; }
    friend Poly operator-(Poly a) { return a *= T(-1); }

    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero())
            return Poly();
        std::vector<T> out(a.coeffs_.size() + b.coeffs_.size() - 1, T(0));
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j)
                out[i + j] += a.coeffs_[i] * b.coeffs_[j];
        return Poly(std::move(out));
    }

    friend bool operator==(const Poly& a, const Poly& b) { return a.coeffs_ == b.coeffs_; }

    template <PolyScalar U>
    Poly<U> cast() const {
        std::vector<U> v;
        v.reserve(coeffs_.size());
        for (const auto& c : coeffs_) {
            if constexpr (std::is_same_v<T, U>)
                v.push_back(c);
            else
                v.push_back(scalar_traits<U>::from_double(scalar_traits<T>::to_double(c)));
        }
        return Poly<U>(std::move(v));
    }

private:
    void trim() {
        if constexpr (scalar_traits<T>::exact) {
            while (!coeffs_.empty() && coeffs_.back() == 0)
                coeffs_.pop_back();
        } else {
            double scale = 0.0;
            for (const auto& c : coeffs_)
                scale = std::max(scale, std::abs(c));
            const double cut = trim_tolerance * scale;
            while (!coeffs_.empty() && std::abs(coeffs_.back()) <= cut)
                coeffs_.pop_back();
        }
    }

    std::vector<T> coeffs_;
};

/// x -> p(x + a), expanded exactly by Horner's scheme on (x + a).
template <PolyScalar T>
Poly<T> poly_shift(const Poly<T>& p, const T& a) {
    const auto step = Poly<T>::linear_shifted(a);
    Poly<T> acc;
    const auto& c = p.coeffs();
    for (auto it = c.rbegin(); it != c.rend(); ++it)
        acc = acc * step + Poly<T>::constant(*it);
    return acc;
}

template <PolyScalar T>
Poly<T> poly_derivative(const Poly<T>& p, int k = 1) {
    std::vector<T> c = p.coeffs();
    for (int step = 0; step < k && !c.empty(); ++step) {
        for (std::size_t i = 1; i < c.size(); ++i)
            c[i - 1] = c[i] * T(static_cast<long long>(i));
        c.pop_back();
    }
    return Poly<T>(std::move(c));
}

/// k-fold forward difference, Δ[p](x) = p(x+1) - p(x).
template <PolyScalar T>
Poly<T> poly_forward_difference(const Poly<T>& p, int k = 1) {
    Poly<T> out = p;
    for (int step = 0; step < k && !out.is_zero(); ++step)
        out = poly_shift(out, T(1)) - out;
    return out;
}

/// (x)_n = x (x-1) ... (x-n+1), with (x)_0 = 1.
template <class T>
T falling_factorial(const T& x, int n) {
    T acc(1);
    for (int i = 0; i < n; ++i)
        acc *= x - T(i);
    return acc;
}

/// [x]_n = x (x+1) ... (x+n-1), with [x]_0 = 1.
template <class T>
T rising_factorial(const T& x, int n) {
    T acc(1);
    for (int i = 0; i < n; ++i)
        acc *= x + T(i);
    return acc;
}

inline double binomial_coefficient(int n, int k) {
    if (k < 0 || k > n)
        return 0.0;
    k = std::min(k, n - k);
    double acc = 1.0;
    for (int i = 1; i <= k; ++i)
        acc = acc * (n - k + i) / i;
    return std::round(acc);
}

} // namespace steinpearson
