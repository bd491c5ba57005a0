#include <catch_amalgamated.hpp>

#include <cmath>

#include "steinpearson/steinpearson.hpp"

using namespace steinpearson;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::usage;
}

} // namespace

TEST_CASE("Poisson numerators for exponential targets") {
    // E[lambda^k (e^t - 1)^k e^{tX}] = lambda^k (e^t - 1)^k exp(lambda (e^t - 1))
    const double lambda = 2.0;
    const double t = 0.5;
    const auto d = parse_distribution("poisson:lambda=2");
    const auto sys = build_system(d, 5);
    const auto g = exp_spec(t);
    const double e1 = std::expm1(t);
    for (int k = 0; k <= 5; ++k) {
        const double expected = std::pow(lambda * e1, k) * std::exp(lambda * e1);
        CHECK_THAT(stein_numerator(sys, g, k), WithinRel(expected, 1e-11));
        CHECK_THAT(stein_projection(sys, g, k), WithinRel(expected, 1e-9));
    }
}

TEST_CASE("Hermite projections of exponential targets") {
    // E[He_k(X) e^{tX}] = t^k e^{t^2/2}
    const auto d = parse_distribution("normal:mu=0,sigma=1");
    const auto sys = build_system(d, 6);
    const double t = 0.7;
    const auto g = exp_spec(t);
    for (int k = 0; k <= 6; ++k) {
        const double expected = std::pow(t, k) * std::exp(0.5 * t * t);
        CHECK_THAT(stein_numerator(sys, g, k), WithinRel(expected, 1e-10));
        CHECK_THAT(stein_projection(sys, g, k), WithinRel(expected, 1e-9));
    }
}

TEST_CASE("monomial targets under gamma") {
    // gamma(a, lambda): q = x / lambda, E[q^k g^(k)] for g = x^m is
    // m!/(m-k)! E[X^m] / lambda^k with E[X^j] = [a]_j / lambda^j.
    const double a = 3.0;
    const double lambda = 2.0;
    const auto d = parse_distribution("gamma:a=3,lambda=2");
    const auto sys = build_system(d, 5);
    const auto g = parse_function_spec("poly:0,0,0,0,1");
    for (int k = 0; k <= 5; ++k) {
        const double expected =
            k > 4 ? 0.0 : falling_factorial(4.0, k) * rising_factorial(a, 4) / std::pow(lambda, 4 + k);
        CHECK_THAT(stein_numerator(sys, g, k), WithinAbs(expected, 1e-9 * (1.0 + expected)));
        CHECK_THAT(stein_projection(sys, g, k), WithinAbs(expected, 1e-9 * (1.0 + expected)));
    }
}

TEST_CASE("identity for geometric powers on discrete families") {
    for (const char* spec : {"binomial:n=10,p=0.3", "negative_binomial:r=3,p=0.4", "discrete_uniform:n=10"}) {
        const auto d = parse_distribution(spec);
        const auto sys = build_system(d, 5);
        const auto g = geom_pow_spec(0.5);
        for (int k = 0; k <= 5; ++k) {
            INFO(spec << " k=" << k);
            const double lhs = stein_projection(sys, g, k);
            const double rhs = stein_numerator(sys, g, k);
            CHECK_THAT(lhs, WithinAbs(rhs, 1e-10 * std::sqrt(sys.sq_norms[static_cast<std::size_t>(k)] + 1.0)));
        }
    }
}

TEST_CASE("log targets") {
    const auto d = parse_distribution("gamma:a=3,lambda=2");
    const auto sys = build_system(d, 3);
    const auto g = log_shift_spec(0.0);
    // E[q g'] = E[(x/2) (1/x)] = 1/2
    CHECK_THAT(stein_numerator(sys, g, 1), WithinRel(0.5, 1e-10));
    CHECK_THAT(stein_projection(sys, g, 1), WithinRel(0.5, 1e-9));
    // E[q^2 g''] = -1/4
    CHECK_THAT(stein_numerator(sys, g, 2), WithinRel(-0.25, 1e-10));
    const auto p = parse_distribution("poisson:lambda=2");
    const auto psys = build_system(p, 3);
    const auto h = log_shift_spec(1.0);
    for (int k = 1; k <= 3; ++k)
        CHECK_THAT(stein_projection(psys, h, k), WithinRel(stein_numerator(psys, h, k), 1e-9));
}

TEST_CASE("Fourier coefficients") {
    const auto sys = build_system(parse_distribution("poisson:lambda=2"), 2);
    const auto c = fourier_coefficient(sys, parse_function_spec("poly:0,0,1"), 1);
    CHECK_THAT(c.numerator, WithinRel(10.0, 1e-12));
    CHECK_THAT(c.value, WithinRel(10.0 / std::sqrt(2.0), 1e-12));
    const auto deg = build_system(parse_distribution("binomial:n=2,p=0.3"), 4);
    const auto z = fourier_coefficient(deg, parse_function_spec("poly:0,0,1"), 3);
    CHECK(z.sq_norm == 0.0);
    CHECK(z.value == 0.0);
}

TEST_CASE("hypothesis and order failures") {
    const auto t5 = parse_distribution("student_t:n=5");
    // q g' ~ x^5 is not integrable under t with 5 degrees of freedom.
    CHECK(kind_of([&] { stein_numerator(t5, parse_function_spec("poly:0,0,0,0,1"), 1); }) ==
          ErrorKind::nonconvergent_hypothesis);
    CHECK(kind_of([&] { stein_numerator(t5, parse_function_spec("poly:0,1"), 3); }) ==
          ErrorKind::insufficient_moments);
    const auto limited = FunctionSpec::analytic(
        "limited", [](double x) { return std::sin(x); },
        [](int k, double x) { return LogValue::from(k == 1 ? std::cos(x) : -std::sin(x)); }, {}, 2);
    const auto n = parse_distribution("normal:mu=0,sigma=1");
    CHECK_NOTHROW(stein_numerator(n, limited, 2));
    CHECK(kind_of([&] { stein_numerator(n, limited, 3); }) == ErrorKind::order_exceeded);
    CHECK(kind_of([&] { stein_numerator(parse_distribution("poisson:lambda=1"), limited, 1); }) ==
          ErrorKind::order_exceeded);
    CHECK(kind_of([&] { stein_numerator(n, limited, -1); }) == ErrorKind::invalid_index);
}

TEST_CASE("function spec parsing") {
    CHECK(parse_function_spec("poly:1,2,3").degree() == 2);
    CHECK(parse_function_spec("exp:t=0.5")(2.0) == std::exp(1.0));
    CHECK_THAT(parse_function_spec("geom_pow:t=0.5")(3.0), WithinRel(0.125, 1e-15));
    CHECK_THAT(parse_function_spec("log_shift:a=1")(std::exp(1.0) - 1.0), WithinRel(1.0, 1e-15));
    CHECK(kind_of([] { parse_function_spec("sin:t=1"); }) == ErrorKind::unknown_name);
    CHECK(kind_of([] { parse_function_spec("exp"); }) == ErrorKind::usage);
    CHECK(kind_of([] { parse_function_spec("exp:s=1"); }) == ErrorKind::usage);
    CHECK(kind_of([] { parse_function_spec("geom_pow:t=-1"); }) == ErrorKind::invalid_parameter);
    CHECK(kind_of([] { parse_function_spec("log_shift:a=0")(-1.0); }) == ErrorKind::nonpositive_x);
    // Δ^3 log(x + 1) at x = 1: log 5 - 3 log 4 + 3 log 3 - log 2
    const auto g = parse_function_spec("log_shift:a=1");
    const double expected = std::log(5.0) - 3.0 * std::log(4.0) + 3.0 * std::log(3.0) - std::log(2.0);
    CHECK_THAT(g.eval_k_value(Lattice::integer, 3, 1.0), WithinRel(expected, 1e-13));
    const auto h = parse_function_spec("gauss:s=2");
    // d^2/dx^2 exp(-x^2/8) = (x^2/16 - 1/4) exp(-x^2/8)
    CHECK_THAT(h.eval_k_value(Lattice::continuous, 2, 1.0), WithinRel((1.0 / 16 - 0.25) * std::exp(-0.125), 1e-13));
}
