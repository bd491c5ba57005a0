#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <boost/math/distributions/negative_binomial.hpp>
#include <boost/math/special_functions/polygamma.hpp>

#include "steinpearson/steinpearson.hpp"

using namespace steinpearson;
using namespace steinpearson::umvue;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// E[h(X)] for X ~ NB(nu, theta) by plain summation of the reference pmf.
template <class H>
double nb_expect(int nu, double theta, H h) {
    const boost::math::negative_binomial_distribution<> nb(nu, theta);
    double acc = 0.0;
    for (int x = 0; x < 3000; ++x)
        acc += h(x) * boost::math::pdf(nb, x);
    return acc;
}

} // namespace

TEST_CASE("estimators are unbiased") {
    for (int nu : {1, 3, 6}) {
        const double theta = 0.4;
        CHECK_THAT(nb_expect(nu, theta, [&](int x) { return t_nu(x, nu); }), WithinRel(-std::log(theta), 1e-12));
        for (int n = 1; n <= 3; ++n)
            CHECK_THAT(nb_expect(nu, theta, [&](int x) { return w_nu(x, nu, n); }), WithinRel(std::pow(theta, -n), 1e-12));
        for (int n = 1; n < nu; ++n)
            CHECK_THAT(nb_expect(nu, theta, [&](int x) { return u_nu(x, nu, n); }), WithinRel(std::pow(theta, n), 1e-12));
    }
    // L_nu estimates log lambda from gamma(nu, lambda).
    const auto suite = exponential_suite(3, 2.5);
    CHECK_THAT(expect(suite.dist, [](double x) { return l_nu(x, 3); }), WithinRel(std::log(2.5), 1e-10));
}

TEST_CASE("difference stacks match finite differences") {
    const auto t = t_spec(3);
    const auto w = w_spec(3, 2);
    const auto u = u_spec(4, 2);
    for (int k = 1; k <= 4; ++k) {
        for (double x : {0.0, 2.0, 5.0}) {
            auto fd = [&](const FunctionSpec& g) {
                double acc = 0.0;
                for (int j = 0; j <= k; ++j)
                    acc += ((k - j) % 2 == 0 ? 1.0 : -1.0) * binomial_coefficient(k, j) * g(x + j);
                return acc;
            };
            CHECK_THAT(t.eval_k_value(Lattice::integer, k, x), WithinAbs(fd(t), 1e-13));
            CHECK_THAT(w.eval_k_value(Lattice::integer, k, x), WithinAbs(fd(w), 1e-11));
            CHECK_THAT(u.eval_k_value(Lattice::integer, k, x), WithinAbs(fd(u), 1e-13));
        }
    }
    const auto l = l_spec(2);
    // L'' = 1/x^2
    CHECK_THAT(l.eval_k_value(Lattice::continuous, 2, 0.5), WithinRel(4.0, 1e-14));
}

TEST_CASE("index and domain errors") {
    try {
        u_spec(3, 3);
        FAIL("expected invalid index");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_index);
    }
    try {
        l_nu(0.0, 2);
        FAIL("expected nonpositive x");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::nonpositive_x);
    }
    CHECK_THROWS_AS(geometric_suite(2, 1.5), Error);
    CHECK(parse_umvue_spec("poly:1,2") == std::nullopt);
    CHECK(parse_umvue_spec("umvue_w:nu=3,n=2")->label() == "umvue_w:nu=3,n=2");
    CHECK_THROWS_AS(parse_umvue_spec("umvue_t:nu=0"), Error);
}

TEST_CASE("variance of the log-rate estimator") {
    const double zeta2 = std::numbers::pi * std::numbers::pi / 6.0;
    const auto one = var_l_nu(1, 1.0);
    CHECK_THAT(one.closed_form, WithinRel(zeta2, 1e-15));
    CHECK_THAT(one.series.value, WithinAbs(zeta2, 1e-10));
    CHECK_THAT(one.parseval->value, WithinRel(zeta2, 1e-8));
    const auto two = var_l_nu(2);
    CHECK_THAT(two.closed_form, WithinRel(zeta2 - 1.0, 1e-15));
    // Var log X for X ~ gamma(nu, lambda) is the trigamma function at nu.
    for (int nu : {2, 5, 10}) {
        const auto v = var_l_nu(nu, 3.0);
        CHECK_THAT(v.closed_form, WithinRel(boost::math::trigamma(static_cast<double>(nu)), 1e-14));
        CHECK_THAT(v.series.value, WithinAbs(v.closed_form, 1e-10));
        CHECK_THAT(*v.parseval->oracle, WithinAbs(v.closed_form, 1e-10));
    }
    for (int nu = 1; nu <= 50; ++nu)
        CHECK(var_l_nu(nu).sandwich);
}

TEST_CASE("variance of the log-odds estimator") {
    // nu = 1: Var T = Li_2(1 - theta)
    const auto v = var_t_nu(1, 0.5);
    CHECK_THAT(v.series.value, WithinRel(0.582240526465012505902656320159689, 1e-11));
    CHECK_THAT(v.parseval->value, WithinRel(0.582240526465012505902656320159689, 1e-9));
    CHECK_THAT(v.cramer_rao, WithinRel(0.5, 1e-15));
    CHECK_THAT(var_t_nu(3, 0.2, {}, false).series.value, WithinRel(0.301859143353207816339368026997152, 1e-11));
    CHECK_THAT(var_t_nu(5, 0.8, {}, false).series.value, WithinRel(0.0406936029988050590729697705040234, 1e-11));
    CHECK_THAT(var_t_nu(4, 0.5, {}, false).series.value, WithinRel(0.132085399153855819305905310263716, 1e-11));
}

TEST_CASE("geometric covariances") {
    // References summed to 30 digits from the definitions.
    const auto cov = geometric_covariances(4, 0.5, 2, 3);
    REQUIRE(cov.entries.size() == 5);
    const std::vector<std::pair<std::string, double>> expected = {
        {"cov_t_w", 0.95},
        {"cov_t_u", -0.0601628836767145209265885603907641},
        {"cov_w_w", 26.4},
        {"cov_u_u", 0.0540292291600820358741518178127314},
        {"cov_w_u", -0.3},
    };
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& e = cov.entries[i];
        INFO(e.name);
        CHECK(e.name == expected[i].first);
        CHECK_THAT(e.closed_form, WithinRel(expected[i].second, 1e-10));
        CHECK_THAT(e.parseval, WithinRel(expected[i].second, 1e-8));
        CHECK_THAT(e.direct, WithinRel(expected[i].second, 1e-10));
    }
    CHECK_THROWS_AS(geometric_covariances(3, 0.5, 1, 3), Error);
}
