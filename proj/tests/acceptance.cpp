// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "steinpearson/steinpearson.hpp"

using namespace steinpearson;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass)
            detail = why;
        pass = false;
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

struct Case {
    std::string spec;
    std::string exp_g;
};

// The eight distributions of the orthogonality battery.
const std::vector<Case>& battery() {
    static const std::vector<Case> c = {
        {"poisson:lambda=2", "exp:t=0.5"},
        {"binomial:n=10,p=0.3", "exp:t=1"},
        {"negative_binomial:r=3,p=0.4", "exp:t=0.2"},
        {"discrete_uniform:n=10", "exp:t=0.5"},
        {"normal:mu=0,sigma=1", "exp:t=1"},
        {"gamma:a=3,lambda=2", "exp:t=0.5"},
        {"uniform:a=0,b=1", "exp:t=4"},
        {"student_t:n=15", "gauss:s=1"},
    };
    return c;
}

// Every built-in family, for the criteria that range over all of them.
const std::vector<Case>& all_builtins() {
    static const std::vector<Case> c = [] {
        auto v = battery();
        v.push_back({"geometric:p=0.4", "exp:t=0.2"});
        v.push_back({"exponential:lambda=1", "exp:t=0.25"});
        v.push_back({"beta:a=2,b=3", "exp:t=4"});
        return v;
    }();
    return c;
}

int top_order(const Distribution& d) { return d.name() == "student_t" ? 7 : 6; }

Outcome orthogonality() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    double worst_off = 0.0;
    double worst_diag = 0.0;
    for (const auto& c : battery()) {
        const auto d = parse_distribution(c.spec);
        const int n = top_order(d);
        const auto sys = build_system(d, n);
        for (int k = 0; k <= n; ++k) {
            for (int m = k; m <= n; ++m) {
                const auto& pk = sys.polys[static_cast<std::size_t>(k)];
                const auto& pm = sys.polys[static_cast<std::size_t>(m)];
                const double inner = expect(d, [&](double x) { return pk.eval(x) * pm.eval(x); });
                const double nk = sys.sq_norms[static_cast<std::size_t>(k)];
                const double nm = sys.sq_norms[static_cast<std::size_t>(m)];
                if (k == m) {
                    const double rel = std::abs(inner - nk) / nk;
                    worst_diag = std::max(worst_diag, rel);
                    if (rel > 1e-7)
                        o.fail(c.spec + " diagonal k=" + std::to_string(k) + " rel " + fmt(rel));
                } else {
                    const double rel = std::abs(inner) / std::sqrt(nk * nm);
                    worst_off = std::max(worst_off, rel);
                    if (rel > 1e-7)
                        o.fail(c.spec + " k=" + std::to_string(k) + " m=" + std::to_string(m) + " rel " + fmt(rel));
                }
            }
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > 60.0)
        o.fail("runtime " + fmt(secs) + " s");
    if (o.pass)
        o.detail = "max off-diagonal " + fmt(worst_off) + ", max diagonal " + fmt(worst_diag) + ", " + fmt(secs) + " s";
    return o;
}

Outcome stein_identity() {
    Outcome o;
    double worst = 0.0;
    for (const auto& c : battery()) {
        const auto d = parse_distribution(c.spec);
        const int n = top_order(d);
        const auto sys = build_system(d, n);
        const std::vector<FunctionSpec> gs = {parse_function_spec("poly:0,0,1"), parse_function_spec("poly:0,0,0,1"),
                                              parse_function_spec("poly:0,0,0,0,0,1"), parse_function_spec(c.exp_g)};
        for (const auto& g : gs) {
            const double var = variance_of(d, [&](double x) { return g(x); });
            for (int k = 1; k <= n; ++k) {
                const double lhs = stein_projection(sys, g, k);
                const double rhs = stein_numerator(sys, g, k);
                const double scale = std::sqrt(sys.sq_norms[static_cast<std::size_t>(k)] * var);
                const double rel = std::abs(lhs - rhs) / scale;
                worst = std::max(worst, rel);
                if (rel > 1e-6)
                    o.fail(c.spec + " " + g.label() + " k=" + std::to_string(k) + " residual " + fmt(rel));
            }
        }
    }
    if (o.pass)
        o.detail = "max residual " + fmt(worst);
    return o;
}

Outcome equality_certificate() {
    Outcome o;
    const std::array<std::vector<double>, 2> coeffs = {std::vector<double>{0.5, -1.0, 0.25, 0.1, -0.05},
                                                       std::vector<double>{-2.0, 0.3, -0.7, 0.02, 0.01}};
    double worst = 0.0;
    double min_gap = infinity;
    int cases = 0;
    for (const auto& c : all_builtins()) {
        const auto d = parse_distribution(c.spec);
        for (int m = 1; m <= 4; ++m) {
            if (!d.has_moments(2 * m))
                continue;
            for (const auto& cs : coeffs) {
                const auto g = FunctionSpec::polynomial(Poly<double>(std::vector<double>(cs.begin(), cs.begin() + m + 1)));
                const auto b = variance_lower_bound(d, g, m);
                const double var = *b.variance_oracle;
                const double rel = std::abs(var - b.lower_bound) / var;
                worst = std::max(worst, rel);
                ++cases;
                if (rel > 1e-7)
                    o.fail(c.spec + " degree " + std::to_string(m) + " rel " + fmt(rel));
            }
        }
        const auto g = parse_function_spec(c.exp_g);
        const auto b = variance_lower_bound(d, g, 2);
        const double var = *b.variance_oracle;
        const double gap = (var - b.lower_bound) / var;
        min_gap = std::min(min_gap, gap);
        if (!(gap > 1e-4))
            o.fail(c.spec + " " + g.label() + " relative gap " + fmt(gap));
    }
    if (o.pass)
        o.detail = std::to_string(cases) + " polynomial cases, max rel " + fmt(worst) + ", min exp-type gap/Var " +
                   fmt(min_gap);
    return o;
}

Outcome paper_numbers() {
    Outcome o;
    const double pi2_6 = std::numbers::pi * std::numbers::pi / 6.0;
    double worst_a = 0.0;
    for (int nu = 1; nu <= 10; ++nu) {
        const auto v = umvue::var_l_nu(nu, 1.0);
        double expected = pi2_6;
        for (int k = 1; k < nu; ++k)
            expected -= 1.0 / (static_cast<double>(k) * k);
        const double e_series = std::abs(v.series.value - expected);
        const double e_direct = std::abs(*v.parseval->oracle - expected);
        worst_a = std::max({worst_a, e_series, e_direct});
        if (e_series > 1e-10 || e_direct > 1e-10)
            o.fail("(a) nu=" + std::to_string(nu) + " series err " + fmt(e_series) + " direct err " + fmt(e_direct));
        if (std::abs(v.parseval->value - expected) > 1e-8 * expected)
            o.fail("(a) nu=" + std::to_string(nu) + " Parseval engine " + fmt(v.parseval->value));
    }
    for (int nu = 1; nu <= 50; ++nu) {
        const auto v = umvue::var_l_nu(nu);
        const double series_eff = nu * v.series.value;
        if (!v.sandwich || !(series_eff > 1.0 && series_eff < 1.0 + 1.0 / nu))
            o.fail("(b) nu=" + std::to_string(nu) + " efficiency " + fmt(v.efficiency));
    }
    double worst_c = 0.0;
    for (int nu : {1, 3, 5}) {
        for (double theta : {0.2, 0.5, 0.8}) {
            const auto v = umvue::var_t_nu(nu, theta);
            const auto suite = umvue::geometric_suite(nu, theta);
            const auto mc = monte_carlo_variance(suite.dist, [&](double x) { return umvue::t_nu(x, nu); },
                                                 1000u + static_cast<std::uint64_t>(nu * 10 + theta * 10), 1000000);
            const double closed = v.series.value;
            const double engine = v.parseval->value;
            const double rel = std::abs(closed - engine) / closed;
            worst_c = std::max(worst_c, rel);
            const std::string tag = "(c) nu=" + std::to_string(nu) + " theta=" + fmt(theta);
            if (rel > 1e-7)
                o.fail(tag + " closed " + fmt(closed) + " vs Parseval " + fmt(engine));
            if (std::abs(mc.estimate - closed) > 4.0 * mc.std_error)
                o.fail(tag + " Monte Carlo " + fmt(mc.estimate) + " +- " + fmt(mc.std_error));
        }
    }
    double worst_d = 0.0;
    for (int n = 1; n <= 3; ++n) {
        for (int m = 1; m <= 3; ++m) {
            const auto cov = umvue::geometric_covariances(4, 0.5, n, m);
            for (const auto& e : cov.entries) {
                const double scale = std::max(std::abs(e.direct), 1e-300);
                const double rel = std::max(std::abs(e.closed_form - e.direct), std::abs(e.parseval - e.direct)) / scale;
                worst_d = std::max(worst_d, rel);
                if (!(rel <= 1e-7))
                    o.fail("(d) " + e.name + " n=" + std::to_string(n) + " m=" + std::to_string(m) + " closed " +
                           fmt(e.closed_form) + " direct " + fmt(e.direct));
            }
        }
    }
    if (o.pass)
        o.detail = "(a) max err " + fmt(worst_a) + "; (b) nu<=50 ok; (c) max closed/Parseval rel " + fmt(worst_c) +
                   "; (d) max rel " + fmt(worst_d);
    return o;
}

Outcome inversion() {
    Outcome o;
    double worst = 0.0;
    for (const auto& c : all_builtins()) {
        const auto d = parse_distribution(c.spec);
        const auto sys = build_system(d, 4);
        const auto& s = d.support();
        std::vector<double> points;
        if (d.is_discrete()) {
            const double lo = s.lower;
            const double hi = std::isfinite(s.upper) ? s.upper : lo + std::ceil(d.mean() + 3.0 * d.scale());
            for (int i = 0; i < 10; ++i)
                points.push_back(std::round(lo + (hi - lo) * i / 9.0));
        } else {
            const double lo = std::isfinite(s.lower) ? s.lower : d.mean() - 3.0 * d.scale();
            const double hi = std::isfinite(s.upper) ? s.upper : d.mean() + 3.0 * d.scale();
            for (int i = 0; i < 10; ++i)
                points.push_back(lo + (hi - lo) * (i + 0.5) / 10.0);
        }
        for (int k = 1; k <= 4; ++k) {
            for (double x : points) {
                const double r = inversion_residual(sys, k, x);
                worst = std::max(worst, r);
                if (r > 1e-6)
                    o.fail(c.spec + " k=" + std::to_string(k) + " x=" + fmt(x) + " residual " + fmt(r));
            }
        }
    }
    if (o.pass)
        o.detail = "max residual " + fmt(worst);
    return o;
}

Outcome poincare() {
    Outcome o;
    int checks = 0;
    for (const std::string spec : {"poisson:lambda=2", "negative_binomial:r=3,p=0.4", "geometric:p=0.4"}) {
        const auto d = parse_distribution(spec);
        for (const std::string gs : {"poly:0,0,1", "geom_pow:t=0.5"}) {
            const auto g = parse_function_spec(gs);
            const auto r = poincare_comparison(d, g, 4);
            for (std::size_t i = 0; i < r.sign_ok.size(); ++i) {
                ++checks;
                if (!r.sign_ok[i])
                    o.fail(spec + " " + gs + " n=" + std::to_string(i + 1) + " signed gap " + fmt(r.signed_gaps[i]));
            }
            if (r.sign_ok.size() != 4)
                o.fail(spec + " " + gs + " has no variance oracle");
        }
    }
    if (o.pass)
        o.detail = std::to_string(checks) + " sign checks";
    return o;
}

Outcome student_t() {
    Outcome o;
    const auto d = parse_distribution("student_t:n=15");
    double worst = 0.0;
    for (int k = 0; k <= 7; ++k) {
        const double closed = expected_q_weight(d, k);
        const double quad = expected_q_weight_engine(d, k);
        const double rel = std::abs(closed - quad) / std::abs(closed);
        worst = std::max(worst, rel);
        if (rel > 1e-7)
            o.fail("E[q^" + std::to_string(k) + "] closed " + fmt(closed) + " quadrature " + fmt(quad));
    }
    const auto g = parse_function_spec("poly:0,0,0,1");
    double prev = -infinity;
    double b3 = 0.0;
    for (int n = 1; n <= 3; ++n) {
        const auto b = variance_lower_bound(d, g, n);
        if (b.lower_bound < prev)
            o.fail("bound decreases at n=" + std::to_string(n));
        prev = b.lower_bound;
        b3 = b.lower_bound;
    }
    const auto mc = monte_carlo_variance(d, [](double x) { return x * x * x; }, 7, 1000000);
    if (!(b3 <= mc.estimate + 4.0 * mc.std_error))
        o.fail("bound " + fmt(b3) + " above Monte Carlo " + fmt(mc.estimate) + " + 4 * " + fmt(mc.std_error));
    const double exact = 15.0 * 15.0 * 15.0 * 15.0 / (13.0 * 11.0 * 9.0);
    if (std::abs(b3 - exact) > 1e-7 * exact)
        o.fail("bound " + fmt(b3) + " differs from E[X^6] = " + fmt(exact));
    if (o.pass)
        o.detail = "max E[q^k] rel " + fmt(worst) + "; bound " + fmt(b3) + " vs Monte Carlo " + fmt(mc.estimate) +
                   " +- " + fmt(mc.std_error);
    return o;
}

Outcome degenerate() {
    Outcome o;
    const auto d = parse_distribution("binomial:n=2,p=0.3");
    for (const std::string gs : {"poly:1", "poly:0,1", "poly:0,0,1", "poly:2,-1,3"}) {
        const auto g = parse_function_spec(gs);
        const auto b = variance_lower_bound(d, g, 5);
        for (const auto& t : b.terms) {
            if (t.k >= 3 && (t.sq_norm != 0.0 || t.term != 0.0 || !t.zero_norm))
                o.fail(gs + " k=" + std::to_string(t.k) + " sq_norm " + fmt(t.sq_norm));
        }
        const double var = *b.variance_oracle;
        if (std::abs(var - b.lower_bound) > 1e-7 * std::max(var, 1.0))
            o.fail(gs + " bound " + fmt(b.lower_bound) + " variance " + fmt(var));
    }
    if (o.pass)
        o.detail = "terms 3..5 vanish; bound equals variance";
    return o;
}

std::string run_cli(const std::string& args) {
    const std::string cmd = std::string(STEINPEARSON_CLI_PATH) + " " + args + " 2>&1";
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        return "<popen failed>";
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
        out.append(buf.data(), got);
    const int status = pclose(pipe);
    out += "\nstatus " + std::to_string(status);
    return out;
}

const std::vector<std::string>& cli_matrix() {
    static const std::vector<std::string> m = {
        "polys --dist discrete_uniform:n=4 --order 2",
        "polys --dist student_t:n=15 --order 7",
        "bound --dist poisson:lambda=2 --g poly:0,0,1 --order 2",
        "bound --dist gamma:a=3,lambda=2 --g exp:t=0.5 --order 3",
        "bound --dist binomial:n=2,p=0.3 --g poly:0,0,1 --order 5",
        "poincare --dist negative_binomial:r=3,p=0.4 --g geom_pow:t=0.5 --order 4",
        "parseval --dist poisson:lambda=2 --g exp:t=0.5",
        "parseval --dist negative_binomial:r=2,p=0.5 --g umvue_t:nu=2",
        "cov --dist negative_binomial:r=4,p=0.5 --g umvue_t:nu=4 --g2 umvue_w:nu=4,n=2",
        "check --dist normal:mu=0,sigma=1 --g poly:0,0,0,1 --order 4 --seed 11",
        "estimators --suite exp_log_rate --nu 2",
        "estimators --suite geometric_log_theta --nu 4 --theta 0.5 --n 2 --m 3 --seed 5",
        "bound --dist poisson:lambda=2 --g poly:0,0,1 --order 2 --format csv",
    };
    return m;
}

Outcome determinism() {
    Outcome o;
    std::vector<std::string> first;
    for (const auto& args : cli_matrix())
        first.push_back(run_cli(args));
    for (std::size_t i = 0; i < cli_matrix().size(); ++i) {
        const auto again = run_cli(cli_matrix()[i]);
        if (again != first[i])
            o.fail("output differs for: " + cli_matrix()[i]);
        if (first[i].find("\nstatus 0") == std::string::npos)
            o.fail("nonzero exit for: " + cli_matrix()[i]);
    }
    if (o.pass)
        o.detail = std::to_string(cli_matrix().size()) + " invocations byte-identical";
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"orthogonality", orthogonality},
        {"stein identity", stein_identity},
        {"equality certificate", equality_certificate},
        {"closed forms and UMVUE numbers", paper_numbers},
        {"rodrigues inversion", inversion},
        {"alternating comparison", poincare},
        {"student t", student_t},
        {"degenerate binomial", degenerate},
        {"determinism", determinism},
    };
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        all = all && o.pass;
        std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << " - "
                  << o.detail << std::endl;
    }
    return all ? 0 : 1;
}
