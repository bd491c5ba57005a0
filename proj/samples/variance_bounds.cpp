// Variance lower bounds of increasing order for g(x) = e^{x/2} under Poisson(2).

#include <iostream>

#include "steinpearson/steinpearson.hpp"

int main() {
    using namespace steinpearson;
    const auto d = parse_distribution("poisson:lambda=2");
    const auto g = exp_spec(0.5);
    for (int n = 1; n <= 5; ++n) {
        const auto b = variance_lower_bound(d, g, n);
        std::cout << "n=" << n << "  bound=" << b.lower_bound << "  variance=" << *b.variance_oracle << '\n';
    }
    const auto s = parseval_variance(d, g);
    std::cout << "series: " << s.value << " after " << s.truncation_k << " terms (" << s.stop_reason << ")\n";
}
