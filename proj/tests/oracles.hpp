#pragma once

// Independent reference implementations used only by tests. These stay
// deliberately naive (closed forms, explicit moments, transparent loops)
// so they can serve as oracles for the library code.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Explicit probabilist's Hermite polynomials.
inline double he0(double) { return 1.0; }
inline double he1(double x) { return x; }
inline double he2(double x) { return x * x - 1.0; }
inline double he3(double x) { return x * x * x - 3.0 * x; }
inline double he4(double x) { return x * x * x * x - 6.0 * x * x + 3.0; }
inline double he5(double x) { return std::pow(x, 5) - 10.0 * std::pow(x, 3) + 15.0 * x; }

inline double hermite(int n, double x) {
    switch (n) {
        case 0: return he0(x);
        case 1: return he1(x);
        case 2: return he2(x);
        case 3: return he3(x);
        case 4: return he4(x);
        case 5: return he5(x);
        default: return std::nan("");
    }
}

// E[x^p] under N(0,1): (p-1)!! for even p, 0 for odd p.
inline double normal_moment(int p) {
    if (p % 2 == 1) return 0.0;
    double m = 1.0;
    for (int k = p - 1; k > 1; k -= 2) m *= static_cast<double>(k);
    return m;
}

// Transparent re-implementation of the greedy shell loop: consume modes
// from the smallest eigenvalue upward while unlearnable at the running
// ridge and within the epsilon budget. Returns the retained count and the
// final ridge.
struct GreedyResult {
    std::size_t retained = 0;
    double sigma_c2 = 0.0;
    bool epsilon_stopped = false;
};

inline GreedyResult greedy_flow(const std::vector<double>& lambdas_desc, double sigma2,
                                double eta, double epsilon) {
    GreedyResult r;
    r.sigma_c2 = sigma2;
    std::size_t i = lambdas_desc.size();
    while (i > 0) {
        const double lambda = lambdas_desc[i - 1];
        if (lambda >= r.sigma_c2 / eta) break;
        if (lambda > epsilon * r.sigma_c2) {
            r.epsilon_stopped = true;
            break;
        }
        r.sigma_c2 += lambda;
        --i;
    }
    r.retained = i;
    return r;
}

}  // namespace oracle
