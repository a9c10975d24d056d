#include "gprg/hermite.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gprg {

namespace {

void check_order(int n, bool allow_large) {
    if (n < 0) throw std::invalid_argument("hermite order must be non-negative");
    if (n > kHermiteOptInOrder && !allow_large)
        throw std::invalid_argument("hermite order " + std::to_string(n) + " exceeds " +
                                    std::to_string(kHermiteOptInOrder) +
                                    "; pass allow_large to opt in");
}

}  // namespace

double hermite_probabilist(int n, double x, bool allow_large) {
    check_order(n, allow_large);
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int m = 1; m < n; ++m) {
        double next = x * cur - static_cast<double>(m) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double hermite_orthonormal(int n, double x, bool allow_large) {
    check_order(n, allow_large);
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int m = 1; m < n; ++m) {
        double next = (x * cur - std::sqrt(static_cast<double>(m)) * prev) /
                      std::sqrt(static_cast<double>(m + 1));
        prev = cur;
        cur = next;
    }
    return cur;
}

void hermite_orthonormal_all(int n, double x, double* out) {
    out[0] = 1.0;
    if (n == 0) return;
    out[1] = x;
    for (int m = 1; m < n; ++m) {
        out[m + 1] = (x * out[m] - std::sqrt(static_cast<double>(m)) * out[m - 1]) /
                     std::sqrt(static_cast<double>(m + 1));
    }
}

}  // namespace gprg
