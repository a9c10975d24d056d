#include "gprg/basis.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gprg/hermite.hpp"

namespace gprg {

double EigenfunctionBasis::operator()(int k, double x) const {
    if (k < 1 || k > max_mode)
        throw std::invalid_argument("basis mode " + std::to_string(k) + " out of range 1.." +
                                    std::to_string(max_mode));
    return eval(k, x);
}

void EigenfunctionBasis::evaluate(double x, int kmax, double* out) const {
    if (kmax < 1 || kmax > max_mode)
        throw std::invalid_argument("basis mode " + std::to_string(kmax) + " out of range 1.." +
                                    std::to_string(max_mode));
    if (eval_all) {
        eval_all(x, kmax, out);
        return;
    }
    for (int k = 1; k <= kmax; ++k) out[k - 1] = eval(k, x);
}

std::shared_ptr<const EigenfunctionBasis> hermite_basis(int max_mode) {
    if (max_mode < 1) throw std::invalid_argument("max_mode must be positive");
    auto b = std::make_shared<EigenfunctionBasis>();
    b->name = "hermite_orthonormal";
    b->max_mode = max_mode;
    b->eval = [](int k, double x) { return hermite_orthonormal(k, x, /*allow_large=*/true); };
    b->eval_all = [](double x, int kmax, double* out) {
        // Modes start at he_1; one recurrence pass, no scratch storage.
        double prev = 1.0, cur = x;
        out[0] = x;
        for (int m = 1; m < kmax; ++m) {
            const double next = (x * cur - std::sqrt(static_cast<double>(m)) * prev) /
                                std::sqrt(static_cast<double>(m + 1));
            prev = cur;
            cur = next;
            out[m] = cur;
        }
    };
    return b;
}

std::shared_ptr<const EigenfunctionBasis> hermite_basis_unnormalized(int max_mode) {
    if (max_mode < 1) throw std::invalid_argument("max_mode must be positive");
    auto b = std::make_shared<EigenfunctionBasis>();
    b->name = "hermite_unnormalized";
    b->max_mode = max_mode;
    b->eval = [](int k, double x) { return hermite_probabilist(k, x, /*allow_large=*/true); };
    return b;
}

std::shared_ptr<const EigenfunctionBasis> basis_by_name(const std::string& name, int max_mode) {
    if (name == "hermite_orthonormal") return hermite_basis(max_mode);
    if (name == "hermite_unnormalized") return hermite_basis_unnormalized(max_mode);
    throw std::invalid_argument("unknown basis '" + name + "'");
}

OrthonormalityReport check_orthonormality(const EigenfunctionBasis& basis,
                                          const DataMeasure& measure, int kmax, double tol) {
    if (kmax < 1 || kmax > basis.max_mode)
        throw std::invalid_argument("kmax out of range for basis");

    const auto& nodes = measure.nodes();
    const auto& weights = measure.weights();
    std::vector<double> phi(static_cast<std::size_t>(kmax));
    std::vector<double> gram(static_cast<std::size_t>(kmax) * kmax, 0.0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        basis.evaluate(nodes[i], kmax, phi.data());
        for (int a = 0; a < kmax; ++a)
            for (int b = a; b < kmax; ++b)
                gram[static_cast<std::size_t>(a) * kmax + b] += weights[i] * phi[a] * phi[b];
    }

    OrthonormalityReport report;
    report.tolerance = tol;
    for (int a = 0; a < kmax; ++a) {
        for (int b = a; b < kmax; ++b) {
            const double target = (a == b) ? 1.0 : 0.0;
            const double dev = std::abs(gram[static_cast<std::size_t>(a) * kmax + b] - target);
            if (dev > report.max_abs_deviation) {
                report.max_abs_deviation = dev;
                report.k = a + 1;
                report.q = b + 1;
            }
        }
    }
    report.ok = report.max_abs_deviation <= tol;
    return report;
}

}  // namespace gprg
