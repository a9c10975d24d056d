#pragma once

#include <functional>
#include <memory>
#include <string>

#include "gprg/measure.hpp"

namespace gprg {

/// A family of basis functions phi_k, k = 1..max_mode, intended to be
/// orthonormal under some DataMeasure. `eval_all` is an optional batch
/// evaluator (modes 1..kmax in one pass) used in hot loops.
struct EigenfunctionBasis {
    std::string name;
    int max_mode = 0;
    std::function<double(int, double)> eval;
    std::function<void(double, int, double*)> eval_all;  // out[j] = phi_{j+1}(x), j < kmax

    double operator()(int k, double x) const;

    /// out[j] = phi_{j+1}(x) for j = 0..kmax-1, via eval_all when available.
    void evaluate(double x, int kmax, double* out) const;
};

/// Normalized Hermite basis: phi_k = He_k / sqrt(k!), orthonormal under
/// the standard normal measure. Mode ids start at 1, so every mode has
/// zero mean under N(0,1).
std::shared_ptr<const EigenfunctionBasis> hermite_basis(int max_mode);

/// Unnormalized probabilist's Hermite polynomials (He_k has norm k! under
/// N(0,1)); mostly useful for exercising orthonormality diagnostics.
std::shared_ptr<const EigenfunctionBasis> hermite_basis_unnormalized(int max_mode);

/// Looks up a built-in basis by name ("hermite_orthonormal", "hermite_unnormalized").
std::shared_ptr<const EigenfunctionBasis> basis_by_name(const std::string& name, int max_mode);

struct OrthonormalityReport {
    double max_abs_deviation = 0.0;  // max |Gram - identity| entrywise
    int k = 0, q = 0;                // offending pair
    double tolerance = 0.0;
    bool ok = false;
};

/// Checks the Gram matrix of modes 1..kmax against the identity under the
/// given measure; reports the worst entry.
OrthonormalityReport check_orthonormality(const EigenfunctionBasis& basis,
                                          const DataMeasure& measure, int kmax, double tol);

}  // namespace gprg
