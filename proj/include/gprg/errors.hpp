#pragma once

#include <stdexcept>
#include <string>

namespace gprg {

/// Thrown when a numerical procedure fails (factorization breakdown,
/// non-finite values, singular systems). Callers that map errors to
/// process exit codes treat this separately from configuration errors.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gprg
