#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "gprg/basis.hpp"

namespace gprg {

/// One kernel eigenvalue together with the id of its eigenfunction.
struct SpectralMode {
    double lambda = 0.0;
    int mode = 0;
};

/// Ordered kernel spectrum: eigenvalues strictly positive, sorted
/// descending (stable, so ties keep their original order), each paired
/// with a basis mode id. Immutable after construction.
class Spectrum {
public:
    Spectrum(std::vector<SpectralMode> modes, std::shared_ptr<const EigenfunctionBasis> basis);

    std::size_t size() const { return modes_.size(); }
    const SpectralMode& operator[](std::size_t rank) const { return modes_[rank]; }
    const std::vector<SpectralMode>& modes() const { return modes_; }
    const std::shared_ptr<const EigenfunctionBasis>& basis() const { return basis_; }

    /// Largest basis mode id referenced by the spectrum.
    int max_mode_id() const { return max_mode_id_; }

    /// Sum of eigenvalues with rank >= from_rank (the integrated-out tail mass).
    double tail_sum(std::size_t from_rank) const;

    /// First `count` entries as a new spectrum over the same basis.
    Spectrum prefix(std::size_t count) const;

private:
    std::vector<SpectralMode> modes_;
    std::shared_ptr<const EigenfunctionBasis> basis_;
    int max_mode_id_ = 0;
};

/// lambda_k = lambda0 * k^(-exponent) over modes k = 1..num_modes.
/// Requires exponent > 1 so the tail mass stays summable.
Spectrum power_law_spectrum(double lambda0, double exponent, int num_modes,
                            std::shared_ptr<const EigenfunctionBasis> basis);

/// CSV with header `k,lambda`: k is the basis mode id, rows in descending
/// eigenvalue order.
void save_spectrum_csv(const Spectrum& spectrum, const std::filesystem::path& path);
Spectrum load_spectrum_csv(const std::filesystem::path& path,
                           std::shared_ptr<const EigenfunctionBasis> basis);

/// Mercer kernel K(x,y) = sum_k lambda_k phi_k(x) phi_k(y) over a finite
/// spectrum. Symmetric by construction; positive semi-definite because all
/// eigenvalues are positive.
class KernelFn {
public:
    explicit KernelFn(Spectrum spectrum);

    const Spectrum& spectrum() const { return spectrum_; }

    double operator()(double x, double y) const;

    /// Feature matrix Phi with Phi(i, j) = phi_{mode_j}(points[i]),
    /// columns following spectrum rank order.
    Eigen::MatrixXd feature_matrix(std::span<const double> points) const;

private:
    Spectrum spectrum_;
};

}  // namespace gprg
