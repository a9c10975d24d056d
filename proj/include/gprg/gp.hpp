#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gprg/measure.hpp"
#include "gprg/spectrum.hpp"

namespace gprg {

/// One training-set draw: n inputs with target values.
struct Dataset {
    std::vector<double> x;
    std::vector<double> y;

    std::size_t size() const { return x.size(); }
};

struct PosteriorPrediction {
    std::vector<double> test_points;
    std::vector<double> mean;
    std::optional<std::vector<double>> variance;
};

/// Which linear-algebra route solves the regression system.
///  - Dense: factorize the n x n kernel matrix (LLT with jitter escalation).
///  - LowRank: factorize the K x K feature-space system; algebraically
///    identical for a rank-K kernel and much cheaper when K << n.
///  - Auto: LowRank when 4*K <= n, Dense otherwise.
enum class GpSolver { Auto, Dense, LowRank };

struct GpOptions {
    GpSolver solver = GpSolver::Auto;
    bool compute_variance = false;
    /// Per-point noise variances replacing sigma2 * I on the diagonal
    /// (spatially varying ridge). Empty = homoscedastic sigma2.
    std::vector<double> per_point_noise;
};

/// n x n matrix K(x_i, x_j); exactly symmetric. Throws NumericalError with
/// the offending (i, j) if an entry is not finite.
Eigen::MatrixXd kernel_matrix(const KernelFn& kernel, std::span<const double> points);

/// Posterior mean (and optionally variance) of GP regression with ridge
/// sigma2, evaluated at test_points. The n = 0 dataset returns the prior
/// mean (zero everywhere).
PosteriorPrediction gp_posterior_mean(const KernelFn& kernel, const Dataset& data, double sigma2,
                                      std::vector<double> test_points,
                                      const GpOptions& options = {});

/// Coefficients of the posterior mean in the kernel's eigenbasis, ordered by
/// spectrum rank: mean(x) = sum_j coef[j] * phi_{mode_j}(x). This is what the
/// two solver routes share; gp_posterior_mean evaluates it at test points.
Eigen::VectorXd gp_posterior_coefficients(const KernelFn& kernel, const Dataset& data,
                                          double sigma2, const GpOptions& options = {});

/// Spectral coefficient of a function against basis mode k: integral of
/// f * phi_k under the measure (quadrature grid or sample average).
double project_onto_mode(const std::function<double(double)>& f, const EigenfunctionBasis& basis,
                         int k, const DataMeasure& measure);

/// Same, for values already evaluated on the measure's grid.
double project_onto_mode(std::span<const double> values_on_grid, const EigenfunctionBasis& basis,
                         int k, const DataMeasure& measure);

}  // namespace gprg
