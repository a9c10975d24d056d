#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gprg/cumulants.hpp"
#include "gprg/ek.hpp"
#include "gprg/quenched.hpp"
#include "gprg/spectrum.hpp"

namespace gprg {

/// Configuration of the rank-2 Hermite model: kernel
/// K(x,y) = lambda1 x y + lambda2 (x^2-1)(y^2-1) on N(0,1) inputs, learning
/// the fifth Hermite polynomial with ridge sigma2 from n-point datasets.
struct ToyConfig {
    double lambda1 = 1.0;
    double lambda2 = 0.1;
    double sigma2 = 400.0;
    double eta = 0.0;  // 0 = identify eta with n
    long n = 100;
    long trials = 20000;
    long n_test = 1000;
    std::uint64_t seed = 1;
    int quadrature_order = kDefaultQuadratureOrder;
    SizeMode size_mode = SizeMode::FixedN;
    Execution execution = Execution::Parallel;
    int threads = 0;

    double effective_eta() const { return eta > 0.0 ? eta : static_cast<double>(n); }

    /// Throws on invalid values; returns soft warnings (regime checks).
    std::vector<std::string> validate() const;
};

struct ToyResult {
    Estimate f1_experiment;          // projection onto phi_1 = x via quadrature
    Estimate f1_experiment_testset;  // same, averaged over the fixed test set
    double f1_theory_leading = 0.0;
    double f1_theory_exact_saddle = 0.0;
    std::vector<double> weight_x, weight_w;  // 1 - (lambda2/sigma2) He2(x)^2
    double overlap_x_he5_he2sq = 0.0;  // quadrature value of x He5 He2^2
    double overlap_x2_he2sq = 0.0;     // quadrature value of x^2 He2^2
    std::vector<std::string> warnings;
};

/// The rank-2 kernel, represented on the orthonormal Hermite basis.
/// He2 has norm sqrt(2) under N(0,1), so the operator eigenvalues are
/// lambda1 (mode 1) and 2*lambda2 (mode 2); pointwise evaluation matches
/// lambda1 x y + lambda2 (x^2-1)(y^2-1) exactly. lambda2 = 0 degenerates
/// to the rank-1 linear kernel.
KernelFn toy_kernel(double lambda1, double lambda2);

/// Leading-order prediction for the learned linear coefficient:
/// -(lambda1 / (lambda1 + sigma2/eta)) * (overlap * lambda2 / sigma2),
/// with the overlap integral of x He5 He2^2 evaluated by quadrature.
double toy_theory_f1_leading(const ToyConfig& config);

/// Exact extremum of the weighted quadratic loss over the linear mode:
///   f1 = -overlap * (lambda2/sigma2) * lambda1
///        / (lambda1 (1 - m * lambda2/sigma2) + sigma2/eta)
/// with overlap = integral of x He5 He2^2 and m = integral of x^2 He2^2,
/// both computed by quadrature at runtime. Throws NumericalError when the
/// denominator is non-positive (weight no longer perturbative).
double toy_theory_f1_exact_saddle(const ToyConfig& config);

/// Monte Carlo experiment: per trial draw n inputs from N(0,1), regress
/// He5 values with the toy kernel and ridge sigma2, and project the
/// posterior mean onto the linear mode. Returns experiment and theory
/// values side by side.
ToyResult run_toy_experiment(const ToyConfig& config);

struct WeightedEkResult {
    std::vector<int> modes;       // mode ids, spectrum rank order
    Eigen::VectorXd prediction;   // saddle of the weighted quadratic action
    bool weight_nonpositive = false;
};

/// Mode predictions under a spatially weighted quadratic loss: solves
/// M f = b with M_kq = delta_kq / lambda_k + (eta/sigma2) <phi_k phi_q W>
/// and b_k = (eta/sigma2) <phi_k y W>. W = 1 reduces to the per-mode
/// closed form. General-purpose companion to the flow's effective theory.
WeightedEkResult weighted_ek_predictor(const Spectrum& spectrum,
                                       const std::function<double(double)>& target,
                                       const Eigen::VectorXd& weight_on_grid,
                                       const DataMeasure& measure, const EKParams& params);

struct WeightComparison {
    double coef_perturbative = 0.0;  // (W_flow - 1) projected onto He2
    double coef_exact = 0.0;         // (W_toy - 1) projected onto He2
    double ratio = 0.0;
};

/// Diagnostic comparing the perturbative weight flow (single integrated
/// mode) against the model's exact weight, via their components along
/// He2(x). Normalization conventions differ between the two, so this is
/// reported, not asserted.
WeightComparison toy_weight_comparison(const ToyConfig& config);

void save_toy_summary_csv(const ToyResult& result, const std::filesystem::path& path);
void save_weight_profile_csv(const ToyResult& result, const std::filesystem::path& path);

struct ToySweepRow {
    double value = 0.0;  // swept parameter value
    Estimate f1;
    double f1_theory = 0.0;
};

void save_toy_sweep_csv(const std::string& param, const std::vector<ToySweepRow>& rows,
                        const std::filesystem::path& path);

}  // namespace gprg
