#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "gprg/exec.hpp"
#include "gprg/gp.hpp"

namespace gprg {

enum class SizeMode { Poisson, FixedN };

struct QuenchedOptions {
    SizeMode size_mode = SizeMode::Poisson;
    long fixed_n = 0;          // FixedN dataset size; 0 = round(eta)
    bool observation_noise = false;  // add N(0, sigma2) noise to targets
    std::vector<int> tracked_modes;  // per-trial spectral projections (quadrature grid)
    bool empirical_projections = false;  // also average f * phi_k over the test points
    bool pointwise_stats = true;     // accumulate mean/stderr per test point
    Execution execution = Execution::Parallel;
    int threads = 0;
    GpSolver solver = GpSolver::Auto;
};

struct ModeProjectionStats {
    int mode = 0;
    double mean = 0.0, std_err = 0.0;                      // quadrature projection
    double empirical_mean = 0.0, empirical_std_err = 0.0;  // test-point average
    bool has_empirical = false;
};

/// Monte Carlo average of the GP posterior mean over random training-set
/// draws, with per-trial standard errors.
struct AveragedPredictor {
    std::vector<double> test_points;
    std::vector<double> mean;
    std::vector<double> std_err;
    long trials = 0;
    double eta = 0.0;
    double sigma2 = 0.0;
    std::uint64_t seed = 0;
    std::vector<ModeProjectionStats> projections;
};

/// Averages GP regression over `trials` dataset draws: trial t draws its
/// size (Poisson with mean eta, or fixed), draws inputs from the measure,
/// sets targets to target(x) (plus optional observation noise), and runs
/// the posterior-mean regression. Trial t is seeded by (seed, t), so
/// results do not depend on scheduling; the reduction runs in fixed chunk
/// order, so outputs are bit-identical for any thread count.
///
/// Empty test_points defaults to the measure's quadrature grid.
/// Size-zero draws contribute the prior mean (zero) and count as trials.
AveragedPredictor dataset_average_predictor(
    const KernelFn& kernel, const std::function<double(double)>& target,
    const DataMeasure& measure, double eta, double sigma2, long trials,
    std::vector<double> test_points, std::uint64_t seed, const QuenchedOptions& options = {});

/// CSV `x,mean,stderr` plus a `key = value` sidecar with the run parameters.
void save_averaged_predictor_csv(const AveragedPredictor& avg,
                                 const std::filesystem::path& csv_path,
                                 const std::filesystem::path& sidecar_path);

/// CSV `k,mean,stderr[,emp_mean,emp_stderr]` of the tracked projections.
void save_projection_csv(const AveragedPredictor& avg, const std::filesystem::path& csv_path);

}  // namespace gprg
