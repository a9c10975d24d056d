#pragma once

#include <filesystem>
#include <vector>

#include "gprg/spectrum.hpp"

namespace gprg {

/// Parameters of the large-dataset limit in which per-mode closed forms
/// hold: mean dataset size eta and ridge sigma2, entering only through
/// the ratio sigma2 / eta.
struct EKParams {
    double eta = 0.0;
    double sigma2 = 0.0;

    double threshold() const;  // sigma2 / eta
};

/// Closed-form average prediction for one mode: lambda * y / (lambda + sigma2/eta).
double ek_mode_predictor(double lambda, double y, const EKParams& params);

/// Closed-form averaged fluctuation of one mode:
/// 1 / (1/lambda + eta/sigma2) = (sigma2/eta) * lambda / (lambda + sigma2/eta);
/// zero for a frozen mode (lambda = 0).
double ek_mode_variance(double lambda, const EKParams& params);

struct LearnabilityRow {
    int mode = 0;
    double lambda = 0.0;
    double ratio = 0.0;  // lambda * eta / sigma2
    bool learnable = false;
};

struct LearnabilityReport {
    std::vector<LearnabilityRow> rows;  // spectrum rank order
    double threshold = 0.0;             // sigma2 / eta
};

/// Classifies each mode against the threshold sigma2/eta. A mode exactly at
/// the threshold counts as learnable unless strict_boundary is set.
LearnabilityReport classify_learnability(const Spectrum& spectrum, const EKParams& params,
                                         bool strict_boundary = false);

/// CSV `k,lambda,ratio,learnable`.
void save_learnability_csv(const LearnabilityReport& report, const std::filesystem::path& path);

}  // namespace gprg
