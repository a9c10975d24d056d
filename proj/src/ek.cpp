#include "gprg/ek.hpp"

#include <stdexcept>

#include "gprg/csvio.hpp"

namespace gprg {

double EKParams::threshold() const {
    if (!(eta > 0.0) || !(sigma2 > 0.0))
        throw std::invalid_argument("EK parameters eta and sigma2 must be strictly positive");
    return sigma2 / eta;
}

double ek_mode_predictor(double lambda, double y, const EKParams& params) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    if (lambda == 0.0) return 0.0;
    return lambda * y / (lambda + params.threshold());
}

double ek_mode_variance(double lambda, const EKParams& params) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    if (lambda == 0.0) return 0.0;
    const double t = params.threshold();
    return t * lambda / (lambda + t);
}

LearnabilityReport classify_learnability(const Spectrum& spectrum, const EKParams& params,
                                         bool strict_boundary) {
    LearnabilityReport report;
    // Computed once so every row compares against identical rounding.
    report.threshold = params.threshold();
    report.rows.reserve(spectrum.size());
    for (const auto& m : spectrum.modes()) {
        LearnabilityRow row;
        row.mode = m.mode;
        row.lambda = m.lambda;
        row.ratio = m.lambda * params.eta / params.sigma2;
        row.learnable = strict_boundary ? (m.lambda > report.threshold)
                                        : (m.lambda >= report.threshold);
        report.rows.push_back(row);
    }
    return report;
}

void save_learnability_csv(const LearnabilityReport& report, const std::filesystem::path& path) {
    CsvWriter csv({"k", "lambda", "ratio", "learnable"});
    for (const auto& row : report.rows) {
        csv.append(row.mode);
        csv.append(row.lambda);
        csv.append(row.ratio);
        csv.append_raw(row.learnable ? "1" : "0");
        csv.end_row();
    }
    csv.save(path);
}

}  // namespace gprg
