#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gprg/spectrum.hpp"
#include "gprg/toy.hpp"

namespace gprg {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;      // invalid configuration
inline constexpr int kExitNumerical = 3;   // numerical failure
inline constexpr int kExitValidation = 4;  // validation / acceptance failure

struct OutputConfig {
    std::filesystem::path out_dir = "gprg_out";
    std::uint64_t seed = 12345;
    int threads = 0;
};

/// Source of the kernel spectrum for ek/flow runs: a power law or a CSV.
struct SpectrumConfig {
    std::string kind = "power_law";  // power_law | csv
    double lambda0 = 1.0;
    double exponent = 2.0;
    int modes = 16;
    std::string csv_path;
    std::string basis = "hermite_orthonormal";
    int max_mode = 0;  // 0 = derived from `modes` / the CSV contents
    int quadrature_order = kDefaultQuadratureOrder;

    Spectrum build() const;
    DataMeasure build_measure() const;
    void echo(std::vector<std::pair<std::string, std::string>>& kv) const;
};

/// Target expressed by coefficients against the basis: y = sum_k y_k phi_k.
struct TargetConfig {
    int ones_up_to = 0;          // y_k = 1 for k <= ones_up_to
    std::string coeffs;          // extra "k:v,k:v" entries (override ones)

    std::vector<std::pair<int, double>> parse() const;
    double coefficient(int mode) const;
    std::function<double(double)> build_fn(std::shared_ptr<const EigenfunctionBasis> basis) const;
};

struct EkRunConfig {
    OutputConfig out;
    SpectrumConfig spectrum;
    TargetConfig target;
    double eta = 0.0;
    double sigma2 = 0.0;
    bool strict_boundary = false;
};

struct FlowRunConfig {
    OutputConfig out;
    SpectrumConfig spectrum;
    double eta = 0.0;
    double sigma2 = 0.0;
    double epsilon = 0.05;
    std::string stop_rule = "learnability";  // learnability | count:N
    std::string granularity = "per-mode";    // per-mode | greedy
    bool weighted = false;
    std::string b_measure = "original";  // original | flowed
    bool use_mc = false;
    long num_samples = 200000;
    bool a_diagnostics = false;
};

struct ToyRunConfig {
    OutputConfig out;
    ToyConfig toy;
    std::string size_mode = "fixed";  // fixed | poisson
    std::string sweep;                // e.g. "lambda2=0:0.02:0.1", "lambda1=...", "n=..."
};

struct CumulantsRunConfig {
    OutputConfig out;
    std::string basis = "hermite_orthonormal";
    int max_mode = 0;
    int quadrature_order = kDefaultQuadratureOrder;
    std::string modes = "1,2";
    long num_samples = 1000000;
    std::string method = "quadrature";  // quadrature | mc
    int blocks = 50;
};

struct ValidateConfig {
    std::string only;  // substring filter over check names
    int quadrature_order = kDefaultQuadratureOrder;
};

int cmd_ek(const EkRunConfig& config);
int cmd_flow(const FlowRunConfig& config);
int cmd_toy(const ToyRunConfig& config);
int cmd_cumulants(const CumulantsRunConfig& config);
int cmd_validate(const ValidateConfig& config);

}  // namespace gprg
