#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gprg/basis.hpp"
#include "gprg/exec.hpp"
#include "gprg/measure.hpp"

namespace gprg {

/// Draws from the pushforward of the data measure through the basis:
/// values(i, j) = phi_{modes[j]}(x_i) with x_i ~ measure.
struct FeatureSample {
    Eigen::MatrixXd values;  // num_samples x modes.size()
    std::vector<int> modes;
    std::uint64_t seed = 0;

    Eigen::Index column(int mode) const;  // throws if the mode is absent
};

FeatureSample sample_features(const EigenfunctionBasis& basis, const DataMeasure& measure,
                              std::vector<int> modes, long num_samples, std::uint64_t seed,
                              Execution execution = Execution::Parallel, int threads = 0);

struct Estimate {
    double value = 0.0;
    double std_err = 0.0;
};

struct UrsellOptions {
    int jackknife_blocks = 50;
};

/// Connected fourth moment U = <abcd> - <ab><cd> - <ac><bd> - <ad><bc> of the
/// centered feature columns, with a delete-block jackknife standard error.
/// Indices are canonicalized (sorted), so the estimate is exactly symmetric
/// under permutations.
Estimate ursell4(const FeatureSample& sample, std::array<int, 4> modes,
                 const UrsellOptions& options = {});

/// Fourth Ursell functions over index 4-tuples, stored under sorted keys.
class CumulantTable {
public:
    struct Entry {
        Estimate estimate;
        std::string method;
    };

    void insert(std::array<int, 4> key, Estimate estimate, std::string method);
    bool contains(std::array<int, 4> key) const;
    /// Throws std::out_of_range naming the tuple when absent.
    const Entry& at(std::array<int, 4> key) const;

    const std::map<std::array<int, 4>, Entry>& entries() const { return entries_; }
    long sample_size = 0;

    /// CSV `k1,k2,k3,k4,estimate,stderr,method`.
    void save_csv(const std::filesystem::path& path) const;

private:
    std::map<std::array<int, 4>, Entry> entries_;
};

/// Exact (quadrature) fourth Ursell functions of the basis modes under the
/// measure. An optional positive weight profile on the grid replaces the
/// measure's weights (used when cumulants are taken against a reweighted
/// measure); it is normalized internally.
CumulantTable ursell4_table_quadrature(const EigenfunctionBasis& basis,
                                       const DataMeasure& measure,
                                       const std::vector<std::array<int, 4>>& tuples,
                                       const Eigen::VectorXd* weight_override = nullptr);

/// Monte Carlo table over the same tuples with jackknife errors.
CumulantTable ursell4_table_mc(const FeatureSample& sample,
                               const std::vector<std::array<int, 4>>& tuples,
                               const UrsellOptions& options = {});

/// Tuples (k1, k2, q, q) for k1 <= k2 in `lesser`, and (k1, k2, k3, q).
std::vector<std::array<int, 4>> shell_b_tuples(std::span<const int> lesser, int q);
std::vector<std::array<int, 4>> shell_a_tuples(std::span<const int> lesser, int q);

/// A function known both as values on the measure grid and as a callable.
struct GridFn {
    Eigen::VectorXd on_grid;
    std::function<double(double)> fn;
};

/// Variance-shift Hermite form of one integrated mode q against the lesser
/// modes: B(x) = 1/2 sum_{k1,k2} U_{k1 k2 q q} (phi_k1 phi_k2 - delta_{k1 k2}).
/// Mean-zero under the measure when the U entries are exact.
GridFn b_form(const CumulantTable& table, std::span<const int> lesser, int q,
              const EigenfunctionBasis& basis, const DataMeasure& measure);

/// Mean-shift form: A(x) = 1/6 sum U_{k1 k2 k3 q} He3(phi_k1, phi_k2, phi_k3)
/// with He3(a,b,c) = abc - d_ab c - d_bc a - d_ac b.
GridFn a_form(const CumulantTable& table, std::span<const int> lesser, int q,
              const EigenfunctionBasis& basis, const DataMeasure& measure);

struct ModeGaussianity {
    int mode = 0;
    double variance = 0.0;
    double excess_kurtosis = 0.0;
    double std_err = 0.0;
    bool flagged = false;     // beyond 3 standard errors from 0
    bool degenerate = false;  // (near-)zero variance column
};

struct GaussianityReport {
    std::vector<ModeGaussianity> modes;
    Eigen::MatrixXd squared_corr;  // corr(phi_a^2, phi_b^2)
    double max_offdiag_sq_corr = 0.0;
    int pair_a = 0, pair_b = 0;
};

/// Per-mode excess kurtosis with jackknife errors plus a squared-feature
/// correlation matrix as a dependence diagnostic.
GaussianityReport gaussianity_report(const FeatureSample& sample,
                                     const UrsellOptions& options = {});

void save_gaussianity_csv(const GaussianityReport& report, const std::filesystem::path& path);

}  // namespace gprg
