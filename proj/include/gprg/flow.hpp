#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gprg/cumulants.hpp"
#include "gprg/measure.hpp"
#include "gprg/spectrum.hpp"

namespace gprg {

/// One momentum shell: spectrum ranks to integrate out (taken from the
/// small-eigenvalue end) and their total eigenvalue mass.
struct Shell {
    std::vector<std::size_t> ranks;  // descending rank order (largest rank first)
    double delta_c = 0.0;
};

struct StopRule {
    enum class Kind { Learnability, Count };
    Kind kind = Kind::Learnability;
    std::size_t keep = 0;

    static StopRule learnability() { return {Kind::Learnability, 0}; }
    static StopRule count(std::size_t keep) { return {Kind::Count, keep}; }
};

/// Default is one mode per shell. Greedy packs modes into shells up to the
/// epsilon budget; only the ridge flow may use it, where additivity makes
/// the grouping exact.
enum class ShellGranularity { PerMode, Greedy };

enum class StopReason {
    Exhausted,          // every mode was integrated out
    LearnableMode,      // next mode has lambda >= sigma_c^2 / eta
    EpsilonBreakdown,   // next (unlearnable) mode alone exceeds epsilon * sigma_c^2
    CountReached,
};

std::string to_string(StopReason reason);

struct ShellSchedule {
    std::vector<Shell> shells;
    double epsilon = 0.0;
    StopReason stop_reason = StopReason::Exhausted;
    /// Ranks integrated despite being learnable at consumption time
    /// (possible only under a Count rule); callers surface a warning.
    std::vector<std::size_t> learnable_integrated;
};

/// Groups the unlearnable tail into shells, smallest eigenvalue first,
/// tracking the running ridge sigma_c^2 = sigma2 + (mass consumed so far).
/// Every shell obeys delta_c <= epsilon * sigma_c^2 at consumption time.
/// Learnability stops before the first mode with lambda >= sigma_c^2/eta;
/// an unlearnable mode that alone exceeds the epsilon budget stops the
/// schedule (EpsilonBreakdown), except that if the very first candidate
/// does so, scheduling fails with advice to raise epsilon or sigma2.
ShellSchedule schedule_shells(const Spectrum& spectrum, double sigma2, double eta, double epsilon,
                              const StopRule& stop, ShellGranularity granularity = ShellGranularity::PerMode);

struct ShellRecord {
    int step = 0;
    std::size_t kappa = 0;  // modes remaining after the step
    double delta_c = 0.0;
    double c_total = 0.0;
    double sigma_c2 = 0.0;
    double min_remaining_lambda = 0.0;
    std::string flag;
};

/// Running state of a flow: cutoff position, accumulated mass, renormalized
/// ridge, spatial weight on the measure grid (empty = identically 1), and
/// the per-shell log.
struct FlowState {
    std::size_t kappa = 0;
    double c_total = 0.0;
    double sigma_c2 = 0.0;
    double sigma2_bare = 0.0;
    Eigen::VectorXd weight;  // empty for the ridge-only flow
    std::vector<ShellRecord> log;
    bool perturbative_breakdown = false;
};

FlowState make_flow_state(const Spectrum& spectrum, double sigma2);

/// Ridge-only step: sigma_c^2 += delta_c, cutoff moves down, weight unchanged.
/// min_remaining_lambda is recorded in the log row when provided.
FlowState gaussian_flow_step(FlowState state, const Shell& shell,
                             double min_remaining_lambda = 0.0);

/// Weighted step for a single-mode shell: W <- W - (2 delta_c / sigma_c^2) B
/// with the pre-step sigma_c^2, then the ridge update. B must have
/// quadrature mean 0 (within 1e-8) and match the grid. Negative weight
/// values mark the state perturbative-breakdown but do not stop the flow.
FlowState weighted_flow_step(FlowState state, const Shell& shell, const Eigen::VectorXd& b_on_grid,
                             const DataMeasure& measure, double min_remaining_lambda = 0.0);

/// The renormalized theory: retained spectrum prefix, flowed ridge, and the
/// spatial weight (grid values plus a callable when the flow built one).
/// Weighted regression consumes W as a per-point ridge sigma_c^2 / W(x).
struct EffectiveTheory {
    Spectrum spectrum;
    double sigma_c2 = 0.0;
    Eigen::VectorXd weight;  // empty = identity
    std::function<double(double)> weight_fn;  // null = identity
};

/// Per-point noise variances sigma_c^2 / W(x_i) for regression under the
/// effective theory. Throws NumericalError where W is not strictly positive.
std::vector<double> effective_point_noise(const EffectiveTheory& theory,
                                          std::span<const double> points);

EffectiveTheory effective_theory(const FlowState& state, const Spectrum& spectrum,
                                 std::function<double(double)> weight_fn = nullptr);

struct FlowResult {
    ShellSchedule schedule;
    FlowState state;
    EffectiveTheory theory;
};

FlowResult run_gaussian_flow(const Spectrum& spectrum, double sigma2, double eta, double epsilon,
                             const StopRule& stop,
                             ShellGranularity granularity = ShellGranularity::PerMode);

enum class BMeasureMode {
    Original,  // cumulants always against the data measure (default)
    Flowed,    // recompute against the measure reweighted by the current W
};

struct WeightedFlowOptions {
    bool use_mc = false;          // Monte Carlo cumulants instead of quadrature
    long num_samples = 200000;    // MC path
    std::uint64_t seed = 1;
    int jackknife_blocks = 50;
    BMeasureMode b_measure = BMeasureMode::Original;
    bool a_diagnostics = false;   // record the mean-shift form per step
    Execution execution = Execution::Parallel;
    int threads = 0;
};

struct AShiftDiagnostic {
    int step = 0;
    int mode = 0;        // integrated mode id
    double l2_norm = 0.0;
    double max_abs = 0.0;
};

struct WeightedFlowResult {
    ShellSchedule schedule;
    FlowState state;
    EffectiveTheory theory;
    std::vector<AShiftDiagnostic> a_diagnostics;
};

/// Single-mode shells; per step the variance-shift form B of the integrated
/// mode against the still-retained modes drives the weight update. Fourth
/// cumulants come from quadrature (exact, 1D measures) or Monte Carlo.
WeightedFlowResult run_weighted_flow(const Spectrum& spectrum, double sigma2, double eta,
                                     double epsilon, const StopRule& stop,
                                     const DataMeasure& measure,
                                     const WeightedFlowOptions& options = {});

/// Trajectory CSV `step,kappa,delta_c,c_total,sigma_c2,min_remaining_lambda,flag`.
void save_trajectory_csv(const FlowState& state, const std::filesystem::path& path);

/// Spectrum CSV + `key = value` sidecar (+ weight grid CSV `x,w` when present).
void save_effective_theory(const EffectiveTheory& theory, const StopReason reason,
                           const std::filesystem::path& spectrum_csv,
                           const std::filesystem::path& sidecar,
                           const std::optional<std::filesystem::path>& weight_csv,
                           const DataMeasure* measure);

}  // namespace gprg
