#include "gprg/flow.hpp"

#include <algorithm>
#include <span>
#include <cmath>
#include <stdexcept>

#include "gprg/csvio.hpp"
#include "gprg/errors.hpp"

namespace gprg {

std::string to_string(StopReason reason) {
    switch (reason) {
        case StopReason::Exhausted: return "exhausted";
        case StopReason::LearnableMode: return "learnable-mode";
        case StopReason::EpsilonBreakdown: return "epsilon-breakdown";
        case StopReason::CountReached: return "count-reached";
    }
    return "unknown";
}

ShellSchedule schedule_shells(const Spectrum& spectrum, double sigma2, double eta, double epsilon,
                              const StopRule& stop, ShellGranularity granularity) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
    if (stop.kind == StopRule::Kind::Count && stop.keep > spectrum.size())
        throw std::invalid_argument("count stop rule keeps more modes than the spectrum has");

    ShellSchedule schedule;
    schedule.epsilon = epsilon;
    schedule.stop_reason = StopReason::Exhausted;

    double sigma_c2 = sigma2;
    std::size_t remaining = spectrum.size();

    while (true) {
        if (stop.kind == StopRule::Kind::Count && remaining == stop.keep) {
            schedule.stop_reason = StopReason::CountReached;
            break;
        }
        if (remaining == 0) {
            schedule.stop_reason = StopReason::Exhausted;
            break;
        }

        // sigma_c2 is the running ridge at the time this shell is consumed;
        // every mode in the shell is checked against it.
        Shell shell;
        const double budget = epsilon * sigma_c2;
        const double threshold = sigma_c2 / eta;
        bool stopped = false;
        while (remaining - shell.ranks.size() > 0) {
            if (stop.kind == StopRule::Kind::Count &&
                remaining - shell.ranks.size() == stop.keep) {
                schedule.stop_reason = StopReason::CountReached;
                stopped = true;
                break;
            }
            const std::size_t rank = remaining - shell.ranks.size() - 1;
            const double lambda = spectrum[rank].lambda;
            if (stop.kind == StopRule::Kind::Learnability && lambda >= threshold) {
                // Only a fresh-shell check is final: a mid-shell hit gets
                // re-examined against the updated ridge, so the retained set
                // does not depend on how modes are grouped into shells.
                if (shell.ranks.empty()) {
                    schedule.stop_reason = StopReason::LearnableMode;
                    stopped = true;
                }
                break;
            }
            if (shell.delta_c + lambda > budget) {
                if (shell.ranks.empty()) {
                    if (stop.kind == StopRule::Kind::Count)
                        throw std::invalid_argument(
                            "count stop rule cannot be honored: mode with lambda = " +
                            std::to_string(lambda) + " alone exceeds epsilon * sigma_c^2 = " +
                            std::to_string(budget) + "; raise epsilon or sigma2");
                    if (schedule.shells.empty())
                        throw std::invalid_argument(
                            "the smallest eigenvalue " + std::to_string(lambda) +
                            " already exceeds epsilon * sigma^2 = " + std::to_string(budget) +
                            "; raise epsilon or sigma2");
                    schedule.stop_reason = StopReason::EpsilonBreakdown;
                    stopped = true;
                }
                break;  // close this shell; the next one sees a larger budget
            }
            if (stop.kind == StopRule::Kind::Count && lambda >= threshold)
                schedule.learnable_integrated.push_back(rank);
            shell.ranks.push_back(rank);
            shell.delta_c += lambda;
            if (granularity == ShellGranularity::PerMode) break;
        }

        const bool progressed = !shell.ranks.empty();
        if (progressed) {
            sigma_c2 += shell.delta_c;
            remaining -= shell.ranks.size();
            schedule.shells.push_back(std::move(shell));
        }
        if (stopped) break;
        if (!progressed) throw std::logic_error("shell scheduling made no progress");
    }
    return schedule;
}

FlowState make_flow_state(const Spectrum& spectrum, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    FlowState state;
    state.kappa = spectrum.size();
    state.sigma_c2 = sigma2;
    state.sigma2_bare = sigma2;
    return state;
}

namespace {

void check_shell(const FlowState& state, const Shell& shell) {
    if (shell.ranks.empty()) return;
    std::size_t expected = state.kappa;
    for (std::size_t rank : shell.ranks) {
        if (rank != expected - 1)
            throw std::invalid_argument("shell ranks are not the tail of the current spectrum");
        --expected;
    }
}

void append_record(FlowState& state, double delta_c, double min_remaining_lambda,
                   std::string flag) {
    ShellRecord rec;
    rec.step = static_cast<int>(state.log.size()) + 1;
    rec.kappa = state.kappa;
    rec.delta_c = delta_c;
    rec.c_total = state.c_total;
    rec.sigma_c2 = state.sigma_c2;
    rec.min_remaining_lambda = min_remaining_lambda;
    rec.flag = std::move(flag);
    state.log.push_back(std::move(rec));
}

}  // namespace

FlowState gaussian_flow_step(FlowState state, const Shell& shell, double min_remaining_lambda) {
    check_shell(state, shell);
    state.sigma_c2 += shell.delta_c;
    state.c_total += shell.delta_c;
    state.kappa -= shell.ranks.size();
    append_record(state, shell.delta_c, min_remaining_lambda, "");
    return state;
}

FlowState weighted_flow_step(FlowState state, const Shell& shell, const Eigen::VectorXd& b_on_grid,
                             const DataMeasure& measure, double min_remaining_lambda) {
    if (shell.ranks.size() != 1)
        throw std::invalid_argument("weighted flow steps integrate a single mode per shell");
    check_shell(state, shell);
    if (state.weight.size() != static_cast<Eigen::Index>(measure.grid_size()))
        throw std::invalid_argument("flow state weight grid does not match the measure");
    if (b_on_grid.size() != state.weight.size())
        throw std::invalid_argument("B grid length mismatch: got " +
                                    std::to_string(b_on_grid.size()) + ", expected " +
                                    std::to_string(state.weight.size()));

    double b_mean = 0.0;
    for (Eigen::Index i = 0; i < b_on_grid.size(); ++i)
        b_mean += measure.weights()[static_cast<std::size_t>(i)] * b_on_grid[i];
    if (std::abs(b_mean) > 1e-8)
        throw std::invalid_argument("B must have quadrature mean 0 (got " +
                                    std::to_string(b_mean) + ")");

    // First-order update uses the pre-step ridge.
    state.weight -= (2.0 * shell.delta_c / state.sigma_c2) * b_on_grid;
    state.sigma_c2 += shell.delta_c;
    state.c_total += shell.delta_c;
    state.kappa -= 1;

    double w_mean = 0.0;
    for (Eigen::Index i = 0; i < state.weight.size(); ++i)
        w_mean += measure.weights()[static_cast<std::size_t>(i)] * state.weight[i];
    if (std::abs(w_mean - 1.0) > 1e-10)
        throw NumericalError("weight lost normalization: mean = " + format_double(w_mean));

    std::string flag;
    if ((state.weight.array() < 0.0).any()) {
        state.perturbative_breakdown = true;
        flag = "perturbative-breakdown";
    }
    append_record(state, shell.delta_c, min_remaining_lambda, std::move(flag));
    return state;
}

EffectiveTheory effective_theory(const FlowState& state, const Spectrum& spectrum,
                                 std::function<double(double)> weight_fn) {
    EffectiveTheory theory{spectrum.prefix(state.kappa), state.sigma_c2, state.weight,
                           std::move(weight_fn)};
    return theory;
}

FlowResult run_gaussian_flow(const Spectrum& spectrum, double sigma2, double eta, double epsilon,
                             const StopRule& stop, ShellGranularity granularity) {
    ShellSchedule schedule = schedule_shells(spectrum, sigma2, eta, epsilon, stop, granularity);
    FlowState state = make_flow_state(spectrum, sigma2);
    for (const Shell& shell : schedule.shells) {
        const std::size_t kappa_after = state.kappa - shell.ranks.size();
        const double min_lambda = kappa_after > 0 ? spectrum[kappa_after - 1].lambda : 0.0;
        state = gaussian_flow_step(std::move(state), shell, min_lambda);
    }
    EffectiveTheory theory = effective_theory(state, spectrum);
    return FlowResult{std::move(schedule), std::move(state), std::move(theory)};
}

WeightedFlowResult run_weighted_flow(const Spectrum& spectrum, double sigma2, double eta,
                                     double epsilon, const StopRule& stop,
                                     const DataMeasure& measure,
                                     const WeightedFlowOptions& options) {
    if (options.b_measure == BMeasureMode::Flowed && options.use_mc)
        throw std::invalid_argument("flowed-measure cumulants are only available on the quadrature path");

    ShellSchedule schedule =
        schedule_shells(spectrum, sigma2, eta, epsilon, stop, ShellGranularity::PerMode);
    FlowState state = make_flow_state(spectrum, sigma2);
    state.weight = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(measure.grid_size()));
    std::vector<AShiftDiagnostic> a_diagnostics;

    const auto& basis = spectrum.basis();

    // MC path: one feature sample over every mode id, drawn up front.
    FeatureSample mc_sample;
    if (options.use_mc) {
        std::vector<int> all_modes;
        all_modes.reserve(spectrum.size());
        for (const auto& m : spectrum.modes()) all_modes.push_back(m.mode);
        mc_sample = sample_features(*basis, measure, std::move(all_modes), options.num_samples,
                                    options.seed, options.execution, options.threads);
    }

    // Accumulated weight perturbation terms, for the callable form
    // W(x) = 1 - sum_s coef_s * B_s(x).
    struct WeightTerm {
        double coef;
        std::function<double(double)> b;
    };
    auto weight_terms = std::make_shared<std::vector<WeightTerm>>();

    UrsellOptions uopts;
    uopts.jackknife_blocks = options.jackknife_blocks;

    for (const Shell& shell : schedule.shells) {
        const std::size_t rank = shell.ranks.front();
        const int q = spectrum[rank].mode;

        std::vector<int> lesser;
        lesser.reserve(rank);
        for (std::size_t r = 0; r < rank; ++r) lesser.push_back(spectrum[r].mode);

        GridFn b;
        if (lesser.empty()) {
            b.on_grid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(measure.grid_size()));
            b.fn = [](double) { return 0.0; };
        } else if (options.use_mc) {
            const auto table = ursell4_table_mc(mc_sample, shell_b_tuples(lesser, q), uopts);
            b = b_form(table, lesser, q, *basis, measure);
        } else {
            const Eigen::VectorXd* override_w =
                options.b_measure == BMeasureMode::Flowed ? &state.weight : nullptr;
            const auto table =
                ursell4_table_quadrature(*basis, measure, shell_b_tuples(lesser, q), override_w);
            b = b_form(table, lesser, q, *basis, measure);
        }

        if (options.a_diagnostics && !lesser.empty()) {
            CumulantTable a_table;
            if (options.use_mc) {
                a_table = ursell4_table_mc(mc_sample, shell_a_tuples(lesser, q), uopts);
            } else {
                a_table = ursell4_table_quadrature(*basis, measure, shell_a_tuples(lesser, q));
            }
            const GridFn a = a_form(a_table, lesser, q, *basis, measure);
            AShiftDiagnostic diag;
            diag.step = static_cast<int>(state.log.size()) + 1;
            diag.mode = q;
            double l2 = 0.0;
            for (Eigen::Index i = 0; i < a.on_grid.size(); ++i) {
                l2 += measure.weights()[static_cast<std::size_t>(i)] * a.on_grid[i] * a.on_grid[i];
                diag.max_abs = std::max(diag.max_abs, std::abs(a.on_grid[i]));
            }
            diag.l2_norm = std::sqrt(l2);
            a_diagnostics.push_back(diag);
        }

        weight_terms->push_back({2.0 * shell.delta_c / state.sigma_c2, b.fn});

        const std::size_t kappa_after = state.kappa - 1;
        const double min_lambda = kappa_after > 0 ? spectrum[kappa_after - 1].lambda : 0.0;
        state = weighted_flow_step(std::move(state), shell, b.on_grid, measure, min_lambda);
    }

    auto weight_fn = [weight_terms](double x) {
        double w = 1.0;
        for (const auto& term : *weight_terms) w -= term.coef * term.b(x);
        return w;
    };
    EffectiveTheory theory = effective_theory(state, spectrum, weight_fn);
    return WeightedFlowResult{std::move(schedule), std::move(state), std::move(theory),
                              std::move(a_diagnostics)};
}

std::vector<double> effective_point_noise(const EffectiveTheory& theory,
                                          std::span<const double> points) {
    std::vector<double> noise(points.size(), theory.sigma_c2);
    if (!theory.weight_fn) return noise;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double w = theory.weight_fn(points[i]);
        if (!(w > 0.0))
            throw NumericalError("effective weight is not positive at x = " +
                                 format_double(points[i]) +
                                 " (W = " + format_double(w) + ")");
        noise[i] = theory.sigma_c2 / w;
    }
    return noise;
}

void save_trajectory_csv(const FlowState& state, const std::filesystem::path& path) {
    CsvWriter csv({"step", "kappa", "delta_c", "c_total", "sigma_c2", "min_remaining_lambda",
                   "flag"});
    for (const auto& rec : state.log) {
        csv.append(rec.step);
        csv.append(rec.kappa);
        csv.append(rec.delta_c);
        csv.append(rec.c_total);
        csv.append(rec.sigma_c2);
        csv.append(rec.min_remaining_lambda);
        csv.append(rec.flag);
        csv.end_row();
    }
    csv.save(path);
}

void save_effective_theory(const EffectiveTheory& theory, const StopReason reason,
                           const std::filesystem::path& spectrum_csv,
                           const std::filesystem::path& sidecar,
                           const std::optional<std::filesystem::path>& weight_csv,
                           const DataMeasure* measure) {
    save_spectrum_csv(theory.spectrum, spectrum_csv);

    KeyValueWriter meta;
    meta.set("kappa", static_cast<long>(theory.spectrum.size()));
    meta.set("sigma_c2", theory.sigma_c2);
    meta.set("stop_reason", to_string(reason));
    meta.set("weighted", theory.weight.size() > 0 ? "1" : "0");
    meta.save(sidecar);

    if (weight_csv && theory.weight.size() > 0) {
        if (!measure || theory.weight.size() != static_cast<Eigen::Index>(measure->grid_size()))
            throw std::invalid_argument("weight grid does not match the measure for export");
        CsvWriter csv({"x", "w"});
        for (Eigen::Index i = 0; i < theory.weight.size(); ++i) {
            csv.append(measure->nodes()[static_cast<std::size_t>(i)]);
            csv.append(theory.weight[i]);
            csv.end_row();
        }
        csv.save(*weight_csv);
    }
}

}  // namespace gprg
