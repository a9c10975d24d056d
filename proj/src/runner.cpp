#include "gprg/runner.hpp"

#include <chrono>
#include <optional>
#include <cmath>
#include <iostream>
#include <sstream>

#include "gprg/csvio.hpp"
#include "gprg/cumulants.hpp"
#include "gprg/ek.hpp"
#include "gprg/errors.hpp"
#include "gprg/flow.hpp"
#include "gprg/hermite.hpp"
#include "gprg/quenched.hpp"

namespace gprg {

namespace {

using KvList = std::vector<std::pair<std::string, std::string>>;

/// Collects config echo, warnings and output checksums; written last so its
/// presence marks a completed run.
class RunManifest {
public:
    RunManifest(std::string command, OutputConfig out) : command_(std::move(command)), out_(std::move(out)) {
        start_ = std::chrono::steady_clock::now();
        std::filesystem::create_directories(out_.out_dir);
    }

    std::filesystem::path path(const std::string& name) const { return out_.out_dir / name; }

    void echo(const std::string& key, const std::string& value) { config_.emplace_back(key, value); }
    void echo(const std::string& key, double value) { echo(key, format_double(value)); }
    void echo(const std::string& key, long value) { echo(key, std::to_string(value)); }
    void echo(const std::string& key, int value) { echo(key, std::to_string(value)); }
    void echo(const KvList& kv) { for (const auto& [k, v] : kv) echo(k, v); }

    void warn(const std::string& message) {
        warnings_.push_back(message);
        std::cerr << "warning: " << message << "\n";
    }

    void record_output(const std::filesystem::path& p) { outputs_.push_back(p); }

    void write() const {
        KeyValueWriter kv;
        kv.set("command", command_);
        kv.set("version", std::string(kVersion));
        kv.set("seed", out_.seed);
        kv.set("threads", out_.threads);
        for (const auto& [k, v] : config_) kv.set(k, v);
        for (std::size_t i = 0; i < warnings_.size(); ++i)
            kv.set("warning" + std::to_string(i + 1), warnings_[i]);
        for (const auto& p : outputs_)
            kv.set("output." + p.filename().string(), file_checksum_hex(p));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        kv.set("runtime_seconds", secs);
        kv.save(out_.out_dir / "manifest.txt");
    }

private:
    std::string command_;
    OutputConfig out_;
    KvList config_;
    std::vector<std::string> warnings_;
    std::vector<std::filesystem::path> outputs_;
    std::chrono::steady_clock::time_point start_;
};

int guarded(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::out_of_range& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

StopRule parse_stop_rule(const std::string& text) {
    if (text == "learnability") return StopRule::learnability();
    if (text.rfind("count:", 0) == 0) {
        const long keep = std::stol(text.substr(6));
        if (keep < 0) throw std::invalid_argument("stop_rule count must be non-negative");
        return StopRule::count(static_cast<std::size_t>(keep));
    }
    throw std::invalid_argument("stop_rule must be 'learnability' or 'count:N' (got '" + text + "')");
}

std::vector<double> parse_range(const std::string& text) {
    // start:step:stop, inclusive of stop up to rounding.
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ':')) parts.push_back(std::stod(cell));
    if (parts.size() == 1) return {parts[0]};
    if (parts.size() != 3 || parts[1] <= 0.0)
        throw std::invalid_argument("range must be start:step:stop with step > 0 (got '" + text + "')");
    std::vector<double> values;
    for (double v = parts[0]; v <= parts[2] + 1e-12 * std::max(1.0, std::abs(parts[2])); v += parts[1])
        values.push_back(v);
    return values;
}

}  // namespace

Spectrum SpectrumConfig::build() const {
    if (kind == "power_law") {
        const int mm = max_mode > 0 ? max_mode : modes;
        return power_law_spectrum(lambda0, exponent, modes, basis_by_name(basis, mm));
    }
    if (kind == "csv") {
        if (csv_path.empty()) throw std::invalid_argument("spectrum.csv_path is required for kind=csv");
        auto rows = read_csv(csv_path, {"k", "lambda"});
        int max_k = 0;
        for (const auto& row : rows) max_k = std::max(max_k, std::stoi(row.at(0)));
        const int mm = std::max(max_mode, max_k);
        return load_spectrum_csv(csv_path, basis_by_name(basis, mm));
    }
    throw std::invalid_argument("spectrum.kind must be 'power_law' or 'csv' (got '" + kind + "')");
}

DataMeasure SpectrumConfig::build_measure() const {
    return DataMeasure::standard_normal(quadrature_order);
}

void SpectrumConfig::echo(KvList& kv) const {
    kv.emplace_back("spectrum.kind", kind);
    if (kind == "power_law") {
        kv.emplace_back("spectrum.lambda0", format_double(lambda0));
        kv.emplace_back("spectrum.exponent", format_double(exponent));
        kv.emplace_back("spectrum.modes", std::to_string(modes));
    } else {
        kv.emplace_back("spectrum.csv_path", csv_path);
    }
    kv.emplace_back("spectrum.basis", basis);
    kv.emplace_back("spectrum.quadrature_order", std::to_string(quadrature_order));
}

std::vector<std::pair<int, double>> TargetConfig::parse() const {
    std::vector<std::pair<int, double>> out;
    for (int k = 1; k <= ones_up_to; ++k) out.emplace_back(k, 1.0);
    if (!coeffs.empty()) {
        std::stringstream ss(coeffs);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto colon = cell.find(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("target.coeffs entries must look like k:value");
            const int k = std::stoi(cell.substr(0, colon));
            const double v = std::stod(cell.substr(colon + 1));
            bool replaced = false;
            for (auto& [kk, vv] : out)
                if (kk == k) { vv = v; replaced = true; }
            if (!replaced) out.emplace_back(k, v);
        }
    }
    return out;
}

double TargetConfig::coefficient(int mode) const {
    for (const auto& [k, v] : parse())
        if (k == mode) return v;
    return 0.0;
}

std::function<double(double)> TargetConfig::build_fn(
    std::shared_ptr<const EigenfunctionBasis> basis) const {
    auto coeffs = parse();
    for (const auto& [k, v] : coeffs) {
        (void)v;
        if (k < 1 || k > basis->max_mode)
            throw std::invalid_argument("target mode " + std::to_string(k) + " outside basis range");
    }
    return [coeffs, basis](double x) {
        double y = 0.0;
        for (const auto& [k, v] : coeffs) y += v * (*basis)(k, x);
        return y;
    };
}

int cmd_ek(const EkRunConfig& config) {
    return guarded([&] {
        if (!(config.sigma2 > 0.0)) throw std::invalid_argument("missing or invalid field: sigma2");
        if (!(config.eta > 0.0)) throw std::invalid_argument("missing or invalid field: eta");

        RunManifest manifest("ek", config.out);
        KvList kv;
        config.spectrum.echo(kv);
        manifest.echo(kv);
        manifest.echo("eta", config.eta);
        manifest.echo("sigma2", config.sigma2);
        manifest.echo("strict_boundary", config.strict_boundary ? 1 : 0);

        const Spectrum spectrum = config.spectrum.build();
        const EKParams params{config.eta, config.sigma2};
        const auto report = classify_learnability(spectrum, params, config.strict_boundary);
        const auto report_path = manifest.path("ek_report.csv");
        save_learnability_csv(report, report_path);
        manifest.record_output(report_path);

        CsvWriter pred({"k", "lambda", "y", "prediction", "variance"});
        for (const auto& m : spectrum.modes()) {
            const double y = config.target.coefficient(m.mode);
            pred.append(m.mode);
            pred.append(m.lambda);
            pred.append(y);
            pred.append(ek_mode_predictor(m.lambda, y, params));
            pred.append(ek_mode_variance(m.lambda, params));
            pred.end_row();
        }
        const auto pred_path = manifest.path("ek_predictions.csv");
        pred.save(pred_path);
        manifest.record_output(pred_path);
        manifest.write();
    });
}

int cmd_flow(const FlowRunConfig& config) {
    return guarded([&] {
        if (!(config.sigma2 > 0.0)) throw std::invalid_argument("missing or invalid field: sigma2");
        if (!(config.eta > 0.0)) throw std::invalid_argument("missing or invalid field: eta");
        const StopRule stop = parse_stop_rule(config.stop_rule);
        ShellGranularity granularity;
        if (config.granularity == "per-mode") granularity = ShellGranularity::PerMode;
        else if (config.granularity == "greedy") granularity = ShellGranularity::Greedy;
        else throw std::invalid_argument("granularity must be 'per-mode' or 'greedy'");
        if (config.weighted && config.granularity != "per-mode")
            throw std::invalid_argument("the weighted flow requires per-mode shells");

        RunManifest manifest("flow", config.out);
        KvList kv;
        config.spectrum.echo(kv);
        manifest.echo(kv);
        manifest.echo("eta", config.eta);
        manifest.echo("sigma2", config.sigma2);
        manifest.echo("epsilon", config.epsilon);
        manifest.echo("stop_rule", config.stop_rule);
        manifest.echo("granularity", config.granularity);
        manifest.echo("weighted", config.weighted ? 1 : 0);

        const Spectrum spectrum = config.spectrum.build();
        const DataMeasure measure = config.spectrum.build_measure();

        std::optional<FlowState> state;
        std::optional<EffectiveTheory> theory;
        std::optional<ShellSchedule> schedule;
        std::vector<AShiftDiagnostic> a_diag;

        if (config.weighted) {
            manifest.echo("b_measure", config.b_measure);
            manifest.echo("cumulant_method", config.use_mc ? "mc" : "quadrature");
            WeightedFlowOptions opts;
            opts.use_mc = config.use_mc;
            opts.num_samples = config.num_samples;
            opts.seed = config.out.seed;
            opts.a_diagnostics = config.a_diagnostics;
            opts.threads = config.out.threads;
            if (config.b_measure == "flowed") opts.b_measure = BMeasureMode::Flowed;
            else if (config.b_measure != "original")
                throw std::invalid_argument("b_measure must be 'original' or 'flowed'");
            auto result = run_weighted_flow(spectrum, config.sigma2, config.eta, config.epsilon,
                                            stop, measure, opts);
            state = std::move(result.state);
            theory = std::move(result.theory);
            schedule = std::move(result.schedule);
            a_diag = std::move(result.a_diagnostics);
        } else {
            auto result = run_gaussian_flow(spectrum, config.sigma2, config.eta, config.epsilon,
                                            stop, granularity);
            state = std::move(result.state);
            theory = std::move(result.theory);
            schedule = std::move(result.schedule);
        }

        if (!schedule->learnable_integrated.empty())
            manifest.warn("count stop rule integrated " +
                          std::to_string(schedule->learnable_integrated.size()) +
                          " mode(s) that were learnable at consumption time");
        if (state->perturbative_breakdown)
            manifest.warn("weight profile went negative: perturbative breakdown");

        const auto traj_path = manifest.path("trajectory.csv");
        save_trajectory_csv(*state, traj_path);
        manifest.record_output(traj_path);

        const auto spec_path = manifest.path("effective_spectrum.csv");
        const auto sidecar_path = manifest.path("effective_theory.txt");
        std::optional<std::filesystem::path> weight_path;
        if (config.weighted) weight_path = manifest.path("weight.csv");
        save_effective_theory(*theory, schedule->stop_reason, spec_path, sidecar_path, weight_path,
                              &measure);
        manifest.record_output(spec_path);
        manifest.record_output(sidecar_path);
        if (weight_path) manifest.record_output(*weight_path);

        if (config.a_diagnostics && !a_diag.empty()) {
            CsvWriter csv({"step", "mode", "a_l2", "a_max_abs"});
            for (const auto& d : a_diag) {
                csv.append(d.step);
                csv.append(d.mode);
                csv.append(d.l2_norm);
                csv.append(d.max_abs);
                csv.end_row();
            }
            const auto a_path = manifest.path("a_diagnostics.csv");
            csv.save(a_path);
            manifest.record_output(a_path);
        }
        manifest.write();
    });
}

int cmd_toy(const ToyRunConfig& config) {
    return guarded([&] {
        RunManifest manifest("toy", config.out);
        ToyConfig toy = config.toy;
        toy.seed = config.out.seed;
        toy.threads = config.out.threads;
        if (config.size_mode == "poisson") toy.size_mode = SizeMode::Poisson;
        else if (config.size_mode == "fixed") toy.size_mode = SizeMode::FixedN;
        else throw std::invalid_argument("size_mode must be 'fixed' or 'poisson'");

        manifest.echo("lambda1", toy.lambda1);
        manifest.echo("lambda2", toy.lambda2);
        manifest.echo("sigma2", toy.sigma2);
        manifest.echo("n", toy.n);
        manifest.echo("eta", toy.effective_eta());
        manifest.echo("eta_identified_with_n", toy.eta > 0.0 ? 0 : 1);
        manifest.echo("trials", toy.trials);
        manifest.echo("n_test", toy.n_test);
        manifest.echo("size_mode", config.size_mode);

        if (config.sweep.empty()) {
            const ToyResult result = run_toy_experiment(toy);
            for (const auto& w : result.warnings) manifest.warn(w);

            const auto summary_path = manifest.path("toy_summary.csv");
            save_toy_summary_csv(result, summary_path);
            manifest.record_output(summary_path);

            const auto weight_path = manifest.path("weight_profile.csv");
            save_weight_profile_csv(result, weight_path);
            manifest.record_output(weight_path);

            if (toy.lambda2 > 0.0) {
                // Perturbative-vs-exact weight diagnostic along He2; the two
                // follow different normalization conventions, so the ratio is
                // reported rather than asserted anywhere.
                const auto cmp = toy_weight_comparison(toy);
                manifest.echo("weight_he2_coef_perturbative", cmp.coef_perturbative);
                manifest.echo("weight_he2_coef_exact", cmp.coef_exact);
                manifest.echo("weight_he2_coef_ratio", cmp.ratio);
            }
        } else {
            const auto eq = config.sweep.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("sweep must look like param=start:step:stop");
            const std::string param = config.sweep.substr(0, eq);
            const auto values = parse_range(config.sweep.substr(eq + 1));
            manifest.echo("sweep", config.sweep);

            std::vector<ToySweepRow> rows;
            for (double v : values) {
                ToyConfig point = toy;
                if (param == "lambda2") point.lambda2 = v;
                else if (param == "lambda1") point.lambda1 = v;
                else if (param == "n") point.n = std::lround(v);
                else throw std::invalid_argument("sweep parameter must be lambda1, lambda2 or n");
                const ToyResult result = run_toy_experiment(point);
                ToySweepRow row;
                row.value = v;
                row.f1 = result.f1_experiment;
                row.f1_theory = result.f1_theory_exact_saddle;
                rows.push_back(row);
            }
            const auto sweep_path = manifest.path("toy_sweep.csv");
            save_toy_sweep_csv(param, rows, sweep_path);
            manifest.record_output(sweep_path);
        }
        manifest.write();
    });
}

int cmd_cumulants(const CumulantsRunConfig& config) {
    return guarded([&] {
        RunManifest manifest("cumulants", config.out);

        std::vector<int> modes;
        {
            std::stringstream ss(config.modes);
            std::string cell;
            while (std::getline(ss, cell, ',')) modes.push_back(std::stoi(cell));
        }
        if (modes.empty()) throw std::invalid_argument("modes list is empty");
        int max_needed = config.max_mode;
        for (int m : modes) max_needed = std::max(max_needed, m);

        manifest.echo("basis", config.basis);
        manifest.echo("modes", config.modes);
        manifest.echo("method", config.method);
        manifest.echo("num_samples", config.num_samples);
        manifest.echo("blocks", config.blocks);

        auto basis = basis_by_name(config.basis, max_needed);
        const auto measure = DataMeasure::standard_normal(config.quadrature_order);

        // Every 4-tuple over the requested modes (canonical keys).
        std::vector<std::array<int, 4>> tuples;
        for (std::size_t a = 0; a < modes.size(); ++a)
            for (std::size_t b = a; b < modes.size(); ++b)
                for (std::size_t c = b; c < modes.size(); ++c)
                    for (std::size_t d = c; d < modes.size(); ++d)
                        tuples.push_back({modes[a], modes[b], modes[c], modes[d]});

        CumulantTable table;
        FeatureSample sample;
        bool have_sample = false;
        if (config.method == "quadrature") {
            table = ursell4_table_quadrature(*basis, measure, tuples);
        } else if (config.method == "mc") {
            UrsellOptions opts;
            opts.jackknife_blocks = config.blocks;
            sample = sample_features(*basis, measure, modes, config.num_samples, config.out.seed,
                                     Execution::Parallel, config.out.threads);
            have_sample = true;
            table = ursell4_table_mc(sample, tuples, opts);
        } else {
            throw std::invalid_argument("method must be 'quadrature' or 'mc'");
        }

        const auto table_path = manifest.path("cumulants.csv");
        table.save_csv(table_path);
        manifest.record_output(table_path);

        if (!have_sample)
            sample = sample_features(*basis, measure, modes, config.num_samples, config.out.seed,
                                     Execution::Parallel, config.out.threads);
        const auto report = gaussianity_report(sample);
        const auto gauss_path = manifest.path("gaussianity.csv");
        save_gaussianity_csv(report, gauss_path);
        manifest.record_output(gauss_path);

        manifest.write();
    });
}

int cmd_validate(const ValidateConfig& config) {
    struct Check {
        std::string name;
        std::function<std::pair<bool, std::string>()> run;
    };

    const int order = config.quadrature_order;
    std::vector<Check> checks;

    checks.push_back({"orthonormality", [order] {
        const auto basis = hermite_basis(10);
        const auto measure = DataMeasure::standard_normal(order);
        const auto report = check_orthonormality(*basis, measure, 10, 1e-8);
        return std::make_pair(report.ok,
                              "max |Gram - I| = " + format_double(report.max_abs_deviation) +
                                  " at (" + std::to_string(report.k) + "," + std::to_string(report.q) + ")");
    }});
    checks.push_back({"overlap-120", [order] {
        const auto measure = DataMeasure::standard_normal(order);
        const double v = quadrature_integral(
            [](double x) {
                const double h2 = x * x - 1.0;
                return x * hermite_probabilist(5, x) * h2 * h2;
            },
            measure);
        return std::make_pair(std::abs(v - 120.0) <= 1e-8, "got " + format_double(v));
    }});
    checks.push_back({"overlap-10", [order] {
        const auto measure = DataMeasure::standard_normal(order);
        const double v = quadrature_integral(
            [](double x) {
                const double h2 = x * x - 1.0;
                return x * x * h2 * h2;
            },
            measure);
        return std::make_pair(std::abs(v - 10.0) <= 1e-8, "got " + format_double(v));
    }});
    checks.push_back({"ursell-1122", [order] {
        const auto basis = hermite_basis(2);
        const auto measure = DataMeasure::standard_normal(order);
        const auto table = ursell4_table_quadrature(*basis, measure, {{1, 1, 2, 2}});
        const double v = table.at({1, 1, 2, 2}).estimate.value;
        return std::make_pair(std::abs(v - 4.0) <= 1e-8, "got " + format_double(v));
    }});
    checks.push_back({"odd-moment", [order] {
        const auto measure = DataMeasure::standard_normal(order);
        const double v = quadrature_integral([](double x) { return x * x * x; }, measure);
        const double mass = measure.total_weight();
        const bool ok = std::abs(v) <= 1e-12 && std::abs(mass - 1.0) <= 1e-10;
        return std::make_pair(ok, "x^3 -> " + format_double(v) + ", mass " + format_double(mass));
    }});
    checks.push_back({"ek-algebra", [] {
        const EKParams params{100.0, 4.0};
        const double pred = ek_mode_predictor(0.04, 1.0, params);   // lambda = threshold
        const double var = ek_mode_variance(0.04, params);
        const bool ok = std::abs(pred - 0.5) <= 1e-12 && std::abs(var - 0.02) <= 1e-12;
        return std::make_pair(ok, "predictor " + format_double(pred) + ", variance " + format_double(var));
    }});

    bool all_ok = true;
    int ran = 0;
    for (const auto& check : checks) {
        if (!config.only.empty() && check.name.find(config.only) == std::string::npos) continue;
        ++ran;
        bool ok = false;
        std::string detail;
        try {
            std::tie(ok, detail) = check.run();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        std::cout << (ok ? "[ok]   " : "[FAIL] ") << check.name << ": " << detail << "\n";
        all_ok = all_ok && ok;
    }
    if (ran == 0) {
        std::cerr << "config error: no validation check matches '" << config.only << "'\n";
        return kExitConfig;
    }
    return all_ok ? kExitOk : kExitValidation;
}

}  // namespace gprg
