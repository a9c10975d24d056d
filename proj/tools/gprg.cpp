#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gprg/runner.hpp"

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// Expands a `key = value` config file with [section] headers into CLI
// tokens: key `k` in section `s` becomes `--s.k=value`. Tokens are inserted
// before the explicit command-line flags, which therefore win.
std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line, section;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line is not key = value: '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config line has an empty key: '" + t + "'");
        tokens.push_back("--" + (section.empty() ? key : section + "." + key) + "=" + value);
    }
    return tokens;
}

void add_output_options(CLI::App* cmd, gprg::OutputConfig& out, std::string& config_path) {
    cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option_function<std::string>(
           "--out", [&out](const std::string& v) { out.out_dir = v; }, "Output directory")
        ->default_str(out.out_dir.string());
    cmd->add_option("--seed", out.seed, "Master seed; all randomness derives from it")
        ->capture_default_str();
    cmd->add_option("--threads", out.threads, "Worker threads (0 = machine parallelism)")
        ->capture_default_str();
    cmd->add_option("--config", config_path,
                    "Config file: key = value lines with [section] headers; flags override it");
}

void add_spectrum_options(CLI::App* cmd, gprg::SpectrumConfig& s) {
    cmd->add_option("--spectrum.kind", s.kind, "power_law | csv")->capture_default_str();
    cmd->add_option("--spectrum.lambda0", s.lambda0, "Power-law scale")->capture_default_str();
    cmd->add_option("--spectrum.exponent", s.exponent, "Power-law exponent (> 1)")
        ->capture_default_str();
    cmd->add_option("--spectrum.modes", s.modes, "Number of modes")->capture_default_str();
    cmd->add_option("--spectrum.csv_path", s.csv_path, "Spectrum CSV (k,lambda)");
    cmd->add_option("--spectrum.basis", s.basis, "Basis name")->capture_default_str();
    cmd->add_option("--spectrum.max_mode", s.max_mode, "Basis size override");
    cmd->add_option("--spectrum.quadrature_order", s.quadrature_order, "Quadrature order")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral renormalization toolkit for Gaussian-process regression"};
    app.require_subcommand(1);

    std::string config_path;

    gprg::EkRunConfig ek;
    auto* ek_cmd = app.add_subcommand("ek", "Per-mode closed-form predictions and learnability");
    add_output_options(ek_cmd, ek.out, config_path);
    add_spectrum_options(ek_cmd, ek.spectrum);
    ek_cmd->add_option("--eta", ek.eta, "Mean dataset size")->required();
    ek_cmd->add_option("--sigma2", ek.sigma2, "Ridge parameter")->required();
    ek_cmd->add_flag("--strict_boundary", ek.strict_boundary,
                     "Count lambda exactly at the threshold as unlearnable");
    ek_cmd->add_option("--target.ones_up_to", ek.target.ones_up_to,
                       "Target coefficient 1 for modes up to this id");
    ek_cmd->add_option("--target.coeffs", ek.target.coeffs, "Extra coefficients k:v,k:v");

    gprg::FlowRunConfig flow;
    auto* flow_cmd = app.add_subcommand("flow", "Shell-integration flow of the ridge (and weight)");
    add_output_options(flow_cmd, flow.out, config_path);
    add_spectrum_options(flow_cmd, flow.spectrum);
    flow_cmd->add_option("--eta", flow.eta, "Mean dataset size")->required();
    flow_cmd->add_option("--sigma2", flow.sigma2, "Bare ridge parameter")->required();
    flow_cmd->add_option("--epsilon", flow.epsilon, "Max shell mass over sigma_c^2")
        ->capture_default_str();
    flow_cmd->add_option("--stop_rule", flow.stop_rule, "learnability | count:N")
        ->capture_default_str();
    flow_cmd->add_option("--granularity", flow.granularity, "per-mode | greedy")
        ->capture_default_str();
    flow_cmd->add_flag("--weighted", flow.weighted, "Flow the spatial loss weight as well");
    flow_cmd->add_option("--b_measure", flow.b_measure,
                         "Measure for per-step cumulants: original | flowed")
        ->capture_default_str();
    flow_cmd->add_flag("--mc", flow.use_mc, "Monte Carlo cumulants instead of quadrature");
    flow_cmd->add_option("--num_samples", flow.num_samples, "MC cumulant sample size")
        ->capture_default_str();
    flow_cmd->add_flag("--a_diagnostics", flow.a_diagnostics,
                       "Record the mean-shift form per integrated mode");

    gprg::ToyRunConfig toy;
    auto* toy_cmd = app.add_subcommand("toy", "Rank-2 Hermite model: experiment vs theory");
    add_output_options(toy_cmd, toy.out, config_path);
    toy_cmd->add_option("--lambda1", toy.toy.lambda1, "Linear-mode eigenvalue")->capture_default_str();
    toy_cmd->add_option("--lambda2", toy.toy.lambda2, "Quadratic-mode coefficient")
        ->capture_default_str();
    toy_cmd->add_option("--sigma2", toy.toy.sigma2, "Ridge parameter")->capture_default_str();
    toy_cmd->add_option("--n", toy.toy.n, "Dataset size per trial")->capture_default_str();
    toy_cmd->add_option("--eta", toy.toy.eta, "Mean dataset size (0 = identify with n)")
        ->capture_default_str();
    toy_cmd->add_option("--trials", toy.toy.trials, "Monte Carlo trials")->capture_default_str();
    toy_cmd->add_option("--n_test", toy.toy.n_test, "Fixed random test set size")
        ->capture_default_str();
    toy_cmd->add_option("--quadrature_order", toy.toy.quadrature_order, "Quadrature order")
        ->capture_default_str();
    toy_cmd->add_option("--size_mode", toy.size_mode, "fixed | poisson")->capture_default_str();
    toy_cmd->add_option("--sweep", toy.sweep, "Sweep, e.g. lambda2=0:0.02:0.1");

    gprg::CumulantsRunConfig cum;
    auto* cum_cmd = app.add_subcommand("cumulants", "Fourth Ursell functions and Gaussianity");
    add_output_options(cum_cmd, cum.out, config_path);
    cum_cmd->add_option("--basis", cum.basis, "Basis name")->capture_default_str();
    cum_cmd->add_option("--max_mode", cum.max_mode, "Basis size override");
    cum_cmd->add_option("--quadrature_order", cum.quadrature_order, "Quadrature order")
        ->capture_default_str();
    cum_cmd->add_option("--modes", cum.modes, "Comma-separated mode ids")->capture_default_str();
    cum_cmd->add_option("--num_samples", cum.num_samples, "MC sample size")->capture_default_str();
    cum_cmd->add_option("--method", cum.method, "quadrature | mc")->capture_default_str();
    cum_cmd->add_option("--blocks", cum.blocks, "Jackknife blocks")->capture_default_str();

    gprg::ValidateConfig val;
    auto* val_cmd = app.add_subcommand("validate", "Run the built-in oracle checks");
    val_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    val_cmd->add_option("--only", val.only, "Run only checks whose name contains this");
    val_cmd->add_option("--quadrature_order", val.quadrature_order, "Quadrature order")
        ->capture_default_str();

    // Assemble the token stream: subcommand name, then config-file tokens,
    // then the remaining explicit flags (so flags override the file).
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string pre_config;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) pre_config = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) pre_config = args[i].substr(9);
    }
    std::vector<std::string> tokens;
    try {
        if (!args.empty() && !pre_config.empty() && args[0][0] != '-') {
            tokens.push_back(args[0]);
            const auto from_file = config_tokens(pre_config);
            tokens.insert(tokens.end(), from_file.begin(), from_file.end());
            tokens.insert(tokens.end(), args.begin() + 1, args.end());
        } else {
            tokens = args;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return gprg::kExitConfig;
    }

    try {
        std::reverse(tokens.begin(), tokens.end());  // parse(vector) pops from the back
        app.parse(std::move(tokens));
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : gprg::kExitConfig;
    }

    if (ek_cmd->parsed()) return gprg::cmd_ek(ek);
    if (flow_cmd->parsed()) return gprg::cmd_flow(flow);
    if (toy_cmd->parsed()) return gprg::cmd_toy(toy);
    if (cum_cmd->parsed()) return gprg::cmd_cumulants(cum);
    if (val_cmd->parsed()) return gprg::cmd_validate(val);
    return gprg::kExitConfig;
}
