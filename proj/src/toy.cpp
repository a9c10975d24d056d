#include "gprg/toy.hpp"

#include <cmath>
#include <stdexcept>

#include "gprg/csvio.hpp"
#include "gprg/errors.hpp"
#include "gprg/flow.hpp"
#include "gprg/hermite.hpp"
#include "gprg/rng.hpp"

namespace gprg {

namespace {

double he2(double x) { return x * x - 1.0; }
double he5(double x) { return hermite_probabilist(5, x); }

struct ToyOverlaps {
    double x_he5_he2sq = 0.0;
    double x2_he2sq = 0.0;
};

ToyOverlaps toy_overlaps(int quadrature_order) {
    const auto measure = DataMeasure::standard_normal(quadrature_order);
    ToyOverlaps o;
    o.x_he5_he2sq =
        quadrature_integral([](double x) { return x * he5(x) * he2(x) * he2(x); }, measure);
    o.x2_he2sq = quadrature_integral([](double x) { return x * x * he2(x) * he2(x); }, measure);
    return o;
}

}  // namespace

std::vector<std::string> ToyConfig::validate() const {
    if (!(lambda1 > 0.0)) throw std::invalid_argument("lambda1 must be positive");
    if (lambda2 < 0.0) throw std::invalid_argument("lambda2 must be non-negative");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    if (n < 1) throw std::invalid_argument("n must be positive");
    if (trials < 1) throw std::invalid_argument("trials must be positive");
    if (n_test < 1) throw std::invalid_argument("n_test must be positive");
    if (quadrature_order < 8) throw std::invalid_argument("quadrature_order too small");

    std::vector<std::string> warnings;
    const double ratio = lambda2 * effective_eta() / sigma2;
    if (ratio >= 1.0)
        warnings.push_back("lambda2 * eta / sigma2 = " + format_double(ratio) +
                           " >= 1: the integrated mode is learnable, outside the intended regime");
    if (lambda2 / sigma2 > 0.05)
        warnings.push_back("lambda2 / sigma2 = " + format_double(lambda2 / sigma2) +
                           " > 0.05: weight perturbation is large");
    return warnings;
}

KernelFn toy_kernel(double lambda1, double lambda2) {
    if (!(lambda1 > 0.0)) throw std::invalid_argument("lambda1 must be positive");
    if (lambda2 < 0.0) throw std::invalid_argument("lambda2 must be non-negative");
    auto basis = hermite_basis(8);
    std::vector<SpectralMode> modes;
    modes.push_back({lambda1, 1});
    if (lambda2 > 0.0) modes.push_back({2.0 * lambda2, 2});
    return KernelFn(Spectrum(std::move(modes), std::move(basis)));
}

double toy_theory_f1_leading(const ToyConfig& config) {
    const auto o = toy_overlaps(config.quadrature_order);
    const double ridge_per_point = config.sigma2 / config.effective_eta();
    return -(config.lambda1 / (config.lambda1 + ridge_per_point)) * o.x_he5_he2sq *
           config.lambda2 / config.sigma2;
}

double toy_theory_f1_exact_saddle(const ToyConfig& config) {
    const auto o = toy_overlaps(config.quadrature_order);
    const double ridge_per_point = config.sigma2 / config.effective_eta();
    const double denom =
        config.lambda1 * (1.0 - o.x2_he2sq * config.lambda2 / config.sigma2) + ridge_per_point;
    if (!(denom > 0.0))
        throw NumericalError(
            "weighted saddle denominator is non-positive: the weight profile is no longer "
            "perturbative (lambda2/sigma2 too large)");
    return -o.x_he5_he2sq * (config.lambda2 / config.sigma2) * config.lambda1 / denom;
}

ToyResult run_toy_experiment(const ToyConfig& config) {
    ToyResult result;
    result.warnings = config.validate();

    const auto measure = DataMeasure::standard_normal(config.quadrature_order);
    const KernelFn kernel = toy_kernel(config.lambda1, config.lambda2);

    auto rng = make_rng(config.seed, "toy-testset", 0);
    std::vector<double> test_points = measure.sample(static_cast<std::size_t>(config.n_test), rng);

    QuenchedOptions opts;
    opts.size_mode = config.size_mode;
    opts.fixed_n = config.n;
    opts.tracked_modes = {1};
    opts.empirical_projections = true;
    opts.pointwise_stats = false;
    opts.execution = config.execution;
    opts.threads = config.threads;

    const AveragedPredictor avg = dataset_average_predictor(
        kernel, [](double x) { return he5(x); }, measure, config.effective_eta(), config.sigma2,
        config.trials, std::move(test_points), config.seed, opts);

    const auto& proj = avg.projections.front();
    result.f1_experiment = {proj.mean, proj.std_err};
    result.f1_experiment_testset = {proj.empirical_mean, proj.empirical_std_err};

    result.f1_theory_leading = toy_theory_f1_leading(config);
    result.f1_theory_exact_saddle = toy_theory_f1_exact_saddle(config);

    const auto o = toy_overlaps(config.quadrature_order);
    result.overlap_x_he5_he2sq = o.x_he5_he2sq;
    result.overlap_x2_he2sq = o.x2_he2sq;

    result.weight_x = measure.nodes();
    result.weight_w.resize(result.weight_x.size());
    for (std::size_t i = 0; i < result.weight_x.size(); ++i) {
        const double h2 = he2(result.weight_x[i]);
        result.weight_w[i] = 1.0 - (config.lambda2 / config.sigma2) * h2 * h2;
    }
    return result;
}

WeightedEkResult weighted_ek_predictor(const Spectrum& spectrum,
                                       const std::function<double(double)>& target,
                                       const Eigen::VectorXd& weight_on_grid,
                                       const DataMeasure& measure, const EKParams& params) {
    const auto G = static_cast<Eigen::Index>(measure.grid_size());
    if (weight_on_grid.size() != G)
        throw std::invalid_argument("weight grid length does not match the measure");
    const auto K = static_cast<Eigen::Index>(spectrum.size());
    if (K == 0) throw std::invalid_argument("weighted saddle needs a non-empty spectrum");

    WeightedEkResult result;
    result.weight_nonpositive = (weight_on_grid.array() <= 0.0).any();

    // Weighted feature Gram and target overlaps on the quadrature grid.
    Eigen::MatrixXd phi(G, K);
    Eigen::VectorXd y(G), ww(G);
    const auto& basis = *spectrum.basis();
    for (Eigen::Index i = 0; i < G; ++i) {
        const double x = measure.nodes()[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < K; ++j)
            phi(i, j) = basis(spectrum[static_cast<std::size_t>(j)].mode, x);
        y[i] = target(x);
        ww[i] = measure.weights()[static_cast<std::size_t>(i)] * weight_on_grid[i];
    }

    const double coupling = params.eta / params.sigma2;
    Eigen::MatrixXd M = phi.transpose() * ww.asDiagonal() * phi * coupling;
    for (Eigen::Index j = 0; j < K; ++j)
        M(j, j) += 1.0 / spectrum[static_cast<std::size_t>(j)].lambda;
    Eigen::VectorXd b = coupling * (phi.transpose() * ww.cwiseProduct(y));

    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible())
        throw NumericalError("weighted saddle system is singular");
    result.prediction = lu.solve(b);
    result.modes.reserve(static_cast<std::size_t>(K));
    for (Eigen::Index j = 0; j < K; ++j)
        result.modes.push_back(spectrum[static_cast<std::size_t>(j)].mode);
    return result;
}

WeightComparison toy_weight_comparison(const ToyConfig& config) {
    if (!(config.lambda2 > 0.0))
        throw std::invalid_argument("weight comparison needs lambda2 > 0");
    const auto measure = DataMeasure::standard_normal(config.quadrature_order);
    const KernelFn kernel = toy_kernel(config.lambda1, config.lambda2);

    WeightedFlowOptions opts;
    const auto flow = run_weighted_flow(kernel.spectrum(), config.sigma2, config.effective_eta(),
                                        0.5, StopRule::count(1), measure, opts);

    const double he2_norm =
        quadrature_integral([](double x) { return he2(x) * he2(x); }, measure);

    double pert = 0.0, exact = 0.0;
    for (std::size_t i = 0; i < measure.grid_size(); ++i) {
        const double x = measure.nodes()[i];
        const double w = measure.weights()[i];
        const double h2 = he2(x);
        pert += w * (flow.state.weight[static_cast<Eigen::Index>(i)] - 1.0) * h2;
        const double w_toy = -(config.lambda2 / config.sigma2) * h2 * h2;
        exact += w * w_toy * h2;
    }

    WeightComparison cmp;
    cmp.coef_perturbative = pert / he2_norm;
    cmp.coef_exact = exact / he2_norm;
    cmp.ratio = cmp.coef_exact != 0.0 ? cmp.coef_perturbative / cmp.coef_exact : 0.0;
    return cmp;
}

void save_toy_summary_csv(const ToyResult& result, const std::filesystem::path& path) {
    CsvWriter csv({"quantity", "value", "stderr"});
    auto row = [&](const std::string& name, double v, double se) {
        csv.append(name);
        csv.append(v);
        csv.append(se);
        csv.end_row();
    };
    row("f1_experiment", result.f1_experiment.value, result.f1_experiment.std_err);
    row("f1_experiment_testset", result.f1_experiment_testset.value,
        result.f1_experiment_testset.std_err);
    row("f1_theory_leading", result.f1_theory_leading, 0.0);
    row("f1_theory_exact_saddle", result.f1_theory_exact_saddle, 0.0);
    row("overlap_x_he5_he2sq", result.overlap_x_he5_he2sq, 0.0);
    row("overlap_x2_he2sq", result.overlap_x2_he2sq, 0.0);
    csv.save(path);
}

void save_weight_profile_csv(const ToyResult& result, const std::filesystem::path& path) {
    CsvWriter csv({"x", "w"});
    for (std::size_t i = 0; i < result.weight_x.size(); ++i) {
        csv.append(result.weight_x[i]);
        csv.append(result.weight_w[i]);
        csv.end_row();
    }
    csv.save(path);
}

void save_toy_sweep_csv(const std::string& param, const std::vector<ToySweepRow>& rows,
                        const std::filesystem::path& path) {
    CsvWriter csv({param, "f1_exp", "f1_stderr", "f1_theory"});
    for (const auto& row : rows) {
        csv.append(row.value);
        csv.append(row.f1.value);
        csv.append(row.f1.std_err);
        csv.append(row.f1_theory);
        csv.end_row();
    }
    csv.save(path);
}

}  // namespace gprg
