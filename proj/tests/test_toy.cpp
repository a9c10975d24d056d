#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>

#include "gprg/csvio.hpp"
#include "gprg/errors.hpp"
#include "gprg/toy.hpp"
#include "oracles.hpp"

using namespace gprg;

namespace {

ToyConfig reference_config() {
    ToyConfig c;
    c.lambda1 = 1.0;
    c.lambda2 = 0.1;
    c.sigma2 = 400.0;
    c.n = 100;
    return c;
}

}  // namespace

TEST_SUITE_BEGIN("toy");

TEST_CASE("theory values at the reference parameters") {
    ToyConfig config = reference_config();
    // eta = n = 100: prefactor 1/(1+4), overlap 120, lambda2/sigma2 = 1/4000.
    CHECK(toy_theory_f1_leading(config) == doctest::Approx(-0.006).epsilon(1e-10));
    const double exact = toy_theory_f1_exact_saddle(config);
    CHECK(exact < 0.0);
    CHECK(std::abs(exact - toy_theory_f1_leading(config)) <=
          0.01 * std::abs(toy_theory_f1_leading(config)));
}

TEST_CASE("theory vanishes without the quadratic mode") {
    ToyConfig config = reference_config();
    config.lambda2 = 0.0;
    CHECK(toy_theory_f1_leading(config) == 0.0);
    CHECK(toy_theory_f1_exact_saddle(config) == 0.0);
}

TEST_CASE("large lambda1 saturates the leading prefactor") {
    ToyConfig config = reference_config();
    config.lambda1 = 1e9;
    const double limit = -120.0 * config.lambda2 / config.sigma2;
    CHECK(toy_theory_f1_leading(config) == doctest::Approx(limit).epsilon(1e-6));
}

TEST_CASE("overlap integrals are stable in the quadrature order") {
    for (int order : {32, 64, 128, 256}) {
        ToyConfig config = reference_config();
        config.quadrature_order = order;
        const double leading = toy_theory_f1_leading(config);
        CHECK(leading == doctest::Approx(-0.006).epsilon(1e-8));
    }
}

TEST_CASE("saddle breakdown raises a numerical error") {
    ToyConfig config;
    config.lambda1 = 10.0;
    config.lambda2 = 0.2;
    config.sigma2 = 1.0;
    config.n = 100;
    CHECK_THROWS_AS((void)toy_theory_f1_exact_saddle(config), NumericalError);
}

TEST_CASE("regime warnings") {
    ToyConfig config = reference_config();
    CHECK(config.validate().empty());
    config.lambda2 = 30.0;  // ratio 2·lambda2·eta/sigma2-style checks fire
    const auto warnings = config.validate();
    CHECK(warnings.size() == 2);
    config.lambda2 = -0.1;
    CHECK_THROWS_AS((void)config.validate(), std::invalid_argument);
}

TEST_CASE("weighted saddle reduces to the per-mode closed form for unit weight") {
    const auto spectrum = power_law_spectrum(1.0, 2.0, 5, hermite_basis(8));
    const auto measure = DataMeasure::standard_normal(128);
    const EKParams params{50.0, 2.0};
    const auto& basis = spectrum.basis();
    auto target = [&](double x) {
        return 1.5 * (*basis)(1, x) - 0.5 * (*basis)(3, x) + 0.25 * (*basis)(5, x);
    };
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(measure.grid_size()));
    const auto result = weighted_ek_predictor(spectrum, target, ones, measure, params);
    REQUIRE(result.prediction.size() == 5);
    const double coeffs[5] = {1.5, 0.0, -0.5, 0.0, 0.25};
    for (int j = 0; j < 5; ++j) {
        const double expected = ek_mode_predictor(spectrum[j].lambda, coeffs[j], params);
        CHECK(std::abs(result.prediction[j] - expected) <= 1e-10 * std::max(1.0, std::abs(expected)));
    }
    CHECK(!result.weight_nonpositive);
}

TEST_CASE("weighted saddle on the toy weight reproduces the exact saddle") {
    ToyConfig config = reference_config();
    const auto measure = DataMeasure::standard_normal(config.quadrature_order);
    // Retained theory: the single linear mode with the toy weight profile.
    const Spectrum retained({{config.lambda1, 1}}, hermite_basis(8));
    Eigen::VectorXd weight(static_cast<Eigen::Index>(measure.grid_size()));
    for (Eigen::Index i = 0; i < weight.size(); ++i) {
        const double h2 = oracle::he2(measure.nodes()[static_cast<std::size_t>(i)]);
        weight[i] = 1.0 - (config.lambda2 / config.sigma2) * h2 * h2;
    }
    const EKParams params{config.effective_eta(), config.sigma2};
    const auto result = weighted_ek_predictor(
        retained, [](double x) { return oracle::he5(x); }, weight, measure, params);
    REQUIRE(result.prediction.size() == 1);
    CHECK(result.prediction[0] ==
          doctest::Approx(toy_theory_f1_exact_saddle(config)).epsilon(1e-12));
}

TEST_CASE("targets orthogonal to the retained modes give a zero saddle") {
    const Spectrum retained({{1.0, 1}, {0.5, 2}}, hermite_basis(8));
    const auto measure = DataMeasure::standard_normal(128);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(measure.grid_size()));
    const auto result = weighted_ek_predictor(
        retained, [](double x) { return oracle::he5(x); }, ones, measure, {100.0, 1.0});
    CHECK(result.prediction.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("null experiment is consistent with zero") {
    ToyConfig config = reference_config();
    config.lambda2 = 0.0;
    config.trials = 4000;
    config.seed = 2024;
    const auto result = run_toy_experiment(config);
    CHECK(std::abs(result.f1_experiment.value) <= 3.0 * result.f1_experiment.std_err);
    CHECK(result.f1_experiment.std_err > 0.0);
    CHECK(result.overlap_x_he5_he2sq == doctest::Approx(120.0).epsilon(1e-10));
    CHECK(result.overlap_x2_he2sq == doctest::Approx(10.0).epsilon(1e-10));
}

TEST_CASE("doubling the trials shrinks the error like the central limit theorem") {
    ToyConfig config = reference_config();
    config.lambda2 = 0.0;
    config.trials = 3000;
    config.seed = 5;
    const auto a = run_toy_experiment(config);
    config.trials = 6000;
    const auto b = run_toy_experiment(config);
    const double ratio = a.f1_experiment.std_err / b.f1_experiment.std_err;
    CHECK(ratio > std::sqrt(2.0) * 0.8);
    CHECK(ratio < std::sqrt(2.0) * 1.2);
}

TEST_CASE("experiment reports both projection estimates and the weight profile") {
    ToyConfig config = reference_config();
    config.trials = 500;
    const auto result = run_toy_experiment(config);
    CHECK(result.f1_experiment_testset.std_err > 0.0);
    REQUIRE(!result.weight_w.empty());
    // Profile dips below 1 away from the He2 zeros.
    double min_w = 1.0;
    for (double w : result.weight_w) min_w = std::min(min_w, w);
    CHECK(min_w < 1.0);

    const auto dir = std::filesystem::temp_directory_path() / "gprg_toy_test";
    std::filesystem::create_directories(dir);
    save_toy_summary_csv(result, dir / "summary.csv");
    save_weight_profile_csv(result, dir / "weight.csv");
    const auto rows = read_csv(dir / "summary.csv", {"quantity", "value", "stderr"});
    CHECK(rows.size() == 6);
    std::filesystem::remove_all(dir);
}

TEST_CASE("perturbative and exact weights differ by the known factor along He2") {
    ToyConfig config = reference_config();
    const auto cmp = toy_weight_comparison(config);
    CHECK(cmp.coef_exact == doctest::Approx(-4.0 * config.lambda2 / config.sigma2).epsilon(1e-8));
    CHECK(cmp.coef_perturbative ==
          doctest::Approx(-8.0 * config.lambda2 / config.sigma2).epsilon(1e-8));
    CHECK(cmp.ratio == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_SUITE_END();
