#include <doctest.h>

#include <stdexcept>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <random>

#include "gprg/spectrum.hpp"
#include "gprg/toy.hpp"
#include "oracles.hpp"

using namespace gprg;

TEST_SUITE_BEGIN("spectrum");

TEST_CASE("power-law values") {
    const auto basis = hermite_basis(8);
    const auto s = power_law_spectrum(1.0, 2.0, 3, basis);
    REQUIRE(s.size() == 3);
    CHECK(s[0].lambda == 1.0);
    CHECK(s[1].lambda == 0.25);
    CHECK(s[2].lambda == doctest::Approx(1.0 / 9.0).epsilon(1e-15));

    const auto single = power_law_spectrum(2.0, 2.0, 1, basis);
    REQUIRE(single.size() == 1);
    CHECK(single[0].lambda == 2.0);
}

TEST_CASE("tail mass decreases with the cutoff") {
    const auto s = power_law_spectrum(1.0, 1.5, 32, hermite_basis(32));
    for (std::size_t k = 1; k < s.size(); ++k) CHECK(s.tail_sum(k) < s.tail_sum(k - 1));
}

TEST_CASE("construction validates inputs") {
    const auto basis = hermite_basis(4);
    CHECK_THROWS_AS((void)power_law_spectrum(1.0, 1.0, 3, basis), std::invalid_argument);
    CHECK_THROWS_AS((void)power_law_spectrum(1.0, 0.5, 3, basis), std::invalid_argument);
    CHECK_THROWS_AS((void)power_law_spectrum(1.0, 2.0, 5, basis), std::invalid_argument);
    CHECK_THROWS_AS((void)power_law_spectrum(0.0, 2.0, 3, basis), std::invalid_argument);
    CHECK_THROWS_AS(Spectrum({{0.0, 1}}, basis), std::invalid_argument);
    CHECK_THROWS_AS(Spectrum({{-1.0, 1}}, basis), std::invalid_argument);
    CHECK_THROWS_AS(Spectrum({{1.0, 9}}, basis), std::invalid_argument);
}

TEST_CASE("sorting is stable for ties") {
    const auto basis = hermite_basis(4);
    const Spectrum s({{0.5, 3}, {1.0, 1}, {0.5, 2}}, basis);
    CHECK(s[0].mode == 1);
    CHECK(s[1].mode == 3);  // tie keeps insertion order: 3 before 2
    CHECK(s[2].mode == 2);
}

TEST_CASE("csv round-trip preserves the spectrum") {
    const auto basis = hermite_basis(8);
    const auto s = power_law_spectrum(0.7, 2.5, 6, basis);
    const auto path = std::filesystem::temp_directory_path() / "gprg_spectrum_test.csv";
    save_spectrum_csv(s, path);
    const auto loaded = load_spectrum_csv(path, basis);
    REQUIRE(loaded.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(loaded[i].mode == s[i].mode);
        CHECK(loaded[i].lambda == s[i].lambda);  // %.17g round-trips doubles
    }
    std::filesystem::remove(path);
}

TEST_CASE("kernel evaluation is exactly symmetric") {
    const KernelFn kernel = toy_kernel(1.0, 0.1);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> pick;
    for (int rep = 0; rep < 50; ++rep) {
        const double x = pick(rng), y = pick(rng);
        CHECK(kernel(x, y) == kernel(y, x));
    }
}

TEST_CASE("toy kernel pointwise values") {
    const KernelFn kernel = toy_kernel(0.8, 0.1);
    // He2(1) = 0 kills the quadratic term.
    std::mt19937_64 rng(6);
    std::normal_distribution<double> pick;
    for (int rep = 0; rep < 20; ++rep) {
        const double y = pick(rng);
        CHECK(kernel(1.0, y) == doctest::Approx(0.8 * y).epsilon(1e-14));
    }
    CHECK(kernel(0.0, 0.0) == doctest::Approx(0.1).epsilon(1e-14));  // lambda2 * He2(0)^2
}

TEST_CASE("kernel gram matrices are positive semi-definite") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> pick;
    std::uniform_real_distribution<double> unif(0.1, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
        const int K = 1 + static_cast<int>(rng() % 12);
        std::vector<SpectralMode> modes;
        for (int k = 1; k <= K; ++k) modes.push_back({unif(rng) / k, k});
        const KernelFn kernel{Spectrum(std::move(modes), hermite_basis(16))};

        const int n = 3 + static_cast<int>(rng() % 20);
        std::vector<double> pts(n);
        for (auto& p : pts) p = pick(rng);

        Eigen::MatrixXd G(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) G(i, j) = kernel(pts[i], pts[j]);
        G.diagonal().array() += 1e-10;
        Eigen::LLT<Eigen::MatrixXd> llt(G);
        CHECK(llt.info() == Eigen::Success);
    }
}

TEST_SUITE_END();
