#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <limits>
#include <random>

#include "gprg/errors.hpp"
#include "gprg/hermite.hpp"
#include "gprg/measure.hpp"
#include "gprg/rng.hpp"
#include "oracles.hpp"

using namespace gprg;

TEST_SUITE_BEGIN("measure");

TEST_CASE("quadrature mass is one") {
    for (int order : {64, 128, 200}) {
        const auto measure = DataMeasure::standard_normal(order);
        CHECK(std::abs(measure.total_weight() - 1.0) <= 1e-10);
    }
}

TEST_CASE("second moment") {
    const auto measure = DataMeasure::standard_normal(128);
    const double m2 = quadrature_integral([](double x) { return x * x; }, measure);
    CHECK(std::abs(m2 - 1.0) <= 1e-12);
}

TEST_CASE("odd integrands vanish") {
    const auto measure = DataMeasure::standard_normal(128);
    for (int p : {1, 3, 5, 7}) {
        const double v = quadrature_integral([p](double x) { return std::pow(x, p); }, measure);
        CHECK(std::abs(v) <= 1e-12);
    }
    const double v = quadrature_integral(
        [](double x) { return oracle::he1(x) * oracle::he2(x) * oracle::he2(x) * oracle::he2(x); },
        measure);
    CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("overlap integrals of the quadratic-weighted target") {
    const auto measure = DataMeasure::standard_normal(128);
    const double v120 = quadrature_integral(
        [](double x) { return x * oracle::he5(x) * oracle::he2(x) * oracle::he2(x); }, measure);
    CHECK(std::abs(v120 - 120.0) <= 1e-8);

    // Moment expansion: E[x^6 - 2x^4 + x^2] = 15 - 6 + 1 = 10.
    const double expected10 =
        oracle::normal_moment(6) - 2.0 * oracle::normal_moment(4) + oracle::normal_moment(2);
    const double v10 = quadrature_integral(
        [](double x) { return x * x * oracle::he2(x) * oracle::he2(x); }, measure);
    CHECK(expected10 == 10.0);
    CHECK(std::abs(v10 - expected10) <= 1e-8);
}

TEST_CASE("moments match the double-factorial oracle") {
    const auto measure = DataMeasure::standard_normal(128);
    for (int p = 0; p <= 12; p += 2) {
        const double v = quadrature_integral([p](double x) { return std::pow(x, p); }, measure);
        CHECK(v == doctest::Approx(oracle::normal_moment(p)).epsilon(1e-10));
    }
}

TEST_CASE("non-finite integrand names the node") {
    const auto measure = DataMeasure::standard_normal(8);
    CHECK_THROWS_WITH_AS(
        (void)quadrature_integral(
            [](double x) { return x > 0.0 ? std::numeric_limits<double>::quiet_NaN() : x; },
            measure),
        doctest::Contains("node"), NumericalError);
}

TEST_CASE("empirical measure averages its points") {
    const auto measure = DataMeasure::empirical({1.0, 2.0, 3.0, 6.0});
    const double mean = quadrature_integral([](double x) { return x; }, measure);
    CHECK(mean == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(measure.kind() == MeasureKind::EmpiricalSample);
}

TEST_CASE("sampling is deterministic given a seed") {
    const auto normal = DataMeasure::standard_normal(64);
    auto rng1 = make_rng(99, "test", 0);
    auto rng2 = make_rng(99, "test", 0);
    CHECK(normal.sample(16, rng1) == normal.sample(16, rng2));

    const auto empirical = DataMeasure::empirical({-1.0, 0.0, 1.0});
    auto rng3 = make_rng(7, "test", 1);
    auto rng4 = make_rng(7, "test", 1);
    CHECK(empirical.sample(10, rng3) == empirical.sample(10, rng4));
}

TEST_CASE("invalid construction") {
    CHECK_THROWS_AS(DataMeasure::standard_normal(0), std::invalid_argument);
    CHECK_THROWS_AS(DataMeasure::empirical({}), std::invalid_argument);
}

TEST_SUITE_END();
