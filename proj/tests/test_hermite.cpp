#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "gprg/hermite.hpp"
#include "gprg/measure.hpp"
#include "oracles.hpp"

using namespace gprg;

TEST_SUITE_BEGIN("hermite");

TEST_CASE("recurrence matches closed forms up to degree five") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> pick(-4.0, 4.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double x = pick(rng);
        for (int n = 0; n <= 5; ++n) {
            const double expected = oracle::hermite(n, x);
            const double got = hermite_probabilist(n, x);
            const double scale = std::max(1.0, std::abs(expected));
            CHECK(std::abs(got - expected) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("spot values") {
    CHECK(hermite_probabilist(1, 3.0) == 3.0);
    CHECK(hermite_probabilist(2, 1.0) == 0.0);
    CHECK(hermite_orthonormal(0, 17.5) == 1.0);
    CHECK(hermite_orthonormal(1, 2.0) == 2.0);
}

TEST_CASE("orthonormal variant has unit second moment under N(0,1)") {
    const auto measure = DataMeasure::standard_normal(128);
    const double m2 = quadrature_integral(
        [](double x) {
            const double v = hermite_orthonormal(2, x);
            return v * v;
        },
        measure);
    CHECK(std::abs(m2 - 1.0) <= 1e-8);
}

TEST_CASE("orthonormal equals unnormalized over sqrt(n!)") {
    double fact = 1.0;
    for (int n = 1; n <= 12; ++n) {
        fact *= n;
        const double x = 1.37;
        CHECK(hermite_orthonormal(n, x) ==
              doctest::Approx(hermite_probabilist(n, x) / std::sqrt(fact)).epsilon(1e-12));
    }
}

TEST_CASE("large orders need opt-in") {
    CHECK_THROWS_AS((void)hermite_probabilist(31, 0.5), std::invalid_argument);
    CHECK_THROWS_AS((void)hermite_orthonormal(40, 0.5), std::invalid_argument);
    CHECK(std::isfinite(hermite_probabilist(31, 0.5, /*allow_large=*/true)));
    CHECK(std::isfinite(hermite_orthonormal(64, 3.0, /*allow_large=*/true)));
    CHECK_THROWS_AS((void)hermite_probabilist(-1, 0.0), std::invalid_argument);
}

TEST_CASE("batch evaluation agrees with single calls") {
    double buf[65];
    hermite_orthonormal_all(64, 1.234, buf);
    for (int n = 0; n <= 64; ++n) CHECK(buf[n] == hermite_orthonormal(n, 1.234, true));
}

TEST_SUITE_END();
