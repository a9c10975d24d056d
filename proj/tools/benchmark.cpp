// Compares the serial reference implementations of the data-parallel
// kernels against their OpenMP versions on representative workloads.

#include <omp.h>

#include <cstdio>
#include <cmath>

#include "gprg/cumulants.hpp"
#include "gprg/quenched.hpp"
#include "gprg/toy.hpp"

using namespace gprg;

namespace {

struct Timing {
    double serial_s = 0.0;
    double parallel_s = 0.0;
    double max_rel_diff = 0.0;
};

void print_row(const char* name, const Timing& t) {
    std::printf("%-28s %10.3f s %10.3f s %8.2fx   max rel diff %.2e\n", name, t.serial_s,
                t.parallel_s, t.serial_s / t.parallel_s, t.max_rel_diff);
}

double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

Timing bench_quenched() {
    const auto measure = DataMeasure::standard_normal(64);
    const auto spectrum = power_law_spectrum(1.0, 2.0, 32, hermite_basis(32));
    const KernelFn kernel(spectrum);
    auto target = [](double x) { return x; };

    QuenchedOptions opts;
    opts.size_mode = SizeMode::Poisson;
    opts.tracked_modes = {1, 2, 3};

    Timing t;
    opts.execution = Execution::Serial;
    double t0 = omp_get_wtime();
    const auto serial =
        dataset_average_predictor(kernel, target, measure, 80.0, 1.0, 600, {}, 42, opts);
    t.serial_s = omp_get_wtime() - t0;

    opts.execution = Execution::Parallel;
    t0 = omp_get_wtime();
    const auto parallel =
        dataset_average_predictor(kernel, target, measure, 80.0, 1.0, 600, {}, 42, opts);
    t.parallel_s = omp_get_wtime() - t0;

    for (std::size_t i = 0; i < serial.mean.size(); ++i)
        t.max_rel_diff = std::max(t.max_rel_diff, rel_diff(serial.mean[i], parallel.mean[i]));
    return t;
}

Timing bench_toy_trials() {
    ToyConfig config;
    config.trials = 60000;
    config.seed = 7;

    Timing t;
    config.execution = Execution::Serial;
    double t0 = omp_get_wtime();
    const auto serial = run_toy_experiment(config);
    t.serial_s = omp_get_wtime() - t0;

    config.execution = Execution::Parallel;
    t0 = omp_get_wtime();
    const auto parallel = run_toy_experiment(config);
    t.parallel_s = omp_get_wtime() - t0;

    t.max_rel_diff = rel_diff(serial.f1_experiment.value, parallel.f1_experiment.value);
    return t;
}

Timing bench_feature_sampling() {
    const auto basis = hermite_basis(8);
    const auto measure = DataMeasure::standard_normal(64);
    const std::vector<int> modes = {1, 2, 3, 4, 5, 6, 7, 8};

    Timing t;
    double t0 = omp_get_wtime();
    const auto serial = sample_features(*basis, measure, modes, 2000000, 42, Execution::Serial);
    t.serial_s = omp_get_wtime() - t0;

    t0 = omp_get_wtime();
    const auto parallel = sample_features(*basis, measure, modes, 2000000, 42, Execution::Parallel);
    t.parallel_s = omp_get_wtime() - t0;

    // Same chunked sampling rule, so the draws must agree exactly.
    t.max_rel_diff = (serial.values - parallel.values).cwiseAbs().maxCoeff();
    return t;
}

}  // namespace

int main() {
    std::printf("threads available: %d\n", omp_get_max_threads());
    std::printf("%-28s %12s %12s %9s\n", "kernel", "serial", "openmp", "speedup");
    print_row("quenched average (n~80)", bench_quenched());
    print_row("toy trials (n=100)", bench_toy_trials());
    print_row("feature sampling (2e6)", bench_feature_sampling());
    return 0;
}
