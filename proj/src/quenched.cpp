#include "gprg/quenched.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gprg/csvio.hpp"
#include "gprg/errors.hpp"
#include "gprg/rng.hpp"

namespace gprg {

int resolve_threads(int requested) {
    return requested > 0 ? requested : omp_get_max_threads();
}

namespace {

struct TrialContext {
    const KernelFn* kernel;
    const std::function<double(double)>* target;
    const DataMeasure* measure;
    double eta, sigma2;
    std::uint64_t seed;
    SizeMode size_mode;
    long fixed_n;
    bool observation_noise;
    GpSolver solver;

    std::vector<double> test_points;
    std::size_t n_test = 0;

    Eigen::MatrixXd phi_test;  // n_test x K, precomputed test features
    Eigen::MatrixXd tphi;      // tracked x n_test, phi_{mode_j}(test_i)
    // Tracked projections read off the posterior coefficients when the mode
    // belongs to the kernel spectrum (the mean lies in its span, so the
    // coefficient *is* the projection); other modes fall back to quadrature.
    std::vector<long> tracked_rank;   // rank in the spectrum, -1 if absent
    Eigen::MatrixXd fallback_wphi;    // per fallback mode: w_i phi(node_i)
    Eigen::MatrixXd phi_grid;         // grid x K, only when a fallback exists
    std::vector<int> tracked;
    bool empirical = false;
    bool pointwise = true;
    bool need_eval = true;

    std::size_t dim() const {
        return (pointwise ? n_test : 0) + tracked.size() + (empirical ? tracked.size() : 0);
    }
};

void run_trial(const TrialContext& ctx, long t, Eigen::VectorXd& out) {
    auto rng = make_rng(ctx.seed, "trial", static_cast<std::uint64_t>(t));
    long n = 0;
    if (ctx.size_mode == SizeMode::Poisson) {
        std::poisson_distribution<long> draw(ctx.eta);
        n = draw(rng);
    } else {
        n = ctx.fixed_n;
    }

    Dataset data;
    data.x = ctx.measure->sample(static_cast<std::size_t>(n), rng);
    data.y.resize(data.x.size());
    for (std::size_t i = 0; i < data.x.size(); ++i) data.y[i] = (*ctx.target)(data.x[i]);
    if (ctx.observation_noise) {
        std::normal_distribution<double> noise(0.0, std::sqrt(ctx.sigma2));
        for (auto& y : data.y) y += noise(rng);
    }

    GpOptions gp_opts;
    gp_opts.solver = ctx.solver;
    const Eigen::VectorXd coef = gp_posterior_coefficients(*ctx.kernel, data, ctx.sigma2, gp_opts);

    Eigen::VectorXd pred;
    if (ctx.need_eval) pred = ctx.phi_test * coef;

    std::size_t pos = 0;
    if (ctx.pointwise) {
        for (std::size_t i = 0; i < ctx.n_test; ++i)
            out[static_cast<Eigen::Index>(pos++)] = pred[static_cast<Eigen::Index>(i)];
    }
    const auto T = static_cast<Eigen::Index>(ctx.tracked.size());
    if (T > 0) {
        Eigen::VectorXd on_grid;
        for (Eigen::Index j = 0; j < T; ++j) {
            const long rank = ctx.tracked_rank[static_cast<std::size_t>(j)];
            double proj = 0.0;
            if (rank >= 0) {
                proj = coef[rank];
            } else {
                if (on_grid.size() == 0) on_grid = ctx.phi_grid * coef;
                proj = ctx.fallback_wphi.row(j).dot(on_grid);
            }
            out[static_cast<Eigen::Index>(pos++)] = proj;
        }
        if (ctx.empirical) {
            Eigen::VectorXd eproj = ctx.tphi * pred / static_cast<double>(ctx.n_test);
            for (Eigen::Index j = 0; j < T; ++j) out[static_cast<Eigen::Index>(pos++)] = eproj[j];
        }
    }
}

}  // namespace

AveragedPredictor dataset_average_predictor(const KernelFn& kernel,
                                            const std::function<double(double)>& target,
                                            const DataMeasure& measure, double eta, double sigma2,
                                            long trials, std::vector<double> test_points,
                                            std::uint64_t seed, const QuenchedOptions& options) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");

    TrialContext ctx;
    ctx.kernel = &kernel;
    ctx.target = &target;
    ctx.measure = &measure;
    ctx.eta = eta;
    ctx.sigma2 = sigma2;
    ctx.seed = seed;
    ctx.size_mode = options.size_mode;
    ctx.fixed_n = options.fixed_n > 0 ? options.fixed_n : std::lround(eta);
    ctx.observation_noise = options.observation_noise;
    ctx.solver = options.solver;
    ctx.tracked = options.tracked_modes;
    ctx.empirical = options.empirical_projections && !ctx.tracked.empty();

    if (test_points.empty()) test_points = measure.nodes();
    ctx.n_test = test_points.size();
    ctx.test_points = test_points;
    ctx.pointwise = options.pointwise_stats;
    ctx.need_eval = ctx.pointwise || (ctx.empirical && !ctx.tracked.empty());

    const auto& basis = *kernel.spectrum().basis();
    if (ctx.need_eval) ctx.phi_test = kernel.feature_matrix(ctx.test_points);

    if (!ctx.tracked.empty()) {
        const auto T = static_cast<Eigen::Index>(ctx.tracked.size());
        bool any_fallback = false;
        ctx.tracked_rank.assign(ctx.tracked.size(), -1);
        for (std::size_t j = 0; j < ctx.tracked.size(); ++j) {
            for (std::size_t r = 0; r < kernel.spectrum().size(); ++r) {
                if (kernel.spectrum()[r].mode == ctx.tracked[j]) {
                    ctx.tracked_rank[j] = static_cast<long>(r);
                    break;
                }
            }
            if (ctx.tracked_rank[j] < 0) any_fallback = true;
        }
        if (any_fallback) {
            const auto G = static_cast<Eigen::Index>(measure.grid_size());
            ctx.phi_grid = kernel.feature_matrix(measure.nodes());
            ctx.fallback_wphi = Eigen::MatrixXd::Zero(T, G);
            for (Eigen::Index j = 0; j < T; ++j) {
                if (ctx.tracked_rank[static_cast<std::size_t>(j)] >= 0) continue;
                for (Eigen::Index i = 0; i < G; ++i)
                    ctx.fallback_wphi(j, i) = measure.weights()[static_cast<std::size_t>(i)] *
                                              basis(ctx.tracked[static_cast<std::size_t>(j)],
                                                    measure.nodes()[static_cast<std::size_t>(i)]);
            }
        }
        if (ctx.empirical) {
            ctx.tphi.resize(T, static_cast<Eigen::Index>(ctx.n_test));
            for (Eigen::Index j = 0; j < T; ++j)
                for (std::size_t i = 0; i < ctx.n_test; ++i)
                    ctx.tphi(j, static_cast<Eigen::Index>(i)) =
                        basis(ctx.tracked[static_cast<std::size_t>(j)], ctx.test_points[i]);
        }
    }

    const auto D = static_cast<Eigen::Index>(ctx.dim());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(D);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(D);

    std::string error_message;
    bool failed = false;

    if (options.execution == Execution::Serial) {
        // Reference implementation: one pass, straight accumulation.
        Eigen::VectorXd v(D);
        for (long t = 0; t < trials; ++t) {
            try {
                run_trial(ctx, t, v);
            } catch (const std::exception& e) {
                throw NumericalError("trial " + std::to_string(t) + ": " + e.what());
            }
            sum += v;
            sumsq += v.cwiseAbs2();
        }
    } else {
        const long nchunks = (trials + kTrialChunk - 1) / kTrialChunk;
        Eigen::MatrixXd chunk_sum(D, nchunks);
        Eigen::MatrixXd chunk_sumsq(D, nchunks);
#pragma omp parallel num_threads(resolve_threads(options.threads))
        {
            Eigen::VectorXd v(D), s1(D), s2(D);
#pragma omp for schedule(dynamic)
            for (long c = 0; c < nchunks; ++c) {
                bool skip;
#pragma omp atomic read
                skip = failed;
                if (skip) {
                    chunk_sum.col(c).setZero();
                    chunk_sumsq.col(c).setZero();
                    continue;
                }
                s1.setZero();
                s2.setZero();
                const long t_end = std::min(trials, (c + 1) * kTrialChunk);
                for (long t = c * kTrialChunk; t < t_end; ++t) {
                    try {
                        run_trial(ctx, t, v);
                    } catch (const std::exception& e) {
#pragma omp critical(gprg_quenched_error)
                        {
                            if (!failed) {
                                error_message = "trial " + std::to_string(t) + ": " + e.what();
                                failed = true;
                            }
                        }
                        break;
                    }
                    s1 += v;
                    s2 += v.cwiseAbs2();
                }
                chunk_sum.col(c) = s1;
                chunk_sumsq.col(c) = s2;
            }
        }
        if (failed) throw NumericalError(error_message);
        // Fold chunk partials in chunk order; this fixes the floating-point
        // reduction order independently of the thread count.
        for (long c = 0; c < nchunks; ++c) {
            sum += chunk_sum.col(c);
            sumsq += chunk_sumsq.col(c);
        }
    }

    const double T = static_cast<double>(trials);
    auto finalize = [&](Eigen::Index i, double& mean, double& se) {
        mean = sum[i] / T;
        if (trials > 1) {
            const double var = std::max(0.0, (sumsq[i] - T * mean * mean) / (T - 1.0));
            se = std::sqrt(var / T);
        } else {
            se = 0.0;
        }
    };

    AveragedPredictor out;
    out.test_points = std::move(test_points);
    out.trials = trials;
    out.eta = eta;
    out.sigma2 = sigma2;
    out.seed = seed;

    Eigen::Index pos = 0;
    if (ctx.pointwise) {
        out.mean.resize(ctx.n_test);
        out.std_err.resize(ctx.n_test);
        for (std::size_t i = 0; i < ctx.n_test; ++i) finalize(pos++, out.mean[i], out.std_err[i]);
    }
    for (std::size_t j = 0; j < ctx.tracked.size(); ++j) {
        ModeProjectionStats stats;
        stats.mode = ctx.tracked[j];
        finalize(pos++, stats.mean, stats.std_err);
        out.projections.push_back(stats);
    }
    if (ctx.empirical) {
        for (std::size_t j = 0; j < ctx.tracked.size(); ++j) {
            auto& stats = out.projections[j];
            stats.has_empirical = true;
            finalize(pos++, stats.empirical_mean, stats.empirical_std_err);
        }
    }
    return out;
}

void save_averaged_predictor_csv(const AveragedPredictor& avg,
                                 const std::filesystem::path& csv_path,
                                 const std::filesystem::path& sidecar_path) {
    CsvWriter csv({"x", "mean", "stderr"});
    for (std::size_t i = 0; i < avg.mean.size(); ++i) {
        csv.append(avg.test_points[i]);
        csv.append(avg.mean[i]);
        csv.append(avg.std_err[i]);
        csv.end_row();
    }
    csv.save(csv_path);

    KeyValueWriter meta;
    meta.set("seed", avg.seed);
    meta.set("trials", avg.trials);
    meta.set("eta", avg.eta);
    meta.set("sigma2", avg.sigma2);
    meta.save(sidecar_path);
}

void save_projection_csv(const AveragedPredictor& avg, const std::filesystem::path& csv_path) {
    const bool emp = !avg.projections.empty() && avg.projections.front().has_empirical;
    std::vector<std::string> header = {"k", "mean", "stderr"};
    if (emp) {
        header.push_back("emp_mean");
        header.push_back("emp_stderr");
    }
    CsvWriter csv(header);
    for (const auto& p : avg.projections) {
        csv.append(p.mode);
        csv.append(p.mean);
        csv.append(p.std_err);
        if (emp) {
            csv.append(p.empirical_mean);
            csv.append(p.empirical_std_err);
        }
        csv.end_row();
    }
    csv.save(csv_path);
}

}  // namespace gprg
