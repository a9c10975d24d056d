#include "gprg/gp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gprg/errors.hpp"

namespace gprg {

namespace {

// Attempts the factorization at escalating diagonal jitter. A is modified
// in place (the jitter stays on the diagonal of the returned factor's input).
Eigen::LLT<Eigen::MatrixXd> llt_with_jitter(Eigen::MatrixXd& A, const char* what) {
    static constexpr double kJitter[] = {0.0, 1e-12, 1e-10, 1e-8};
    double applied = 0.0;
    for (double j : kJitter) {
        A.diagonal().array() += (j - applied);
        applied = j;
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw NumericalError(std::string(what) +
                         ": Cholesky factorization failed after jitter escalation to 1e-8");
}

Eigen::VectorXd noise_diagonal(const Dataset& data, double sigma2, const GpOptions& options) {
    const auto n = static_cast<Eigen::Index>(data.size());
    if (!options.per_point_noise.empty()) {
        if (options.per_point_noise.size() != data.size())
            throw std::invalid_argument("per_point_noise length does not match dataset size");
        Eigen::VectorXd d(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            d[i] = options.per_point_noise[static_cast<std::size_t>(i)];
            if (!(d[i] > 0.0)) throw std::invalid_argument("per-point noise must be positive");
        }
        return d;
    }
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    return Eigen::VectorXd::Constant(n, sigma2);
}

struct GpSolve {
    Eigen::VectorXd coef;          // posterior mean coefficients, spectrum rank order
    Eigen::MatrixXd M;             // n x K feature matrix scaled by sqrt(lambda)
    Eigen::VectorXd sqrt_lambda;   // K
    Eigen::VectorXd noise;         // n
    bool dense = false;
    Eigen::LLT<Eigen::MatrixXd> factor;  // dense: n x n system; lowrank: K x K system
};

GpSolve solve_gp(const KernelFn& kernel, const Dataset& data, double sigma2,
                 const GpOptions& options) {
    if (data.x.size() != data.y.size())
        throw std::invalid_argument("dataset inputs and targets differ in length");

    const auto n = static_cast<Eigen::Index>(data.size());
    const auto K = static_cast<Eigen::Index>(kernel.spectrum().size());

    GpSolve s;
    s.sqrt_lambda.resize(K);
    for (Eigen::Index j = 0; j < K; ++j)
        s.sqrt_lambda[j] = std::sqrt(kernel.spectrum()[static_cast<std::size_t>(j)].lambda);

    if (n == 0) {
        s.coef = Eigen::VectorXd::Zero(K);
        return s;
    }

    s.noise = noise_diagonal(data, sigma2, options);
    Eigen::Map<const Eigen::VectorXd> y(data.y.data(), n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isfinite(y[i]))
            throw NumericalError("target value is not finite at index " + std::to_string(i));

    s.M = kernel.feature_matrix(data.x);
    s.M = s.M * s.sqrt_lambda.asDiagonal();

    switch (options.solver == GpSolver::Auto
                ? (4 * K <= n ? GpSolver::LowRank : GpSolver::Dense)
                : options.solver) {
        case GpSolver::Dense: {
            s.dense = true;
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
            A.selfadjointView<Eigen::Lower>().rankUpdate(s.M);
            A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
            A.diagonal() += s.noise;
            s.factor = llt_with_jitter(A, "gp_posterior_mean(dense)");
            const Eigen::VectorXd alpha = s.factor.solve(y);
            s.coef = s.sqrt_lambda.asDiagonal() * (s.M.transpose() * alpha);
            break;
        }
        case GpSolver::LowRank: {
            // Feature-space route: with M = Phi sqrt(Lambda) and D the noise
            // diagonal, mean coefficients are
            //   sqrt(Lambda) (I + M^T D^-1 M)^-1 M^T D^-1 y,
            // equal to the dense route by the Woodbury identity.
            const Eigen::VectorXd inv_noise = s.noise.cwiseInverse();
            Eigen::MatrixXd C = Eigen::MatrixXd::Identity(K, K);
            C.selfadjointView<Eigen::Lower>().rankUpdate(
                (inv_noise.cwiseSqrt().asDiagonal() * s.M).transpose());
            C.triangularView<Eigen::StrictlyUpper>() = C.transpose();
            s.factor = llt_with_jitter(C, "gp_posterior_mean(lowrank)");
            const Eigen::VectorXd b = s.M.transpose() * inv_noise.cwiseProduct(y).eval();
            s.coef = s.sqrt_lambda.cwiseProduct(s.factor.solve(b));
            break;
        }
        default:
            throw std::logic_error("unreachable solver case");
    }
    return s;
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const KernelFn& kernel, std::span<const double> points) {
    if (points.empty()) throw std::invalid_argument("kernel_matrix needs at least one point");
    const auto n = static_cast<Eigen::Index>(points.size());
    const auto K = static_cast<Eigen::Index>(kernel.spectrum().size());
    Eigen::MatrixXd M = kernel.feature_matrix(points);
    for (Eigen::Index j = 0; j < K; ++j)
        M.col(j) *= std::sqrt(kernel.spectrum()[static_cast<std::size_t>(j)].lambda);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    G.selfadjointView<Eigen::Lower>().rankUpdate(M);
    G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (!std::isfinite(G(i, j)))
                throw NumericalError("kernel matrix entry (" + std::to_string(i) + ", " +
                                     std::to_string(j) + ") is not finite");
    return G;
}

Eigen::VectorXd gp_posterior_coefficients(const KernelFn& kernel, const Dataset& data,
                                          double sigma2, const GpOptions& options) {
    return solve_gp(kernel, data, sigma2, options).coef;
}

PosteriorPrediction gp_posterior_mean(const KernelFn& kernel, const Dataset& data, double sigma2,
                                      std::vector<double> test_points, const GpOptions& options) {
    GpSolve s = solve_gp(kernel, data, sigma2, options);

    const auto n = static_cast<Eigen::Index>(data.size());
    const auto m = static_cast<Eigen::Index>(test_points.size());
    Eigen::MatrixXd phi_test = kernel.feature_matrix(test_points);

    PosteriorPrediction out;
    out.mean.resize(static_cast<std::size_t>(m));
    Eigen::Map<Eigen::VectorXd>(out.mean.data(), m) = phi_test * s.coef;

    if (options.compute_variance) {
        // Scaled test features: row i holds sqrt(Lambda) phi(x_i).
        Eigen::MatrixXd Mt = phi_test * s.sqrt_lambda.asDiagonal();
        Eigen::VectorXd var = Mt.rowwise().squaredNorm();  // prior K(x*, x*)
        if (n > 0) {
            if (s.dense) {
                Eigen::MatrixXd cross = s.M * Mt.transpose();  // n x m, K(X, x*)
                Eigen::MatrixXd solved = s.factor.solve(cross);
                var -= (cross.array() * solved.array()).colwise().sum().matrix().transpose();
            } else {
                // Posterior covariance of the coefficients is
                // sqrt(Lambda) C^-1 sqrt(Lambda) with C from the solve.
                Eigen::MatrixXd solved = s.factor.solve(Mt.transpose());  // K x m
                var = (Mt.transpose().array() * solved.array()).colwise().sum().matrix().transpose();
            }
        }
        out.variance.emplace(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i)
            (*out.variance)[static_cast<std::size_t>(i)] = std::max(0.0, var[i]);
    }

    out.test_points = std::move(test_points);
    return out;
}

double project_onto_mode(const std::function<double(double)>& f, const EigenfunctionBasis& basis,
                         int k, const DataMeasure& measure) {
    return quadrature_integral([&](double x) { return f(x) * basis(k, x); }, measure);
}

double project_onto_mode(std::span<const double> values_on_grid, const EigenfunctionBasis& basis,
                         int k, const DataMeasure& measure) {
    if (values_on_grid.size() != measure.grid_size())
        throw std::invalid_argument("grid values length does not match measure grid");
    const auto& nodes = measure.nodes();
    const auto& weights = measure.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        s += weights[i] * values_on_grid[i] * basis(k, nodes[i]);
    return s;
}

}  // namespace gprg
