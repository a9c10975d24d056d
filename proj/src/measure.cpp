#include "gprg/measure.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "gprg/errors.hpp"

namespace gprg {

namespace {

// Gauss-Hermite rule for the N(0,1) weight, by Golub-Welsch: the Jacobi
// matrix of the monic orthogonal polynomials has zero diagonal and
// off-diagonal sqrt(j). Eigenvalues are the nodes; the weight of node i is
// the squared first component of its normalized eigenvector.
void gauss_hermite_unit(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(order - 1);
    for (int j = 1; j < order; ++j) sub[j - 1] = std::sqrt(static_cast<double>(j));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
        throw NumericalError("Gauss-Hermite rule: tridiagonal eigensolver failed");

    nodes.resize(order);
    weights.resize(order);
    for (int i = 0; i < order; ++i) {
        nodes[i] = solver.eigenvalues()[i];
        const double v0 = solver.eigenvectors()(0, i);
        weights[i] = v0 * v0;
    }
}

}  // namespace

DataMeasure DataMeasure::standard_normal(int quadrature_order) {
    if (quadrature_order < 1) throw std::invalid_argument("quadrature order must be positive");
    DataMeasure m;
    m.kind_ = MeasureKind::StandardNormal1D;
    m.order_ = quadrature_order;
    gauss_hermite_unit(quadrature_order, m.nodes_, m.weights_);
    return m;
}

DataMeasure DataMeasure::empirical(std::vector<double> points) {
    if (points.empty()) throw std::invalid_argument("empirical measure needs at least one point");
    DataMeasure m;
    m.kind_ = MeasureKind::EmpiricalSample;
    m.order_ = 0;
    const double w = 1.0 / static_cast<double>(points.size());
    m.weights_.assign(points.size(), w);
    m.nodes_ = std::move(points);
    return m;
}

double DataMeasure::total_weight() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
}

double DataMeasure::integrate(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const double fx = f(nodes_[i]);
        if (!std::isfinite(fx))
            throw NumericalError("integrand is not finite at node " + std::to_string(i) +
                                 " (x = " + std::to_string(nodes_[i]) + ")");
        s += weights_[i] * fx;
    }
    return s;
}

double DataMeasure::integrate_grid(const std::vector<double>& values) const {
    if (values.size() != nodes_.size())
        throw std::invalid_argument("grid values length does not match measure grid");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += weights_[i] * values[i];
    return s;
}

std::vector<double> DataMeasure::sample(std::size_t n, std::mt19937_64& rng) const {
    std::vector<double> out(n);
    if (kind_ == MeasureKind::StandardNormal1D) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& x : out) x = normal(rng);
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, nodes_.size() - 1);
        for (auto& x : out) x = nodes_[pick(rng)];
    }
    return out;
}

double quadrature_integral(const std::function<double(double)>& f, const DataMeasure& measure) {
    return measure.integrate(f);
}

}  // namespace gprg
