#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace gprg {

inline constexpr int kDefaultQuadratureOrder = 128;

enum class MeasureKind { StandardNormal1D, EmpiricalSample };

/// Probability measure over the (1D) input space. Provides a fixed grid for
/// integral evaluation and i.i.d. sampling. Immutable after construction.
///
/// StandardNormal1D carries a Gauss quadrature rule of the requested order
/// (nodes and weights for the N(0,1) weight function, exact for polynomials
/// of degree < 2*order). EmpiricalSample integrates by averaging over its
/// points and samples from them with replacement.
class DataMeasure {
public:
    static DataMeasure standard_normal(int quadrature_order = kDefaultQuadratureOrder);
    static DataMeasure empirical(std::vector<double> points);

    MeasureKind kind() const { return kind_; }
    int quadrature_order() const { return order_; }

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t grid_size() const { return nodes_.size(); }

    /// Sum of quadrature weights; equals the total mass (1) up to rounding.
    double total_weight() const;

    /// Integral of f against the measure over the grid.
    double integrate(const std::function<double(double)>& f) const;

    /// Integral of values given on the grid (values[i] at nodes()[i]).
    double integrate_grid(const std::vector<double>& values) const;

    std::vector<double> sample(std::size_t n, std::mt19937_64& rng) const;

private:
    DataMeasure() = default;

    MeasureKind kind_ = MeasureKind::StandardNormal1D;
    int order_ = 0;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Gauss-type estimate of the integral of f against the measure.
/// Throws NumericalError if f is non-finite at a node, naming the node.
double quadrature_integral(const std::function<double(double)>& f, const DataMeasure& measure);

}  // namespace gprg
