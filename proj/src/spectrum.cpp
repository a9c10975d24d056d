#include "gprg/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gprg/csvio.hpp"

namespace gprg {

Spectrum::Spectrum(std::vector<SpectralMode> modes,
                   std::shared_ptr<const EigenfunctionBasis> basis)
    : modes_(std::move(modes)), basis_(std::move(basis)) {
    if (!basis_) throw std::invalid_argument("spectrum requires a basis");
    for (const auto& m : modes_) {
        if (!(m.lambda > 0.0) || !std::isfinite(m.lambda))
            throw std::invalid_argument("spectrum eigenvalues must be strictly positive");
        if (m.mode < 1 || m.mode > basis_->max_mode)
            throw std::invalid_argument("spectrum mode id " + std::to_string(m.mode) +
                                        " outside basis range 1.." +
                                        std::to_string(basis_->max_mode));
    }
    std::stable_sort(modes_.begin(), modes_.end(),
                     [](const SpectralMode& a, const SpectralMode& b) { return a.lambda > b.lambda; });
    for (const auto& m : modes_) max_mode_id_ = std::max(max_mode_id_, m.mode);
}

double Spectrum::tail_sum(std::size_t from_rank) const {
    double s = 0.0;
    // Summed smallest-first so the result matches the flow's accumulation order.
    for (std::size_t i = modes_.size(); i > from_rank; --i) s += modes_[i - 1].lambda;
    return s;
}

Spectrum Spectrum::prefix(std::size_t count) const {
    if (count > modes_.size()) throw std::invalid_argument("prefix longer than spectrum");
    std::vector<SpectralMode> head(modes_.begin(), modes_.begin() + static_cast<long>(count));
    return Spectrum(std::move(head), basis_);
}

Spectrum power_law_spectrum(double lambda0, double exponent, int num_modes,
                            std::shared_ptr<const EigenfunctionBasis> basis) {
    if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be positive");
    if (!(exponent > 1.0))
        throw std::invalid_argument("power-law exponent must exceed 1 (got " +
                                    std::to_string(exponent) + ")");
    if (num_modes < 1) throw std::invalid_argument("num_modes must be positive");
    if (!basis || num_modes > basis->max_mode)
        throw std::invalid_argument("num_modes exceeds basis max_mode");
    std::vector<SpectralMode> modes(static_cast<std::size_t>(num_modes));
    for (int k = 1; k <= num_modes; ++k)
        modes[k - 1] = {lambda0 * std::pow(static_cast<double>(k), -exponent), k};
    return Spectrum(std::move(modes), std::move(basis));
}

void save_spectrum_csv(const Spectrum& spectrum, const std::filesystem::path& path) {
    CsvWriter csv({"k", "lambda"});
    for (const auto& m : spectrum.modes()) {
        csv.append(m.mode);
        csv.append(m.lambda);
        csv.end_row();
    }
    csv.save(path);
}

Spectrum load_spectrum_csv(const std::filesystem::path& path,
                           std::shared_ptr<const EigenfunctionBasis> basis) {
    auto rows = read_csv(path, {"k", "lambda"});
    std::vector<SpectralMode> modes;
    modes.reserve(rows.size());
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
        SpectralMode m{std::stod(row.at(1)), std::stoi(row.at(0))};
        if (m.lambda > prev)
            throw std::invalid_argument(path.string() + ": eigenvalues must be descending");
        prev = m.lambda;
        modes.push_back(m);
    }
    return Spectrum(std::move(modes), std::move(basis));
}

KernelFn::KernelFn(Spectrum spectrum) : spectrum_(std::move(spectrum)) {}

double KernelFn::operator()(double x, double y) const {
    const auto& basis = *spectrum_.basis();
    const int kmax = spectrum_.max_mode_id();
    std::vector<double> px(static_cast<std::size_t>(kmax)), py(static_cast<std::size_t>(kmax));
    basis.evaluate(x, kmax, px.data());
    basis.evaluate(y, kmax, py.data());
    double s = 0.0;
    // The phi product is grouped first so K(x,y) and K(y,x) round identically.
    for (const auto& m : spectrum_.modes()) s += m.lambda * (px[m.mode - 1] * py[m.mode - 1]);
    return s;
}

Eigen::MatrixXd KernelFn::feature_matrix(std::span<const double> points) const {
    const auto& basis = *spectrum_.basis();
    const int kmax = spectrum_.max_mode_id();
    const auto n = static_cast<Eigen::Index>(points.size());
    const auto K = static_cast<Eigen::Index>(spectrum_.size());
    Eigen::MatrixXd phi(n, K);
    std::vector<double> buf(static_cast<std::size_t>(kmax));
    for (Eigen::Index i = 0; i < n; ++i) {
        basis.evaluate(points[static_cast<std::size_t>(i)], kmax, buf.data());
        for (Eigen::Index j = 0; j < K; ++j)
            phi(i, j) = buf[spectrum_[static_cast<std::size_t>(j)].mode - 1];
    }
    return phi;
}

}  // namespace gprg
