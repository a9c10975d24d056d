#include "gprg/cumulants.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gprg/csvio.hpp"
#include "gprg/rng.hpp"

namespace gprg {

namespace {

constexpr long kSampleChunk = 4096;

std::string tuple_name(const std::array<int, 4>& k) {
    return "(" + std::to_string(k[0]) + "," + std::to_string(k[1]) + "," + std::to_string(k[2]) +
           "," + std::to_string(k[3]) + ")";
}

// Product moments entering the fourth cumulant of (a, b, c, d):
// abcd and the three pairings plus singles are not needed because the
// columns are centered first.
struct ProductSums {
    double abcd = 0, ab = 0, cd = 0, ac = 0, bd = 0, ad = 0, bc = 0;
    long n = 0;

    void add(double a, double b, double c, double d) {
        abcd += a * b * c * d;
        ab += a * b;
        cd += c * d;
        ac += a * c;
        bd += b * d;
        ad += a * d;
        bc += b * c;
        ++n;
    }
    void subtract(const ProductSums& o) {
        abcd -= o.abcd;
        ab -= o.ab;
        cd -= o.cd;
        ac -= o.ac;
        bd -= o.bd;
        ad -= o.ad;
        bc -= o.bc;
        n -= o.n;
    }
    double ursell() const {
        const double N = static_cast<double>(n);
        return abcd / N - (ab / N) * (cd / N) - (ac / N) * (bd / N) - (ad / N) * (bc / N);
    }
};

Estimate ursell_from_blocks(const std::vector<ProductSums>& blocks) {
    ProductSums total;
    for (const auto& b : blocks) {
        total.abcd += b.abcd;
        total.ab += b.ab;
        total.cd += b.cd;
        total.ac += b.ac;
        total.bd += b.bd;
        total.ad += b.ad;
        total.bc += b.bc;
        total.n += b.n;
    }
    Estimate est;
    est.value = total.ursell();

    const auto B = static_cast<long>(blocks.size());
    if (B < 2) return est;
    std::vector<double> loo(blocks.size());
    double loo_mean = 0.0;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        ProductSums rest = total;
        rest.subtract(blocks[j]);
        loo[j] = rest.ursell();
        loo_mean += loo[j];
    }
    loo_mean /= static_cast<double>(B);
    double ss = 0.0;
    for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
    est.std_err = std::sqrt(ss * static_cast<double>(B - 1) / static_cast<double>(B));
    return est;
}

std::vector<long> block_bounds(long n, int blocks) {
    const long b = std::max(1L, std::min<long>(blocks, n));
    std::vector<long> bounds(static_cast<std::size_t>(b) + 1);
    for (long j = 0; j <= b; ++j) bounds[static_cast<std::size_t>(j)] = n * j / b;
    return bounds;
}

}  // namespace

Eigen::Index FeatureSample::column(int mode) const {
    for (std::size_t j = 0; j < modes.size(); ++j)
        if (modes[j] == mode) return static_cast<Eigen::Index>(j);
    throw std::out_of_range("mode " + std::to_string(mode) + " not present in feature sample");
}

FeatureSample sample_features(const EigenfunctionBasis& basis, const DataMeasure& measure,
                              std::vector<int> modes, long num_samples, std::uint64_t seed,
                              Execution execution, int threads) {
    if (num_samples < 2) throw std::invalid_argument("num_samples must be >= 2");
    if (modes.empty()) throw std::invalid_argument("mode set must be non-empty");
    int kmax = 0;
    for (int m : modes) {
        if (m < 1 || m > basis.max_mode)
            throw std::invalid_argument("mode " + std::to_string(m) + " outside basis range");
        kmax = std::max(kmax, m);
    }

    FeatureSample out;
    out.modes = std::move(modes);
    out.seed = seed;
    out.values.resize(num_samples, static_cast<Eigen::Index>(out.modes.size()));

    const long nchunks = (num_samples + kSampleChunk - 1) / kSampleChunk;
    auto fill_chunk = [&](long c, std::vector<double>& buf) {
        auto rng = make_rng(seed, "features", static_cast<std::uint64_t>(c));
        const long begin = c * kSampleChunk;
        const long end = std::min(num_samples, begin + kSampleChunk);
        const auto xs = measure.sample(static_cast<std::size_t>(end - begin), rng);
        for (long i = begin; i < end; ++i) {
            basis.evaluate(xs[static_cast<std::size_t>(i - begin)], kmax, buf.data());
            for (std::size_t j = 0; j < out.modes.size(); ++j)
                out.values(i, static_cast<Eigen::Index>(j)) = buf[out.modes[j] - 1];
        }
    };

    if (execution == Execution::Serial) {
        std::vector<double> buf(static_cast<std::size_t>(kmax));
        for (long c = 0; c < nchunks; ++c) fill_chunk(c, buf);
    } else {
#pragma omp parallel num_threads(resolve_threads(threads))
        {
            std::vector<double> buf(static_cast<std::size_t>(kmax));
#pragma omp for schedule(dynamic)
            for (long c = 0; c < nchunks; ++c) fill_chunk(c, buf);
        }
    }
    return out;
}

Estimate ursell4(const FeatureSample& sample, std::array<int, 4> modes,
                 const UrsellOptions& options) {
    std::sort(modes.begin(), modes.end());
    const Eigen::Index ca = sample.column(modes[0]);
    const Eigen::Index cb = sample.column(modes[1]);
    const Eigen::Index cc = sample.column(modes[2]);
    const Eigen::Index cd = sample.column(modes[3]);

    const long n = sample.values.rows();
    const double ma = sample.values.col(ca).mean();
    const double mb = sample.values.col(cb).mean();
    const double mc = sample.values.col(cc).mean();
    const double md = sample.values.col(cd).mean();

    const auto bounds = block_bounds(n, options.jackknife_blocks);
    std::vector<ProductSums> blocks(bounds.size() - 1);
    for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
        auto& blk = blocks[j];
        for (long i = bounds[j]; i < bounds[j + 1]; ++i) {
            blk.add(sample.values(i, ca) - ma, sample.values(i, cb) - mb,
                    sample.values(i, cc) - mc, sample.values(i, cd) - md);
        }
    }
    return ursell_from_blocks(blocks);
}

void CumulantTable::insert(std::array<int, 4> key, Estimate estimate, std::string method) {
    std::sort(key.begin(), key.end());
    entries_[key] = Entry{estimate, std::move(method)};
}

bool CumulantTable::contains(std::array<int, 4> key) const {
    std::sort(key.begin(), key.end());
    return entries_.count(key) > 0;
}

const CumulantTable::Entry& CumulantTable::at(std::array<int, 4> key) const {
    std::sort(key.begin(), key.end());
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw std::out_of_range("cumulant table has no entry for " + tuple_name(key));
    return it->second;
}

void CumulantTable::save_csv(const std::filesystem::path& path) const {
    CsvWriter csv({"k1", "k2", "k3", "k4", "estimate", "stderr", "method"});
    for (const auto& [key, entry] : entries_) {
        csv.append(key[0]);
        csv.append(key[1]);
        csv.append(key[2]);
        csv.append(key[3]);
        csv.append(entry.estimate.value);
        csv.append(entry.estimate.std_err);
        csv.append(entry.method);
        csv.end_row();
    }
    csv.save(path);
}

CumulantTable ursell4_table_quadrature(const EigenfunctionBasis& basis,
                                       const DataMeasure& measure,
                                       const std::vector<std::array<int, 4>>& tuples,
                                       const Eigen::VectorXd* weight_override) {
    const auto G = static_cast<Eigen::Index>(measure.grid_size());
    Eigen::VectorXd w(G);
    for (Eigen::Index i = 0; i < G; ++i) w[i] = measure.weights()[static_cast<std::size_t>(i)];
    if (weight_override) {
        if (weight_override->size() != G)
            throw std::invalid_argument("weight override length does not match measure grid");
        w = w.cwiseProduct(*weight_override);
        const double mass = w.sum();
        if (!(mass > 0.0)) throw std::invalid_argument("weight override has non-positive mass");
        w /= mass;
    }

    int kmax = 0;
    for (const auto& t : tuples)
        for (int m : t) kmax = std::max(kmax, m);
    if (kmax == 0) {
        CumulantTable empty;
        return empty;
    }

    // phi(i, k-1) = phi_k(node_i), centered against the (possibly reweighted) mean.
    Eigen::MatrixXd phi(G, kmax);
    std::vector<double> buf(static_cast<std::size_t>(kmax));
    for (Eigen::Index i = 0; i < G; ++i) {
        basis.evaluate(measure.nodes()[static_cast<std::size_t>(i)], kmax, buf.data());
        for (int k = 0; k < kmax; ++k) phi(i, k) = buf[static_cast<std::size_t>(k)];
    }
    const Eigen::RowVectorXd means = w.transpose() * phi;
    phi.rowwise() -= means;

    CumulantTable table;
    table.sample_size = 0;
    auto pair_moment = [&](int a, int b) {
        return (w.array() * phi.col(a - 1).array() * phi.col(b - 1).array()).sum();
    };
    for (auto key : tuples) {
        std::sort(key.begin(), key.end());
        if (table.contains(key)) continue;
        const double m4 = (w.array() * phi.col(key[0] - 1).array() * phi.col(key[1] - 1).array() *
                           phi.col(key[2] - 1).array() * phi.col(key[3] - 1).array())
                              .sum();
        const double u = m4 - pair_moment(key[0], key[1]) * pair_moment(key[2], key[3]) -
                         pair_moment(key[0], key[2]) * pair_moment(key[1], key[3]) -
                         pair_moment(key[0], key[3]) * pair_moment(key[1], key[2]);
        table.insert(key, Estimate{u, 0.0}, "quadrature");
    }
    return table;
}

CumulantTable ursell4_table_mc(const FeatureSample& sample,
                               const std::vector<std::array<int, 4>>& tuples,
                               const UrsellOptions& options) {
    CumulantTable table;
    table.sample_size = sample.values.rows();
    for (auto key : tuples) {
        std::sort(key.begin(), key.end());
        if (table.contains(key)) continue;
        table.insert(key, ursell4(sample, key, options), "mc");
    }
    return table;
}

std::vector<std::array<int, 4>> shell_b_tuples(std::span<const int> lesser, int q) {
    std::vector<std::array<int, 4>> tuples;
    for (std::size_t i = 0; i < lesser.size(); ++i)
        for (std::size_t j = i; j < lesser.size(); ++j)
            tuples.push_back({lesser[i], lesser[j], q, q});
    return tuples;
}

std::vector<std::array<int, 4>> shell_a_tuples(std::span<const int> lesser, int q) {
    std::vector<std::array<int, 4>> tuples;
    for (std::size_t i = 0; i < lesser.size(); ++i)
        for (std::size_t j = i; j < lesser.size(); ++j)
            for (std::size_t l = j; l < lesser.size(); ++l)
                tuples.push_back({lesser[i], lesser[j], lesser[l], q});
    return tuples;
}

GridFn b_form(const CumulantTable& table, std::span<const int> lesser, int q,
              const EigenfunctionBasis& basis, const DataMeasure& measure) {
    struct Term {
        int k1, k2;
        double coef;
    };
    auto terms = std::make_shared<std::vector<Term>>();
    for (std::size_t i = 0; i < lesser.size(); ++i) {
        for (std::size_t j = i; j < lesser.size(); ++j) {
            const double u = table.at({lesser[i], lesser[j], q, q}).estimate.value;
            // Unordered pair (k1, k2) appears twice in the full double sum.
            const double mult = (i == j) ? 1.0 : 2.0;
            terms->push_back({lesser[i], lesser[j], 0.5 * mult * u});
        }
    }

    GridFn out;
    auto basis_ptr = &basis;
    out.fn = [terms, basis_ptr](double x) {
        double s = 0.0;
        for (const auto& t : *terms) {
            const double delta = (t.k1 == t.k2) ? 1.0 : 0.0;
            s += t.coef * ((*basis_ptr)(t.k1, x) * (*basis_ptr)(t.k2, x) - delta);
        }
        return s;
    };
    const auto G = static_cast<Eigen::Index>(measure.grid_size());
    out.on_grid.resize(G);
    for (Eigen::Index i = 0; i < G; ++i)
        out.on_grid[i] = out.fn(measure.nodes()[static_cast<std::size_t>(i)]);
    return out;
}

GridFn a_form(const CumulantTable& table, std::span<const int> lesser, int q,
              const EigenfunctionBasis& basis, const DataMeasure& measure) {
    struct Term {
        int k1, k2, k3;
        double coef;
    };
    auto terms = std::make_shared<std::vector<Term>>();
    for (std::size_t i = 0; i < lesser.size(); ++i) {
        for (std::size_t j = i; j < lesser.size(); ++j) {
            for (std::size_t l = j; l < lesser.size(); ++l) {
                const double u = table.at({lesser[i], lesser[j], lesser[l], q}).estimate.value;
                // Number of distinct orderings of (k1, k2, k3).
                double mult = 6.0;
                if (i == j && j == l) mult = 1.0;
                else if (i == j || j == l || i == l) mult = 3.0;
                terms->push_back({lesser[i], lesser[j], lesser[l], mult * u / 6.0});
            }
        }
    }

    GridFn out;
    auto basis_ptr = &basis;
    out.fn = [terms, basis_ptr](double x) {
        double s = 0.0;
        for (const auto& t : *terms) {
            const double pa = (*basis_ptr)(t.k1, x);
            const double pb = (*basis_ptr)(t.k2, x);
            const double pc = (*basis_ptr)(t.k3, x);
            double he3 = pa * pb * pc;
            if (t.k1 == t.k2) he3 -= pc;
            if (t.k2 == t.k3) he3 -= pa;
            if (t.k1 == t.k3) he3 -= pb;
            s += t.coef * he3;
        }
        return s;
    };
    const auto G = static_cast<Eigen::Index>(measure.grid_size());
    out.on_grid.resize(G);
    for (Eigen::Index i = 0; i < G; ++i)
        out.on_grid[i] = out.fn(measure.nodes()[static_cast<std::size_t>(i)]);
    return out;
}

GaussianityReport gaussianity_report(const FeatureSample& sample, const UrsellOptions& options) {
    const long n = sample.values.rows();
    const auto M = static_cast<Eigen::Index>(sample.modes.size());
    const auto bounds = block_bounds(n, options.jackknife_blocks);
    const auto B = static_cast<long>(bounds.size() - 1);

    GaussianityReport report;
    const Eigen::RowVectorXd raw_means = sample.values.colwise().mean();
    Eigen::MatrixXd centered = sample.values.rowwise() - raw_means;

    for (Eigen::Index j = 0; j < M; ++j) {
        ModeGaussianity g;
        g.mode = sample.modes[static_cast<std::size_t>(j)];
        std::vector<double> s2(static_cast<std::size_t>(B), 0.0), s4(static_cast<std::size_t>(B), 0.0);
        for (long b = 0; b < B; ++b) {
            for (long i = bounds[static_cast<std::size_t>(b)];
                 i < bounds[static_cast<std::size_t>(b) + 1]; ++i) {
                const double v = centered(i, j);
                const double v2 = v * v;
                s2[static_cast<std::size_t>(b)] += v2;
                s4[static_cast<std::size_t>(b)] += v2 * v2;
            }
        }
        double S2 = 0, S4 = 0;
        for (long b = 0; b < B; ++b) {
            S2 += s2[static_cast<std::size_t>(b)];
            S4 += s4[static_cast<std::size_t>(b)];
        }
        const double m2 = S2 / static_cast<double>(n);
        g.variance = m2;
        const double scale = 1.0 + raw_means[j] * raw_means[j];
        if (m2 <= 1e-20 * scale) {
            g.degenerate = true;
            report.modes.push_back(g);
            continue;
        }
        const double m4 = S4 / static_cast<double>(n);
        g.excess_kurtosis = m4 / (m2 * m2) - 3.0;
        if (B >= 2) {
            std::vector<double> loo(static_cast<std::size_t>(B));
            double mean_loo = 0.0;
            for (long b = 0; b < B; ++b) {
                const double nb = static_cast<double>(n - (bounds[static_cast<std::size_t>(b) + 1] -
                                                           bounds[static_cast<std::size_t>(b)]));
                const double lm2 = (S2 - s2[static_cast<std::size_t>(b)]) / nb;
                const double lm4 = (S4 - s4[static_cast<std::size_t>(b)]) / nb;
                loo[static_cast<std::size_t>(b)] = lm4 / (lm2 * lm2) - 3.0;
                mean_loo += loo[static_cast<std::size_t>(b)];
            }
            mean_loo /= static_cast<double>(B);
            double ss = 0.0;
            for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
            g.std_err = std::sqrt(ss * static_cast<double>(B - 1) / static_cast<double>(B));
        }
        g.flagged = g.std_err > 0.0 && std::abs(g.excess_kurtosis) > 3.0 * g.std_err;
        report.modes.push_back(g);
    }

    // Dependence beyond linear correlation: correlation of squared features.
    Eigen::MatrixXd sq = centered.cwiseAbs2();
    Eigen::RowVectorXd sq_mean = sq.colwise().mean();
    sq.rowwise() -= sq_mean;
    Eigen::MatrixXd cov = sq.transpose() * sq / static_cast<double>(n);
    report.squared_corr.resize(M, M);
    for (Eigen::Index a = 0; a < M; ++a) {
        for (Eigen::Index b = 0; b < M; ++b) {
            const double denom = std::sqrt(cov(a, a) * cov(b, b));
            report.squared_corr(a, b) = denom > 0.0 ? cov(a, b) / denom : 0.0;
        }
    }
    for (Eigen::Index a = 0; a < M; ++a) {
        for (Eigen::Index b = a + 1; b < M; ++b) {
            if (std::abs(report.squared_corr(a, b)) > report.max_offdiag_sq_corr) {
                report.max_offdiag_sq_corr = std::abs(report.squared_corr(a, b));
                report.pair_a = sample.modes[static_cast<std::size_t>(a)];
                report.pair_b = sample.modes[static_cast<std::size_t>(b)];
            }
        }
    }
    return report;
}

void save_gaussianity_csv(const GaussianityReport& report, const std::filesystem::path& path) {
    CsvWriter csv({"mode", "variance", "excess_kurtosis", "stderr", "flagged", "degenerate"});
    for (const auto& g : report.modes) {
        csv.append(g.mode);
        csv.append(g.variance);
        csv.append(g.excess_kurtosis);
        csv.append(g.std_err);
        csv.append_raw(g.flagged ? "1" : "0");
        csv.append_raw(g.degenerate ? "1" : "0");
        csv.end_row();
    }
    csv.save(path);
}

}  // namespace gprg
