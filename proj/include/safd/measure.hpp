#pragma once

// Discrete-measure toolkit: weighted point clouds standing in for mu, mu^omega
// and nu^omega_n, dyadic and anisotropic grid entropies, conditional entropy
// over finite partitions, component measures, the multi-scale telescoping
// residual and local-dimension slopes.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "safd/errors.hpp"
#include "safd/model.hpp"
#include "safd/sampling.hpp"

namespace safd {

struct DiscreteMeasure {
    int d = 1;
    std::vector<double> pts; // row-major, size() * d
    std::vector<double> w;   // nonnegative, sums to 1
    std::vector<std::string> provenance; // optional, per atom

    size_t size() const { return w.size(); }
    std::span<const double> point(size_t i) const { return {pts.data() + i * d, static_cast<size_t>(d)}; }

    void validate() const {
        if (pts.size() != w.size() * static_cast<size_t>(d))
            throw DimensionMismatch("point/weight size mismatch");
        double s = 0.0;
        for (double x : w) {
            if (x < 0.0) throw BadWeights("negative weight in measure");
            s += x;
        }
        if (std::fabs(s - 1.0) > 1e-12) throw BadWeights("measure weights must sum to 1");
    }

    double diameter() const {
        double m = 0.0;
        for (int j = 0; j < d; ++j) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (size_t i = 0; i < size(); ++i) {
                lo = std::min(lo, pts[i * d + j]);
                hi = std::max(hi, pts[i * d + j]);
            }
            if (size()) m += (hi - lo) * (hi - lo);
        }
        return std::sqrt(m);
    }

    static DiscreteMeasure point_mass(std::vector<double> x) {
        DiscreteMeasure m;
        m.d = static_cast<int>(x.size());
        m.pts = std::move(x);
        m.w = {1.0};
        return m;
    }
};

// --- grid keys -------------------------------------------------------------
//
// Dyadic cells D_t use the floored level: a point x lands in cell
// floor(2^{floor(t)} x) per coordinate. Nonconformal cells E (boxes with side
// lambda_j in coordinate j) floor x_j / lambda_j directly. Cell indices are
// kept as doubles (bit-exact keys without int64 overflow at deep levels).

using GridKey = std::vector<uint64_t>;

struct GridKeyHash {
    size_t operator()(const GridKey& k) const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (uint64_t v : k) {
            h ^= v;
            h *= 0x100000001b3ull;
        }
        return static_cast<size_t>(h);
    }
};

inline uint64_t cell_index_bits(double v) {
    double c = std::floor(v) + 0.0; // normalize -0.0
    return std::bit_cast<uint64_t>(c);
}

// keyer: per-coordinate scaled floor. levels are dyadic exponents (floored).
inline GridKey dyadic_key(std::span<const double> x, std::span<const double> levels) {
    GridKey k(x.size());
    for (size_t j = 0; j < x.size(); ++j)
        k[j] = cell_index_bits(std::ldexp(x[j], static_cast<int>(std::floor(levels[j]))));
    return k;
}

inline GridKey ecell_key(std::span<const double> x, std::span<const double> lambda) {
    GridKey k(x.size());
    for (size_t j = 0; j < x.size(); ++j) k[j] = cell_index_bits(x[j] / lambda[j]);
    return k;
}

// Integer cell indices of the box partition with side lambda_j;
// convenience view of ecell_key for small levels.
inline std::vector<int64_t> ecell_index(std::span<const double> x, std::span<const double> lambda) {
    std::vector<int64_t> k(x.size());
    for (size_t j = 0; j < x.size(); ++j) k[j] = static_cast<int64_t>(std::floor(x[j] / lambda[j]));
    return k;
}

// --- partitions of a support -----------------------------------------------

struct FinitePartitionView {
    std::vector<int32_t> block; // block id per atom
    int32_t count = 0;
};

template <class KeyFn>
inline FinitePartitionView view_from_key(const DiscreteMeasure& m, KeyFn key) {
    FinitePartitionView v;
    v.block.resize(m.size());
    std::unordered_map<GridKey, int32_t, GridKeyHash> ids;
    ids.reserve(m.size());
    for (size_t i = 0; i < m.size(); ++i) {
        auto [it, fresh] = ids.emplace(key(m.point(i)), v.count);
        if (fresh) ++v.count;
        v.block[i] = it->second;
    }
    return v;
}

inline FinitePartitionView view_dyadic(const DiscreteMeasure& m, std::span<const double> levels) {
    return view_from_key(m, [&](std::span<const double> x) { return dyadic_key(x, levels); });
}

inline FinitePartitionView view_dyadic_iso(const DiscreteMeasure& m, double level) {
    std::vector<double> lv(m.d, level);
    return view_from_key(m, [&](std::span<const double> x) { return dyadic_key(x, lv); });
}

inline FinitePartitionView view_ecell(const DiscreteMeasure& m, std::span<const double> lambda) {
    return view_from_key(m, [&](std::span<const double> x) { return ecell_key(x, lambda); });
}

inline FinitePartitionView join(const FinitePartitionView& a, const FinitePartitionView& b) {
    FinitePartitionView v;
    v.block.resize(a.block.size());
    std::unordered_map<uint64_t, int32_t> ids;
    ids.reserve(a.block.size());
    for (size_t i = 0; i < a.block.size(); ++i) {
        uint64_t key = (static_cast<uint64_t>(static_cast<uint32_t>(a.block[i])) << 32) |
                       static_cast<uint32_t>(b.block[i]);
        auto [it, fresh] = ids.emplace(key, v.count);
        if (fresh) ++v.count;
        v.block[i] = it->second;
    }
    return v;
}

inline std::vector<double> block_masses(const DiscreteMeasure& m, const FinitePartitionView& v) {
    std::vector<double> mass(v.count, 0.0);
    for (size_t i = 0; i < m.size(); ++i) mass[v.block[i]] += m.w[i];
    return mass;
}

// H(theta, xi): Shannon entropy of the block masses, in bits.
inline double entropy(const DiscreteMeasure& m, const FinitePartitionView& v) {
    auto mass = block_masses(m, v);
    return shannon_entropy(mass);
}

// H(theta, xi | eta) = sum_B theta(B) H(theta_B, xi) = H(xi v eta) - H(eta).
inline double conditional_entropy(const DiscreteMeasure& m, const FinitePartitionView& xi,
                                  const FinitePartitionView& eta) {
    return entropy(m, join(xi, eta)) - entropy(m, eta);
}

inline double dyadic_entropy(const DiscreteMeasure& m, double level) {
    return entropy(m, view_dyadic_iso(m, level));
}

inline double dyadic_entropy(const DiscreteMeasure& m, std::span<const double> levels) {
    return entropy(m, view_dyadic(m, levels));
}

// Normalized restriction of theta to the block containing x.
inline DiscreteMeasure component_at(const DiscreteMeasure& m, const FinitePartitionView& v,
                                    std::span<const double> x, GridKey (*keyer)(std::span<const double>,
                                                                                std::span<const double>),
                                    std::span<const double> param) {
    GridKey kx = keyer(x, param);
    // find the block id by matching any atom in the same cell
    int32_t target = -1;
    for (size_t i = 0; i < m.size(); ++i) {
        if (keyer(m.point(i), param) == kx) {
            target = v.block[i];
            break;
        }
    }
    if (target < 0) throw ZeroMassBlock("no mass in the cell containing x");
    DiscreteMeasure out;
    out.d = m.d;
    double mass = 0.0;
    for (size_t i = 0; i < m.size(); ++i)
        if (v.block[i] == target) mass += m.w[i];
    if (mass <= 0.0) throw ZeroMassBlock("block has zero mass");
    for (size_t i = 0; i < m.size(); ++i)
        if (v.block[i] == target) {
            for (int j = 0; j < m.d; ++j) out.pts.push_back(m.pts[i * m.d + j]);
            out.w.push_back(m.w[i] / mass);
        }
    return out;
}

inline DiscreteMeasure component_at_dyadic(const DiscreteMeasure& m, std::span<const double> levels,
                                           std::span<const double> x) {
    auto v = view_dyadic(m, levels);
    return component_at(m, v, x, &dyadic_key, levels);
}

// Mass-weighted expectation over occupied blocks of per-component entropy
// against a fine partition: the component side of the conditional-entropy
// identity, computed as an exact finite sum (never by sampling blocks).
inline double component_entropy_expectation(const DiscreteMeasure& m, const FinitePartitionView& coarse,
                                            const FinitePartitionView& fine) {
    auto mass = block_masses(m, coarse);
    // group atoms by coarse block
    std::vector<std::vector<size_t>> atoms(coarse.count);
    for (size_t i = 0; i < m.size(); ++i) atoms[coarse.block[i]].push_back(i);
    double acc = 0.0;
    for (int32_t b = 0; b < coarse.count; ++b) {
        if (mass[b] <= 0.0) continue;
        std::unordered_map<int32_t, double> sub;
        for (size_t i : atoms[b]) sub[fine.block[i]] += m.w[i] / mass[b];
        double h = 0.0;
        for (const auto& [k, p] : sub)
            if (p > 0.0) h -= p * std::log2(p);
        acc += mass[b] * h;
    }
    return acc;
}

// --- telescoping -----------------------------------------------------------

// Level schedule: per-coordinate dyadic levels as a function of the scale
// index q. Isotropic unit-rate schedule reproduces plain dyadic partitions.
using LevelSchedule = std::function<std::vector<double>(int q)>;

inline LevelSchedule isotropic_schedule(int d, double rate = 1.0) {
    return [d, rate](int q) { return std::vector<double>(d, rate * q); };
}

// | (1/n) H(theta, E_n) - avg_{1<=q<=n} (1/m) H(theta, E_{q+m} | E_q) |.
inline double telescope_residual(const DiscreteMeasure& m, const LevelSchedule& levels, int mstep, int n) {
    if (mstep < 1 || mstep > n) throw PreconditionViolated("telescope needs 1 <= m <= n");
    double lhs = entropy(m, view_dyadic(m, levels(n))) / n;
    double acc = 0.0;
    for (int q = 1; q <= n; ++q) {
        auto coarse = view_dyadic(m, levels(q));
        auto fine = view_dyadic(m, levels(q + mstep));
        acc += conditional_entropy(m, fine, coarse) / mstep;
    }
    return std::fabs(lhs - acc / n);
}

// --- local dimension ---------------------------------------------------------

struct LocalDimFit {
    double slope = 0.0;
    double stderror = 0.0;
    int radii_used = 0;
};

// Least-squares slope of log2 theta(B(x,r)) against log2 r over the radii
// with positive mass. Balls are Euclidean; counting is exact over the cloud.
inline LocalDimFit local_dimension(const DiscreteMeasure& m, std::span<const double> x,
                                   std::span<const double> radii) {
    std::vector<double> xs, ys;
    for (double r : radii) {
        double mass = 0.0;
        double r2 = r * r;
        for (size_t i = 0; i < m.size(); ++i) {
            double dist2 = 0.0;
            auto p = m.point(i);
            for (int j = 0; j < m.d; ++j) dist2 += (p[j] - x[j]) * (p[j] - x[j]);
            if (dist2 <= r2) mass += m.w[i];
        }
        if (mass > 0.0) {
            xs.push_back(std::log2(r));
            ys.push_back(std::log2(mass));
        }
    }
    if (xs.size() < 3) throw InsufficientResolution("need >= 3 radii with positive ball mass");
    LocalDimFit fit;
    fit.radii_used = static_cast<int>(xs.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double num = 0, den = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    fit.slope = num / den;
    double ss = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double resid = ys[i] - my - fit.slope * (xs[i] - mx);
        ss += resid * resid;
    }
    if (xs.size() > 2) fit.stderror = std::sqrt(ss / ((xs.size() - 2) * den));
    return fit;
}

// --- sampling mu -------------------------------------------------------------

inline constexpr size_t kSampleChunk = 8192;

struct SampleConfig {
    size_t n_points = 100000;
    int depth = 40;
    uint64_t seed = 1;
    int threads = 1;
    int target_level = -1; // when >= 0, enforce r_max^depth < 2^-(target_level+10)
};

// Empirical mu: n i.i.d. truncated codings phi_{x|depth}(0) with x ~ p^N.
inline DiscreteMeasure sample_mu(const WeightedModel& model, const SampleConfig& cfg) {
    if (cfg.target_level >= 0) {
        double bits = -cfg.depth * std::log2(model.ifs.r_max());
        if (bits < cfg.target_level + 10)
            throw InsufficientDepth("depth " + std::to_string(cfg.depth) + " resolves only " +
                                    std::to_string(bits) + " bits; need target_level + 10");
    }
    const int d = model.d();
    const auto cdf = cumulative(model.p);
    DiscreteMeasure out;
    out.d = d;
    out.pts.resize(cfg.n_points * d);
    out.w.assign(cfg.n_points, 1.0 / static_cast<double>(cfg.n_points));

    std::vector<std::array<double, 2>> mapflat; // (rate, offset) per symbol per coord
    mapflat.resize(model.alphabet() * d);
    for (int i = 0; i < model.alphabet(); ++i)
        for (int j = 0; j < d; ++j)
            mapflat[i * d + j] = {model.ifs.maps[i].r[j].as_double(), model.ifs.maps[i].t[j].as_double()};

    size_t n_chunks = (cfg.n_points + kSampleChunk - 1) / kSampleChunk;
    parallel_chunks(n_chunks, cfg.threads, [&](size_t c) {
        Rng rng(derive_seed(cfg.seed, c));
        size_t lo = c * kSampleChunk, hi = std::min(cfg.n_points, lo + kSampleChunk);
        std::vector<double> scale(d), off(d);
        for (size_t i = lo; i < hi; ++i) {
            std::fill(scale.begin(), scale.end(), 1.0);
            std::fill(off.begin(), off.end(), 0.0);
            for (int k = 0; k < cfg.depth; ++k) {
                size_t sym = rng.categorical(cdf);
                const auto* mf = &mapflat[sym * d];
                for (int j = 0; j < d; ++j) {
                    off[j] += scale[j] * mf[j][1];
                    scale[j] *= mf[j][0];
                }
            }
            for (int j = 0; j < d; ++j) out.pts[i * d + j] = off[j];
        }
    });
    return out;
}

// Entropy of the empirical measure across a band of isotropic dyadic levels,
// plus the least-squares dimension slope over that band.
struct EntropyBand {
    std::vector<int> levels;
    std::vector<double> H;       // bits at each level
    std::vector<size_t> occupied;
    double slope = 0.0;          // dH/dlevel: the empirical entropy dimension
    double ratio_mean = 0.0;     // mean of H(t)/t over the band
    bool bias_caveat = false;    // occupied cells exceed n/10 somewhere in the band
};

inline EntropyBand entropy_band(const DiscreteMeasure& m, int level_lo, int level_hi) {
    EntropyBand band;
    for (int t = level_lo; t <= level_hi; ++t) {
        auto view = view_dyadic_iso(m, t);
        band.levels.push_back(t);
        band.H.push_back(entropy(m, view));
        band.occupied.push_back(static_cast<size_t>(view.count));
        if (static_cast<double>(view.count) > static_cast<double>(m.size()) / 10.0)
            band.bias_caveat = true;
    }
    double mx = 0, my = 0;
    size_t k = band.levels.size();
    for (size_t i = 0; i < k; ++i) {
        mx += band.levels[i];
        my += band.H[i];
    }
    mx /= k;
    my /= k;
    double num = 0, den = 0;
    for (size_t i = 0; i < k; ++i) {
        num += (band.levels[i] - mx) * (band.H[i] - my);
        den += (band.levels[i] - mx) * (band.levels[i] - mx);
    }
    band.slope = den > 0 ? num / den : 0.0;
    for (size_t i = 0; i < k; ++i)
        if (band.levels[i] > 0) band.ratio_mean += band.H[i] / band.levels[i];
    band.ratio_mean /= k;
    return band;
}

// Default resolvable band for entropy-dimension estimates.
inline std::pair<int, int> default_level_band(size_t n_samples, int d) {
    int hi = static_cast<int>(std::floor(std::log2(static_cast<double>(n_samples)) / d)) - 2;
    return {4, std::max(5, hi)};
}

// Least-squares slope restricted to levels whose occupied-cell count stays
// under samples/10, where the plug-in entropy is trustworthy.
inline double resolvable_slope(const EntropyBand& band, size_t samples, int* lo_used = nullptr,
                               int* hi_used = nullptr) {
    std::vector<double> xs, ys;
    for (size_t i = 0; i < band.levels.size(); ++i) {
        if (static_cast<double>(band.occupied[i]) > static_cast<double>(samples) / 10.0) continue;
        xs.push_back(band.levels[i]);
        ys.push_back(band.H[i]);
    }
    if (xs.size() < 2) throw InsufficientResolution("fewer than two trustworthy entropy levels");
    if (lo_used) *lo_used = static_cast<int>(xs.front());
    if (hi_used) *hi_used = static_cast<int>(xs.back());
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double num = 0, den = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    return num / den;
}

} // namespace safd
