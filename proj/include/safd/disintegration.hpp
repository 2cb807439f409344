#pragma once

// Disintegration by linear parts: the partition Gamma of level-N words keyed
// by the diagonal linear part of the composed map, the Bernoulli quotient
// measure P on class sequences, the random product measures beta^omega with
// their atomic projections nu^omega_n, the nonconformal partitions E^omega_n,
// the dynamical self-affinity (convolution) check, the finite-level
// random-walk entropy h_RW and kappa.
//
// Words of length N are grouped through their symbol-count type: diagonal
// matrices commute, so the linear part of phi_u depends only on how many
// times each symbol occurs in u. Classes therefore store types rather than
// words, which keeps Gamma computable when |Lambda|^N is far past the word
// enumeration budget.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "safd/dimension.hpp"
#include "safd/errors.hpp"
#include "safd/measure.hpp"
#include "safd/model.hpp"
#include "safd/sampling.hpp"
#include "safd/separation.hpp"

namespace safd {

enum class Granularity { ByLinearPart, ByWord };

using TypeVec = std::vector<uint32_t>; // symbol multiplicities, sums to N

namespace detail {

inline double log_multinomial(const TypeVec& c) {
    double n = 0, acc = 0;
    for (uint32_t k : c) n += k;
    acc = std::lgamma(n + 1.0);
    for (uint32_t k : c) acc -= std::lgamma(k + 1.0);
    return acc;
}

inline double multinomial_count(const TypeVec& c) { return std::round(std::exp(log_multinomial(c))); }

// enumerate all symbol-count vectors with sum N over an alphabet of size m
inline void enumerate_types(int m, int N, TypeVec& cur, int remaining, std::vector<TypeVec>& out) {
    if (static_cast<int>(cur.size()) == m - 1) {
        cur.push_back(static_cast<uint32_t>(remaining));
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int k = 0; k <= remaining; ++k) {
        cur.push_back(static_cast<uint32_t>(k));
        enumerate_types(m, N, cur, remaining - k, out);
        cur.pop_back();
    }
}

} // namespace detail

struct GammaClass {
    std::vector<Scalar> linpart;       // diagonal of A_{phi_u}, signed, sorted-coordinate order
    double mass = 0.0;                 // beta(class)
    std::optional<Rational> mass_exact;
    std::vector<TypeVec> types;        // the symbol types whose words fall in this class
    std::vector<double> type_mass;     // beta mass per type (count * prod p^c)
    double word_count = 0.0;           // total words in the class (may exceed any budget)
    std::optional<Word> word;          // set in by-word granularity
    bool all_words = false;            // homogeneous system: the class is the whole of Lambda^N

    std::string linpart_str() const {
        std::string s;
        for (size_t j = 0; j < linpart.size(); ++j) {
            if (j) s += ",";
            s += linpart[j].str();
        }
        return s;
    }
};

struct GammaPartition {
    int N = 1;
    Granularity granularity = Granularity::ByLinearPart;
    std::vector<GammaClass> classes; // deterministic order (sorted by linear part / word)
    std::vector<double> class_cdf;   // cumulative masses, for sampling from P

    size_t size() const { return classes.size(); }

    double entropy_bits() const {
        std::vector<double> m;
        m.reserve(classes.size());
        for (const auto& c : classes) m.push_back(c.mass);
        return shannon_entropy(m);
    }
};

// Key for grouping linear parts. Exact mode keys on the exact rational
// vector; float mode keys on rates rounded to 12 significant digits.
namespace detail {

inline std::string linpart_key(const std::vector<Scalar>& lp, NumMode mode) {
    std::string key;
    for (const auto& s : lp) {
        if (mode == NumMode::Exact) {
            key += s.str();
        } else {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.12e", s.as_double());
            key += buf;
        }
        key += "|";
    }
    return key;
}

} // namespace detail

inline GammaPartition build_gamma(const WeightedModel& model, int N,
                                  Granularity granularity = Granularity::ByLinearPart,
                                  uint64_t budget = kDefaultEnumBudget) {
    if (N < 1) throw PreconditionViolated("block length N must be >= 1");
    const int m = model.alphabet();
    const int d = model.d();
    GammaPartition out;
    out.N = N;
    out.granularity = granularity;

    if (granularity == Granularity::ByWord) {
        double count = std::pow(static_cast<double>(m), N);
        if (count > static_cast<double>(budget))
            throw BudgetExceeded("by-word Gamma needs |Lambda|^N <= budget");
        uint64_t total = static_cast<uint64_t>(count);
        for (uint64_t idx = 0; idx < total; ++idx) {
            Word w = Word::from_index(idx, m, N);
            GammaClass cls;
            ComposedMap cm = compose_word(model.ifs, w);
            cls.linpart = cm.rate;
            double mass = 1.0;
            TypeVec type(m, 0);
            for (int s : w.symbols) {
                mass *= model.p[s];
                ++type[s];
            }
            cls.mass = mass;
            if (model.ifs.mode == NumMode::Exact) {
                Rational q(1);
                for (int s : w.symbols) q *= model.p_scalar[s].rat();
                cls.mass_exact = q;
            }
            cls.types = {type};
            cls.type_mass = {mass};
            cls.word_count = 1.0;
            cls.word = w;
            out.classes.push_back(std::move(cls));
        }
    } else if ([&] {
                   for (int i = 1; i < m; ++i)
                       for (int j = 0; j < d; ++j)
                           if (!(model.ifs.maps[i].r[j] == model.ifs.maps[0].r[j])) return false;
                   return true;
               }()) {
        // homogeneous linear parts: Gamma is the trivial partition
        GammaClass cls;
        for (int j = 0; j < d; ++j) {
            Scalar acc = model.ifs.maps[0].r[j];
            for (int k = 1; k < N; ++k) acc = acc * model.ifs.maps[0].r[j];
            cls.linpart.push_back(acc);
        }
        cls.mass = 1.0;
        if (model.ifs.mode == NumMode::Exact) cls.mass_exact = Rational(1);
        cls.word_count = std::pow(static_cast<double>(m), N);
        cls.all_words = true;
        out.classes.push_back(std::move(cls));
    } else {
        std::vector<TypeVec> types;
        {
            double n_types = 1.0;
            for (int k = 1; k < m; ++k) n_types *= static_cast<double>(N + k) / k;
            if (n_types > static_cast<double>(budget))
                throw BudgetExceeded("type enumeration exceeds budget");
            TypeVec cur;
            detail::enumerate_types(m, N, cur, N, types);
        }
        std::unordered_map<std::string, size_t> index;
        for (const auto& type : types) {
            std::vector<Scalar> lp;
            for (int j = 0; j < d; ++j) {
                Scalar acc = (model.ifs.mode == NumMode::Exact) ? Scalar::exact(1) : Scalar::real(1.0);
                for (int i = 0; i < m; ++i)
                    for (uint32_t k = 0; k < type[i]; ++k) acc = acc * model.ifs.maps[i].r[j];
                lp.push_back(acc);
            }
            double count = detail::multinomial_count(type);
            double mass = count;
            for (int i = 0; i < m; ++i) mass *= std::pow(model.p[i], static_cast<double>(type[i]));

            std::string key = detail::linpart_key(lp, model.ifs.mode);
            auto it = index.find(key);
            if (it == index.end()) {
                index.emplace(key, out.classes.size());
                GammaClass cls;
                cls.linpart = std::move(lp);
                out.classes.push_back(std::move(cls));
                it = index.find(key);
            }
            GammaClass& cls = out.classes[it->second];
            cls.mass += mass;
            cls.types.push_back(type);
            cls.type_mass.push_back(mass);
            cls.word_count += count;
            if (model.ifs.mode == NumMode::Exact) {
                boost::multiprecision::cpp_int cnt = 1; // exact multinomial coefficient
                int nsum = 0;
                for (uint32_t k : type) nsum += k;
                for (int v = 2; v <= nsum; ++v) cnt *= v;
                for (uint32_t k : type)
                    for (uint32_t v = 2; v <= k; ++v) cnt /= v;
                Rational q(cnt);
                for (int i = 0; i < m; ++i)
                    for (uint32_t k = 0; k < type[i]; ++k) q *= model.p_scalar[i].rat();
                cls.mass_exact = cls.mass_exact ? *cls.mass_exact + q : q;
            }
        }
    }

    // deterministic class order: sort by linear part key, then word
    std::vector<size_t> order(out.classes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        const auto& ca = out.classes[a];
        const auto& cb = out.classes[b];
        std::string ka = detail::linpart_key(ca.linpart, model.ifs.mode);
        std::string kb = detail::linpart_key(cb.linpart, model.ifs.mode);
        if (ka != kb) return ka < kb;
        if (ca.word && cb.word) return ca.word->symbols < cb.word->symbols;
        if (ca.types.empty() || cb.types.empty()) return false;
        return ca.types.front() < cb.types.front();
    });
    std::vector<GammaClass> sorted;
    sorted.reserve(out.classes.size());
    for (size_t i : order) sorted.push_back(std::move(out.classes[i]));
    out.classes = std::move(sorted);

    std::vector<double> masses;
    for (const auto& c : out.classes) masses.push_back(c.mass);
    out.class_cdf = cumulative(masses);
    return out;
}

// Class id of an N-word: by its stored word (ByWord) or linear part.
inline int class_of_word(const GammaPartition& gamma, const WeightedModel& model, const Word& w) {
    if (gamma.granularity == Granularity::ByWord) {
        for (size_t c = 0; c < gamma.classes.size(); ++c)
            if (gamma.classes[c].word && gamma.classes[c].word->symbols == w.symbols)
                return static_cast<int>(c);
        throw PreconditionViolated("word not found in by-word Gamma");
    }
    ComposedMap cm = compose_word(model.ifs, w);
    std::string key = detail::linpart_key(cm.rate, model.ifs.mode);
    for (size_t c = 0; c < gamma.classes.size(); ++c)
        if (detail::linpart_key(gamma.classes[c].linpart, model.ifs.mode) == key)
            return static_cast<int>(c);
    throw PreconditionViolated("linear part not found in Gamma");
}

using OmegaPrefix = std::vector<int>; // class ids, omega_1 ... omega_n

inline OmegaPrefix sample_omega_prefix(const GammaPartition& gamma, int n, Rng& rng) {
    OmegaPrefix w(n);
    for (int k = 0; k < n; ++k) w[k] = static_cast<int>(rng.categorical(gamma.class_cdf));
    return w;
}

struct OmegaScale {
    std::vector<Scalar> rates; // signed diagonal of A^{omega|n}
    std::vector<double> lambda;
    std::vector<double> chi; // -log2 lambda

    int dim() const { return static_cast<int>(rates.size()); }
};

inline OmegaScale omega_scale(const GammaPartition& gamma, const WeightedModel& model,
                              const OmegaPrefix& omega, int n) {
    if (n > static_cast<int>(omega.size())) throw PreconditionViolated("prefix shorter than n");
    const int d = model.d();
    OmegaScale s;
    s.rates.assign(d, model.ifs.mode == NumMode::Exact ? Scalar::exact(1) : Scalar::real(1.0));
    for (int k = 0; k < n; ++k) {
        const auto& cls = gamma.classes.at(omega[k]);
        for (int j = 0; j < d; ++j) s.rates[j] = s.rates[j] * cls.linpart[j];
    }
    for (int j = 0; j < d; ++j) {
        s.lambda.push_back(std::fabs(s.rates[j].as_double()));
        s.chi.push_back(-std::log2(s.lambda.back()));
    }
    return s;
}

// E^{omega}_n cell of x: per-coordinate flooring at the exact box sides.
inline std::vector<int64_t> nonconformal_key(const OmegaScale& scale, std::span<const double> x) {
    return ecell_index(x, scale.lambda);
}

// Per-class sampling tables: cdf over types plus the base multiset of each
// type. Built once, shared read-only by parallel samplers. An all-words
// class (homogeneous system) just draws symbols i.i.d. from p.
struct ClassSampler {
    std::vector<double> type_cdf;
    std::vector<std::vector<int>> type_multiset;
    bool positive = false;
    bool iid = false;
    std::vector<double> p_cdf;
    int N = 1;
    std::optional<Word> fixed; // by-word class: always this word
};

inline std::vector<ClassSampler> make_class_samplers(const GammaPartition& gamma,
                                                     const WeightedModel& model) {
    std::vector<ClassSampler> out(gamma.size());
    for (size_t c = 0; c < gamma.size(); ++c) {
        const GammaClass& cls = gamma.classes[c];
        ClassSampler& cs = out[c];
        cs.positive = cls.mass > 0.0;
        if (!cs.positive) continue;
        if (cls.word) {
            cs.fixed = cls.word;
            continue;
        }
        if (cls.all_words) {
            cs.iid = true;
            cs.p_cdf = cumulative(model.p);
            cs.N = gamma.N;
            continue;
        }
        double acc = 0.0;
        for (size_t t = 0; t < cls.types.size(); ++t) {
            acc += cls.type_mass[t] / cls.mass;
            cs.type_cdf.push_back(acc);
            std::vector<int> block;
            for (int i = 0; i < model.alphabet(); ++i)
                for (uint32_t k = 0; k < cls.types[t][i]; ++k) block.push_back(i);
            cs.type_multiset.push_back(std::move(block));
        }
        if (!cs.type_cdf.empty()) cs.type_cdf.back() = 1.0 + 1e-12;
    }
    return out;
}

// Draw one N-block from the normalized restriction of the word distribution
// to a class: type by mass, then a uniform arrangement of the multiset
// (words sharing a type are equally likely under a Bernoulli base measure).
inline void draw_block(const ClassSampler& cs, Rng& rng, std::vector<int>& block) {
    if (!cs.positive) throw ZeroMassClass("omega visits a zero-mass class");
    if (cs.fixed) {
        block = cs.fixed->symbols;
        return;
    }
    if (cs.iid) {
        block.resize(cs.N);
        for (int k = 0; k < cs.N; ++k) block[k] = static_cast<int>(rng.categorical(cs.p_cdf));
        return;
    }
    size_t t = rng.categorical(cs.type_cdf);
    block = cs.type_multiset[t];
    rng.shuffle(block);
}

inline Word sample_beta_omega_word(const GammaPartition& gamma, const WeightedModel& model,
                                   const OmegaPrefix& omega, int n, Rng& rng) {
    auto samplers = make_class_samplers(gamma, model);
    Word w;
    std::vector<int> block;
    for (int k = 0; k < n; ++k) {
        draw_block(samplers.at(omega[k]), rng, block);
        for (int s : block) w.symbols.push_back(s);
    }
    return w;
}

// nu^omega_n = sum_u beta^omega([u]) delta_{phi_u(0)}.
inline DiscreteMeasure nu_omega_exact(const GammaPartition& gamma, const WeightedModel& model,
                                      const OmegaPrefix& omega, int n,
                                      uint64_t budget = kDefaultEnumBudget) {
    const int m = model.alphabet();
    const int d = model.d();
    if (n == 0) return DiscreteMeasure::point_mass(std::vector<double>(d, 0.0));

    double total = 1.0;
    for (int k = 0; k < n; ++k) total *= gamma.classes.at(omega[k]).word_count;
    if (total > static_cast<double>(budget))
        throw BudgetExceeded("exact nu enumeration needs " + std::to_string(total) + " atoms");

    // per-class explicit word lists with conditional masses
    std::vector<std::vector<std::pair<Word, double>>> block_words(n);
    for (int k = 0; k < n; ++k) {
        const GammaClass& cls = gamma.classes.at(omega[k]);
        if (!(cls.mass > 0.0)) throw ZeroMassClass("omega visits a zero-mass class");
        auto& list = block_words[k];
        if (cls.word) { // by-word class: the conditional law is a point mass
            list.push_back({*cls.word, 1.0});
            continue;
        }
        if (cls.all_words) {
            uint64_t count = static_cast<uint64_t>(cls.word_count);
            for (uint64_t idx = 0; idx < count; ++idx) {
                Word w = Word::from_index(idx, m, gamma.N);
                double mass = 1.0;
                for (int s : w.symbols) mass *= model.p[s];
                list.push_back({std::move(w), mass});
            }
            continue;
        }
        for (const auto& type : cls.types) {
            // enumerate distinct arrangements of the multiset
            std::vector<int> arr;
            for (int i = 0; i < m; ++i)
                for (uint32_t c = 0; c < type[i]; ++c) arr.push_back(i);
            std::sort(arr.begin(), arr.end());
            do {
                double mass = 1.0;
                for (int s : arr) mass *= model.p[s];
                list.push_back({Word{arr}, mass / cls.mass});
            } while (std::next_permutation(arr.begin(), arr.end()));
        }
    }

    DiscreteMeasure out;
    out.d = d;
    std::vector<size_t> idx(n, 0);
    for (;;) {
        Word u;
        double weight = 1.0;
        for (int k = 0; k < n; ++k) {
            u = u.concat(block_words[k][idx[k]].first);
            weight *= block_words[k][idx[k]].second;
        }
        auto pt = compose_word(model.ifs, u).apply_origin();
        for (double c : pt) out.pts.push_back(c);
        out.w.push_back(weight);
        out.provenance.push_back(u.str(m));
        int k = 0;
        while (k < n && ++idx[k] >= block_words[k].size()) idx[k++] = 0;
        if (k == n) break;
    }
    return out;
}

inline DiscreteMeasure nu_omega_sampled(const GammaPartition& gamma, const WeightedModel& model,
                                        const OmegaPrefix& omega, int n, size_t n_atoms, uint64_t seed) {
    const int d = model.d();
    DiscreteMeasure out;
    out.d = d;
    out.w.assign(n_atoms, 1.0 / static_cast<double>(n_atoms));
    out.pts.resize(n_atoms * d);
    auto samplers = make_class_samplers(gamma, model);
    std::vector<std::array<double, 2>> mapflat(model.alphabet() * d);
    for (int i = 0; i < model.alphabet(); ++i)
        for (int j = 0; j < d; ++j)
            mapflat[i * d + j] = {model.ifs.maps[i].r[j].as_double(), model.ifs.maps[i].t[j].as_double()};
    Rng rng(derive_seed(seed, 0x6e75)); // "nu"
    std::vector<double> scale(d), off(d);
    std::vector<int> block;
    for (size_t i = 0; i < n_atoms; ++i) {
        std::fill(scale.begin(), scale.end(), 1.0);
        std::fill(off.begin(), off.end(), 0.0);
        for (int k = 0; k < n; ++k) {
            draw_block(samplers.at(omega[k]), rng, block);
            for (int s : block) {
                const auto* mf = &mapflat[s * d];
                for (int j = 0; j < d; ++j) {
                    off[j] += scale[j] * mf[j][1];
                    scale[j] *= mf[j][0];
                }
            }
        }
        for (int j = 0; j < d; ++j) out.pts[i * d + j] = off[j];
    }
    return out;
}

// Samples of mu^omega with the prefix classes pinned and the tail drawn
// fresh from P per sample (the tail is random by the definition of P, and
// mixing over it leaves the convolution identity intact).
inline DiscreteMeasure sample_mu_omega(const GammaPartition& gamma, const WeightedModel& model,
                                       const OmegaPrefix& omega, int prefix_blocks, size_t n_points,
                                       int depth_blocks, uint64_t seed, int threads = 1) {
    const int d = model.d();
    DiscreteMeasure out;
    out.d = d;
    out.pts.resize(n_points * d);
    out.w.assign(n_points, 1.0 / static_cast<double>(n_points));

    auto samplers = make_class_samplers(gamma, model);
    std::vector<std::array<double, 2>> mapflat(model.alphabet() * d);
    for (int i = 0; i < model.alphabet(); ++i)
        for (int j = 0; j < d; ++j)
            mapflat[i * d + j] = {model.ifs.maps[i].r[j].as_double(), model.ifs.maps[i].t[j].as_double()};

    size_t n_chunks = (n_points + kSampleChunk - 1) / kSampleChunk;
    parallel_chunks(n_chunks, threads, [&](size_t c) {
        Rng rng(derive_seed(seed, c));
        size_t lo = c * kSampleChunk, hi = std::min(n_points, lo + kSampleChunk);
        std::vector<double> scale(d), off(d);
        std::vector<int> block;
        for (size_t i = lo; i < hi; ++i) {
            std::fill(scale.begin(), scale.end(), 1.0);
            std::fill(off.begin(), off.end(), 0.0);
            for (int blk = 0; blk < depth_blocks; ++blk) {
                int cls = (blk < prefix_blocks) ? omega.at(blk)
                                                : static_cast<int>(rng.categorical(gamma.class_cdf));
                draw_block(samplers[cls], rng, block);
                for (int s : block) {
                    const auto* mf = &mapflat[s * d];
                    for (int j = 0; j < d; ++j) {
                        off[j] += scale[j] * mf[j][1];
                        scale[j] *= mf[j][0];
                    }
                }
            }
            for (int j = 0; j < d; ++j) out.pts[i * d + j] = off[j];
        }
    });
    return out;
}

// --- convolution identity ---------------------------------------------------

struct ConvolutionCheck {
    int level_lo = 2, level_hi = 10;
    std::vector<double> H_direct;   // dyadic entropies of direct mu^omega samples
    std::vector<double> H_convolved;
    std::vector<double> gap;        // |direct - convolved|
    double max_gap = 0.0;
    double sliced_w1 = 0.0;         // sliced 1-Wasserstein distance
    double tolerance_bits = 0.05;
    bool pass = false;
};

// Sliced W1: average over random directions of the 1-D transport distance
// between equal-size samples.
inline double sliced_wasserstein(const DiscreteMeasure& a, const DiscreteMeasure& b, int n_dirs,
                                 uint64_t seed) {
    if (a.size() != b.size() || a.d != b.d)
        throw DimensionMismatch("sliced_wasserstein wants equal-size clouds");
    Rng rng(derive_seed(seed, 0x5731));
    const int d = a.d;
    std::vector<double> pa(a.size()), pb(b.size());
    double acc = 0.0;
    for (int t = 0; t < n_dirs; ++t) {
        std::vector<double> dir(d);
        double norm = 0.0;
        for (int j = 0; j < d; ++j) {
            // Box-Muller for an isotropic direction
            double u1 = std::max(rng.uniform01(), 1e-16), u2 = rng.uniform01();
            dir[j] = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
            norm += dir[j] * dir[j];
        }
        norm = std::sqrt(norm);
        for (int j = 0; j < d; ++j) dir[j] /= norm;
        for (size_t i = 0; i < a.size(); ++i) {
            double sa = 0, sb = 0;
            for (int j = 0; j < d; ++j) {
                sa += a.pts[i * d + j] * dir[j];
                sb += b.pts[i * d + j] * dir[j];
            }
            pa[i] = sa;
            pb[i] = sb;
        }
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        double w1 = 0.0;
        for (size_t i = 0; i < pa.size(); ++i) w1 += std::fabs(pa[i] - pb[i]);
        acc += w1 / pa.size();
    }
    return acc / n_dirs;
}

// mu^omega = nu^omega_n * A^{omega|n} mu^{T^n omega}: compare dyadic-entropy
// profiles of a direct cloud against a convolution-built cloud.
inline ConvolutionCheck convolution_check(const WeightedModel& model, const GammaPartition& gamma,
                                          const OmegaPrefix& omega, int n, size_t n_samples,
                                          uint64_t seed, int level_lo = 2, int level_hi = 10,
                                          double tolerance_bits = 0.05, int depth_blocks = 0,
                                          int threads = 1) {
    const int d = model.d();
    if (depth_blocks <= 0) {
        double per_block = -std::log2(model.ifs.r_max()) * gamma.N;
        depth_blocks = static_cast<int>(std::ceil((level_hi + 14) / per_block)) + n;
    }

    DiscreteMeasure direct = sample_mu_omega(gamma, model, omega, n, n_samples, depth_blocks,
                                             derive_seed(seed, 1), threads);

    // convolved cloud: nu atom + A^{omega|n} (fresh mu sample), both drawn
    // independently of the direct cloud. Small nu supports come from the
    // exact atom set; larger ones get a fresh word draw per point so the
    // convolved side is never resolution-limited by a fixed atom pool.
    OmegaScale scale = omega_scale(gamma, model, omega, n);
    OmegaPrefix empty;
    DiscreteMeasure tail = sample_mu_omega(gamma, model, empty, 0, n_samples, depth_blocks - n,
                                           derive_seed(seed, 2), threads);
    double nu_count = 1.0;
    for (int k = 0; k < n; ++k) nu_count *= gamma.classes.at(omega[k]).word_count;

    DiscreteMeasure convolved;
    convolved.d = d;
    convolved.pts.resize(n_samples * d);
    convolved.w.assign(n_samples, 1.0 / static_cast<double>(n_samples));
    if (n == 0 || nu_count <= 4096.0) {
        DiscreteMeasure atoms = nu_omega_exact(gamma, model, omega, n);
        std::vector<double> atom_cdf = cumulative(atoms.w);
        Rng rng(derive_seed(seed, 4));
        for (size_t i = 0; i < n_samples; ++i) {
            size_t a = rng.categorical(atom_cdf);
            for (int j = 0; j < d; ++j)
                convolved.pts[i * d + j] =
                    atoms.pts[a * d + j] + scale.rates[j].as_double() * tail.pts[i * d + j];
        }
    } else {
        DiscreteMeasure atoms =
            nu_omega_sampled(gamma, model, omega, n, n_samples, derive_seed(seed, 3));
        for (size_t i = 0; i < n_samples; ++i)
            for (int j = 0; j < d; ++j)
                convolved.pts[i * d + j] =
                    atoms.pts[i * d + j] + scale.rates[j].as_double() * tail.pts[i * d + j];
    }

    ConvolutionCheck out;
    out.level_lo = level_lo;
    out.level_hi = level_hi;
    out.tolerance_bits = tolerance_bits;
    for (int t = level_lo; t <= level_hi; ++t) {
        double h1 = dyadic_entropy(direct, static_cast<double>(t));
        double h2 = dyadic_entropy(convolved, static_cast<double>(t));
        out.H_direct.push_back(h1);
        out.H_convolved.push_back(h2);
        out.gap.push_back(std::fabs(h1 - h2));
        out.max_gap = std::max(out.max_gap, out.gap.back());
    }
    out.sliced_w1 = sliced_wasserstein(direct, convolved, 64, derive_seed(seed, 5));
    out.pass = out.max_gap < tolerance_bits;
    return out;
}

// --- random-walk entropy ------------------------------------------------------

struct HrwResult {
    double value = 0.0;   // bits per symbol
    bool exact_enum = false;
    bool closed_form = false; // no-overlap reduction H(p) - H(beta, Gamma)/N
};

// (1/nN) [ H(beta, C_nN v Gamma-join) - H(beta, Gamma-join) ] by exact
// enumeration of Lambda^{nN}. The Gamma-join term is n H(beta, Gamma)
// because P is a product measure.
inline HrwResult h_rw_finite(const WeightedModel& model, const GammaPartition& gamma, int n,
                             uint64_t budget = kDefaultEnumBudget,
                             bool allow_closed_form = true) {
    const int m = model.alphabet();
    const int N = gamma.N;
    const int L = n * N;
    double words = std::pow(static_cast<double>(m), L);

    if (words > static_cast<double>(budget)) {
        if (!allow_closed_form)
            throw BudgetExceeded("h_rw_finite enumeration needs |Lambda|^{nN} <= budget");
        // no-overlap closed form, gated on separation evidence per coordinate
        int evidence_level = std::max(
            1, static_cast<int>(std::floor(std::log(static_cast<double>(budget)) / std::log(static_cast<double>(m)))));
        evidence_level = std::min(evidence_level, 8);
        for (int j = 0; j < model.d(); ++j) {
            auto rep = separation_report(model.coordinate_system(j), evidence_level, budget);
            if (!rep.no_exact_overlaps || rep.any_indeterminate)
                throw BudgetExceeded("enumeration over budget and no overlap-free evidence for the "
                                     "closed form");
        }
        HrwResult r;
        r.closed_form = true;
        r.value = model.entropy_bits() - gamma.entropy_bits() / N;
        return r;
    }

    // group words by (composed map, class sequence)
    struct Acc {
        double mass = 0.0;
    };
    std::map<std::string, Acc> joint;
    double h_gamma_join = n * gamma.entropy_bits();

    // iterate words of length L
    std::vector<int> word(L, 0);
    std::vector<std::string> class_keys(gamma.size());
    for (size_t c = 0; c < gamma.size(); ++c)
        class_keys[c] = detail::linpart_key(gamma.classes[c].linpart, model.ifs.mode);

    uint64_t total = static_cast<uint64_t>(words);
    for (uint64_t idx = 0; idx < total; ++idx) {
        Word w = Word::from_index(idx, m, L);
        double mass = 1.0;
        for (int s : w.symbols) mass *= model.p[s];
        if (mass <= 0.0) continue;
        ComposedMap cm = compose_word(model.ifs, w);
        std::string key;
        char buf[64];
        for (int j = 0; j < model.d(); ++j) {
            if (cm.rate[j].is_exact()) {
                key += cm.rate[j].str() + "," + cm.offset[j].str();
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g", cm.rate[j].as_double(),
                              cm.offset[j].as_double());
                key += buf;
            }
            key += ";";
        }
        if (gamma.granularity == Granularity::ByWord) {
            key += "#" + w.str(m);
        } else {
            key += "#";
            for (int k = 0; k < n; ++k) {
                Word block;
                block.symbols.assign(w.symbols.begin() + k * N, w.symbols.begin() + (k + 1) * N);
                ComposedMap bm = compose_word(model.ifs, block);
                key += detail::linpart_key(bm.rate, model.ifs.mode) + "/";
            }
        }
        joint[key].mass += mass;
    }

    double h_joint = 0.0;
    for (const auto& [k, acc] : joint)
        if (acc.mass > 0.0) h_joint -= acc.mass * std::log2(acc.mass);

    HrwResult r;
    r.exact_enum = true;
    r.value = (h_joint - h_gamma_join) / L;
    return r;
}

// No-overlap reduction H(p) - H(beta, Gamma)/N, for callers that have
// already established overlap-free evidence.
inline HrwResult h_rw_closed_form(const WeightedModel& model, const GammaPartition& gamma) {
    HrwResult r;
    r.closed_form = true;
    r.value = model.entropy_bits() - gamma.entropy_bits() / gamma.N;
    return r;
}

struct KappaReport {
    double kappa = 0.0;        // sum_{j<d} chi_j + chi_d (dimA_est - (d-1))
    double f_of_hrw = 0.0;     // formula-side prediction f_Phi(h_RW)
    double dim_estimate = 0.0; // the estimate that was plugged in
};

inline KappaReport kappa_estimate(const WeightedModel& model, double dim_A_estimate, double h_rw) {
    KappaReport rep;
    rep.dim_estimate = dim_A_estimate;
    const int d = model.d();
    double acc = 0.0;
    for (int j = 0; j + 1 < d; ++j) acc += model.chi[j];
    rep.kappa = acc + model.chi[d - 1] * (dim_A_estimate - (d - 1));
    LyapunovProfile pr = LyapunovProfile::from_exponents(model.chi);
    rep.f_of_hrw = f_phi(pr, h_rw);
    return rep;
}

} // namespace safd
