#pragma once

// Closed-form dimension quantities: the piecewise-linear entropy-to-dimension
// profile f_Phi, Lyapunov dimension, affinity dimension via the permutation
// singular-value formula, full-dimension probability vectors, and the
// root-equation cross-check. Everything here is in bits / base-2 logs.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "safd/errors.hpp"
#include "safd/model.hpp"

namespace safd {

inline constexpr int kMaxPermutationDim = 8;   // d! enumeration cap
inline constexpr int kMaxBisectIters = 200;
inline constexpr double kRootResidualTol = 1e-12;

struct LyapunovProfile {
    std::vector<double> chi;    // ascending
    std::vector<double> prefix; // prefix[j] = chi_1 + ... + chi_j, prefix[0] = 0

    static LyapunovProfile from_exponents(std::vector<double> chi_sorted) {
        LyapunovProfile pr;
        pr.chi = std::move(chi_sorted);
        pr.prefix.assign(pr.chi.size() + 1, 0.0);
        for (size_t j = 0; j < pr.chi.size(); ++j) pr.prefix[j + 1] = pr.prefix[j] + pr.chi[j];
        return pr;
    }
    static LyapunovProfile from_model(const WeightedModel& m) { return from_exponents(m.chi); }

    int dim() const { return static_cast<int>(chi.size()); }
};

// f_Phi(x): slope 1/chi_{j+1} on [prefix_j, prefix_{j+1}), then d x / sum chi.
// Breakpoint values f(prefix_j) = j are exact by construction.
inline double f_phi(const LyapunovProfile& pr, double x) {
    if (x < 0.0) throw NegativeArgument("f_phi needs x >= 0");
    int d = pr.dim();
    if (x >= pr.prefix[d]) return d * (x / pr.prefix[d]); // x == prefix divides to exactly 1
    int j = 0;
    while (j + 1 < d && x >= pr.prefix[j + 1]) ++j;
    return j + (x - pr.prefix[j]) / pr.chi[j];
}

// dim_L(Phi, p) = f_Phi(H(p)).
inline double lyapunov_dimension(const WeightedModel& m) {
    return f_phi(LyapunovProfile::from_model(m), m.entropy_bits());
}

using Permutation = std::vector<int>; // 0-based image list

inline std::vector<Permutation> all_permutations(int d) {
    if (d > kMaxPermutationDim)
        throw BudgetExceeded("permutation enumeration capped at d <= " + std::to_string(kMaxPermutationDim));
    Permutation base(d);
    std::iota(base.begin(), base.end(), 0);
    std::vector<Permutation> out;
    do out.push_back(base);
    while (std::next_permutation(base.begin(), base.end()));
    return out;
}

// phi^s_sigma(i) = |r_{i,sigma(1)}| ... |r_{i,sigma(floor(s))}| * |r_{i,sigma(floor(s)+1)}|^{s-floor(s)}
// for s < d, and |r_{i,1} ... r_{i,d}|^{s/d} for s >= d.
inline double singular_value_sigma(const DiagonalAffineIFS& ifs, const Permutation& sigma, double s, int i) {
    if (s < 0.0) throw NegativeArgument("singular_value_sigma needs s >= 0");
    const auto& m = ifs.maps.at(i);
    int d = ifs.d;
    if (s >= static_cast<double>(d)) {
        double det = 1.0;
        for (int j = 0; j < d; ++j) det *= std::fabs(m.r[j].as_double());
        return std::pow(det, s / d);
    }
    int k = static_cast<int>(std::floor(s));
    double v = 1.0;
    for (int b = 0; b < k; ++b) v *= std::fabs(m.r[sigma[b]].as_double());
    double frac = s - k;
    if (frac > 0.0) v *= std::pow(std::fabs(m.r[sigma[k]].as_double()), frac);
    return v;
}

inline double svf_sum(const DiagonalAffineIFS& ifs, const Permutation& sigma, double s) {
    double acc = 0.0;
    for (int i = 0; i < ifs.alphabet(); ++i) acc += singular_value_sigma(ifs, sigma, s, i);
    return acc;
}

inline double svf_max_sum(const DiagonalAffineIFS& ifs, const std::vector<Permutation>& perms, double s) {
    double best = 0.0;
    for (const auto& sigma : perms) best = std::max(best, svf_sum(ifs, sigma, s));
    return best;
}

struct AffinityResult {
    double s = 0.0;                        // dim_A
    double residual = 0.0;                 // |max_sigma sum phi^s - 1| at the root
    std::vector<Permutation> maximizers;   // Sigma: permutations attaining the max at s
    int iterations = 0;
};

// Unique root of max_sigma sum_i phi^s_sigma(i) = 1, by bisection on a
// strictly decreasing function. Maximizer set detected with 1e-9 slack.
inline AffinityResult affinity_dimension(const DiagonalAffineIFS& ifs) {
    ifs.validate();
    auto perms = all_permutations(ifs.d);
    AffinityResult out;

    double at_zero = svf_max_sum(ifs, perms, 0.0); // = |alphabet|
    if (at_zero <= 1.0) {
        out.s = 0.0;
        out.residual = std::fabs(at_zero - 1.0);
    } else {
        double lo = 0.0;
        double hi = ifs.d + std::log2(static_cast<double>(ifs.alphabet())) / (-std::log2(ifs.r_max())) + 1.0;
        int it = 0;
        for (; it < kMaxBisectIters; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break; // double resolution reached
            double v = svf_max_sum(ifs, perms, mid);
            if (v > 1.0)
                lo = mid;
            else
                hi = mid;
        }
        out.s = 0.5 * (lo + hi);
        out.iterations = it;
        out.residual = std::fabs(svf_max_sum(ifs, perms, out.s) - 1.0);
        if (out.residual >= kRootResidualTol)
            throw NoConvergence("affinity_dimension residual " + std::to_string(out.residual));
    }
    for (const auto& sigma : perms)
        if (std::fabs(svf_sum(ifs, sigma, out.s) - 1.0) <= 1e-9) out.maximizers.push_back(sigma);
    return out;
}

struct FullDimVector {
    Permutation sigma;
    std::vector<double> p;  // p_sigma(i) = phi^{s0}_sigma(i)
    double sum = 0.0;       // should be 1 within 1e-10
    double chi_s1 = 0.0;    // chi_{sigma(1)}(p_sigma)
    double chi_s2 = 0.0;    // chi_{sigma(2)}(p_sigma)
    bool chi_distinct = false;
    double dim_L = 0.0;     // dim_L(Phi, p_sigma)
};

// Candidate ergodic measures of full dimension on a planar system: one
// Bernoulli vector per maximizing permutation at s0 = dim_A.
inline std::vector<FullDimVector> full_dimension_vectors(const DiagonalAffineIFS& ifs) {
    if (ifs.d != 2) throw NotPlanar("full_dimension_vectors is stated for d = 2");
    AffinityResult A = affinity_dimension(ifs);
    if (!(A.s > 0.0) || !(A.s < 2.0))
        throw DegenerateAffinity("needs 0 < dim_A < 2, got " + std::to_string(A.s));

    std::vector<FullDimVector> out;
    for (const auto& sigma : A.maximizers) {
        FullDimVector v;
        v.sigma = sigma;
        for (int i = 0; i < ifs.alphabet(); ++i) {
            v.p.push_back(singular_value_sigma(ifs, sigma, A.s, i));
            v.sum += v.p.back();
        }
        std::vector<double> q = v.p;
        double norm = std::accumulate(q.begin(), q.end(), 0.0);
        for (double& x : q) x /= norm;
        std::vector<double> chi = lyapunov_exponents(ifs, q);
        v.chi_s1 = chi[sigma[0]];
        v.chi_s2 = chi[sigma[1]];
        v.chi_distinct = std::fabs(v.chi_s1 - v.chi_s2) > kChiTieTol * std::max(1.0, v.chi_s2);

        std::vector<Scalar> w;
        for (double x : q) w.push_back(Scalar::real(x));
        DiagonalAffineIFS f = ifs;
        if (f.mode == NumMode::Exact) {
            f.mode = NumMode::Float;
            for (auto& mp : f.maps) {
                for (auto& r : mp.r) r = r.to_mode(NumMode::Float);
                for (auto& t : mp.t) t = t.to_mode(NumMode::Float);
            }
        }
        v.dim_L = lyapunov_dimension(build_model(f, w));
        out.push_back(std::move(v));
    }
    return out;
}

// Root of H(p) + max_sigma sum_i p_i log2 phi^s_sigma(i) = 0: the Bernoulli
// case of the Lyapunov-dimension equation, cross-checking f_Phi(H(p)).
inline double lyapunov_dim_root(const WeightedModel& m) {
    double H = m.entropy_bits();
    if (H == 0.0) return 0.0;
    auto perms = all_permutations(m.d());
    auto G = [&](double s) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& sigma : perms) {
            double acc = 0.0;
            for (int i = 0; i < m.alphabet(); ++i) {
                double v = singular_value_sigma(m.ifs, sigma, s, i);
                acc += m.p[i] * std::log2(v);
            }
            best = std::max(best, acc);
        }
        return H + best;
    };
    double chi_min = *std::min_element(m.chi.begin(), m.chi.end());
    double lo = 0.0, hi = m.d() + H / chi_min + 1.0;
    if (G(hi) > 0.0) throw NoConvergence("lyapunov_dim_root bracket failed");
    for (int it = 0; it < kMaxBisectIters; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (G(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct FJMaxResult {
    double value = 0.0;
    std::vector<double> argmax; // the vertex attaining the max
};

// Brute-force check of the box-simplex maximization behind the induction
// step: max of g(y) = sum y_b / chi_b over Y(x) = {0 <= y_b <= chi_b,
// sum y_b <= x}. Vertex enumeration is exact; a grid sweep cross-checks it.
inline FJMaxResult fj_max_oracle(const LyapunovProfile& prJ, double x, int grid_per_axis = 1000) {
    if (x < 0.0) throw NegativeArgument("fj_max_oracle needs x >= 0");
    int s = prJ.dim();
    if (s > kMaxPermutationDim) throw BudgetExceeded("fj_max_oracle capped at |J| <= 8");
    double fx = f_phi(prJ, x);
    if (fx > s + 1e-12) throw PreconditionViolated("fj_max_oracle requires f_{Phi_J}(x) <= |J|");

    auto g = [&](const std::vector<double>& y) {
        double v = 0.0;
        for (int b = 0; b < s; ++b) v += y[b] / prJ.chi[b];
        return v;
    };

    FJMaxResult best;
    best.argmax.assign(s, 0.0);
    // Vertices: a subset S at caps plus at most one partially filled slot.
    for (unsigned mask = 0; mask < (1u << s); ++mask) {
        std::vector<double> y(s, 0.0);
        double used = 0.0;
        for (int b = 0; b < s; ++b)
            if (mask & (1u << b)) {
                y[b] = prJ.chi[b];
                used += y[b];
            }
        if (used > x + 1e-12) continue;
        if (g(y) > best.value) {
            best.value = g(y);
            best.argmax = y;
        }
        for (int c = 0; c < s; ++c) {
            if (mask & (1u << c)) continue;
            double fill = std::min(prJ.chi[c], x - used);
            if (fill <= 0.0) continue;
            std::vector<double> z = y;
            z[c] = fill;
            if (g(z) > best.value) {
                best.value = g(z);
                best.argmax = z;
            }
        }
    }

    // Grid sanity sweep; resolution shrinks with |J| to keep the sweep bounded.
    int res = grid_per_axis;
    while (res > 8 && std::pow(static_cast<double>(res), s) > 2e6) res /= 2;
    std::vector<int> idx(s, 0);
    std::vector<double> y(s, 0.0);
    bool done = false;
    while (!done) {
        double used = 0.0;
        for (int b = 0; b < s; ++b) {
            y[b] = prJ.chi[b] * idx[b] / res;
            used += y[b];
        }
        if (used <= x && g(y) > best.value) {
            best.value = g(y);
            best.argmax = y;
        }
        int b = 0;
        while (b < s && ++idx[b] > res) idx[b++] = 0;
        done = (b == s);
    }
    return best;
}

} // namespace safd
