#pragma once

// Diagonal affine IFS core: the system Phi = { x -> A_i x + t_i } with
// diagonal A_i, word composition, truncated coding, Lyapunov exponents and
// coordinate-induced subsystems. All logarithms in this project are base 2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "safd/errors.hpp"
#include "safd/scalar.hpp"

namespace safd {

using json = nlohmann::ordered_json;

inline double log2_safe(double x) { return x > 0.0 ? std::log2(x) : 0.0; }

// H(p) = sum -p_i log2 p_i, with 0 log 0 = 0. Bits.
inline double shannon_entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

struct AffineMapSpec {
    std::vector<Scalar> r; // contraction rate per coordinate, signed
    std::vector<Scalar> t; // offset per coordinate
};

struct DiagonalAffineIFS {
    int d = 1;
    NumMode mode = NumMode::Float;
    std::vector<AffineMapSpec> maps;

    int alphabet() const { return static_cast<int>(maps.size()); }

    void validate() const {
        if (d < 1) throw DimensionMismatch("ambient dimension must be >= 1");
        if (maps.empty()) throw DimensionMismatch("alphabet must be nonempty");
        for (const auto& m : maps) {
            if (static_cast<int>(m.r.size()) != d || static_cast<int>(m.t.size()) != d)
                throw DimensionMismatch("map arity does not match ambient dimension");
            for (const auto& r : m.r) {
                if (r.is_exact()) {
                    Rational q = r.rat();
                    if (q < 0) q = -q;
                    if (q == 0 || q >= 1) throw RateOutOfRange("|r| must lie in (0,1), got " + r.str());
                } else {
                    double a = std::fabs(r.as_double());
                    if (!(a > 0.0) || !(a < 1.0))
                        throw RateOutOfRange("|r| must lie in (0,1), got " + r.str());
                }
            }
        }
    }

    double r_max() const {
        double m = 0.0;
        for (const auto& mp : maps)
            for (const auto& r : mp.r) m = std::max(m, std::fabs(r.as_double()));
        return m;
    }
    double r_min() const {
        double m = 1.0;
        for (const auto& mp : maps)
            for (const auto& r : mp.r) m = std::min(m, std::fabs(r.as_double()));
        return m;
    }
    double t_abs_max() const {
        double m = 0.0;
        for (const auto& mp : maps)
            for (const auto& t : mp.t) m = std::max(m, std::fabs(t.as_double()));
        return m;
    }

    // Crude bound on diam(K): per coordinate, |Pi(x)_j| <= max|t_j|/(1 - max|r_j|).
    double attractor_diameter_bound() const {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) {
            double tj = 0.0, rj = 0.0;
            for (const auto& mp : maps) {
                tj = std::max(tj, std::fabs(mp.t[j].as_double()));
                rj = std::max(rj, std::fabs(mp.r[j].as_double()));
            }
            double span = tj / (1.0 - rj);
            acc += span * span;
        }
        return std::max(1.0, std::sqrt(acc));
    }
};

struct Word {
    std::vector<int> symbols;

    size_t length() const { return symbols.size(); }
    bool empty() const { return symbols.empty(); }

    Word concat(const Word& o) const {
        Word w = *this;
        w.symbols.insert(w.symbols.end(), o.symbols.begin(), o.symbols.end());
        return w;
    }

    // Symbols joined as digits while the alphabet allows it, else dotted.
    std::string str(int alphabet = 10) const {
        std::string s;
        for (size_t k = 0; k < symbols.size(); ++k) {
            if (alphabet > 10 && k > 0) s += '.';
            s += std::to_string(symbols[k]);
        }
        return s;
    }

    static Word from_index(uint64_t idx, int alphabet, int length) {
        Word w;
        w.symbols.resize(length);
        for (int k = length - 1; k >= 0; --k) {
            w.symbols[k] = static_cast<int>(idx % alphabet);
            idx /= alphabet;
        }
        return w;
    }
};

// phi_I = phi_{i_1} o ... o phi_{i_n}; rates are the signed diagonal entries
// of A^I, offsets the translation part. lambda_j = |A^I_j|, chi_j = -log2 lambda_j.
struct ComposedMap {
    std::vector<Scalar> rate;
    std::vector<Scalar> offset;

    int dim() const { return static_cast<int>(rate.size()); }
    double lambda(int j) const { return std::fabs(rate[j].as_double()); }
    double chi(int j) const { return -std::log2(lambda(j)); }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(rate.size());
        for (size_t j = 0; j < rate.size(); ++j)
            y[j] = rate[j].as_double() * x[j] + offset[j].as_double();
        return y;
    }

    std::vector<double> apply_origin() const {
        std::vector<double> y(offset.size());
        for (size_t j = 0; j < offset.size(); ++j) y[j] = offset[j].as_double();
        return y;
    }
};

inline ComposedMap identity_map(int d, NumMode mode) {
    ComposedMap m;
    Scalar one = (mode == NumMode::Exact) ? Scalar::exact(1) : Scalar::real(1.0);
    Scalar zero = (mode == NumMode::Exact) ? Scalar::exact(0) : Scalar::real(0.0);
    m.rate.assign(d, one);
    m.offset.assign(d, zero);
    return m;
}

// (a o b)(x) = a(b(x)): rate = a.r * b.r, offset = a.r * b.t + a.t.
inline ComposedMap compose(const ComposedMap& a, const ComposedMap& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("composing maps of different dimension");
    ComposedMap c;
    c.rate.reserve(a.dim());
    c.offset.reserve(a.dim());
    for (int j = 0; j < a.dim(); ++j) {
        c.rate.push_back(a.rate[j] * b.rate[j]);
        c.offset.push_back(a.rate[j] * b.offset[j] + a.offset[j]);
    }
    return c;
}

inline ComposedMap map_of_symbol(const DiagonalAffineIFS& ifs, int i) {
    if (i < 0 || i >= ifs.alphabet())
        throw SymbolOutOfRange("symbol " + std::to_string(i) + " outside alphabet of size " +
                               std::to_string(ifs.alphabet()));
    ComposedMap m;
    m.rate = ifs.maps[i].r;
    m.offset = ifs.maps[i].t;
    return m;
}

inline ComposedMap compose_word(const DiagonalAffineIFS& ifs, const Word& I) {
    ComposedMap acc = identity_map(ifs.d, ifs.mode);
    for (int s : I.symbols) acc = compose(acc, map_of_symbol(ifs, s));
    return acc;
}

struct TruncatedCoding {
    std::vector<double> point; // phi_{I}(0)
    double error_bound;        // per-coordinate distance to Pi(x) for any continuation
};

// phi_I(0) with the geometric tail bound r_max^{|I|} max|t| / (1 - r_max).
inline TruncatedCoding truncated_coding(const DiagonalAffineIFS& ifs, const Word& I) {
    ComposedMap m = compose_word(ifs, I);
    TruncatedCoding out;
    out.point = m.apply_origin();
    double rm = ifs.r_max();
    out.error_bound = std::pow(rm, static_cast<double>(I.length())) * ifs.t_abs_max() / (1.0 - rm);
    return out;
}

// chi_j = sum_i -p_i log2 |r_{i,j}|, in the coordinate order of `ifs`.
inline std::vector<double> lyapunov_exponents(const DiagonalAffineIFS& ifs, std::span<const double> p) {
    std::vector<double> chi(ifs.d, 0.0);
    for (int i = 0; i < ifs.alphabet(); ++i)
        for (int j = 0; j < ifs.d; ++j)
            chi[j] -= p[i] * std::log2(std::fabs(ifs.maps[i].r[j].as_double()));
    return chi;
}

// Phi_J: rates and offsets restricted to the coordinate subset J (0-based).
inline DiagonalAffineIFS induce_on_coords(const DiagonalAffineIFS& ifs, std::span<const int> J) {
    if (J.empty()) throw EmptyCoordinateSet("coordinate subset must be nonempty");
    for (int j : J)
        if (j < 0 || j >= ifs.d) throw DimensionMismatch("coordinate index out of range");
    DiagonalAffineIFS out;
    out.d = static_cast<int>(J.size());
    out.mode = ifs.mode;
    out.maps.reserve(ifs.maps.size());
    for (const auto& m : ifs.maps) {
        AffineMapSpec r;
        for (int j : J) {
            r.r.push_back(m.r[j]);
            r.t.push_back(m.t[j]);
        }
        out.maps.push_back(std::move(r));
    }
    return out;
}

// A validated system with its probability vector, coordinates sorted so that
// chi_1 <= ... <= chi_d. user_coord[j] is the original index of sorted
// coordinate j, for reporting in the user's frame.
struct WeightedModel {
    DiagonalAffineIFS ifs; // sorted coordinate order
    std::vector<double> p;
    std::vector<Scalar> p_scalar;
    std::vector<double> chi; // ascending
    std::vector<int> user_coord;
    std::vector<std::string> warnings;
    bool distinct_chi = true;

    int d() const { return ifs.d; }
    int alphabet() const { return ifs.alphabet(); }
    double entropy_bits() const { return shannon_entropy(p); }

    DiagonalAffineIFS coordinate_system(int j) const {
        std::vector<int> J{j};
        return induce_on_coords(ifs, J);
    }
};

inline constexpr double kChiTieTol = 1e-12;

inline WeightedModel build_model(DiagonalAffineIFS ifs, std::vector<Scalar> weights) {
    ifs.validate();
    if (static_cast<int>(weights.size()) != ifs.alphabet())
        throw BadWeights("weight count does not match alphabet");
    std::vector<double> p(weights.size());
    double sum = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        p[i] = weights[i].as_double();
        if (p[i] < 0.0) throw BadWeights("negative weight");
        sum += p[i];
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw BadWeights("weights must sum to 1");
    if (ifs.mode == NumMode::Exact) {
        Rational s(0);
        for (const auto& w : weights) s += w.rat();
        if (s != 1) throw BadWeights("exact weights must sum to exactly 1");
    }

    WeightedModel m;
    std::vector<double> chi_user = lyapunov_exponents(ifs, p);
    m.user_coord.resize(ifs.d);
    std::iota(m.user_coord.begin(), m.user_coord.end(), 0);
    std::stable_sort(m.user_coord.begin(), m.user_coord.end(),
                     [&](int a, int b) { return chi_user[a] < chi_user[b]; });

    m.ifs.d = ifs.d;
    m.ifs.mode = ifs.mode;
    m.ifs.maps.resize(ifs.maps.size());
    for (size_t i = 0; i < ifs.maps.size(); ++i)
        for (int j : m.user_coord) {
            m.ifs.maps[i].r.push_back(ifs.maps[i].r[j]);
            m.ifs.maps[i].t.push_back(ifs.maps[i].t[j]);
        }
    m.p = std::move(p);
    m.p_scalar = std::move(weights);
    m.chi.resize(ifs.d);
    for (int j = 0; j < ifs.d; ++j) m.chi[j] = chi_user[m.user_coord[j]];

    for (int j = 0; j + 1 < ifs.d; ++j) {
        if (std::fabs(m.chi[j] - m.chi[j + 1]) <= kChiTieTol * std::max(1.0, m.chi[j + 1])) {
            m.distinct_chi = false;
            m.warnings.push_back("chi_" + std::to_string(j + 1) + " = chi_" + std::to_string(j + 2) +
                                 " (equal Lyapunov exponents; main-theorem checks disabled)");
        }
    }
    // Signs are carried through compositions but every dimension formula
    // consumes |r| only; say so instead of silently dropping them.
    bool negative = false;
    for (const auto& mp : m.ifs.maps)
        for (const auto& r : mp.r) negative = negative || r.as_double() < 0.0;
    if (negative)
        m.warnings.push_back("negative rates present; dimension formulas use |r| only");
    return m;
}

// --- model file (JSON) ---------------------------------------------------
//
//   {"d": 2, "maps": [{"r": ["1/2","1/3"], "t": ["0","0"]}, ...],
//    "p": ["1/2","1/2"]}
//
// Numeric fields accept JSON numbers or strings; "num/den" and decimal
// strings are parsed exactly and force exact mode for the whole model.

namespace detail {

struct RawNum {
    bool from_string = false;
    double flt = 0.0;
    Rational rat;
};

inline RawNum read_raw(const json& v) {
    RawNum n;
    if (v.is_string()) {
        n.from_string = true;
        n.rat = parse_rational(v.get<std::string>());
        n.flt = static_cast<double>(n.rat);
    } else if (v.is_number()) {
        n.flt = v.get<double>();
        n.rat = Scalar::exact_from_double(n.flt).rat();
    } else {
        throw ParseError("expected number or numeric string in model file");
    }
    return n;
}

inline Scalar materialize(const RawNum& n, NumMode mode) {
    if (mode == NumMode::Exact) return Scalar::exact(n.rat);
    return Scalar::real(n.flt);
}

} // namespace detail

inline WeightedModel model_from_json(const json& j, bool force_exact = false) {
    if (!j.contains("d") || !j.contains("maps") || !j.contains("p"))
        throw ParseError("model file needs fields d, maps, p");
    int d = j.at("d").get<int>();

    std::vector<std::vector<detail::RawNum>> raw_r, raw_t;
    std::vector<detail::RawNum> raw_p;
    bool any_exact = force_exact;
    for (const auto& m : j.at("maps")) {
        std::vector<detail::RawNum> rr, tt;
        for (const auto& v : m.at("r")) rr.push_back(detail::read_raw(v));
        for (const auto& v : m.at("t")) tt.push_back(detail::read_raw(v));
        for (const auto& n : rr) any_exact = any_exact || n.from_string;
        for (const auto& n : tt) any_exact = any_exact || n.from_string;
        raw_r.push_back(std::move(rr));
        raw_t.push_back(std::move(tt));
    }
    for (const auto& v : j.at("p")) {
        raw_p.push_back(detail::read_raw(v));
        any_exact = any_exact || raw_p.back().from_string;
    }

    NumMode mode = any_exact ? NumMode::Exact : NumMode::Float;
    DiagonalAffineIFS ifs;
    ifs.d = d;
    ifs.mode = mode;
    for (size_t i = 0; i < raw_r.size(); ++i) {
        AffineMapSpec m;
        for (const auto& n : raw_r[i]) m.r.push_back(detail::materialize(n, mode));
        for (const auto& n : raw_t[i]) m.t.push_back(detail::materialize(n, mode));
        ifs.maps.push_back(std::move(m));
    }
    std::vector<Scalar> weights;
    for (const auto& n : raw_p) weights.push_back(detail::materialize(n, mode));
    return build_model(std::move(ifs), std::move(weights));
}

inline json model_to_json(const WeightedModel& m, bool user_order = true) {
    json j;
    j["d"] = m.d();
    json maps = json::array();
    std::vector<int> inv(m.d());
    for (int jj = 0; jj < m.d(); ++jj) inv[m.user_coord[jj]] = jj;
    for (const auto& mp : m.ifs.maps) {
        json r = json::array(), t = json::array();
        for (int u = 0; u < m.d(); ++u) {
            int idx = user_order ? inv[u] : u;
            r.push_back(mp.r[idx].str());
            t.push_back(mp.t[idx].str());
        }
        maps.push_back(json{{"r", r}, {"t", t}});
    }
    j["maps"] = maps;
    json p = json::array();
    for (const auto& w : m.p_scalar) p.push_back(w.str());
    j["p"] = p;
    return j;
}

} // namespace safd
