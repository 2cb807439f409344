#pragma once

// Shared systems used across the test suites.

#include "safd/model.hpp"

namespace safd::testing {

// {x/3, x/3 + 2/3} with uniform weights: the middle-thirds Cantor system.
inline WeightedModel cantor() {
    DiagonalAffineIFS ifs;
    ifs.d = 1;
    ifs.mode = NumMode::Exact;
    ifs.maps = {
        {{Scalar::exact(1, 3)}, {Scalar::exact(0)}},
        {{Scalar::exact(1, 3)}, {Scalar::exact(2, 3)}},
    };
    return build_model(ifs, {Scalar::exact(1, 2), Scalar::exact(1, 2)});
}

// (x/2, y/3), (x/2 + 1/2, y/3 + 2/3): homogeneous carpet-style system.
inline WeightedModel mcmullen() {
    DiagonalAffineIFS ifs;
    ifs.d = 2;
    ifs.mode = NumMode::Exact;
    ifs.maps = {
        {{Scalar::exact(1, 2), Scalar::exact(1, 3)}, {Scalar::exact(0), Scalar::exact(0)}},
        {{Scalar::exact(1, 2), Scalar::exact(1, 3)}, {Scalar::exact(1, 2), Scalar::exact(2, 3)}},
    };
    return build_model(ifs, {Scalar::exact(1, 2), Scalar::exact(1, 2)});
}

// (a x, b y), (b x + 1, a y + 1) with weights (p1, 1-p1).
inline WeightedModel swapped(long an, long ad, long bn, long bd, long p1n = 1, long p1d = 2) {
    DiagonalAffineIFS ifs;
    ifs.d = 2;
    ifs.mode = NumMode::Exact;
    ifs.maps = {
        {{Scalar::exact(an, ad), Scalar::exact(bn, bd)}, {Scalar::exact(0), Scalar::exact(0)}},
        {{Scalar::exact(bn, bd), Scalar::exact(an, ad)}, {Scalar::exact(1), Scalar::exact(1)}},
    };
    return build_model(ifs, {Scalar::exact(p1n, p1d), Scalar::exact(p1d - p1n, p1d)});
}

// Three homogeneous planar maps with rates (1/2, 1/4); translations chosen
// overlap-free in both coordinate systems (checked exactly to level 8).
inline WeightedModel three_homogeneous() {
    DiagonalAffineIFS ifs;
    ifs.d = 2;
    ifs.mode = NumMode::Exact;
    auto mk = [&](long tx_n, long tx_d, long ty_n, long ty_d) {
        return AffineMapSpec{{Scalar::exact(1, 2), Scalar::exact(1, 4)},
                             {Scalar::exact(tx_n, tx_d), Scalar::exact(ty_n, ty_d)}};
    };
    ifs.maps = {mk(0, 1, 0, 1), mk(21, 23, 1, 3), mk(16, 17, 2, 3)};
    return build_model(ifs, {Scalar::exact(1, 3), Scalar::exact(1, 3), Scalar::exact(1, 3)});
}

// {x/2, x/2 + 1/2, x/2 + 1}: exact overlap at level 2 (words 02 and 10).
inline DiagonalAffineIFS overlapping3() {
    DiagonalAffineIFS ifs;
    ifs.d = 1;
    ifs.mode = NumMode::Exact;
    ifs.maps = {
        {{Scalar::exact(1, 2)}, {Scalar::exact(0)}},
        {{Scalar::exact(1, 2)}, {Scalar::exact(1, 2)}},
        {{Scalar::exact(1, 2)}, {Scalar::exact(1)}},
    };
    return ifs;
}

} // namespace safd::testing
