#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "safd/separation.hpp"

using namespace safd;
using Catch::Approx;

namespace {
Rational int_pow(long base, int n) {
    return Rational(boost::multiprecision::pow(boost::multiprecision::cpp_int(base), n));
}
} // namespace

TEST_CASE("pair distance") {
    CanonicalAffine1D a{Scalar::exact(1, 9), Scalar::exact(0)};
    CanonicalAffine1D b{Scalar::exact(1, 9), Scalar::exact(2, 9)};
    CanonicalAffine1D c{Scalar::exact(1, 2), Scalar::exact(0)};
    REQUIRE(pair_distance(a, a).as_double() == 0.0);
    REQUIRE(pair_distance(a, c).infinite);
    REQUIRE(pair_distance(a, b).value.rat() == Rational(2, 9));
}

TEST_CASE("Cantor separation is 2/3^n") {
    auto psi = testing::cantor().ifs;
    for (int n = 1; n <= 8; ++n) {
        auto lv = level_separation(psi, n);
        REQUIRE_FALSE(lv.delta.infinite);
        REQUIRE(lv.delta.value.rat() == Rational(2) / int_pow(3, n));
        REQUIRE_FALSE(lv.overlap_witness.has_value());
        REQUIRE(lv.s.value == lv.delta.value);
    }
}

TEST_CASE("overlapping system has Delta_2 = 0 with witness (02, 10)") {
    auto psi = testing::overlapping3();
    auto lv1 = level_separation(psi, 1);
    REQUIRE(lv1.delta.value.rat() == Rational(1, 2));

    auto lv2 = level_separation(psi, 2);
    REQUIRE_FALSE(lv2.delta.infinite);
    REQUIRE(lv2.delta.value.rat() == 0);
    REQUIRE(lv2.overlap_witness.has_value());
    auto [u, v] = *lv2.overlap_witness;
    bool match = (u.str() == "02" && v.str() == "10") || (u.str() == "10" && v.str() == "02");
    REQUIRE(match);
    REQUIRE(lv2.s.value.rat() == Rational(1, 4));
}

TEST_CASE("single-map system: empty pair set") {
    DiagonalAffineIFS psi;
    psi.d = 1;
    psi.mode = NumMode::Exact;
    psi.maps = {{{Scalar::exact(1, 3)}, {Scalar::exact(1, 7)}}};
    auto lv = level_separation(psi, 4);
    REQUIRE(lv.delta.value.rat() == 0);
    REQUIRE(lv.s.value.rat() == 0);
}

TEST_CASE("distinct slopes give infinite Delta") {
    DiagonalAffineIFS psi;
    psi.d = 1;
    psi.mode = NumMode::Exact;
    psi.maps = {
        {{Scalar::exact(1, 2)}, {Scalar::exact(0)}},
        {{Scalar::exact(1, 5)}, {Scalar::exact(1)}},
    };
    // level 1: slopes 1/2 and 1/5 differ, no same-slope pair
    auto lv1 = level_separation(psi, 1);
    REQUIRE(lv1.delta.infinite);
    REQUIRE(lv1.s.infinite);
    // level 2: words 01 and 10 share slope 1/10
    auto lv2 = level_separation(psi, 2);
    REQUIRE_FALSE(lv2.delta.infinite);
}

TEST_CASE("optimized equals naive for all small systems") {
    std::vector<DiagonalAffineIFS> fixtures;
    fixtures.push_back(testing::cantor().ifs);
    fixtures.push_back(testing::overlapping3());
    fixtures.push_back(testing::mcmullen().coordinate_system(0));
    fixtures.push_back(testing::mcmullen().coordinate_system(1));
    fixtures.push_back(testing::swapped(1, 2, 1, 3).coordinate_system(0));
    {
        DiagonalAffineIFS psi;
        psi.d = 1;
        psi.mode = NumMode::Exact;
        psi.maps = {
            {{Scalar::exact(-1, 2)}, {Scalar::exact(1, 3)}},
            {{Scalar::exact(1, 2)}, {Scalar::exact(-1, 5)}},
            {{Scalar::exact(2, 5)}, {Scalar::exact(0)}},
        };
        fixtures.push_back(psi);
    }

    for (const auto& psi : fixtures) {
        for (int n = 1; n <= 6; ++n) {
            auto fast = level_separation(psi, n);
            auto slow = level_separation_naive(psi, n);
            REQUIRE(fast.delta.infinite == slow.delta.infinite);
            if (!fast.delta.infinite) REQUIRE(fast.delta.value == slow.delta.value);
            REQUIRE(fast.s.infinite == slow.s.infinite);
            if (!fast.s.infinite) REQUIRE(fast.s.value == slow.s.value);
            REQUIRE(fast.overlap_witness.has_value() == slow.overlap_witness.has_value());
        }
    }
}

TEST_CASE("homogeneous systems reduce to offset gaps") {
    // all slopes equal: single group, Delta = min gap of the offset multiset
    auto psi = testing::mcmullen().coordinate_system(0); // {x/2, x/2 + 1/2}
    for (int n = 1; n <= 6; ++n) {
        auto lv = level_separation(psi, n);
        REQUIRE(lv.delta.value.rat() == Rational(1, 2) / int_pow(2, n - 1));
    }
}

TEST_CASE("separation report") {
    SECTION("Cantor: evidence of exponential separation") {
        auto rep = separation_report(testing::cantor().ifs, 8);
        REQUIRE(rep.no_exact_overlaps);
        REQUIRE(rep.diophantine_evidence);
        REQUIRE(rep.c_hat_min.has_value());
        // Delta_n^{1/n} = (2/3^n)^{1/n} decreases toward 1/3
        double prev = 1.0;
        for (const auto& lv : rep.levels) {
            double root = std::pow(lv.delta.as_double(), 1.0 / lv.n);
            REQUIRE(root < prev);
            prev = root;
        }
        REQUIRE(*rep.c_hat_min == Approx(std::pow(2.0 / std::pow(3.0, 8), 1.0 / 8)));
        REQUIRE_FALSE(rep.estimators_disagree);
    }

    SECTION("overlapping system flags the first witness level") {
        auto rep = separation_report(testing::overlapping3(), 4);
        REQUIRE_FALSE(rep.no_exact_overlaps);
        REQUIRE(rep.levels[0].overlap_witness.has_value() == false);
        REQUIRE(rep.levels[1].overlap_witness.has_value());
    }

    SECTION("example system coordinates are overlap-free to level 8") {
        // a = 3/5, b = 5/7 as ratios of distinct primes
        auto sw = testing::swapped(3, 5, 5, 7, 1, 3);
        for (int j = 0; j < 2; ++j) {
            auto rep = separation_report(sw.coordinate_system(j), 8);
            REQUIRE(rep.no_exact_overlaps);
            REQUIRE(rep.diophantine_evidence);
        }
    }
}

TEST_CASE("float mode downgrades tiny gaps") {
    DiagonalAffineIFS psi;
    psi.d = 1;
    psi.mode = NumMode::Float;
    psi.maps = {
        {{Scalar::real(0.5)}, {Scalar::real(0.0)}},
        {{Scalar::real(0.5)}, {Scalar::real(1e-13)}},
    };
    auto lv = level_separation(psi, 1);
    REQUIRE(lv.indeterminate);
}

TEST_CASE("budget is enforced") {
    auto psi = testing::overlapping3();
    REQUIRE_THROWS_AS(level_separation(psi, 20, /*budget=*/1000), BudgetExceeded);
}
