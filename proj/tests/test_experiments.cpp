#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "safd/experiments.hpp"

using namespace safd;
using Catch::Approx;

TEST_CASE("saturation model construction") {
    auto model = saturation_model(Rational(3, 4), 4);
    REQUIRE(model.alphabet() == 16);
    REQUIRE_FALSE(model.distinct_chi); // the whole point of the example
    double lam4 = std::pow(0.75, 4);
    REQUIRE(model.chi[0] == Approx(-std::log2(lam4)));

    double dim_L = lyapunov_dimension(model);
    REQUIRE(dim_L == Approx(2.4094).margin(2e-4));
    double bound = 1.0 + std::log2(3.0) / (-4.0 * std::log2(0.75));
    REQUIRE(bound == Approx(1.9547).margin(2e-4));
    REQUIRE(bound < 2.0);

    SECTION("hypothesis checks") {
        REQUIRE_THROWS_AS(saturation_model(Rational(3, 4), 3), HypothesisViolated); // (3/4)^3 > 1/3
        REQUIRE_THROWS_AS(saturation_model(Rational(1, 2), 4), HypothesisViolated); // not in (1/sqrt2,1)
        REQUIRE_THROWS_AS(saturation_model(Rational(3, 4), 2), HypothesisViolated); // n must exceed 2
    }

    SECTION("coordinate systems equal Psi^n structurally") {
        // exercised inside the experiment; here check the multiset helper directly
        auto phi1 = model.coordinate_system(0);
        auto phi2 = model.coordinate_system(1);
        REQUIRE(same_map_multiset(phi1, phi2));
    }
}

TEST_CASE("counterexample experiment at reduced scale") {
    CounterexampleConfig cfg;
    cfg.samples = 60000;
    cfg.seed = 7;
    cfg.band_lo = 6;
    cfg.band_hi = 10;
    cfg.threads = 2;
    auto rep = run_counterexample(cfg);
    bool structural = false, saturates = false;
    for (const auto& v : rep.doc().at("verdicts")) {
        if (v.at("name") == "phi1_phi2_equal_psi_n") structural = v.at("status") == "pass";
        if (v.at("name") == "dim_L_saturates") saturates = v.at("status") == "pass";
    }
    REQUIRE(structural);
    REQUIRE(saturates);
}

TEST_CASE("main theorem check on the Cantor fixture at reduced scale") {
    MainTheoremConfig cfg;
    cfg.samples = 120000;
    cfg.seed = 3;
    cfg.threads = 2;
    auto rep = run_main_theorem_check(testing::cantor(), cfg);
    REQUIRE_FALSE(rep.any_fail());

    SECTION("hypothesis gates") {
        auto sw = testing::swapped(1, 2, 1, 3); // equal exponents
        REQUIRE_THROWS_AS(run_main_theorem_check(sw, cfg), HypothesisViolated);

        auto over = build_model(testing::overlapping3(),
                                {Scalar::exact(1, 3), Scalar::exact(1, 3), Scalar::exact(1, 3)});
        REQUIRE_THROWS_AS(run_main_theorem_check(over, cfg), HypothesisViolated);
    }
}

TEST_CASE("full dimension measures experiment") {
    auto rep = run_full_dim_measures(testing::swapped(3, 5, 5, 7, 1, 3));
    REQUIRE_FALSE(rep.any_fail());
    REQUIRE(rep.doc().at("config").at("n_maximizers") == 2);

    auto rep3 = run_full_dim_measures(testing::three_homogeneous());
    REQUIRE_FALSE(rep3.any_fail());
    REQUIRE(rep3.doc().at("config").at("n_maximizers") == 1);

    SECTION("saturated affinity dimension violates the hypothesis") {
        DiagonalAffineIFS sat;
        sat.d = 2;
        sat.mode = NumMode::Float;
        for (int i = 0; i < 4; ++i) {
            AffineMapSpec mm;
            mm.r = {Scalar::real(0.5), Scalar::real(0.49)};
            mm.t = {Scalar::real(static_cast<double>(i)), Scalar::real(i * 2.0)};
            sat.maps.push_back(mm);
        }
        std::vector<Scalar> w(4, Scalar::real(0.25));
        auto model = build_model(sat, w);
        REQUIRE_THROWS_AS(run_full_dim_measures(model), HypothesisViolated);
    }
}

TEST_CASE("typical sweep at reduced scale") {
    TypicalSweepConfig cfg;
    cfg.translations = {{0.0, 0.0}, {1.0, 1.0}};
    cfg.trials = 6;
    cfg.samples = 50000;
    cfg.seed = 5;
    cfg.threads = 2;
    auto rep = run_typical_sweep(cfg);
    const auto& rows = rep.doc().at("tables")[0].at("rows");
    REQUIRE(rows.size() == 6);

    SECTION("bad translations") {
        TypicalSweepConfig bad = cfg;
        bad.translations = {{0.0, 0.0}, {0.0, 1.0}};
        REQUIRE_THROWS_AS(run_typical_sweep(bad), BadTranslations);
    }

    SECTION("zero trials gives an empty report") {
        TypicalSweepConfig none = cfg;
        none.trials = 0;
        auto empty = run_typical_sweep(none);
        REQUIRE(empty.doc().at("tables")[0].at("rows").empty());
        REQUIRE(empty.doc().at("verdicts").empty());
    }
}

TEST_CASE("convolution check smoke runs") {
    ConvolutionConfig cfg;
    cfg.N = 1;
    cfg.n = 1;
    cfg.samples = 40000;
    cfg.seed = 7;
    cfg.level_lo = 2;
    cfg.level_hi = 8;
    cfg.threads = 2;
    auto rep = run_convolution_check(testing::cantor(), cfg);
    REQUIRE_FALSE(rep.any_fail());

    SECTION("n = 0 degenerates to two independent draws of mu") {
        ConvolutionConfig c0 = cfg;
        c0.n = 0;
        auto rep0 = run_convolution_check(testing::cantor(), c0);
        REQUIRE_FALSE(rep0.any_fail());
    }

    SECTION("homogeneous planar system reduces to classical self-affinity") {
        ConvolutionConfig c2 = cfg;
        c2.N = 2;
        c2.n = 2;
        auto rep2 = run_convolution_check(testing::mcmullen(), c2);
        REQUIRE_FALSE(rep2.any_fail());
    }
}

TEST_CASE("superexp concentration: M=1 is identically zero") {
    SuperexpConfig cfg;
    cfg.M = 1;
    cfg.n_max = 3;
    auto rep = run_superexp_concentration(testing::cantor(), cfg);
    REQUIRE_FALSE(rep.any_fail());

    SECTION("single-map system: nu is a point mass") {
        DiagonalAffineIFS single;
        single.d = 1;
        single.mode = NumMode::Exact;
        single.maps = {{{Scalar::exact(1, 2)}, {Scalar::exact(1)}}};
        auto model = build_model(single, {Scalar::exact(1)});
        SuperexpConfig c2;
        c2.M = 2;
        c2.n_max = 3;
        auto rep2 = run_superexp_concentration(model, c2);
        for (const auto& row : rep2.doc().at("tables")[0].at("rows"))
            REQUIRE(row[1].get<double>() == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("reports serialize deterministically") {
    CounterexampleConfig cfg;
    cfg.samples = 20000;
    cfg.band_lo = 5;
    cfg.band_hi = 9;
    cfg.seed = 42;
    cfg.threads = 1;
    auto a = run_counterexample(cfg).to_json_string();
    cfg.threads = 8;
    auto b = run_counterexample(cfg).to_json_string();
    // thread count must not leak into the report
    REQUIRE(a == b);
}
