#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "fixtures.hpp"
#include "safd/disintegration.hpp"

using namespace safd;
using Catch::Approx;

TEST_CASE("gamma partition by linear part") {
    SECTION("homogeneous system collapses to one class") {
        auto mc = testing::mcmullen();
        for (int N : {1, 2, 3}) {
            auto g = build_gamma(mc, N);
            REQUIRE(g.size() == 1);
            REQUIRE(g.classes[0].mass == Approx(1.0));
            REQUIRE(g.classes[0].word_count == Approx(std::pow(2.0, N)));
        }
    }

    SECTION("swapped example at N=2 has classes {11},{12,21},{22}") {
        auto sw = testing::swapped(1, 2, 1, 3);
        auto g = build_gamma(sw, 2);
        REQUIRE(g.size() == 3);
        std::vector<double> masses;
        for (const auto& c : g.classes) masses.push_back(c.mass);
        std::sort(masses.begin(), masses.end());
        REQUIRE(masses[0] == Approx(0.25));
        REQUIRE(masses[1] == Approx(0.25));
        REQUIRE(masses[2] == Approx(0.5));
        // the mixed class carries A = diag(1/6, 1/6) and two words
        bool found_mixed = false;
        for (const auto& c : g.classes)
            if (c.word_count == 2.0) {
                found_mixed = true;
                REQUIRE(c.linpart[0].rat() == Rational(1, 6));
                REQUIRE(c.linpart[1].rat() == Rational(1, 6));
                REQUIRE(*c.mass_exact == Rational(1, 2));
            }
        REQUIRE(found_mixed);
        REQUIRE(g.entropy_bits() == Approx(1.5));
    }

    SECTION("N=1 with distinct linear parts reproduces the symbol partition") {
        auto sw = testing::swapped(1, 2, 1, 3, 1, 4);
        auto g = build_gamma(sw, 1);
        REQUIRE(g.size() == 2);
        REQUIRE(g.entropy_bits() == Approx(sw.entropy_bits()));
    }

    SECTION("by-word granularity is the finest refinement") {
        auto sw = testing::swapped(1, 2, 1, 3);
        auto g = build_gamma(sw, 2, Granularity::ByWord);
        REQUIRE(g.size() == 4);
        for (const auto& c : g.classes) REQUIRE(c.mass == Approx(0.25));
    }

    SECTION("budget") {
        auto sw = testing::swapped(1, 2, 1, 3);
        REQUIRE_THROWS_AS(build_gamma(sw, 30, Granularity::ByWord, 1000), BudgetExceeded);
    }
}

TEST_CASE("omega scale") {
    auto sw = testing::swapped(1, 2, 1, 3);
    auto g = build_gamma(sw, 2);

    int mixed = -1;
    for (size_t c = 0; c < g.size(); ++c)
        if (g.classes[c].word_count == 2.0) mixed = static_cast<int>(c);
    REQUIRE(mixed >= 0);

    OmegaPrefix omega{mixed};
    auto s1 = omega_scale(g, sw, omega, 1);
    REQUIRE(s1.rates[0].rat() == Rational(1, 6));
    REQUIRE(s1.rates[1].rat() == Rational(1, 6));

    auto s0 = omega_scale(g, sw, omega, 0);
    REQUIRE(s0.rates[0].rat() == 1);

    SECTION("concatenation multiplies scales and bounds hold") {
        Rng rng(11);
        OmegaPrefix w = sample_omega_prefix(g, 6, rng);
        auto whole = omega_scale(g, sw, w, 6);
        OmegaPrefix head(w.begin(), w.begin() + 4), tail(w.begin() + 4, w.end());
        auto sh = omega_scale(g, sw, head, 4);
        auto st = omega_scale(g, sw, tail, 2);
        for (int j = 0; j < 2; ++j) {
            REQUIRE(whole.rates[j] == sh.rates[j] * st.rates[j]);
            double lam = whole.lambda[j];
            REQUIRE(lam <= std::pow(sw.ifs.r_max(), 6 * 2) + 1e-15);
            REQUIRE(lam >= std::pow(sw.ifs.r_min(), 6 * 2) - 1e-15);
        }
    }
}

TEST_CASE("nonconformal key") {
    OmegaScale scale;
    scale.rates = {Scalar::exact(1, 6), Scalar::exact(1, 6)};
    scale.lambda = {1.0 / 6.0, 1.0 / 6.0};
    scale.chi = {std::log2(6.0), std::log2(6.0)};
    std::vector<double> x{0.2, 0.9};
    auto key = nonconformal_key(scale, x);
    REQUIRE(key == std::vector<int64_t>{1, 5});

    SECTION("identity scale floors to the unit cube") {
        OmegaScale id;
        id.rates = {Scalar::exact(1), Scalar::exact(1)};
        id.lambda = {1.0, 1.0};
        id.chi = {0.0, 0.0};
        std::vector<double> y{2.7, -0.3};
        REQUIRE(nonconformal_key(id, y) == std::vector<int64_t>{2, -1});
    }

    SECTION("shifting by one cell width shifts the key by one") {
        std::vector<double> y{0.2 + 1.0 / 6.0, 0.9};
        auto shifted = nonconformal_key(scale, y);
        REQUIRE(shifted[0] == key[0] + 1);
        REQUIRE(shifted[1] == key[1]);
    }
}

TEST_CASE("sampled beta^omega words") {
    auto sw = testing::swapped(1, 2, 1, 3);
    auto g = build_gamma(sw, 2);
    int mixed = -1;
    for (size_t c = 0; c < g.size(); ++c)
        if (g.classes[c].word_count == 2.0) mixed = static_cast<int>(c);

    SECTION("blocks come from the class, frequencies match the restriction") {
        Rng rng(7);
        OmegaPrefix omega{mixed};
        int n01 = 0, n10 = 0;
        for (int t = 0; t < 4000; ++t) {
            Word w = sample_beta_omega_word(g, sw, omega, 1, rng);
            REQUIRE(w.symbols.size() == 2);
            if (w.symbols == std::vector<int>{0, 1})
                ++n01;
            else if (w.symbols == std::vector<int>{1, 0})
                ++n10;
            else
                FAIL("word outside the class");
        }
        REQUIRE(std::abs(n01 - 2000) < 200);
        REQUIRE(std::abs(n10 - 2000) < 200);
    }

    SECTION("deterministic single-word class") {
        auto gw = build_gamma(sw, 2, Granularity::ByWord);
        Rng rng(3);
        for (size_t c = 0; c < gw.size(); ++c) {
            OmegaPrefix omega{static_cast<int>(c)};
            for (int rep = 0; rep < 16; ++rep) { // every draw, not just a lucky one
                Word w = sample_beta_omega_word(gw, sw, omega, 1, rng);
                REQUIRE(w.symbols == gw.classes[c].word->symbols);
            }
            auto nu = nu_omega_exact(gw, sw, omega, 1);
            REQUIRE(nu.size() == 1);
        }
    }

    SECTION("mixing over omega reproduces the plain Bernoulli block law") {
        Rng rng(19);
        std::map<std::vector<int>, int> freq;
        const int trials = 8000;
        for (int t = 0; t < trials; ++t) {
            OmegaPrefix omega = sample_omega_prefix(g, 1, rng);
            Word w = sample_beta_omega_word(g, sw, omega, 1, rng);
            freq[w.symbols]++;
        }
        for (const auto& [blk, cnt] : freq) {
            double expect = trials * 0.25;
            REQUIRE(std::fabs(cnt - expect) < 5.0 * std::sqrt(trials * 0.25 * 0.75));
        }
    }

    SECTION("T-shift: dropping the first block matches a shifted sample") {
        Rng rng(23);
        OmegaPrefix omega = sample_omega_prefix(g, 3, rng);
        OmegaPrefix shifted(omega.begin() + 1, omega.end());
        std::map<std::vector<int>, int> drop_freq, direct_freq;
        const int trials = 6000;
        for (int t = 0; t < trials; ++t) {
            Word w = sample_beta_omega_word(g, sw, omega, 3, rng);
            std::vector<int> rest(w.symbols.begin() + 2, w.symbols.end());
            drop_freq[rest]++;
            Word v = sample_beta_omega_word(g, sw, shifted, 2, rng);
            direct_freq[v.symbols]++;
        }
        for (const auto& [blk, cnt] : direct_freq) {
            double other = drop_freq.count(blk) ? drop_freq[blk] : 0;
            REQUIRE(std::fabs(cnt - other) < 6.0 * std::sqrt(static_cast<double>(trials)));
        }
    }
}

TEST_CASE("nu^omega_n") {
    SECTION("n = 0 is a point mass at the origin") {
        auto cantor = testing::cantor();
        auto g = build_gamma(cantor, 1);
        auto nu = nu_omega_exact(g, cantor, {}, 0);
        REQUIRE(nu.size() == 1);
        REQUIRE(nu.pts[0] == 0.0);
    }

    SECTION("Cantor N=1 n=2: four atoms at 0, 2/9, 2/3, 8/9") {
        auto cantor = testing::cantor();
        auto g = build_gamma(cantor, 1);
        REQUIRE(g.size() == 1);
        OmegaPrefix omega{0, 0};
        auto nu = nu_omega_exact(g, cantor, omega, 2);
        REQUIRE(nu.size() == 4);
        std::vector<double> atoms(nu.pts);
        std::sort(atoms.begin(), atoms.end());
        REQUIRE(atoms[0] == Approx(0.0).margin(1e-15));
        REQUIRE(atoms[1] == Approx(2.0 / 9.0));
        REQUIRE(atoms[2] == Approx(2.0 / 3.0));
        REQUIRE(atoms[3] == Approx(8.0 / 9.0));
        for (double w : nu.w) REQUIRE(w == Approx(0.25));
    }

    SECTION("mass 1 and support in the attractor box for random omega") {
        auto sw = testing::swapped(1, 2, 1, 3);
        auto g = build_gamma(sw, 2);
        int mixed = -1;
        for (size_t c = 0; c < g.size(); ++c)
            if (g.classes[c].word_count == 2.0) mixed = static_cast<int>(c);
        OmegaPrefix omega{mixed, mixed, mixed}; // 8 atoms
        auto nu = nu_omega_exact(g, sw, omega, 3);
        double mass = 0.0;
        for (double w : nu.w) mass += w;
        REQUIRE(mass == Approx(1.0).margin(1e-12));
        double box = sw.ifs.t_abs_max() / (1.0 - sw.ifs.r_max());
        for (double c : nu.pts) {
            REQUIRE(c >= -1e-12);
            REQUIRE(c <= box + 1e-12);
        }
        REQUIRE_THROWS_AS(nu_omega_exact(g, sw, omega, 3, /*budget=*/3), BudgetExceeded);
    }
}

TEST_CASE("h_rw_finite") {
    SECTION("homogeneous, overlap-free: h = H(p) at every n") {
        auto mc = testing::mcmullen();
        auto g = build_gamma(mc, 2);
        for (int n = 1; n <= 3; ++n) {
            auto r = h_rw_finite(mc, g, n);
            REQUIRE(r.exact_enum);
            REQUIRE(r.value == Approx(mc.entropy_bits()).margin(1e-12));
        }
    }

    SECTION("swapped example N=2: exactly 0.25 bits") {
        auto sw = testing::swapped(1, 2, 1, 3);
        auto g = build_gamma(sw, 2);
        auto r = h_rw_finite(sw, g, 1);
        REQUIRE(r.value == 0.25); // dyadic masses make this exact in binary64
        auto r2 = h_rw_finite(sw, g, 2);
        REQUIRE(r2.value == 0.25);
    }

    SECTION("N=1 distinct linear parts: h = 0") {
        auto sw = testing::swapped(1, 2, 1, 3, 1, 4);
        auto g = build_gamma(sw, 1);
        auto r = h_rw_finite(sw, g, 1);
        REQUIRE(r.value == Approx(0.0).margin(1e-12));
    }

    SECTION("subadditivity h(2n) <= h(n), including an overlapping system") {
        auto over = build_model(testing::overlapping3(),
                                {Scalar::exact(1, 3), Scalar::exact(1, 3), Scalar::exact(1, 3)});
        auto g = build_gamma(over, 1);
        auto h1 = h_rw_finite(over, g, 1);
        auto h2 = h_rw_finite(over, g, 2);
        auto h4 = h_rw_finite(over, g, 4);
        REQUIRE(h2.value <= h1.value + 1e-12);
        REQUIRE(h4.value <= h2.value + 1e-12);
        REQUIRE(h1.value >= 0.0);
        REQUIRE(h1.value <= over.entropy_bits() + 1e-12);
        // the level-2 overlap strictly lowers the joint entropy
        REQUIRE(h2.value < over.entropy_bits());
    }

    SECTION("closed form kicks in over budget with separation evidence") {
        auto mc = testing::mcmullen();
        auto g = build_gamma(mc, 2);
        auto r = h_rw_finite(mc, g, 20, /*budget=*/100000);
        REQUIRE(r.closed_form);
        REQUIRE(r.value == Approx(mc.entropy_bits()));
    }

    SECTION("refuses the closed form without evidence") {
        auto over = build_model(testing::overlapping3(),
                                {Scalar::exact(1, 3), Scalar::exact(1, 3), Scalar::exact(1, 3)});
        auto g = build_gamma(over, 1);
        REQUIRE_THROWS_AS(h_rw_finite(over, g, 30, /*budget=*/100000), BudgetExceeded);
    }
}

TEST_CASE("kappa estimate") {
    auto mc = testing::mcmullen();
    auto g = build_gamma(mc, 2);
    double hrw = h_rw_finite(mc, g, 2).value;

    SECTION("saturation endpoints") {
        auto top = kappa_estimate(mc, 2.0, hrw);
        REQUIRE(top.kappa == Approx(mc.chi[0] + mc.chi[1]));
        auto mid = kappa_estimate(mc, 1.0, hrw);
        REQUIRE(mid.kappa == Approx(mc.chi[0]));
    }

    SECTION("formula-side prediction") {
        auto rep = kappa_estimate(mc, std::min(2.0, f_phi(LyapunovProfile::from_model(mc), hrw)), hrw);
        REQUIRE(rep.f_of_hrw == Approx(1.0)); // H(p)=1=chi_1 for the carpet fixture
    }
}

TEST_CASE("quotient law: class frequencies follow P") {
    auto sw = testing::swapped(1, 2, 1, 3);
    auto g = build_gamma(sw, 2);
    Rng rng(29);
    std::vector<int> counts(g.size(), 0);
    const int trials = 8000;
    for (int t = 0; t < trials; ++t) {
        auto w = sample_omega_prefix(g, 2, rng);
        counts[w[0]]++;
        counts[w[1]]++;
    }
    for (size_t c = 0; c < g.size(); ++c) {
        double expect = 2.0 * trials * g.classes[c].mass;
        double sigma = std::sqrt(2.0 * trials * g.classes[c].mass * (1 - g.classes[c].mass));
        REQUIRE(std::fabs(counts[c] - expect) < 5.0 * sigma);
    }
}
