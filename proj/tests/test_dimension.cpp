#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "safd/dimension.hpp"
#include "safd/sampling.hpp"

using namespace safd;
using Catch::Approx;

namespace {

// Random float-mode model with distinct exponents, for cross-checks.
WeightedModel random_model(Rng& rng, int d, int alphabet) {
    for (;;) {
        DiagonalAffineIFS ifs;
        ifs.d = d;
        ifs.mode = NumMode::Float;
        for (int i = 0; i < alphabet; ++i) {
            AffineMapSpec m;
            for (int j = 0; j < d; ++j) {
                double r = 0.15 + 0.7 * rng.uniform01();
                if (rng.uniform01() < 0.25) r = -r;
                m.r.push_back(Scalar::real(r));
                m.t.push_back(Scalar::real(2.0 * rng.uniform01() - 1.0));
            }
            ifs.maps.push_back(std::move(m));
        }
        std::vector<double> raw(alphabet);
        double s = 0.0;
        for (auto& x : raw) {
            x = 0.05 + rng.uniform01();
            s += x;
        }
        std::vector<Scalar> w;
        double partial = 0.0;
        for (int i = 0; i < alphabet - 1; ++i) {
            w.push_back(Scalar::real(raw[i] / s));
            partial += raw[i] / s;
        }
        w.push_back(Scalar::real(1.0 - partial));
        auto m = build_model(ifs, w);
        bool ok = true;
        for (int j = 0; j + 1 < d; ++j)
            if (m.chi[j + 1] - m.chi[j] < 1e-3) ok = false;
        if (ok) return m;
    }
}

} // namespace

TEST_CASE("f_phi profile") {
    auto pr = LyapunovProfile::from_exponents({1.0, std::log2(3.0)});
    REQUIRE(f_phi(pr, 0.0) == 0.0);
    REQUIRE(f_phi(pr, 1.0) == 1.0); // breakpoint, exact
    REQUIRE(f_phi(pr, 1.0 + std::log2(3.0)) == 2.0);
    REQUIRE(f_phi(pr, 2.0 * (1.0 + std::log2(3.0))) == Approx(4.0));
    REQUIRE_THROWS_AS(f_phi(pr, -0.1), NegativeArgument);

    SECTION("piecewise-linear slopes between breakpoints") {
        double x0 = 0.4, x1 = 0.6;
        REQUIRE((f_phi(pr, x1) - f_phi(pr, x0)) / (x1 - x0) == Approx(1.0 / pr.chi[0]));
        double y0 = 1.2, y1 = 1.8;
        REQUIRE((f_phi(pr, y1) - f_phi(pr, y0)) / (y1 - y0) == Approx(1.0 / pr.chi[1]));
    }

    SECTION("continuous and nondecreasing") {
        double prev = f_phi(pr, 0.0);
        for (double x = 0.0; x < 7.0; x += 0.01) {
            double v = f_phi(pr, x);
            REQUIRE(v >= prev - 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("lyapunov dimension on the standard fixtures") {
    REQUIRE(lyapunov_dimension(testing::cantor()) == Approx(1.0 / std::log2(3.0)).margin(1e-12));
    REQUIRE(lyapunov_dimension(testing::mcmullen()) == Approx(1.0));

    // saturation example: 16 maps, all rates (3/4)^4; dim_L about 2.4094
    DiagonalAffineIFS ifs;
    ifs.d = 2;
    ifs.mode = NumMode::Float;
    double lam4 = std::pow(0.75, 4);
    for (int i = 0; i < 16; ++i) {
        AffineMapSpec m;
        m.r = {Scalar::real(lam4), Scalar::real(lam4)};
        m.t = {Scalar::real(i * 0.1), Scalar::real(i * 0.07)};
        ifs.maps.push_back(std::move(m));
    }
    std::vector<Scalar> w(16, Scalar::real(1.0 / 16.0));
    auto m = build_model(ifs, w);
    double dl = lyapunov_dimension(m);
    REQUIRE(dl == Approx(2.4094).margin(5e-4));
    REQUIRE(std::min(2.0, dl) == 2.0);
}

TEST_CASE("singular value function") {
    auto three = testing::three_homogeneous();
    Permutation id{0, 1};
    REQUIRE(singular_value_sigma(three.ifs, id, 0.0, 0) == 1.0);
    // sorted coordinates: chi ascending puts rate 1/2 first
    REQUIRE(singular_value_sigma(three.ifs, id, 1.5, 0) == Approx(0.25));
    // both branch formulas coincide at s = d
    Permutation sw{1, 0};
    REQUIRE(singular_value_sigma(three.ifs, id, 2.0, 1) ==
            Approx(singular_value_sigma(three.ifs, sw, 2.0, 1)));
    // strictly decreasing in s
    double prev = singular_value_sigma(three.ifs, id, 0.0, 0);
    for (double s = 0.25; s <= 3.0; s += 0.25) {
        double v = singular_value_sigma(three.ifs, id, s, 0);
        REQUIRE(v < prev);
        prev = v;
    }
}

TEST_CASE("affinity dimension") {
    SECTION("single map gives zero") {
        DiagonalAffineIFS ifs;
        ifs.d = 2;
        ifs.mode = NumMode::Float;
        ifs.maps = {{{Scalar::real(0.4), Scalar::real(0.2)}, {Scalar::real(0), Scalar::real(0)}}};
        auto A = affinity_dimension(ifs);
        REQUIRE(A.s == 0.0);
    }

    SECTION("three homogeneous maps match the closed form") {
        auto A = affinity_dimension(testing::three_homogeneous().ifs);
        REQUIRE(A.s == Approx(1.0 + std::log2(1.5) / 2.0).margin(1e-9));
        REQUIRE(A.residual < 1e-12);
        REQUIRE(A.maximizers.size() == 1);
    }

    SECTION("Cantor system root") {
        auto A = affinity_dimension(testing::cantor().ifs);
        REQUIRE(A.s == Approx(std::log(2.0) / std::log(3.0)).margin(1e-9));
    }

    SECTION("max-sum is |alphabet| at zero and decreasing") {
        auto ifs = testing::three_homogeneous().ifs;
        auto perms = all_permutations(2);
        REQUIRE(svf_max_sum(ifs, perms, 0.0) == 3.0);
        double prev = 3.0;
        for (double s = 0.25; s < 4.0; s += 0.25) {
            double v = svf_max_sum(ifs, perms, s);
            REQUIRE(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("full dimension vectors") {
    SECTION("swapped rates: both permutations maximize") {
        auto sw = testing::swapped(1, 2, 1, 3);
        auto vecs = full_dimension_vectors(sw.ifs);
        REQUIRE(vecs.size() == 2);
        auto A = affinity_dimension(sw.ifs);
        for (const auto& v : vecs) {
            REQUIRE(v.sum == Approx(1.0).margin(1e-10));
            REQUIRE(v.dim_L == Approx(A.s).margin(1e-9));
            REQUIRE(v.chi_distinct);
        }
        REQUIRE(vecs[0].p[0] == Approx(vecs[1].p[1]).margin(1e-12));
    }

    SECTION("homogeneous: single sigma, uniform vector") {
        auto vecs = full_dimension_vectors(testing::three_homogeneous().ifs);
        REQUIRE(vecs.size() == 1);
        for (double pi : vecs[0].p) REQUIRE(pi == Approx(1.0 / 3.0).margin(1e-10));
    }

    SECTION("preconditions") {
        DiagonalAffineIFS d3;
        d3.d = 3;
        d3.mode = NumMode::Float;
        AffineMapSpec m;
        m.r = {Scalar::real(0.4), Scalar::real(0.3), Scalar::real(0.2)};
        m.t = {Scalar::real(0), Scalar::real(0), Scalar::real(0)};
        d3.maps = {m};
        REQUIRE_THROWS_AS(full_dimension_vectors(d3), NotPlanar);

        REQUIRE_THROWS_AS(full_dimension_vectors(testing::cantor().ifs), NotPlanar);

        // dim_A = 2 saturates: 4 maps with rates (1/2, 1/2)
        DiagonalAffineIFS sat;
        sat.d = 2;
        sat.mode = NumMode::Float;
        for (int i = 0; i < 4; ++i) {
            AffineMapSpec mm;
            mm.r = {Scalar::real(0.5), Scalar::real(0.5)};
            mm.t = {Scalar::real(i * 0.4), Scalar::real(i * 0.3)};
            sat.maps.push_back(mm);
        }
        REQUIRE_THROWS_AS(full_dimension_vectors(sat), DegenerateAffinity);
    }
}

TEST_CASE("lyapunov_dim_root cross-checks the closed form") {
    REQUIRE(lyapunov_dim_root(testing::cantor()) == Approx(std::log(2.0) / std::log(3.0)).margin(1e-10));
    REQUIRE(lyapunov_dim_root(testing::mcmullen()) == Approx(1.0).margin(1e-9));

    SECTION("degenerate weights give zero") {
        DiagonalAffineIFS ifs = testing::overlapping3();
        auto m = build_model(ifs, {Scalar::exact(1), Scalar::exact(0), Scalar::exact(0)});
        REQUIRE(lyapunov_dim_root(m) == 0.0);
    }

    SECTION("100 random models agree within 1e-9") {
        Rng rng(20240817);
        for (int trial = 0; trial < 100; ++trial) {
            int d = 1 + static_cast<int>(rng.next_u64() % 3);
            int a = 2 + static_cast<int>(rng.next_u64() % 3);
            auto m = random_model(rng, d, a);
            REQUIRE(lyapunov_dim_root(m) == Approx(lyapunov_dimension(m)).margin(1e-9));
        }
    }
}

TEST_CASE("fj_max_oracle") {
    auto pr = LyapunovProfile::from_exponents({1.0, std::log2(3.0)});

    auto zero = fj_max_oracle(pr, 0.0);
    REQUIRE(zero.value == 0.0);
    REQUIRE(zero.argmax == std::vector<double>{0.0, 0.0});

    auto mid = fj_max_oracle(pr, 1.5);
    REQUIRE(mid.value == Approx(1.0 + 0.5 / std::log2(3.0)).margin(1e-9));
    REQUIRE(mid.argmax[0] == Approx(1.0).margin(1e-9));
    REQUIRE(mid.argmax[1] == Approx(0.5).margin(1e-9));
    REQUIRE(mid.value == Approx(f_phi(pr, 1.5)).margin(1e-9));

    // the m = 0 partial-fill value bounds min{s, f} from above
    double lower_bound = 0.0 + 1.5 / pr.chi[0];
    REQUIRE(lower_bound >= std::min(2.0, f_phi(pr, 1.5)));

    SECTION("value never exceeds |J|, equals f on the induced profile") {
        Rng rng(99);
        for (int t = 0; t < 25; ++t) {
            std::vector<double> chi;
            int s = 1 + static_cast<int>(rng.next_u64() % 3);
            for (int b = 0; b < s; ++b) chi.push_back(0.3 + 2.0 * rng.uniform01());
            std::sort(chi.begin(), chi.end());
            auto prJ = LyapunovProfile::from_exponents(chi);
            double xmax = prJ.prefix[s];
            double x = rng.uniform01() * xmax;
            auto r = fj_max_oracle(prJ, x, 200);
            REQUIRE(r.value <= s + 1e-9);
            REQUIRE(r.value == Approx(f_phi(prJ, x)).margin(1e-6));
        }
    }

    SECTION("precondition") {
        REQUIRE_THROWS_AS(fj_max_oracle(pr, 100.0), PreconditionViolated);
    }
}
