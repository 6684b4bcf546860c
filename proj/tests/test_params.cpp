#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ehd/params.hpp"
#include "oracles.hpp"

using namespace ehd;

namespace {

WaveParams random_admissible(std::mt19937& rng) {
    std::uniform_real_distribution<double> ug(0.2, 3.0), us(0.1, 3.0), uv(-3.0, 3.0), ue(0.0, 0.5);
    WaveParams p;
    for (int attempt = 0; attempt < 200; ++attempt) {
        p.g = ug(rng);
        p.sigma = us(rng);
        p.gamma = uv(rng);
        p.eps0 = us(rng);
        p.e0 = ue(rng) * std::sqrt((p.g + p.sigma) * std::tanh(1.0) / p.eps0);
        if (admissible_field(p, 16))
            return p;
    }
    FAIL("could not sample admissible parameters");
    return p;
}

}  // namespace

TEST_CASE("tk matches an independent tanh oracle and decreases") {
    CHECK(tk(1) == Catch::Approx(oracles::cf_tanh(1.0)).epsilon(1e-13));
    CHECK(tk(1) == Catch::Approx(0.761594156).epsilon(1e-9));
    CHECK(tk(10) == Catch::Approx(0.0999999996).epsilon(1e-9));
    for (int k = 1; k < 64; ++k)
        CHECK(tk(k + 1) < tk(k));
    for (int k = 1; k <= 12; ++k)
        CHECK(tk(k) == Catch::Approx(oracles::cf_tanh(double(k)) / k).epsilon(1e-14));
    CHECK_THROWS_AS(tk(0), std::invalid_argument);
}

TEST_CASE("dispersion symbol: hand value, root identity, decay") {
    WaveParams p;
    p.g = 1.0;
    p.sigma = 0.0;
    p.gamma = 0.0;
    p.e0 = 0.0;
    CHECK(dispersion(1, 0.0, p) == Catch::Approx(2.0).epsilon(1e-14));

    p.sigma = 1.0;
    CHECK(dispersion(1, 1e6, p) < -1e10);
    CHECK(dispersion(1, -1e6, p) < -1e10);

    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const WaveParams q = random_admissible(rng);
        std::uniform_int_distribution<int> uk(1, 8);
        const int k = uk(rng);
        const auto roots = bifurcation_speeds(k, q);
        REQUIRE(roots.has_value());
        const double scale = 2.0 / tk(k) *
                             (roots->plus * roots->plus + std::abs(q.gamma) * std::abs(roots->plus) +
                              q.eps0 * q.e0 * q.e0 + (q.g + q.sigma * k * k) * tk(k));
        CHECK(std::abs(dispersion(k, roots->plus, q)) <= 1e-12 * scale);
        CHECK(std::abs(dispersion(k, roots->minus, q)) <= 1e-12 * scale);
    }
}

TEST_CASE("bifurcation speeds: closed form, Vieta, emptiness, degeneracy") {
    WaveParams p;  // g = sigma = eps0 = 1, gamma = e0 = 0
    const auto r = bifurcation_speeds(1, p);
    REQUIRE(r.has_value());
    const double expected = std::sqrt(2.0 * oracles::cf_tanh(1.0));
    CHECK(r->plus == Catch::Approx(expected).epsilon(1e-12));
    CHECK(r->minus == Catch::Approx(-expected).epsilon(1e-12));
    CHECK(r->plus == Catch::Approx(1.2341749).epsilon(1e-6));

    // independent root-finding cross-check on the symbol itself
    const double root = oracles::bisect([&](double l) { return dispersion(1, l, p); }, 0.5, 2.0);
    CHECK(r->plus == Catch::Approx(root).epsilon(1e-10));

    std::mt19937 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const WaveParams q = random_admissible(rng);
        for (int k = 1; k <= 6; ++k) {
            const auto s = bifurcation_speeds(k, q);
            REQUIRE(s.has_value());
            const double t = tk(k);
            const double sum_scale = std::abs(s->plus) + std::abs(s->minus) + 1.0;
            CHECK(std::abs(s->plus + s->minus - q.gamma * t) <= 1e-12 * sum_scale);
            const double prod = q.eps0 * q.e0 * q.e0 - (q.g + q.sigma * k * k) * t;
            CHECK(std::abs(s->plus * s->minus - prod) <= 1e-12 * (std::abs(prod) + 1.0));
        }
    }

    WaveParams strong;  // field overwhelming mode 1
    strong.e0 = 10.0;
    CHECK_FALSE(bifurcation_speeds(1, strong).has_value());

    WaveParams degen;
    degen.gamma = 0.0;
    degen.e0 = std::sqrt(2.0 * std::tanh(1.0));  // discriminant exactly zero at k=1
    CHECK_THROWS_AS(bifurcation_speeds(1, degen), std::domain_error);
}

TEST_CASE("field admissibility with certified tail") {
    WaveParams p;
    p.e0 = 0.0;
    CHECK(admissible_field(p, 8));

    // threshold at k = 1 equals 2 tanh(1)
    const double threshold = 2.0 * std::tanh(1.0);
    CHECK(threshold == Catch::Approx(1.5231880).epsilon(1e-6));
    WaveParams below;
    below.e0 = std::sqrt(0.99 * threshold);
    CHECK(admissible_field(below, 8));
    WaveParams above;
    above.e0 = std::sqrt(1.01 * threshold);
    CHECK_FALSE(admissible_field(above, 8));

    // violated at the minimizing k when the field doubles the best margin
    WaveParams violated;
    double best = 1e300;
    for (int k = 1; k <= 16; ++k)
        best = std::min(best, (violated.g + violated.sigma * k * k) * tk(k));
    violated.e0 = std::sqrt(2.0 * best);
    CHECK_FALSE(admissible_field(violated, 16));

    // without surface tension any nonzero field loses at large k
    WaveParams nosigma;
    nosigma.sigma = 0.0;
    nosigma.e0 = 0.3;
    CHECK_FALSE(admissible_field(nosigma, 4));
    nosigma.e0 = 0.0;
    CHECK(admissible_field(nosigma, 4));
}

TEST_CASE("resonance field: gating, symmetry, speed coincidence") {
    WaveParams p;
    CHECK_THROWS_AS(resonance_field(2, 2, p), std::invalid_argument);
    CHECK_THROWS_AS(resonance_field(2, 1, p), std::invalid_argument);  // gamma = 0

    WaveParams tiny = p;
    tiny.gamma = 1e-3;
    CHECK_FALSE(resonance_field(2, 1, tiny).has_value());

    // sweep gamma upward until the resonance condition holds
    WaveParams q = p;
    std::optional<double> e;
    for (q.gamma = 0.25; q.gamma <= 8.0; q.gamma += 0.25) {
        e = resonance_field(1, 2, q);
        if (e)
            break;
    }
    REQUIRE(e.has_value());
    CHECK(*e > 0.0);
    CHECK(resonance_field(2, 1, q).value() == Catch::Approx(*e).epsilon(1e-13));

    // positive vorticity merges the + speeds; the - speeds stay apart
    WaveParams at = q;
    at.e0 = std::sqrt(*e);
    const auto r1 = bifurcation_speeds(1, at);
    const auto r2 = bifurcation_speeds(2, at);
    REQUIRE(r1.has_value());
    REQUIRE(r2.has_value());
    const double scale = std::max(1.0, std::abs(r1->plus));
    CHECK(std::abs(r1->plus - r2->plus) <= 1e-10 * scale);
    CHECK(std::abs(r1->minus - r2->minus) > 1e-3);

    // flipping the vorticity sign merges the - speeds instead
    WaveParams neg = at;
    neg.gamma = -at.gamma;
    REQUIRE(resonance_field(1, 2, neg).value() == Catch::Approx(*e).epsilon(1e-13));
    const auto n1 = bifurcation_speeds(1, neg);
    const auto n2 = bifurcation_speeds(2, neg);
    CHECK(std::abs(n1->minus - n2->minus) <= 1e-10 * scale);
    CHECK(std::abs(n1->plus - n2->plus) > 1e-3);
}

TEST_CASE("flat-state constants") {
    WaveParams p;
    p.gamma = 0.8;
    p.e0 = 0.4;
    const auto t0 = trivial_constants(0.0, p);
    CHECK(t0.m == Catch::Approx(0.4).epsilon(1e-15));
    CHECK(t0.q == Catch::Approx(-p.eps0 * 0.16).epsilon(1e-12));

    WaveParams irr;
    irr.gamma = 0.0;
    irr.e0 = 0.0;
    const auto t1 = trivial_constants(1.7, irr);
    CHECK(t1.m == Catch::Approx(-1.7).epsilon(1e-15));
    CHECK(t1.q == Catch::Approx(1.7 * 1.7).epsilon(1e-15));

    const auto r = bifurcation_speeds(1, irr);
    REQUIRE(r.has_value());
    CHECK(trivial_constants(r->plus, irr).q == Catch::Approx(2.0 * std::tanh(1.0)).epsilon(1e-13));
}

TEST_CASE("parameter validation") {
    WaveParams p;
    p.g = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.g = 1.0;
    p.sigma = -0.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.sigma = 1.0;
    p.eps0 = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.eps0 = 1.0;
    CHECK_NOTHROW(p.validate());
}
