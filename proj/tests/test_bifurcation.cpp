#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ehd/bifurcation.hpp"
#include "oracles.hpp"

using namespace ehd;

namespace {

WaveParams capillary_gravity() {
    WaveParams p;  // g = sigma = eps0 = 1, gamma = e0 = 0
    return p;
}

// gamma large enough that the (2,1) resonance condition holds and the
// resonance field is admissible
WaveParams resonant_params() {
    WaveParams p;
    for (p.gamma = 0.25; p.gamma <= 8.0; p.gamma += 0.25) {
        const auto e = resonance_field(2, 1, p);
        if (!e)
            continue;
        WaveParams q = p;
        q.e0 = std::sqrt(*e);
        if (admissible_field(q, 16))
            return p;
    }
    FAIL("no resonant vorticity found");
    return p;
}

}  // namespace

TEST_CASE("bifurcation points for pure capillary-gravity waves") {
    const WaveParams p = capillary_gravity();
    StripGridPair grids(32, 24);
    ContinuationOptions opts;
    opts.mode_count = 12;
    const auto pts = find_bifurcation_points(p, 3, grids, opts);
    REQUIRE(pts.size() == 6);
    for (const auto& bp : pts) {
        const double expected = std::sqrt((1.0 + bp.k * bp.k) * tk(bp.k));
        const double sign = bp.sign == BranchSign::plus ? 1.0 : -1.0;
        CHECK(bp.lambda_star == Catch::Approx(sign * expected).epsilon(1e-12));
        CHECK(bp.kernel_dim == 1);
        CHECK_FALSE(bp.partner_mode.has_value());
    }

    WaveParams strong = p;
    strong.sigma = 0.0;
    strong.e0 = 0.5;
    CHECK_THROWS_AS(find_bifurcation_points(strong, 3, grids, opts), std::invalid_argument);
}

TEST_CASE("branch direction: pitchfork with signed curvature") {
    const WaveParams p = capillary_gravity();
    StripGridPair grids(32, 24);
    ContinuationOptions opts;
    opts.mode_count = 12;
    const auto pts = find_bifurcation_points(p, 2, grids, opts);
    for (const auto& bp : pts) {
        const auto dir = branch_direction(bp, p, grids);
        CHECK(std::abs(dir.lambda_d0) < 1e-10);
        if (bp.sign == BranchSign::plus) {
            CHECK(dir.lambda_dd0 < 0.0);
            CHECK(dir.lambda_dd0_series < 0.0);
        } else {
            CHECK(dir.lambda_dd0 > 0.0);
            CHECK(dir.lambda_dd0_series > 0.0);
        }
    }

    // transversality fails on a double root
    WaveParams degen = p;
    degen.e0 = std::sqrt(2.0 * std::tanh(1.0));  // discriminant zero at k=1
    BifurcationPoint fake;
    fake.k = 1;
    fake.lambda_star = 0.0;
    CHECK_THROWS_AS(branch_direction(fake, degen, grids), SolverError);
}

TEST_CASE("branch asymptotics and pitchfork symmetry") {
    const WaveParams p = capillary_gravity();
    StripGridPair grids(32, 24);
    ContinuationOptions opts;
    opts.mode_count = 12;
    opts.tol = 1e-12;
    BifurcationPoint bp;
    bp.k = 1;
    bp.lambda_star = std::sqrt(2.0 * std::tanh(1.0));

    // ||eta(s) - s cos(kq)|| / |s| <= C |s| with a halving-consistent C
    double prev_ratio = -1.0;
    for (double s : {4e-3, 2e-3, 1e-3}) {
        const auto pt = solve_at_amplitude(bp, s, p, grids, opts);
        REQUIRE(pt.has_value());
        Vec off = pt->state.eta.modes(opts.mode_count);
        off[bp.k - 1] = 0.0;
        const double ratio = off.norm() / s;
        CHECK(ratio <= 0.1);  // branch starts tangent to the kernel
        if (prev_ratio > 0.0) {
            CHECK(ratio <= 0.7 * prev_ratio);
            CHECK(ratio >= 0.3 * prev_ratio);
        }
        prev_ratio = ratio;

        const auto mt = solve_at_amplitude(bp, -s, p, grids, opts);
        REQUIRE(mt.has_value());
        CHECK(std::abs(pt->state.lambda - mt->state.lambda) <= 1e-8);
    }
}

TEST_CASE("continued branch: convergence and fit against the curvature formula") {
    const WaveParams p = capillary_gravity();
    StripGridPair grids(32, 24);
    ContinuationOptions opts;
    opts.mode_count = 12;
    opts.smax = 1.0e-2;
    BifurcationPoint bp;
    bp.k = 1;
    bp.lambda_star = std::sqrt(2.0 * std::tanh(1.0));

    const Branch br = continue_branch(bp, p, grids, opts);
    REQUIRE(br.points.size() >= 5);
    for (const auto& q : br.points)
        CHECK(q.residual_norm <= opts.tol);

    // quadratic-quartic fit of lambda(s)
    const int n = static_cast<int>(br.points.size());
    Eigen::MatrixXd V(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const double s = br.points[i].s;
        V(i, 0) = 1.0;
        V(i, 1) = s * s;
        V(i, 2) = s * s * s * s;
        y[i] = br.points[i].state.lambda;
    }
    const Eigen::VectorXd c = V.householderQr().solve(y);
    const auto dir = branch_direction(bp, p, grids);
    CHECK(2.0 * c[1] == Catch::Approx(dir.lambda_dd0).epsilon(5e-2));
    CHECK(c[0] == Catch::Approx(bp.lambda_star).margin(1e-9));

    // no singularities on a generic branch near the origin
    const auto evs = detect_singularities(br, p, grids, opts);
    CHECK(evs.empty());
}

TEST_CASE("two-dimensional kernels refuse plain continuation") {
    BifurcationPoint bp;
    bp.k = 2;
    bp.kernel_dim = 2;
    const WaveParams p = capillary_gravity();
    StripGridPair grids(16, 12);
    CHECK_THROWS_AS(continue_branch(bp, p, grids), SolverError);
}

TEST_CASE("resonance certificate: determinants and kernel dimension") {
    const WaveParams p = resonant_params();
    const auto rec = nondegeneracy_checks(2, 1, p);
    CHECK(rec.e_field > 0.0);

    WaveParams pr = p;
    pr.e0 = std::sqrt(rec.e_field);
    const double closed = 8.0 * p.gamma * p.eps0 * pr.e0 * (tk(1) - tk(2)) / (tk(2) * tk(1));
    CHECK(rec.det1 == Catch::Approx(closed).epsilon(1e-8));
    CHECK(rec.det1 * (p.gamma * (tk(1) - tk(2))) > 0.0);  // sign carried by gamma (T_l - T_k)
    CHECK(rec.det2 != 0.0);

    // the coinciding speeds and the two-dimensional kernel
    const auto s1 = bifurcation_speeds(1, pr);
    const auto s2 = bifurcation_speeds(2, pr);
    CHECK(std::abs(s1->plus - s2->plus) <= 1e-10 * std::max(1.0, std::abs(s1->plus)));

    StripGridPair grids(32, 24);
    ContinuationOptions opts;
    opts.mode_count = 12;
    const auto pts = find_bifurcation_points(pr, 2, grids, opts);
    int two_dim = 0;
    for (const auto& bp : pts) {
        if (bp.kernel_dim == 2) {
            ++two_dim;
            REQUIRE(bp.partner_mode.has_value());
            CHECK(*bp.partner_mode == (bp.k == 2 ? 1 : 2));
        }
    }
    CHECK(two_dim == 2);  // the coinciding plus-points of modes 1 and 2

    // no third mode joins the resonance
    for (int m = 3; m <= 8; ++m) {
        const auto sm = bifurcation_speeds(m, pr);
        REQUIRE(sm.has_value());
        CHECK(std::abs(sm->plus - s1->plus) >= 1e-6);
    }

    // mean of cos(2q) cos^2(q) is 1/4, i.e. int cos(2q) cos^2(q) dq = pi/2
    const CosineBasis basis(16);
    Vec f(basis.mh + 1);
    for (int j = 0; j <= basis.mh; ++j)
        f[j] = std::cos(2.0 * basis.qnodes[j]) * std::cos(basis.qnodes[j]) * std::cos(basis.qnodes[j]);
    CHECK(basis.coefficients(f)[0] == Catch::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("secondary bifurcation at a detuned resonance") {
    const WaveParams p = resonant_params();
    const double ekl = resonance_field(2, 1, p).value();
    WaveParams pe = p;
    pe.e0 = std::sqrt(ekl * 1.01);

    StripGridPair grids(32, 24);
    ContinuationOptions opts;
    opts.mode_count = 15;
    opts.smax = 2e-2;
    opts.max_steps = 100;
    const auto pts = find_bifurcation_points(pe, 3, grids, opts);
    const BifurcationPoint* bp2 = nullptr;
    for (const auto& bp : pts)
        if (bp.k == 2 && bp.sign == BranchSign::plus)
            bp2 = &bp;
    REQUIRE(bp2 != nullptr);
    REQUIRE(bp2->kernel_dim == 1);

    ContinuationOptions down = opts;
    down.direction = -1.0;
    const Branch primary = continue_branch(*bp2, pe, grids, down);
    const auto evs = detect_singularities(primary, pe, grids, down);
    REQUIRE(evs.size() == 1);
    CHECK(evs[0].dominant_mode == 1);
    CHECK(evs[0].sigma_min < 1e-6 * evs[0].sigma_median);

    // primary points are pi-periodic, the secondary is genuinely 2pi
    for (const auto& q : primary.points)
        if (q.s != 0.0)
            CHECK(profile_period_divisor(q.state.eta, 1e-8) == 2);

    SwitchOptions sw;
    sw.continuation = down;
    sw.points = 6;
    const Branch secondary = switch_branch(evs[0], *bp2, pe, grids, sw);
    REQUIRE(secondary.points.size() >= 5);
    for (const auto& q : secondary.points) {
        CHECK(q.residual_norm <= 1e-9);
        CHECK(std::abs(q.state.eta.coeff(1)) >= 1e-4);
        CHECK(std::abs(q.state.eta.coeff(2)) >= 1e-4);
        CHECK(profile_period_divisor(q.state.eta, 1e-6) == 1);
    }

    // approaching the event from the secondary side the injected mode shrinks
    CHECK(std::abs(secondary.points.front().state.eta.coeff(1)) <
          std::abs(secondary.points.back().state.eta.coeff(1)));
}

TEST_CASE("local uniqueness probe near a simple point") {
    const WaveParams p = capillary_gravity();
    StripGridPair grids(32, 24);
    ContinuationOptions opts;
    opts.mode_count = 12;
    BifurcationPoint bp;
    bp.k = 1;
    bp.lambda_star = std::sqrt(2.0 * std::tanh(1.0));

    const auto probe = probe_local_uniqueness(bp, p, grids, 12, 2024u);
    CHECK(probe.not_converged == 0);
    CHECK(probe.elsewhere == 0);
    CHECK(probe.to_trivial + probe.to_branch == 12);
    CHECK(probe.to_branch >= 1);
}
