#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ehd/green.hpp"
#include "oracles.hpp"

using namespace ehd;

namespace {

// Quadrature solve of u'' - k^2 u = f through the Green's kernel, split at
// the diagonal kink.
double green_solve_lower(int k, double p, const std::function<double(double)>& f, int ngrid) {
    const detail::GaussLegendre gl(ngrid);
    auto kern = [&](double r) { return green_lower(k, p, r) * f(r); };
    return gl.integrate(-1.0, p, kern) + gl.integrate(p, 0.0, kern);
}

double green_solve_upper(int k, double p, const std::function<double(double)>& f, int ngrid) {
    const detail::GaussLegendre gl(ngrid);
    auto kern = [&](double r) { return green_upper(k, p, r) * f(r); };
    return gl.integrate(0.0, p, kern) + gl.integrate(p, 1.0, kern);
}

}  // namespace

TEST_CASE("Gauss-Legendre nodes integrate polynomials exactly") {
    const detail::GaussLegendre gl(12);
    auto f = [](double x) { return x * x * x * x * x * x; };
    CHECK(gl.integrate(-1.0, 1.0, f) == Catch::Approx(2.0 / 7.0).epsilon(1e-13));
    CHECK(gl.integrate(0.0, 2.0, [](double x) { return std::pow(x, 11); }) ==
          Catch::Approx(std::pow(2.0, 12) / 12.0).epsilon(1e-13));
}

TEST_CASE("lower Green's function: boundary, symmetry, kernel property") {
    for (double r : {-0.9, -0.5, -0.1}) {
        CHECK(green_lower(3, 0.0, r) == 0.0);
        CHECK(green_lower(3, -1.0, r) == 0.0);
    }
    CHECK(green_lower(2, -0.3, -0.7) == Catch::Approx(green_lower(2, -0.7, -0.3)).epsilon(1e-14));
    CHECK(green_lower(2, -0.5, -0.5) < 0.0);

    // (d^2/dp^2 - k^2) G1(., r) vanishes away from the diagonal, O(h^2)
    const int k = 3;
    const double r = -0.37, h = 1e-4;
    for (double p : {-0.8, -0.6, -0.2, -0.1}) {
        const double fd =
            (green_lower(k, p + h, r) - 2.0 * green_lower(k, p, r) + green_lower(k, p - h, r)) / (h * h);
        CHECK(std::abs(fd - k * k * green_lower(k, p, r)) < 5e-6);
    }
    CHECK_THROWS_AS(green_lower(1, 0.5, -0.5), std::invalid_argument);
}

TEST_CASE("upper Green's function: boundary, symmetry, sign") {
    for (double r : {0.1, 0.5, 0.9}) {
        CHECK(green_upper(2, 0.0, r) == 0.0);
        CHECK(green_upper(2, 1.0, r) == 0.0);
    }
    CHECK(green_upper(4, 0.3, 0.7) == Catch::Approx(green_upper(4, 0.7, 0.3)).epsilon(1e-14));
    for (double p : {0.1, 0.4, 0.8})
        for (double r : {0.2, 0.5, 0.9})
            CHECK(green_upper(1, p, r) < 0.0);
}

TEST_CASE("Green quadrature solves match a dense FD BVP oracle") {
    auto f_lower = [](double r) { return std::exp(r) * std::cos(2.0 * r) + 1.0; };
    auto f_upper = [](double r) { return std::exp(-r) * std::sin(3.0 * r) - 0.5; };
    const int nfd = 2048;
    for (int k : {1, 2, 4, 8}) {
        const auto u_lo = oracles::numerov_bvp(k, f_lower, -1.0, 0.0, 0.0, 0.0, nfd);
        const auto u_up = oracles::numerov_bvp(k, f_upper, 0.0, 1.0, 0.0, 0.0, nfd);
        double err_lo = 0.0, err_up = 0.0;
        for (int i = 0; i <= nfd; i += 64) {
            const double p_lo = -1.0 + static_cast<double>(i) / nfd;
            const double p_up = static_cast<double>(i) / nfd;
            err_lo = std::max(err_lo, std::abs(green_solve_lower(k, p_lo, f_lower, 256) - u_lo[i]));
            err_up = std::max(err_up, std::abs(green_solve_upper(k, p_up, f_upper, 256) - u_up[i]));
        }
        CHECK(err_lo <= 1e-8);
        CHECK(err_up <= 1e-8);
    }
}

TEST_CASE("stream mode solve: ends, trace forms, quadrature differentiation") {
    WaveParams p;
    p.gamma = 0.7;
    const double lambda = 1.3;
    const auto w = mode_solve_w(2, lambda, p, 64);
    CHECK(std::abs(w.values[0]) < 1e-13);                    // p = -1
    CHECK(std::abs(w.values[w.values.size() - 1]) < 1e-13);  // p = 0

    for (int k = 1; k <= 8; ++k) {
        const double simplified = stream_mode_trace(k, lambda, p);
        const double expform = mode_w_trace_exp_form(k, lambda, p);
        CHECK(expform == Catch::Approx(simplified).epsilon(1e-12));
        const double quad = mode_w_trace_quadrature(k, lambda, p, 64);
        CHECK(quad == Catch::Approx(simplified).epsilon(1e-10));
    }

    WaveParams irr;
    irr.gamma = 0.0;
    CHECK(stream_mode_trace(1, 1.0, irr) == Catch::Approx(1.0 - 1.0 / std::tanh(1.0)).epsilon(1e-12));
    CHECK(stream_mode_trace(1, 1.0, irr) == Catch::Approx(-0.3130353).epsilon(1e-6));
}

TEST_CASE("voltage mode solve: zero field, linearity, trace forms") {
    const auto h0 = mode_solve_h(3, 0.0, 48);
    CHECK(h0.values.cwiseAbs().maxCoeff() == 0.0);

    const auto h1 = mode_solve_h(3, 1.0, 48);
    const auto h2 = mode_solve_h(3, 2.0, 48);
    CHECK((h2.values - 2.0 * h1.values).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(std::abs(h1.values[0]) < 1e-14);
    CHECK(std::abs(h1.values[h1.values.size() - 1]) < 1e-14);

    WaveParams p;
    p.e0 = 1.0;
    CHECK(voltage_mode_trace(1, p) == Catch::Approx(1.0 / std::tanh(1.0) - 1.0).epsilon(1e-12));
    CHECK(voltage_mode_trace(1, p) == Catch::Approx(0.3130353).epsilon(1e-6));
    for (int k = 1; k <= 8; ++k) {
        const double simplified = voltage_mode_trace(k, p);
        CHECK(mode_h_trace_exp_form(k, 1.0) == Catch::Approx(simplified).epsilon(1e-12));
        CHECK(mode_h_trace_quadrature(k, 1.0, 64) == Catch::Approx(simplified).epsilon(1e-10));
    }
}
