// Closed-form Green's functions of d^2/dp^2 - k^2 on the two strips'
// vertical sections, and the flat-state per-mode solves built on them.

#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "ehd/common.hpp"
#include "ehd/grid.hpp"
#include "ehd/params.hpp"

namespace ehd {

/// Green's function of d^2/dp^2 - k^2 on [-1,0] with Dirichlet ends.
/// Continuous, symmetric, vanishes at p in {-1,0}, kinked on the diagonal.
inline double green_lower(int k, double p, double r) {
    detail::require_mode(k);
    detail::require(p >= -1.0 && p <= 0.0 && r >= -1.0 && r <= 0.0, "green_lower: arguments must lie in [-1,0]");
    const double kk = static_cast<double>(k);
    if (p <= r)
        return std::sinh(kk * (1.0 + p)) * std::sinh(kk * r) / (kk * std::sinh(kk));
    return std::sinh(kk * p) * std::sinh(kk * (1.0 + r)) / (kk * std::sinh(kk));
}

/// Green's function of d^2/dp^2 - k^2 on [0,1] with Dirichlet ends.
/// Negative in the open square.
inline double green_upper(int k, double p, double r) {
    detail::require_mode(k);
    detail::require(p >= 0.0 && p <= 1.0 && r >= 0.0 && r <= 1.0, "green_upper: arguments must lie in [0,1]");
    const double kk = static_cast<double>(k);
    if (p <= r)
        return -std::sinh(kk * p) * std::sinh(kk * (1.0 - r)) / (kk * std::sinh(kk));
    return -std::sinh(kk * (1.0 - p)) * std::sinh(kk * r) / (kk * std::sinh(kk));
}

namespace detail {

/// Gauss-Legendre nodes and weights on [-1,1] by Newton iteration on P_n.
struct GaussLegendre {
    Vec x, w;
    explicit GaussLegendre(int n) {
        require(n >= 1, "GaussLegendre: need n >= 1");
        x.resize(n);
        w.resize(n);
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double z = std::cos(pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
                }
                dp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-15)
                    break;
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }

    /// Integral of f over [a,b].
    template <class F>
    double integrate(double a, double b, F&& f) const {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double s = 0.0;
        for (int i = 0; i < x.size(); ++i)
            s += w[i] * f(mid + half * x[i]);
        return s * half;
    }
};

}  // namespace detail

/// Vertical profile of one flat-state mode solve, sampled on equispaced
/// points of its strip, together with the closed-form interface trace.
struct ModeProfile {
    Vec p;           ///< sample points, ngrid of them spanning the strip
    Vec values;      ///< mode profile at the sample points
    double trace_fp; ///< normal derivative at p = 0, closed form
};

/// Linearized stream response on mode k at the flat state:
///   w_k(p) = int_{-1}^{0} G1(p,r) (2 gamma - (1+r)(gamma r + lambda) k^2) dr.
/// Quadrature is Gauss-Legendre with ngrid nodes on each side of the
/// Green's-kernel kink at r = p.
inline ModeProfile mode_solve_w(int k, double lambda, const WaveParams& p, int ngrid) {
    detail::require_mode(k);
    detail::require(ngrid >= 16, "mode_solve_w: ngrid must be >= 16");
    const detail::GaussLegendre gl(ngrid);
    const double kk = static_cast<double>(k);
    auto forcing = [&](double r) { return 2.0 * p.gamma - (1.0 + r) * (p.gamma * r + lambda) * kk * kk; };
    ModeProfile out;
    out.p.resize(ngrid);
    out.values.resize(ngrid);
    for (int i = 0; i < ngrid; ++i) {
        const double pi_ = -1.0 + static_cast<double>(i) / (ngrid - 1);
        out.p[i] = pi_;
        auto kernel = [&](double r) { return green_lower(k, pi_, r) * forcing(r); };
        out.values[i] = gl.integrate(-1.0, pi_, kernel) + gl.integrate(pi_, 0.0, kernel);
    }
    out.trace_fp = stream_mode_trace(k, lambda, p);
    return out;
}

/// Linearized voltage response on mode k at the flat state:
///   h_k(p) = int_0^1 G2(p,r) E0 (r-1) k^2 dr.
inline ModeProfile mode_solve_h(int k, double e0, int ngrid) {
    detail::require_mode(k);
    detail::require(ngrid >= 16, "mode_solve_h: ngrid must be >= 16");
    const detail::GaussLegendre gl(ngrid);
    const double kk = static_cast<double>(k);
    auto forcing = [&](double r) { return e0 * (r - 1.0) * kk * kk; };
    ModeProfile out;
    out.p.resize(ngrid);
    out.values.resize(ngrid);
    for (int i = 0; i < ngrid; ++i) {
        const double pi_ = static_cast<double>(i) / (ngrid - 1);
        out.p[i] = pi_;
        auto kernel = [&](double r) { return green_upper(k, pi_, r) * forcing(r); };
        out.values[i] = gl.integrate(0.0, pi_, kernel) + gl.integrate(pi_, 1.0, kernel);
    }
    const double t = tk(k);
    out.trace_fp = (1.0 - t) / t * e0;
    return out;
}

/// Interface trace of the mode-k stream response by quadrature of the
/// differentiated kernel, (1/sinh k) int (2g - (1+r)(gr+l)k^2) sinh(k(1+r)) dr.
inline double mode_w_trace_quadrature(int k, double lambda, const WaveParams& p, int ngrid) {
    const detail::GaussLegendre gl(ngrid);
    const double kk = static_cast<double>(k);
    auto f = [&](double r) {
        return (2.0 * p.gamma - (1.0 + r) * (p.gamma * r + lambda) * kk * kk) * std::sinh(kk * (1.0 + r));
    };
    return gl.integrate(-1.0, 0.0, f) / std::sinh(kk);
}

/// Interface trace of the mode-k voltage response by quadrature,
/// -(1/sinh k) int E0 (r-1) k^2 sinh(k(1-r)) dr.
inline double mode_h_trace_quadrature(int k, double e0, int ngrid) {
    const detail::GaussLegendre gl(ngrid);
    const double kk = static_cast<double>(k);
    auto f = [&](double r) { return e0 * (r - 1.0) * kk * kk * std::sinh(kk * (1.0 - r)); };
    return -gl.integrate(0.0, 1.0, f) / std::sinh(kk);
}

/// Exponential form of the stream trace,
///   ((g+l-lk) e^k - (g+l+lk) e^{-k}) / (2 sinh k).
inline double mode_w_trace_exp_form(int k, double lambda, const WaveParams& p) {
    const double kk = static_cast<double>(k);
    const double gl = p.gamma + lambda;
    return ((gl - lambda * kk) * std::exp(kk) - (gl + lambda * kk) * std::exp(-kk)) / (2.0 * std::sinh(kk));
}

/// Exponential form of the voltage trace, ((k-1)e^k + (k+1)e^{-k}) E0 / (2 sinh k).
inline double mode_h_trace_exp_form(int k, double e0) {
    const double kk = static_cast<double>(k);
    return ((kk - 1.0) * std::exp(kk) + (kk + 1.0) * std::exp(-kk)) / (2.0 * std::sinh(kk)) * e0;
}

}  // namespace ehd
