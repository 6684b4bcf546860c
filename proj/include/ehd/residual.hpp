// Interfacial Bernoulli residual F(lambda, E0, eta), its finite-difference
// Jacobian in the cosine modes, and the analytic directional derivatives
// of F at the flat state.
//
// The discrete residual carries a mean mode that the continuous theory
// quotients away; the Bernoulli correction q0 absorbs it (Q = lambda^2
// - eps0 E0^2 + q0, with q0 = 0 on the flat state), keeping the Newton
// systems square.

#pragma once

#include <Eigen/Dense>

#include "ehd/common.hpp"
#include "ehd/green.hpp"
#include "ehd/grid.hpp"
#include "ehd/params.hpp"
#include "ehd/strip_solver.hpp"
#include "ehd/surface.hpp"

namespace ehd {

/// Unknowns of the steady-wave problem at fixed (E0, gamma): the profile,
/// the wave speed, and the Bernoulli correction.
struct ExtendedState {
    SurfaceProfile eta;
    double lambda = 0.0;
    double q0 = 0.0;
};

/// Residual sampled on the half-period grid together with its cosine view.
struct ResidualVector {
    Vec values;  ///< F at the q-collocation nodes
    Vec coeffs;  ///< cosine coefficients, modes 0..M/2
};

/// Residual plus the two solved fields, for callers that reuse them.
struct ResidualParts {
    ResidualVector F;
    StripField psi;
    StripField voltage;
};

namespace detail {

inline Vec bernoulli_values(const ExtendedState& state, const WaveParams& p, const CosineBasis& basis,
                            const InterfaceTrace& psi_t, const InterfaceTrace& v_t) {
    Vec e, e1, e2;
    state.eta.sample(basis, e, e1, e2);
    const double Q = state.lambda * state.lambda - p.eps0 * p.e0 * p.e0 + state.q0;
    const int n = basis.mh + 1;
    Vec F(n);
    for (int j = 0; j < n; ++j) {
        const double sq = e1[j] * e1[j] + 1.0;
        const double lo = 1.0 + e[j];
        const double hi = 1.0 - e[j];
        const double curv = 2.0 * p.sigma * e2[j] / (sq * std::sqrt(sq));
        const double hydro = psi_t.fq[j] * psi_t.fq[j] + sq / (lo * lo) * psi_t.fp[j] * psi_t.fp[j] -
                             2.0 * e1[j] / lo * psi_t.fq[j] * psi_t.fp[j];
        const double maxwell = v_t.fq[j] * v_t.fq[j] + sq / (hi * hi) * v_t.fp[j] * v_t.fp[j] -
                               2.0 * e1[j] / hi * v_t.fq[j] * v_t.fp[j];
        F[j] = hydro + 2.0 * p.g * e[j] - curv - p.eps0 * maxwell - Q;
    }
    if (!F.allFinite())
        throw SolverError("nonfinite residual");
    return F;
}

}  // namespace detail

/// Evaluate the Bernoulli residual, solving both strips.  Pass
/// reuse_voltage when only lambda changed since the voltage solve does
/// not depend on it.
inline ResidualParts assemble_residual_parts(const ExtendedState& state, const WaveParams& p,
                                             const StripGridPair& grids, const SolveOptions& opts = {},
                                             const StripField* reuse_voltage = nullptr) {
    ResidualParts parts{ResidualVector{},
                        solve_stream(state.eta, state.lambda, p, grids.lower, opts),
                        reuse_voltage ? *reuse_voltage : solve_voltage(state.eta, p.e0, p, grids.upper, opts)};
    const InterfaceTrace psi_t = interface_traces(parts.psi, grids.lower);
    const InterfaceTrace v_t = interface_traces(parts.voltage, grids.upper);
    parts.F.values = detail::bernoulli_values(state, p, grids.lower.basis(), psi_t, v_t);
    parts.F.coeffs = grids.lower.basis().coefficients(parts.F.values);
    return parts;
}

inline ResidualVector assemble_residual(const ExtendedState& state, const WaveParams& p, const StripGridPair& grids,
                                        const SolveOptions& opts = {}) {
    return assemble_residual_parts(state, p, grids, opts).F;
}

/// Finite-dimensional linearization of the residual at a state: columns
/// are central differences in the cosine modes 1..K plus the analytic q0
/// column; rows are residual modes 0..K.
struct EtaJacobian {
    Mat mat;         ///< (K+1) x (K+1)
    int mode_count;  ///< K
    double fd_step;

    /// Columns eta_1..eta_K, rows F modes 1..K: the block whose spectrum
    /// carries the bifurcation structure.
    Mat eta_block() const { return mat.block(1, 0, mode_count, mode_count); }
};

inline EtaJacobian eta_jacobian(const ExtendedState& state, const WaveParams& p, const StripGridPair& grids,
                                int mode_count, const SolveOptions& opts = {}) {
    detail::require(mode_count >= 1 && mode_count <= grids.lower.mh() - 1,
                    "eta_jacobian: mode_count must lie in [1, M/2 - 1]");
    const int K = mode_count;
    const double h = 1e-6 * std::max(1.0, state.eta.modes(K).cwiseAbs().maxCoeff());
    EtaJacobian J;
    J.mode_count = K;
    J.fd_step = h;
    J.mat = Mat::Zero(K + 1, K + 1);
    for (int n = 1; n <= K; ++n) {
        ExtendedState plus = state, minus = state;
        plus.eta = state.eta.with_mode_increment(n, h);
        minus.eta = state.eta.with_mode_increment(n, -h);
        const Vec fp = assemble_residual(plus, p, grids, opts).coeffs;
        const Vec fm = assemble_residual(minus, p, grids, opts).coeffs;
        J.mat.col(n - 1) = (fp.head(K + 1) - fm.head(K + 1)) / (2.0 * h);
    }
    J.mat(0, K) = -1.0;  // dF/dq0: the mean row only
    return J;
}

/// Central-difference column dF/dlambda; the voltage solve is reused.
inline Vec lambda_jacobian_column(const ExtendedState& state, const WaveParams& p, const StripGridPair& grids,
                                  int mode_count, const SolveOptions& opts = {},
                                  const StripField* voltage = nullptr) {
    const double h = 1e-6 * std::max(1.0, std::abs(state.lambda));
    ExtendedState plus = state, minus = state;
    plus.lambda += h;
    minus.lambda -= h;
    StripField v = voltage ? *voltage : solve_voltage(state.eta, p.e0, p, grids.upper, opts);
    const Vec fp = assemble_residual_parts(plus, p, grids, opts, &v).F.coeffs;
    const Vec fm = assemble_residual_parts(minus, p, grids, opts, &v).F.coeffs;
    return (fp.head(mode_count + 1) - fm.head(mode_count + 1)) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// Analytic directional derivatives at the flat state.  Valid only there;
// away from the flat state all derivatives are finite differences.

namespace detail {

/// Nodal values of the first-order interface responses w_p(q,0), h_p(q,0)
/// for a direction given as a cosine series.
inline void mode_trace_values(const SurfaceProfile& dir, double lambda, const WaveParams& p,
                              const CosineBasis& basis, Vec& wp, Vec& hp) {
    require(dir.fits(basis), "direction exceeds basis capacity");
    Vec wc = Vec::Zero(basis.mh + 1), hc = Vec::Zero(basis.mh + 1);
    for (int n = 1; n <= std::min(dir.max_mode(), basis.mh); ++n) {
        const double c = dir.coeff(n);
        if (c == 0.0)
            continue;
        wc[n] = c * stream_mode_trace(n, lambda, p);
        hc[n] = c * voltage_mode_trace(n, p);
    }
    wp = basis.C * wc;
    hp = basis.C * hc;
}

}  // namespace detail

/// Second directional derivative of F at the flat state (lambda, E0, 0),
/// polarized over two directions; symmetric by construction.
inline Vec second_derivative(const SurfaceProfile& d1, const SurfaceProfile& d2, double lambda,
                             const WaveParams& p, const CosineBasis& basis) {
    Vec v1, v1p, v1pp, v2, v2p, v2pp;
    d1.sample(basis, v1, v1p, v1pp);
    d2.sample(basis, v2, v2p, v2pp);
    Vec wp1, hp1, wp2, hp2;
    detail::mode_trace_values(d1, lambda, p, basis, wp1, hp1);
    detail::mode_trace_values(d2, lambda, p, basis, wp2, hp2);

    const double a = lambda * lambda - p.eps0 * p.e0 * p.e0;
    Vec out = 2.0 * a * (v1p.cwiseProduct(v2p) + 3.0 * v1.cwiseProduct(v2));
    out -= 2.0 * p.eps0 * hp1.cwiseProduct(hp2);
    out += 2.0 * wp1.cwiseProduct(wp2);
    out -= 4.0 * p.eps0 * p.e0 * (v1.cwiseProduct(hp2) + v2.cwiseProduct(hp1));
    out -= 4.0 * lambda * (v1.cwiseProduct(wp2) + v2.cwiseProduct(wp1));
    return out;
}

/// Third directional derivative of F at the flat state along one direction.
inline Vec third_derivative(const SurfaceProfile& dir, double lambda, const WaveParams& p,
                            const CosineBasis& basis) {
    Vec v, vp, vpp;
    dir.sample(basis, v, vp, vpp);
    Vec wp, hp;
    detail::mode_trace_values(dir, lambda, p, basis, wp, hp);

    const double a = lambda * lambda + p.eps0 * p.e0 * p.e0;
    const Vec vp2 = vp.cwiseProduct(vp);
    const Vec v2 = v.cwiseProduct(v);
    Vec out = -12.0 * a * vp2.cwiseProduct(v) - 24.0 * a * v2.cwiseProduct(v);
    out += 18.0 * p.sigma * vpp.cwiseProduct(vp2);
    out += 12.0 * lambda * vp2.cwiseProduct(wp) + 36.0 * lambda * v2.cwiseProduct(wp);
    out -= 12.0 * p.eps0 * p.e0 * vp2.cwiseProduct(hp) + 36.0 * p.eps0 * p.e0 * v2.cwiseProduct(hp);
    out -= 4.0 * v.cwiseProduct(wp.cwiseProduct(wp)) + 4.0 * p.eps0 * v.cwiseProduct(hp.cwiseProduct(hp));
    return out;
}

/// Kernel-mode projection (1/pi) int F cos(kq) dq via the discrete transform.
inline double mode_projection(const Vec& values, int k, const CosineBasis& basis) {
    detail::require_mode(k);
    return basis.coefficients(values)[k];
}

/// Closed form of the cos(kq)-projection of the third derivative along
/// cos(kq) at the flat state; nine terms.
inline double third_projection_closed_form(int k, double lambda, const WaveParams& p) {
    const double t = tk(k);
    const double k2 = static_cast<double>(k) * k;
    const double a = lambda * lambda + p.eps0 * p.e0 * p.e0;
    const double w = stream_mode_trace(k, lambda, p);
    const double b = (1.0 - t) / t;
    const double ee = p.eps0 * p.e0 * p.e0;
    return -3.0 * k2 * a - 18.0 * a - 4.5 * k2 * k2 * p.sigma + 3.0 * k2 * lambda * w + 27.0 * lambda * w -
           3.0 * k2 * ee * b - 27.0 * ee * b - 3.0 * w * w - 3.0 * p.eps0 * b * b * p.e0 * p.e0;
}

}  // namespace ehd
