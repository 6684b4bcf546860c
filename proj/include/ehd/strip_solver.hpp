// Collocation solves of the flattened elliptic problems: the stream
// function on the liquid strip [-1,0] and the voltage potential on the
// gas strip [0,1], for an arbitrary admissible interface profile.
//
// Two solution paths share one discretization:
//   direct    - assemble the full 2D collocation matrix densely, LU factor;
//   iterative - Richardson iteration preconditioned by the flat-state
//               operator, which decouples into per-mode Helmholtz solves.
// The automatic mode tries the iterative path (it converges quickly for
// the small and moderate profiles continuation produces) and falls back
// to the direct factorization when the iteration stalls.

#pragma once

#include <Eigen/Dense>
#include <string>

#include "ehd/common.hpp"
#include "ehd/grid.hpp"
#include "ehd/params.hpp"
#include "ehd/surface.hpp"

namespace ehd {

enum class SolveMethod { automatic, direct, iterative };

struct SolveOptions {
    SolveMethod method = SolveMethod::automatic;
    double tol = 1e-13;       ///< relative residual target of the iterative path
    int max_iterations = 400;
};

enum class FieldKind { stream, voltage };

/// Discretized scalar field on a strip grid; rows follow the grid's
/// p-nodes, columns its half-period q-nodes.
struct StripField {
    FieldKind kind;
    Mat values;
};

/// Tangential and normal derivatives on the interface p = 0.  For even
/// fields fq is odd in q and fp is even; both are exact consequences of
/// the half-grid representation here.
struct InterfaceTrace {
    Vec fq;
    Vec fp;
};

namespace detail {

/// Variable coefficients of u_qq + a_qp u_qp + a_pp u_pp + a_p u_p = f
/// at the collocation nodes, plus Dirichlet data.
struct StripCoefficients {
    Mat a_qp, a_pp, a_p;
    double rhs_interior;
    double bc_interface, bc_far;
};

inline StripCoefficients strip_coefficients(const SurfaceProfile& eta, const StripGrid& grid,
                                            const WaveParams& params, double lambda) {
    const CosineBasis& basis = grid.basis();
    Vec e, e1, e2;
    eta.sample(basis, e, e1, e2);

    const int rows = grid.N() + 1;
    const int cols = grid.mh() + 1;
    StripCoefficients c;
    c.a_qp.resize(rows, cols);
    c.a_pp.resize(rows, cols);
    c.a_p.resize(rows, cols);

    const bool lower = grid.side() == Side::lower;
    for (int j = 0; j < cols; ++j) {
        const double den = lower ? 1.0 + e[j] : 1.0 - e[j];
        const double den2 = den * den;
        for (int i = 0; i < rows; ++i) {
            const double depth = lower ? 1.0 + grid.pnodes()[i] : 1.0 - grid.pnodes()[i];
            c.a_qp(i, j) = -2.0 * depth * e1[j] / den;
            c.a_pp(i, j) = (depth * depth * e1[j] * e1[j] + 1.0) / den2;
            c.a_p(i, j) = lower ? -depth * (den * e2[j] - 2.0 * e1[j] * e1[j]) / den2
                                : -depth * (den * e2[j] + 2.0 * e1[j] * e1[j]) / den2;
        }
    }
    if (lower) {
        c.rhs_interior = params.gamma;
        c.bc_interface = 0.0;
        c.bc_far = 0.5 * params.gamma - lambda;  // psi = m on p = -1
    } else {
        c.rhs_interior = 0.0;
        c.bc_interface = 0.0;
        c.bc_far = params.e0;  // V = E0 d on p = 1
    }
    return c;
}

/// Apply the discrete operator; Dirichlet rows pass the field through.
/// `term_scale`, when given, receives the largest sum of term magnitudes,
/// which bounds the residual level rounding can reach.
inline Mat apply_strip_operator(const StripGrid& grid, const StripCoefficients& c, const Mat& u,
                                double* term_scale = nullptr) {
    const CosineBasis& basis = grid.basis();
    const Mat uqq = u * basis.Dqq.transpose();
    const Mat up = grid.Dp() * u;
    const Mat uqp = up * basis.Dq.transpose();
    const Mat upp = grid.Dp2() * u;
    Mat r = uqq + c.a_qp.cwiseProduct(uqp) + c.a_pp.cwiseProduct(upp) + c.a_p.cwiseProduct(up);
    if (term_scale) {
        const Mat mags = uqq.cwiseAbs() + c.a_qp.cwiseAbs().cwiseProduct(uqp.cwiseAbs()) +
                         c.a_pp.cwiseAbs().cwiseProduct(upp.cwiseAbs()) +
                         c.a_p.cwiseAbs().cwiseProduct(up.cwiseAbs());
        *term_scale = mags.maxCoeff();
    }
    r.row(grid.interface_row()) = u.row(grid.interface_row());
    r.row(grid.far_row()) = u.row(grid.far_row());
    return r;
}

inline Mat strip_rhs(const StripGrid& grid, const StripCoefficients& c) {
    Mat b = Mat::Constant(grid.N() + 1, grid.mh() + 1, c.rhs_interior);
    b.row(grid.interface_row()).setConstant(c.bc_interface);
    b.row(grid.far_row()).setConstant(c.bc_far);
    return b;
}

/// Flat-operator preconditioner: cosine-transform each p-level, solve the
/// per-mode Helmholtz factorizations, transform back.
inline Mat flat_precondition(const StripGrid& grid, const Mat& r) {
    const CosineBasis& basis = grid.basis();
    Mat coef = r * basis.Cinv.transpose();
    for (int n = 0; n <= grid.mh(); ++n)
        coef.col(n) = grid.flat_mode_solve(n, coef.col(n));
    return coef * basis.C.transpose();
}

inline bool iterative_strip_solve(const StripGrid& grid, const StripCoefficients& c, const SolveOptions& opts,
                                  Mat& u) {
    const Mat b = strip_rhs(grid, c);
    const double bscale = std::max(1.0, b.cwiseAbs().maxCoeff());
    u = flat_precondition(grid, b);
    double prev = std::numeric_limits<double>::max();
    int stalls = 0;
    for (int it = 0; it < opts.max_iterations; ++it) {
        double term_scale = 0.0;
        const Mat resid = b - apply_strip_operator(grid, c, u, &term_scale);
        const double rnorm = resid.cwiseAbs().maxCoeff();
        if (!std::isfinite(rnorm))
            return false;
        if (rnorm <= opts.tol * bscale)
            return true;
        if (rnorm >= 0.9 * prev) {
            // stalled: the per-mode Chebyshev factorizations floor the
            // iteration near eps * N^4; accept the converged-to-rounding
            // iterate, fail outright only above that
            if (++stalls >= 3) {
                const double n4 = std::pow(static_cast<double>(grid.N()), 4);
                return rnorm <= 10.0 * std::numeric_limits<double>::epsilon() * n4 *
                                    std::max(term_scale, bscale);
            }
        } else {
            stalls = 0;
        }
        prev = rnorm;
        u += flat_precondition(grid, resid);
    }
    return false;
}

inline Mat direct_strip_solve(const StripGrid& grid, const StripCoefficients& c) {
    const CosineBasis& basis = grid.basis();
    const int rows = grid.N() + 1;
    const int cols = grid.mh() + 1;
    const int n = rows * cols;
    auto idx = [cols](int i, int j) { return i * cols + j; };

    Mat A = Mat::Zero(n, n);
    Vec b(n);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const int r = idx(i, j);
            if (i == grid.interface_row() || i == grid.far_row()) {
                A(r, r) = 1.0;
                b[r] = (i == grid.interface_row()) ? c.bc_interface : c.bc_far;
                continue;
            }
            for (int jj = 0; jj < cols; ++jj)
                A(r, idx(i, jj)) += basis.Dqq(j, jj);
            for (int ii = 0; ii < rows; ++ii)
                A(r, idx(ii, j)) += c.a_pp(i, j) * grid.Dp2()(i, ii) + c.a_p(i, j) * grid.Dp()(i, ii);
            for (int ii = 0; ii < rows; ++ii) {
                const double w = c.a_qp(i, j) * grid.Dp()(i, ii);
                for (int jj = 0; jj < cols; ++jj)
                    A(r, idx(ii, jj)) += w * basis.Dq(j, jj);
            }
            b[r] = c.rhs_interior;
        }
    }
    const Vec x = A.partialPivLu().solve(b);
    if (!x.allFinite())
        throw SolverError("singular system: strip collocation matrix could not be solved");
    Mat u(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            u(i, j) = x[idx(i, j)];
    double term_scale = 0.0;
    const Mat resid = strip_rhs(grid, c) - apply_strip_operator(grid, c, u, &term_scale);
    const double floor = 1e5 * std::numeric_limits<double>::epsilon() *
                         std::max(term_scale, std::max(1.0, b.cwiseAbs().maxCoeff()));
    if (resid.cwiseAbs().maxCoeff() > std::max(1e-8, floor))
        throw SolverError("singular system: strip collocation matrix could not be solved");
    return u;
}

inline Mat solve_strip(const SurfaceProfile& eta, const StripGrid& grid, const WaveParams& params, double lambda,
                       const SolveOptions& opts) {
    if (!eta.fits(grid.basis()))
        throw SolverError("unresolved profile: interface mode exceeds grid capacity M/2 - 1");
    if (eta.sup_norm() >= 0.999)
        throw SolverError("singular system: flattening transform degenerates, sup|eta| -> 1");
    const StripCoefficients c = strip_coefficients(eta, grid, params, lambda);
    Mat u;
    switch (opts.method) {
        case SolveMethod::iterative:
            if (!iterative_strip_solve(grid, c, opts, u))
                throw SolverError("iterative strip solve did not converge");
            return u;
        case SolveMethod::direct:
            return direct_strip_solve(grid, c);
        case SolveMethod::automatic:
        default:
            if (iterative_strip_solve(grid, c, opts, u))
                return u;
            return direct_strip_solve(grid, c);
    }
}

}  // namespace detail

/// Stream function on the liquid strip: psi = 0 on the interface,
/// psi = m(lambda) on the bottom electrode, vorticity gamma as forcing.
inline StripField solve_stream(const SurfaceProfile& eta, double lambda, const WaveParams& params,
                               const StripGrid& grid, const SolveOptions& opts = {}) {
    detail::require(grid.side() == Side::lower, "solve_stream: grid must discretize the lower strip");
    return StripField{FieldKind::stream, detail::solve_strip(eta, grid, params, lambda, opts)};
}

/// Voltage potential on the gas strip: V = 0 on the interface, V = E0 on
/// the top electrode, harmonic in the flattened coordinates.  The
/// vorticity never enters.
inline StripField solve_voltage(const SurfaceProfile& eta, double e0, const WaveParams& params,
                                const StripGrid& grid, const SolveOptions& opts = {}) {
    detail::require(grid.side() == Side::upper, "solve_voltage: grid must discretize the upper strip");
    WaveParams p = params;
    p.e0 = e0;
    return StripField{FieldKind::voltage, detail::solve_strip(eta, grid, p, 0.0, opts)};
}

/// Spectral interface derivatives at p = 0.
inline InterfaceTrace interface_traces(const StripField& field, const StripGrid& grid) {
    InterfaceTrace t;
    t.fq = (field.values * grid.basis().Dq.transpose()).row(grid.interface_row());
    t.fp = (grid.Dp() * field.values).row(grid.interface_row());
    return t;
}

}  // namespace ehd
