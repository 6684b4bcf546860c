// Spectral discretization of the two flattened strips.
//
// Horizontal direction: all fields of interest are even and 2pi-periodic
// in q, so they are represented by their values on the half-period grid
// q_j = pi j / (M/2), j = 0..M/2, equivalently by cosine coefficients of
// modes 0..M/2.  Evenness is structural in this representation; no parity
// projection is ever needed.  Vertical direction: Chebyshev-Lobatto
// collocation on [-1,0] (liquid) or [0,1] (gas).

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ehd/common.hpp"

namespace ehd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Side { lower, upper };

/// Nodal/coefficient machinery for even 2pi-periodic functions sampled on
/// the half grid q_j = pi j / mh, j = 0..mh.
struct CosineBasis {
    int mh = 0;   ///< highest resolved cosine mode; mh+1 nodes and modes
    Vec qnodes;   ///< q_0 = 0 .. q_mh = pi
    Mat C;        ///< values from coefficients: C(j,n) = cos(n q_j)
    Mat Cinv;     ///< coefficients from values
    Mat S;        ///< S(j,n) = sin(n q_j), for odd intermediates
    Mat Dq;       ///< d/dq, even values -> odd values
    Mat Dqq;      ///< d^2/dq^2, even values -> even values

    explicit CosineBasis(int mh_in) : mh(mh_in) {
        detail::require(mh >= 1, "CosineBasis: need at least one mode");
        const int n = mh + 1;
        qnodes.resize(n);
        C.resize(n, n);
        S.resize(n, n);
        for (int j = 0; j < n; ++j) {
            qnodes[j] = pi * j / mh;
            for (int m = 0; m < n; ++m) {
                C(j, m) = std::cos(m * qnodes[j]);
                S(j, m) = std::sin(m * qnodes[j]);
            }
        }
        Cinv = C.partialPivLu().inverse();
        Vec d1(n), d2(n);
        for (int m = 0; m < n; ++m) {
            d1[m] = -static_cast<double>(m);
            d2[m] = -static_cast<double>(m) * m;
        }
        Dq = S * d1.asDiagonal() * Cinv;
        Dqq = C * d2.asDiagonal() * Cinv;
        dq_norm = Dq.cwiseAbs().rowwise().sum().maxCoeff();
        dqq_norm = Dqq.cwiseAbs().rowwise().sum().maxCoeff();
    }

    double dq_norm = 0.0;   ///< inf-norm of Dq, for residual floors
    double dqq_norm = 0.0;

    /// Cosine coefficients (modes 0..mh) of nodal values.
    Vec coefficients(const Vec& values) const { return Cinv * values; }

    /// Nodal values of a coefficient vector (padded or truncated to mh+1).
    Vec values(const Vec& coeffs) const {
        Vec c = Vec::Zero(mh + 1);
        const int m = std::min<int>(mh + 1, static_cast<int>(coeffs.size()));
        c.head(m) = coeffs.head(m);
        return C * c;
    }
};

namespace detail {

/// Chebyshev-Lobatto differentiation matrix on x_i = cos(pi i / N), i=0..N.
inline Mat chebyshev_diff(int N) {
    const int n = N + 1;
    Vec x(n), c(n);
    for (int i = 0; i < n; ++i) {
        x[i] = std::cos(pi * i / N);
        c[i] = (i == 0 || i == N) ? 2.0 : 1.0;
        if (i % 2 == 1)
            c[i] = -c[i];
    }
    Mat D(n, n);
    for (int i = 0; i < n; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j)
                continue;
            D(i, j) = (c[i] / c[j]) / (x[i] - x[j]);
            rowsum += D(i, j);
        }
        D(i, i) = -rowsum;  // negative sum trick
    }
    return D;
}

}  // namespace detail

/// Collocation grid for one flattened strip: M/2+1 half-period q-nodes
/// tensored with N+1 Chebyshev-Lobatto p-nodes, plus the flat-state
/// per-mode factorizations used as the fast-path preconditioner.
class StripGrid {
  public:
    StripGrid(int M, int N, Side side) : M_(M), N_(N), side_(side), basis_(M / 2) {
        detail::require(M >= 8 && M % 2 == 0, "StripGrid: M must be even and >= 8");
        detail::require(N >= 8, "StripGrid: N must be >= 8");
        const int n = N + 1;
        pnodes_.resize(n);
        for (int i = 0; i < n; ++i) {
            const double x = std::cos(pi * i / N);
            pnodes_[i] = (side == Side::lower) ? 0.5 * (x - 1.0) : 0.5 * (x + 1.0);
        }
        Dp_ = 2.0 * detail::chebyshev_diff(N);  // d/dp = 2 d/dx on a half-width interval
        Dp2_ = Dp_ * Dp_;
        dp_norm_ = Dp_.cwiseAbs().rowwise().sum().maxCoeff();
        dp2_norm_ = Dp2_.cwiseAbs().rowwise().sum().maxCoeff();
        interface_row_ = (side == Side::lower) ? 0 : N;  // p = 0
        far_row_ = (side == Side::lower) ? N : 0;        // p = -1 or p = +1

        // Flat-state operator per cosine mode: Dp2 - k^2 I with Dirichlet rows.
        flat_lu_.reserve(mh() + 1);
        for (int k = 0; k <= mh(); ++k) {
            Mat A = Dp2_ - static_cast<double>(k) * k * Mat::Identity(n, n);
            A.row(interface_row_).setZero();
            A(interface_row_, interface_row_) = 1.0;
            A.row(far_row_).setZero();
            A(far_row_, far_row_) = 1.0;
            flat_lu_.emplace_back(A);
        }
    }

    int M() const { return M_; }
    int N() const { return N_; }
    int mh() const { return M_ / 2; }
    Side side() const { return side_; }
    const CosineBasis& basis() const { return basis_; }
    const Vec& pnodes() const { return pnodes_; }
    const Mat& Dp() const { return Dp_; }
    const Mat& Dp2() const { return Dp2_; }
    double dp_norm() const { return dp_norm_; }
    double dp2_norm() const { return dp2_norm_; }
    int interface_row() const { return interface_row_; }
    int far_row() const { return far_row_; }

    /// Solve the flat-state Helmholtz problem (Dp2 - k^2) u = rhs with the
    /// grid's Dirichlet rows already substituted into rhs.
    Vec flat_mode_solve(int k, const Vec& rhs) const { return flat_lu_[k].solve(rhs); }

  private:
    int M_, N_;
    Side side_;
    CosineBasis basis_;
    Vec pnodes_;
    Mat Dp_, Dp2_;
    double dp_norm_ = 0.0, dp2_norm_ = 0.0;
    int interface_row_, far_row_;
    std::vector<Eigen::PartialPivLU<Mat>> flat_lu_;
};

/// The two strips share M and N so interface traces line up node-for-node.
struct StripGridPair {
    StripGrid lower;
    StripGrid upper;
    StripGridPair(int M, int N) : lower(M, N, Side::lower), upper(M, N, Side::upper) {}
};

}  // namespace ehd
