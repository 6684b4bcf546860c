// Primary bifurcation points, branch continuation by pseudo-arclength,
// branch-direction formulas, resonance nondegeneracy checks, singularity
// detection along branches, and secondary branch switching.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ehd/residual.hpp"

namespace ehd {

enum class BranchSign { plus, minus };

inline const char* to_string(BranchSign s) { return s == BranchSign::plus ? "+" : "-"; }

struct BifurcationPoint {
    int k = 1;
    BranchSign sign = BranchSign::plus;
    double lambda_star = 0.0;
    int kernel_dim = 1;
    std::optional<int> partner_mode;
};

struct BranchPoint {
    double s = 0.0;  ///< kernel projection (1/pi) int eta cos(kq) dq
    ExtendedState state;
    double residual_norm = 0.0;
    double tracked_eigenvalue = 0.0;
    double sigma_min = 0.0;     ///< smallest singular value of the (eta, q0) block
    double sigma_median = 0.0;
    double det_sign = 1.0;            ///< sign of the block determinant
    double reduced_det_sign = 1.0;    ///< kernel eigenvalue factored out
};

enum class EventKind { kernel_singularity, domain_breach, step_failure };

struct BranchEvent {
    EventKind kind = EventKind::kernel_singularity;
    double s = 0.0;
    ExtendedState state;
    Vec null_vector;  ///< components over (eta_1..eta_K, q0)
    int dominant_mode = 0;
    double sigma_min = 0.0;
    double sigma_median = 0.0;
    std::string note;
};

enum class BranchKind { primary, secondary };

struct Branch {
    BifurcationPoint origin;
    BranchKind kind = BranchKind::primary;
    int secondary_mode = 0;  ///< the mode injected by a branch switch
    std::vector<BranchPoint> points;
    std::vector<BranchEvent> events;
};

struct ContinuationOptions {
    double tol = 1e-10;        ///< Newton tolerance on the residual coefficients
    double ds0 = 1e-3;
    double ds_min = 1e-9;
    double ds_max = 4e-3;
    double smax = 1.5e-2;
    int max_steps = 400;
    int max_newton = 12;
    int max_halvings = 8;
    int mode_count = 0;        ///< retained cosine modes K; 0 means M/2 - 1
    double direction = 1.0;    ///< sign of the first amplitude step
    double kernel_threshold = 1e-6;   ///< kernel detection, sigma < thr * median
    double singular_dip = 1e-5;       ///< event trigger, sigma_min < dip * median
    double eigen_overlap_min = 0.7;
    bool track_eigenvalue = true;
    SolveOptions solve{};
};

/// Square Newton system for steady waves at fixed (gamma, E0): unknowns
/// X = (eta_1..eta_K, q0, lambda), equations = residual cosine modes 0..K
/// plus one pin or arclength border row.
class ContinuationProblem {
  public:
    ContinuationProblem(const WaveParams& p, const StripGridPair& grids, const ContinuationOptions& opts)
        : p_(p), grids_(&grids), opts_(opts) {
        K_ = opts.mode_count > 0 ? opts.mode_count : grids.lower.mh() - 1;
        detail::require(K_ >= 1 && K_ <= grids.lower.mh() - 1,
                        "ContinuationProblem: mode count must lie in [1, M/2 - 1]");
    }

    int mode_count() const { return K_; }
    int dim() const { return K_ + 2; }
    int q0_index() const { return K_; }
    int lambda_index() const { return K_ + 1; }
    const WaveParams& params() const { return p_; }
    const StripGridPair& grids() const { return *grids_; }
    const ContinuationOptions& options() const { return opts_; }

    Vec pack(const ExtendedState& st) const {
        Vec X(dim());
        X.head(K_) = st.eta.modes(K_);
        X[q0_index()] = st.q0;
        X[lambda_index()] = st.lambda;
        return X;
    }

    ExtendedState unpack(const Vec& X) const {
        ExtendedState st;
        st.eta = SurfaceProfile::from_modes(X.head(K_));
        st.q0 = X[q0_index()];
        st.lambda = X[lambda_index()];
        return st;
    }

    /// Residual coefficients, modes 0..K.
    Vec residual(const Vec& X) const {
        return assemble_residual(unpack(X), p_, *grids_, opts_.solve).coeffs.head(K_ + 1);
    }

    /// Max-norm of the full nodal residual, the quantity branch points report.
    double residual_norm_values(const Vec& X) const {
        return assemble_residual(unpack(X), p_, *grids_, opts_.solve).values.cwiseAbs().maxCoeff();
    }

    /// (K+1) x (K+2) Jacobian: FD columns per mode, analytic q0 column,
    /// FD lambda column with the voltage solve reused.
    Mat jacobian(const Vec& X) const {
        const ExtendedState st = unpack(X);
        Mat J(K_ + 1, dim());
        const EtaJacobian je = eta_jacobian(st, p_, *grids_, K_, opts_.solve);
        J.leftCols(K_ + 1) = je.mat;
        J.col(lambda_index()) = lambda_jacobian_column(st, p_, *grids_, K_, opts_.solve);
        return J;
    }

    struct NewtonReport {
        bool converged = false;
        int iterations = 0;
        double residual_norm = 0.0;
        Mat jacobian;  ///< at the accepted point
    };

    /// Newton with the row X[pin] = value appended.
    NewtonReport newton_pinned(Vec& X, int pin, double value, bool damped = false) const {
        return newton_impl(X, [&](Mat& A, Vec& r, const Vec& Xc) {
            A.row(K_ + 1).setZero();
            A(K_ + 1, pin) = 1.0;
            r[K_ + 1] = Xc[pin] - value;
        }, damped);
    }

    /// Newton with the arclength border t . (X - Xref) = 0 appended.
    NewtonReport newton_bordered(Vec& X, const Vec& tangent, const Vec& Xref, bool damped = false) const {
        return newton_impl(X, [&](Mat& A, Vec& r, const Vec& Xc) {
            A.row(K_ + 1) = tangent.transpose();
            r[K_ + 1] = tangent.dot(Xc - Xref);
        }, damped);
    }

    /// Null tangent of the (K+1) x (K+2) Jacobian, oriented along `orient`.
    Vec tangent(const Mat& J, const Vec& orient) const {
        Mat A(dim(), dim());
        A.topRows(K_ + 1) = J;
        A.row(K_ + 1) = orient.transpose();
        Vec rhs = Vec::Zero(dim());
        rhs[K_ + 1] = 1.0;
        Vec t = A.partialPivLu().solve(rhs);
        const double n = t.norm();
        if (!(n > 0.0) || !t.allFinite())
            throw SolverError("tangent computation failed: singular bordered system");
        t /= n;
        if (t.dot(orient) < 0.0)
            t = -t;
        return t;
    }

  private:
    template <class BorderFn>
    NewtonReport newton_impl(Vec& X, BorderFn&& border, bool damped) const {
        NewtonReport rep;
        Mat A(dim(), dim());
        Vec r(dim());
        for (int it = 0; it < opts_.max_newton; ++it) {
            Vec rc;
            Mat J;
            try {
                rc = residual(X);
                J = jacobian(X);
            } catch (const SolverError&) {
                return rep;
            }
            A.topRows(K_ + 1) = J;
            r.head(K_ + 1) = rc;
            border(A, r, X);
            const double rnorm = r.cwiseAbs().maxCoeff();
            if (rnorm <= opts_.tol) {
                rep.converged = true;
                rep.iterations = it;
                rep.residual_norm = rc.cwiseAbs().maxCoeff();
                rep.jacobian = J;
                return rep;
            }
            Vec dx = A.partialPivLu().solve(-r);
            if (!dx.allFinite())
                return rep;
            if (damped) {
                double step = 1.0;
                Vec Xbest = X + dx;
                for (int half = 0; half < 6; ++half) {
                    const Vec Xtry = X + step * dx;
                    try {
                        Vec rt(dim());
                        rt.head(K_ + 1) = residual(Xtry);
                        border(A, rt, Xtry);
                        if (rt.cwiseAbs().maxCoeff() < rnorm) {
                            Xbest = Xtry;
                            break;
                        }
                    } catch (const SolverError&) {
                    }
                    step *= 0.5;
                }
                X = Xbest;
            } else {
                X += dx;
            }
        }
        return rep;
    }

    WaveParams p_;
    const StripGridPair* grids_;
    ContinuationOptions opts_;
    int K_ = 0;
};

namespace detail {

struct BlockDiagnostics {
    double sigma_min = 0.0;
    double sigma_median = 0.0;
    double det_sign = 1.0;
    Vec null_vector;
    int dominant_mode = 0;
};

/// Diagnostics of the square (eta, q0) block of a continuation Jacobian
/// (the border row and the lambda column excluded).
inline BlockDiagnostics block_diagnostics(const Mat& J, int K) {
    const Mat B = J.leftCols(K + 1);
    Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeThinV);
    BlockDiagnostics d;
    const Vec sv = svd.singularValues();
    d.sigma_min = sv[K];
    d.sigma_median = sv[(K + 1) / 2];
    d.null_vector = svd.matrixV().col(K);
    int best = 0;
    for (int i = 1; i < K; ++i)
        if (std::abs(d.null_vector[i]) > std::abs(d.null_vector[best]))
            best = i;
    d.dominant_mode = best + 1;
    const auto lu = B.partialPivLu();
    double sign = lu.permutationP().determinant();
    for (int i = 0; i <= K; ++i)
        sign *= (lu.matrixLU()(i, i) >= 0.0) ? 1.0 : -1.0;
    d.det_sign = sign;
    return d;
}

/// Eigenvalue of the eta block whose eigenvector lies along cos(kq).
struct TrackedEigen {
    double value = 0.0;
    double overlap = 0.0;
    Vec vector;
};

inline TrackedEigen tracked_mode_eigenvalue(const Mat& eta_block, int k) {
    Eigen::EigenSolver<Mat> es(eta_block);
    TrackedEigen out;
    for (int i = 0; i < eta_block.rows(); ++i) {
        const Eigen::VectorXcd v = es.eigenvectors().col(i);
        const double overlap = std::abs(v[k - 1]) / v.norm();
        if (overlap > out.overlap) {
            out.overlap = overlap;
            out.value = es.eigenvalues()[i].real();
            out.vector = v.real().normalized();
        }
    }
    return out;
}

/// Sign of the product of the eta-block eigenvalues with the tracked
/// kernel-mode eigenvalue removed.  This is the singularity witness along
/// a branch: it flips exactly when a non-kernel eigenvalue crosses zero,
/// and unlike the raw determinant it stays meaningful at the branch
/// origin where the kernel eigenvalue itself vanishes.
inline double reduced_determinant_sign(const Mat& eta_block, int k) {
    Eigen::EigenSolver<Mat> es(eta_block);
    int parent = 0;
    double best = -1.0;
    for (int i = 0; i < eta_block.rows(); ++i) {
        const Eigen::VectorXcd v = es.eigenvectors().col(i);
        const double overlap = std::abs(v[k - 1]) / v.norm();
        if (overlap > best) {
            best = overlap;
            parent = i;
        }
    }
    int negatives = 0;
    for (int i = 0; i < eta_block.rows(); ++i) {
        if (i == parent)
            continue;
        const auto ev = es.eigenvalues()[i];
        if (std::abs(ev.imag()) <= 1e-9 * std::max(1.0, std::abs(ev.real())) && ev.real() < 0.0)
            ++negatives;
    }
    return negatives % 2 == 0 ? 1.0 : -1.0;
}

}  // namespace detail

/// All bifurcation speeds for modes k <= kmax, each validated against the
/// kernel of the discrete linearization; two-dimensional kernels are
/// marked with their partner mode.
inline std::vector<BifurcationPoint> find_bifurcation_points(const WaveParams& p, int kmax,
                                                             const StripGridPair& grids,
                                                             const ContinuationOptions& opts = {}) {
    p.validate();
    if (!admissible_field(p, kmax))
        throw std::invalid_argument("inadmissible field: (g + sigma k^2) T_k > eps0 E0^2 fails");
    ContinuationProblem prob(p, grids, opts);
    const int K = prob.mode_count();
    detail::require(kmax >= 1 && kmax <= K, "find_bifurcation_points: kmax must not exceed the mode count");

    std::vector<BifurcationPoint> out;
    for (int k = 1; k <= kmax; ++k) {
        const auto speeds = bifurcation_speeds(k, p);
        if (!speeds)
            continue;
        for (BranchSign sign : {BranchSign::plus, BranchSign::minus}) {
            BifurcationPoint bp;
            bp.k = k;
            bp.sign = sign;
            bp.lambda_star = sign == BranchSign::plus ? speeds->plus : speeds->minus;

            ExtendedState trivial;
            trivial.lambda = bp.lambda_star;
            const EtaJacobian J = eta_jacobian(trivial, p, grids, K, opts.solve);
            Eigen::JacobiSVD<Mat> svd(J.mat, Eigen::ComputeThinV);
            const Vec sv = svd.singularValues();
            const double median = sv[(K + 1) / 2];
            int dim = 0;
            for (int i = 0; i <= K; ++i)
                if (sv[i] < opts.kernel_threshold * median)
                    ++dim;
            bp.kernel_dim = dim;
            if (dim >= 2) {
                // partner = dominant mode of the second-smallest singular direction
                for (int which = K; which > K - dim; --which) {
                    const Vec v = svd.matrixV().col(which);
                    int best = 0;
                    for (int i = 1; i < K; ++i)
                        if (std::abs(v[i]) > std::abs(v[best]))
                            best = i;
                    if (best + 1 != k)
                        bp.partner_mode = best + 1;
                }
            }
            out.push_back(bp);
        }
    }
    return out;
}

/// First- and second-order branch coefficients at a simple bifurcation
/// point.  `lambda_dd0_series` follows the flat-state series formulas;
/// `lambda_dd0` adds the second-harmonic feedback term of the full
/// second-order reduction and is what the continued branch realizes.
struct BranchDirection {
    double lambda_d0 = 0.0;
    double lambda_dd0_series = 0.0;
    double lambda_dd0 = 0.0;
};

inline BranchDirection branch_direction(const BifurcationPoint& bp, const WaveParams& p,
                                        const StripGridPair& grids, const SolveOptions& solve = {}) {
    detail::require(bp.kernel_dim == 1, "branch_direction: kernel must be one-dimensional");
    const int k = bp.k;
    const double lam = bp.lambda_star;
    const double dlam = dispersion_dlambda(k, lam, p);
    const double scale = (2.0 / tk(k)) * (std::abs(lam) + std::abs(p.gamma) * tk(k) + 1.0);
    if (std::abs(dlam) < 1e-10 * scale)
        throw SolverError("transversality failure: dD_k/dlambda vanishes at the bifurcation point");

    const CosineBasis basis(std::max(4 * k + 4, 8));
    const SurfaceProfile mode = SurfaceProfile::single_mode(k, 1.0);
    BranchDirection dir;
    dir.lambda_d0 = -mode_projection(second_derivative(mode, mode, lam, p, basis), k, basis) / (2.0 * dlam);
    dir.lambda_dd0_series = mode_projection(third_derivative(mode, lam, p, basis), k, basis) / (-3.0 * dlam);

    // Full second-order reduction: the composed Hessian and third derivative
    // by central differences, plus the second-harmonic response
    //   v = -(F''[x,x])_{2k} / D_{2k} cos(2kq).
    // The quotients divide by eps^2 and eps^3, so the fields need direct
    // machine-accurate solves.
    detail::require(2 * k <= grids.lower.mh() - 1, "branch_direction: grid cannot resolve the 2k harmonic");
    SolveOptions exact = solve;
    exact.method = SolveMethod::direct;
    auto F = [&](const SurfaceProfile& eta) {
        ExtendedState st;
        st.eta = eta;
        st.lambda = lam;
        return assemble_residual(st, p, grids, exact).coeffs;
    };
    const double e2 = 1e-4;
    const Vec zero = F(SurfaceProfile());
    const Vec hess =
        (F(SurfaceProfile::single_mode(k, e2)) + F(SurfaceProfile::single_mode(k, -e2)) - 2.0 * zero) / (e2 * e2);
    const double e3 = 1e-3;
    const Vec third = (F(SurfaceProfile::single_mode(k, 2 * e3)) - 2.0 * F(SurfaceProfile::single_mode(k, e3)) +
                       2.0 * F(SurfaceProfile::single_mode(k, -e3)) - F(SurfaceProfile::single_mode(k, -2 * e3))) /
                      (2.0 * e3 * e3 * e3);
    const double v2 = -hess[2 * k] / dispersion(2 * k, lam, p);
    const double ea = 1e-4;
    const SurfaceProfile xk = SurfaceProfile::single_mode(k, ea);
    const SurfaceProfile x2k = SurfaceProfile::single_mode(2 * k, ea);
    const Vec cross = (F(xk.with_mode_increment(2 * k, ea)) - F(xk.with_mode_increment(2 * k, -ea)) -
                       F(SurfaceProfile::single_mode(k, -ea).with_mode_increment(2 * k, ea)) +
                       F(SurfaceProfile::single_mode(k, -ea).with_mode_increment(2 * k, -ea))) /
                      (4.0 * ea * ea);
    dir.lambda_dd0 = (third[k] + 3.0 * v2 * cross[k]) / (-3.0 * dlam);
    return dir;
}

/// Newton-correct the branch point with kernel amplitude pinned to s.
/// `warm` provides the predictor; when absent the tangent predictor
/// s cos(kq) at lambda* is used.
inline std::optional<BranchPoint> solve_at_amplitude(const BifurcationPoint& bp, double s, const WaveParams& p,
                                                     const StripGridPair& grids, const ContinuationOptions& opts = {},
                                                     const BranchPoint* warm = nullptr) {
    ContinuationProblem prob(p, grids, opts);
    Vec X;
    if (warm) {
        X = prob.pack(warm->state);
    } else {
        ExtendedState st;
        st.eta = SurfaceProfile::single_mode(bp.k, s);
        st.lambda = bp.lambda_star;
        X = prob.pack(st);
    }
    X[bp.k - 1] = s;
    const auto rep = prob.newton_pinned(X, bp.k - 1, s);
    if (!rep.converged)
        return std::nullopt;
    BranchPoint pt;
    pt.s = s;
    pt.state = prob.unpack(X);
    pt.residual_norm = prob.residual_norm_values(X);
    const auto diag = detail::block_diagnostics(rep.jacobian, prob.mode_count());
    pt.sigma_min = diag.sigma_min;
    pt.det_sign = diag.det_sign;
    if (opts.track_eigenvalue)
        pt.tracked_eigenvalue =
            detail::tracked_mode_eigenvalue(rep.jacobian.block(1, 0, prob.mode_count(), prob.mode_count()), bp.k)
                .value;
    return pt;
}

inline void extend_branch(Branch& branch, const WaveParams& p, const StripGridPair& grids,
                          const ContinuationOptions& opts);

/// Continue the branch emanating from a simple bifurcation point by
/// pseudo-arclength with a tangent predictor, step halving on corrector
/// failure and doubling after three easy steps.
inline Branch continue_branch(const BifurcationPoint& bp, const WaveParams& p, const StripGridPair& grids,
                              const ContinuationOptions& opts = {}) {
    if (bp.kernel_dim != 1)
        throw SolverError(
            "continue_branch: two-dimensional kernel; continue at a perturbed field strength instead");
    ContinuationProblem prob(p, grids, opts);
    const int K = prob.mode_count();
    detail::require(bp.k <= K, "continue_branch: kernel mode exceeds the retained mode count");

    Branch branch;
    branch.origin = bp;

    auto record = [&](const Vec& X, const ContinuationProblem::NewtonReport& rep) {
        BranchPoint pt;
        pt.s = X[bp.k - 1];
        pt.state = prob.unpack(X);
        pt.residual_norm = prob.residual_norm_values(X);
        const auto diag = detail::block_diagnostics(rep.jacobian, K);
        pt.sigma_min = diag.sigma_min;
        pt.sigma_median = diag.sigma_median;
        pt.det_sign = diag.det_sign;
        const Mat eta_block = rep.jacobian.block(1, 0, K, K);
        pt.reduced_det_sign = detail::reduced_determinant_sign(eta_block, bp.k);
        if (opts.track_eigenvalue)
            pt.tracked_eigenvalue = detail::tracked_mode_eigenvalue(eta_block, bp.k).value;
        branch.points.push_back(pt);
        return pt;
    };

    // origin point
    ExtendedState trivial;
    trivial.lambda = bp.lambda_star;
    Vec X0 = prob.pack(trivial);
    {
        ContinuationProblem::NewtonReport rep;
        rep.converged = true;
        rep.jacobian = prob.jacobian(X0);
        rep.residual_norm = prob.residual_norm_values(X0);
        record(X0, rep);
    }

    if (opts.smax <= 0.0)
        return branch;

    // first step: pinned amplitude, halving on failure
    double ds = std::min(std::abs(opts.ds0), opts.smax) * (opts.direction >= 0 ? 1.0 : -1.0);
    Vec X = X0;
    bool first_ok = false;
    for (int half = 0; half <= opts.max_halvings && !first_ok; ++half) {
        Vec Xtry = X0;
        Xtry[bp.k - 1] = ds;
        const auto rep = prob.newton_pinned(Xtry, bp.k - 1, ds);
        if (rep.converged) {
            X = Xtry;
            record(X, rep);
            first_ok = true;
        } else {
            ds *= 0.5;
        }
    }
    if (!first_ok) {
        BranchEvent ev;
        ev.kind = EventKind::step_failure;
        ev.s = 0.0;
        ev.note = "first corrector step failed";
        branch.events.push_back(ev);
        return branch;
    }

    extend_branch(branch, p, grids, opts);
    return branch;
}

/// Extend a branch with at least two points by pseudo-arclength until
/// |s| reaches opts.smax or a failure event.  continue_branch and dataset
/// resumption both end here.
inline void extend_branch(Branch& branch, const WaveParams& p, const StripGridPair& grids,
                          const ContinuationOptions& opts) {
    detail::require(branch.points.size() >= 2, "extend_branch: need two seed points for the secant");
    ContinuationProblem prob(p, grids, opts);
    const int K = prob.mode_count();
    const int k = branch.origin.k;

    auto record = [&](const Vec& X, const ContinuationProblem::NewtonReport& rep) {
        BranchPoint pt;
        pt.s = X[k - 1];
        pt.state = prob.unpack(X);
        pt.residual_norm = prob.residual_norm_values(X);
        const auto diag = detail::block_diagnostics(rep.jacobian, K);
        pt.sigma_min = diag.sigma_min;
        pt.sigma_median = diag.sigma_median;
        pt.det_sign = diag.det_sign;
        const Mat eta_block = rep.jacobian.block(1, 0, K, K);
        pt.reduced_det_sign = detail::reduced_determinant_sign(eta_block, k);
        if (opts.track_eigenvalue)
            pt.tracked_eigenvalue = detail::tracked_mode_eigenvalue(eta_block, k).value;
        branch.points.push_back(pt);
    };

    Vec X = prob.pack(branch.points.back().state);
    Vec Xprev = prob.pack(branch.points[branch.points.size() - 2].state);
    int easy = 0;
    double step = std::abs(X[k - 1] - Xprev[k - 1]);
    if (!(step > 0.0))
        step = opts.ds0;
    step = std::clamp(step, opts.ds_min, opts.ds_max);
    for (int stepno = 0; stepno < opts.max_steps; ++stepno) {
        if (std::abs(X[k - 1]) >= opts.smax)
            break;
        Vec secant = (X - Xprev).normalized();
        bool accepted = false;
        for (int half = 0; half <= opts.max_halvings; ++half) {
            const Vec Xpred = X + step * secant;
            Vec Xtry = Xpred;
            const auto rep = prob.newton_bordered(Xtry, secant, Xpred);
            if (rep.converged && prob.unpack(Xtry).eta.sup_norm() < 0.999) {
                Xprev = X;
                X = Xtry;
                record(X, rep);
                accepted = true;
                easy = rep.iterations <= 3 ? easy + 1 : 0;
                if (easy >= 3 && step < opts.ds_max) {
                    step = std::min(2.0 * step, opts.ds_max);
                    easy = 0;
                }
                break;
            }
            step *= 0.5;
            easy = 0;
            if (step < opts.ds_min)
                break;
        }
        if (!accepted) {
            BranchEvent ev;
            ev.kind = prob.unpack(X).eta.sup_norm() >= 0.999 ? EventKind::domain_breach : EventKind::step_failure;
            ev.s = X[k - 1];
            ev.state = prob.unpack(X);
            ev.note = "continuation stopped before smax";
            branch.events.push_back(ev);
            break;
        }
    }
}

/// Scan a computed branch for kernel singularities: determinant sign
/// changes of the (eta, q0) block, or dips of its smallest singular value
/// below singular_dip * median.  Sign changes are refined by bisection in
/// the amplitude coordinate.
inline std::vector<BranchEvent> detect_singularities(const Branch& branch, const WaveParams& p,
                                                     const StripGridPair& grids,
                                                     const ContinuationOptions& opts = {}) {
    std::vector<BranchEvent> events;
    if (branch.points.size() < 2)
        return events;
    ContinuationProblem prob(p, grids, opts);
    const int K = prob.mode_count();
    const int k = branch.origin.k;

    auto make_event = [&](const Vec& X, const detail::BlockDiagnostics& d, const char* note) {
        BranchEvent ev;
        ev.kind = EventKind::kernel_singularity;
        ev.s = X[k - 1];
        ev.state = prob.unpack(X);
        ev.null_vector = d.null_vector;
        ev.dominant_mode = d.dominant_mode;
        ev.sigma_min = d.sigma_min;
        ev.sigma_median = d.sigma_median;
        ev.note = note;
        return ev;
    };

    for (size_t i = 1; i < branch.points.size(); ++i) {
        const BranchPoint& a = branch.points[i - 1];
        const BranchPoint& b = branch.points[i];
        if (a.reduced_det_sign * b.reduced_det_sign >= 0.0)
            continue;

        // bisection on the pinned amplitude between the two points
        double slo = a.s, shi = b.s;
        const double sgnlo = a.reduced_det_sign;
        Vec Xlo = prob.pack(a.state), Xhi = prob.pack(b.state);
        Vec Xev = Xhi;
        auto best = detail::block_diagnostics(prob.jacobian(Xhi), K);
        for (int it = 0; it < 60 && std::abs(shi - slo) > 1e-10; ++it) {
            const double smid = 0.5 * (slo + shi);
            Vec Xmid = 0.5 * (Xlo + Xhi);
            Xmid[k - 1] = smid;
            const auto rep = prob.newton_pinned(Xmid, k - 1, smid);
            if (!rep.converged)
                break;
            const double rsign = detail::reduced_determinant_sign(rep.jacobian.block(1, 0, K, K), k);
            if (rsign * sgnlo > 0.0) {
                slo = smid;
                Xlo = Xmid;
            } else {
                shi = smid;
                Xhi = Xmid;
                best = detail::block_diagnostics(rep.jacobian, K);
                Xev = Xmid;
            }
        }
        events.push_back(make_event(Xev, best, "determinant sign change"));
    }

    // grazing dips without a sign change, from the stored diagnostics;
    // dips carried by the branch's own kernel mode are the parent
    // bifurcation, not a new singularity
    for (size_t i = 1; i < branch.points.size(); ++i) {
        const BranchPoint& pt = branch.points[i];
        if (pt.sigma_min >= opts.singular_dip * pt.sigma_median)
            continue;
        bool near_existing = false;
        for (const auto& ev : events)
            if (std::abs(ev.s - pt.s) < 4.0 * opts.ds_max)
                near_existing = true;
        if (near_existing)
            continue;
        Vec X = prob.pack(pt.state);
        const auto d = detail::block_diagnostics(prob.jacobian(X), K);
        if (d.dominant_mode == k)
            continue;
        events.push_back(make_event(X, d, "singular value dip"));
    }
    return events;
}

/// Resonant mode pair certificate: the resonance field strength, the
/// shared plus-speed, and the two nondegeneracy determinants.
struct ResonanceRecord {
    int k = 0;
    int l = 0;
    double e_field = 0.0;     ///< E_{k,l} (a squared field strength)
    double lambda_star = 0.0; ///< shared speed of the coinciding pair
    double det1 = 0.0;
    double det2 = 0.0;
};

inline ResonanceRecord nondegeneracy_checks(int k, int l, const WaveParams& p) {
    const auto e = resonance_field(k, l, p);
    detail::require(e.has_value(), "nondegeneracy_checks: the resonance condition does not hold");
    WaveParams pr = p;
    pr.e0 = std::sqrt(*e);

    ResonanceRecord rec;
    rec.k = k;
    rec.l = l;
    rec.e_field = *e;
    const auto sk = bifurcation_speeds(k, pr);
    detail::require(sk.has_value(), "nondegeneracy_checks: no real speeds at the resonance field");
    rec.lambda_star = p.gamma > 0 ? sk->plus : sk->minus;

    const double dl_k = dispersion_dlambda(k, rec.lambda_star, pr);
    const double dl_l = dispersion_dlambda(l, rec.lambda_star, pr);
    const double de_k = dispersion_de0(k, pr);
    const double de_l = dispersion_de0(l, pr);
    rec.det1 = dl_k * de_l - de_k * dl_l;

    const CosineBasis basis(std::max(4 * std::max(k, l) + 4, 8));
    const SurfaceProfile xk = SurfaceProfile::single_mode(k, 1.0);
    const SurfaceProfile xl = SurfaceProfile::single_mode(l, 1.0);
    const double fkk_k = mode_projection(second_derivative(xk, xk, rec.lambda_star, pr, basis), k, basis);
    const double fkl_l = mode_projection(second_derivative(xk, xl, rec.lambda_star, pr, basis), l, basis);
    rec.det2 = dl_k * fkl_l - fkk_k * dl_l;

    const double scale1 = std::abs(dl_k * de_l) + std::abs(de_k * dl_l);
    const double scale2 = std::abs(dl_k * fkl_l) + std::abs(fkk_k * dl_l) + 1e-300;
    if (std::abs(rec.det1) < 1e-10 * scale1 || std::abs(rec.det2) < 1e-10 * scale2)
        throw SolverError("degenerate resonance: a nondegeneracy determinant vanishes");
    return rec;
}

struct SwitchOptions {
    double mode_threshold = 1e-4;  ///< required injected-mode amplitude
    int points = 8;                ///< secondary points to collect
    double step = 1e-3;
    ContinuationOptions continuation{};
};

/// Branch switch at a kernel singularity: perturb along the attached null
/// vector, correct with the injected mode pinned, then continue the
/// secondary branch by pseudo-arclength.
inline Branch switch_branch(const BranchEvent& event, const BifurcationPoint& origin, const WaveParams& p,
                            const StripGridPair& grids, const SwitchOptions& sw = {}) {
    detail::require(event.kind == EventKind::kernel_singularity, "switch_branch: event carries no null vector");
    const ContinuationOptions& opts = sw.continuation;
    ContinuationProblem prob(p, grids, opts);
    const int K = prob.mode_count();
    const int l = event.dominant_mode;
    detail::require(l >= 1 && l <= K, "switch_branch: null vector mode out of range");

    Branch secondary;
    secondary.origin = origin;
    secondary.kind = BranchKind::secondary;
    secondary.secondary_mode = l;

    const Vec Xev = prob.pack(event.state);
    Vec null_dir = Vec::Zero(prob.dim());
    null_dir.head(K + 1) = event.null_vector;
    null_dir.normalize();
    if (null_dir[l - 1] < 0.0)
        null_dir = -null_dir;

    const double eps0 = 10.0 * std::sqrt(opts.tol);
    Vec X;
    bool ok = false;
    ContinuationProblem::NewtonReport rep0;
    for (double factor : {1.0, 3.0, 10.0}) {
        for (double sgn : {1.0, -1.0}) {
            Vec Xtry = Xev + sgn * factor * eps0 * null_dir;
            const double pin = Xtry[l - 1];
            if (std::abs(pin) < sw.mode_threshold)
                continue;
            const auto rep = prob.newton_pinned(Xtry, l - 1, pin);
            if (rep.converged && std::abs(Xtry[l - 1]) >= sw.mode_threshold) {
                X = Xtry;
                rep0 = rep;
                ok = true;
                break;
            }
        }
        if (ok)
            break;
    }
    if (!ok)
        throw SolverError("switch failed: corrector fell back onto the primary branch");

    auto record = [&](const Vec& Xc, const ContinuationProblem::NewtonReport& rep) {
        BranchPoint pt;
        pt.s = Xc[l - 1];
        pt.state = prob.unpack(Xc);
        pt.residual_norm = prob.residual_norm_values(Xc);
        const auto diag = detail::block_diagnostics(rep.jacobian, K);
        pt.sigma_min = diag.sigma_min;
        pt.sigma_median = diag.sigma_median;
        pt.det_sign = diag.det_sign;
        const Mat eta_block = rep.jacobian.block(1, 0, K, K);
        pt.reduced_det_sign = detail::reduced_determinant_sign(eta_block, l);
        if (opts.track_eigenvalue)
            pt.tracked_eigenvalue = detail::tracked_mode_eigenvalue(eta_block, l).value;
        secondary.points.push_back(pt);
    };
    record(X, rep0);

    Vec Xprev = Xev;
    double step = sw.step;
    while (static_cast<int>(secondary.points.size()) < sw.points) {
        Vec secant = (X - Xprev).normalized();
        bool accepted = false;
        for (int half = 0; half <= opts.max_halvings; ++half) {
            const Vec Xpred = X + step * secant;
            Vec Xtry = Xpred;
            const auto rep = prob.newton_bordered(Xtry, secant, Xpred);
            if (rep.converged && std::abs(Xtry[l - 1]) >= sw.mode_threshold &&
                prob.unpack(Xtry).eta.sup_norm() < 0.999) {
                Xprev = X;
                X = Xtry;
                record(X, rep);
                accepted = true;
                break;
            }
            step *= 0.5;
            if (step < opts.ds_min)
                break;
        }
        if (!accepted)
            break;
    }
    return secondary;
}

/// Minimal period 2pi/g of a profile, with g the gcd of the modes whose
/// amplitude exceeds the threshold; 0 when no mode is active.
inline int profile_period_divisor(const SurfaceProfile& eta, double threshold = 1e-10) {
    int g = 0;
    for (int n = 1; n <= eta.max_mode(); ++n)
        if (std::abs(eta.coeff(n)) > threshold)
            g = g == 0 ? n : std::gcd(g, n);
    return g;
}

/// Outcome of the local-uniqueness probe around a simple bifurcation
/// point: random Newton starts in the trust region must land either on
/// the trivial state or on the computed branch.
struct UniquenessProbe {
    int to_trivial = 0;
    int to_branch = 0;
    int elsewhere = 0;
    int not_converged = 0;
    double max_branch_distance = 0.0;
};

/// Random Newton starts at pinned speed inside the trust region.  Odd
/// trials perturb off computed branch points so both basins are covered;
/// even trials draw freely around the trivial state.
inline UniquenessProbe probe_local_uniqueness(const BifurcationPoint& bp, const WaveParams& p,
                                              const StripGridPair& grids, int samples, unsigned seed,
                                              double trust_lambda = 2e-4, double trust_eta = 1.2e-2,
                                              ContinuationOptions opts = {}) {
    opts.max_newton = std::max(opts.max_newton, 25);
    ContinuationProblem prob(p, grids, opts);
    const int K = prob.mode_count();
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    UniquenessProbe out;
    for (int trial = 0; trial < samples; ++trial) {
        Vec X = Vec::Zero(prob.dim());
        double lambda = bp.lambda_star + trust_lambda * unit(rng);
        if (trial % 2 == 1) {
            const double s0 = trust_eta * (0.25 + 0.75 * std::abs(unit(rng))) * (unit(rng) >= 0 ? 1 : -1);
            if (const auto near = solve_at_amplitude(bp, s0, p, grids, opts)) {
                X = prob.pack(near->state);
                lambda = near->state.lambda;
                for (int n = 0; n < K; ++n)
                    X[n] += 0.3 * std::abs(s0) * unit(rng) / (1.0 + n * n);
            }
        } else {
            for (int n = 0; n < K; ++n)
                X[n] = trust_eta * unit(rng) / (1.0 + n * n);  // rough spectral decay
        }
        X[prob.lambda_index()] = lambda;
        const auto rep = prob.newton_pinned(X, prob.lambda_index(), lambda, /*damped=*/true);
        if (!rep.converged) {
            ++out.not_converged;
            continue;
        }
        // near the bifurcation point a trivial-limit candidate keeps
        // kernel-mode residue of order tol / |D_k|; classify against the
        // same 1e-6 the branch-distance check uses
        const double amp = X.head(K).cwiseAbs().maxCoeff();
        if (amp <= 1e-6) {
            ++out.to_trivial;
            continue;
        }
        // reconstruct the branch point at this amplitude from the cold
        // tangent predictor, independently of the candidate
        const double s = X[bp.k - 1];
        const auto on_branch = solve_at_amplitude(bp, s, p, grids, opts);
        if (!on_branch) {
            ++out.elsewhere;
            continue;
        }
        const Vec Xb = prob.pack(on_branch->state);
        const double dist = (X - Xb).cwiseAbs().maxCoeff();
        out.max_branch_distance = std::max(out.max_branch_distance, dist);
        if (dist <= 1e-6)
            ++out.to_branch;
        else
            ++out.elsewhere;
    }
    return out;
}

}  // namespace ehd
