// Formal (linearized) stability along the trivial branch and along
// bifurcating branches.  The classification tracks the crossing
// eigenvalue: the spectrum member whose eigenvector stays aligned with
// the kernel mode cos(kq).  The full trivial spectrum {D_n} is reported
// alongside for transparency.

#pragma once

#include <map>
#include <vector>

#include "ehd/bifurcation.hpp"
#include "ehd/params.hpp"
#include "ehd/residual.hpp"

namespace ehd {

enum class Stability { formally_stable, unstable, neutral };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::formally_stable: return "formally_stable";
        case Stability::unstable: return "unstable";
        default: return "neutral";
    }
}

struct StabilityLabel {
    Stability label = Stability::neutral;
    double tracked_eigenvalue = 0.0;
};

inline StabilityLabel classify_eigenvalue(double mu, double neutral_band = 1e-10) {
    if (mu < -neutral_band)
        return {Stability::formally_stable, mu};
    if (mu > neutral_band)
        return {Stability::unstable, mu};
    return {Stability::neutral, mu};
}

/// Trivial-branch spectrum: mode n carries the eigenvalue D_n(lambda, E0).
struct SpectrumReport {
    double lambda = 0.0;
    std::vector<double> eigenvalues;  ///< index n-1 holds mode n
    int crossing_mode = 1;            ///< mode with the smallest |D_n|
};

inline SpectrumReport trivial_spectrum(double lambda, const WaveParams& p, int nmax) {
    detail::require(nmax >= 1, "trivial_spectrum: nmax must be >= 1");
    SpectrumReport rep;
    rep.lambda = lambda;
    rep.eigenvalues.resize(nmax);
    for (int n = 1; n <= nmax; ++n) {
        rep.eigenvalues[n - 1] = dispersion(n, lambda, p);
        if (std::abs(rep.eigenvalues[n - 1]) < std::abs(rep.eigenvalues[rep.crossing_mode - 1]))
            rep.crossing_mode = n;
    }
    return rep;
}

/// Slope of the crossing eigenvalue in lambda at a simple bifurcation
/// point: negative at plus-points, positive at minus-points.
inline double crossing_slope(const BifurcationPoint& bp, const WaveParams& p) {
    detail::require(bp.kernel_dim == 1, "crossing_slope: kernel must be one-dimensional");
    const double disc = speed_discriminant(bp.k, p);
    const double t = tk(bp.k);
    const double scale = 0.25 * p.gamma * p.gamma * t * t + (p.g + p.sigma * bp.k * bp.k) * t + p.eps0 * p.e0 * p.e0;
    if (std::abs(disc) <= 1e-14 * scale)
        throw std::domain_error("crossing_slope: degenerate double root");
    return dispersion_dlambda(bp.k, bp.lambda_star, p);
}

/// Classify the trivial branch on sampled speeds bracketing one simple
/// bifurcation point.  Throws if another bifurcation speed of any mode
/// n <= nmax lies inside the range.
inline std::map<double, StabilityLabel> classify_trivial(double lo, double hi, int samples,
                                                         const BifurcationPoint& bp, const WaveParams& p,
                                                         int nmax = 16, double neutral_band = 1e-10) {
    detail::require(lo < hi && samples >= 2, "classify_trivial: need lo < hi and at least two samples");
    detail::require(lo < bp.lambda_star && bp.lambda_star < hi, "classify_trivial: range must bracket the point");
    for (int n = 1; n <= nmax; ++n) {
        std::optional<BifurcationSpeeds> s;
        try {
            s = bifurcation_speeds(n, p);
        } catch (const std::domain_error&) {
            continue;
        }
        if (!s)
            continue;
        for (double root : {s->plus, s->minus}) {
            if (std::abs(root - bp.lambda_star) < 1e-12 * std::max(1.0, std::abs(root)))
                continue;
            if (root > lo && root < hi)
                throw std::invalid_argument("classify_trivial: range contains multiple bifurcation points");
        }
    }
    std::map<double, StabilityLabel> out;
    for (int i = 0; i < samples; ++i) {
        const double lambda = lo + (hi - lo) * i / (samples - 1);
        out[lambda] = classify_eigenvalue(dispersion(bp.k, lambda, p), neutral_band);
    }
    return out;
}

/// Crossing eigenvalue at one branch point: eigenvalue of the discrete
/// eta block (lambda and q0 frozen) whose eigenvector overlaps cos(kq).
inline double branch_eigenvalue(const BranchPoint& point, const BifurcationPoint& origin, const WaveParams& p,
                                const StripGridPair& grids, const ContinuationOptions& opts = {}) {
    ContinuationProblem prob(p, grids, opts);
    const int K = prob.mode_count();
    const EtaJacobian J = eta_jacobian(point.state, p, grids, K, opts.solve);
    const auto tracked = detail::tracked_mode_eigenvalue(J.eta_block(), origin.k);
    if (tracked.overlap < opts.eigen_overlap_min)
        throw SolverError("tracking lost: no eigenvector overlaps the kernel mode");
    return tracked.value;
}

/// Per-point labels along a continued branch from the stored tracked
/// eigenvalue, with a neutral band around zero.
inline std::vector<StabilityLabel> classify_branch(const Branch& branch, double neutral_band = 1e-10) {
    std::vector<StabilityLabel> out;
    out.reserve(branch.points.size());
    for (const auto& pt : branch.points)
        out.push_back(classify_eigenvalue(pt.tracked_eigenvalue, neutral_band));
    return out;
}

}  // namespace ehd
