// Physical parameters and the closed-form algebra of the flat state:
// T_k, dispersion symbol D_k, bifurcation speeds, field admissibility,
// mode-resonance field strengths, trivial-state constants.
//
// Normalization throughout: fluid depth 1, period 2pi, density 1.

#pragma once

#include <cmath>
#include <optional>

#include "ehd/common.hpp"

namespace ehd {

/// Physical parameters of the two-layer configuration.  The liquid layer
/// occupies -1 < y < eta(x), the dielectric gas layer eta(x) < y < 1.
struct WaveParams {
    double g = 1.0;       ///< gravitational acceleration
    double sigma = 1.0;   ///< interface tension coefficient
    double gamma = 0.0;   ///< constant vorticity of the liquid layer
    double eps0 = 1.0;    ///< permittivity of the gas layer
    double e0 = 0.0;      ///< vertical electric field strength at the top electrode

    void validate() const {
        detail::require(std::isfinite(g) && g > 0.0, "WaveParams: g must be finite and > 0");
        detail::require(std::isfinite(sigma) && sigma >= 0.0, "WaveParams: sigma must be finite and >= 0");
        detail::require(std::isfinite(eps0) && eps0 > 0.0, "WaveParams: eps0 must be finite and > 0");
        detail::require(std::isfinite(gamma), "WaveParams: gamma must be finite");
        detail::require(std::isfinite(e0), "WaveParams: e0 must be finite");
    }
};

/// Flat-state stream and voltage constants for a given wave speed.
struct TrivialState {
    double lambda;  ///< horizontal wave speed
    double m;       ///< relative mass flux, gamma/2 - lambda
    double q;       ///< Bernoulli constant, lambda^2 - eps0*e0^2
};

/// T_k = tanh(k)/k.  Strictly positive and strictly decreasing in k.
inline double tk(int k) {
    detail::require_mode(k);
    return std::tanh(static_cast<double>(k)) / static_cast<double>(k);
}

/// Dispersion symbol of the flat-state linearization on cosine mode k:
///   D_k(lambda, E0) = -(2/T_k) (lambda^2 - gamma T_k lambda
///                               + eps0 E0^2 - (g + sigma k^2) T_k).
/// Quadratic in lambda with negative leading coefficient; its zeros are
/// the bifurcation speeds.
inline double dispersion(int k, double lambda, const WaveParams& p) {
    const double t = tk(k);
    return -(2.0 / t) * (lambda * lambda - p.gamma * t * lambda + p.eps0 * p.e0 * p.e0 - (p.g + p.sigma * k * k) * t);
}

/// d D_k / d lambda.
inline double dispersion_dlambda(int k, double lambda, const WaveParams& p) {
    const double t = tk(k);
    return -(2.0 / t) * (2.0 * lambda - p.gamma * t);
}

/// d D_k / d E0 (at the configured field strength p.e0).
inline double dispersion_de0(int k, const WaveParams& p) {
    return -(4.0 / tk(k)) * p.eps0 * p.e0;
}

/// Discriminant of D_k(., E0) = 0, i.e. (gamma^2/4) T_k^2 + (g + sigma k^2) T_k - eps0 E0^2.
inline double speed_discriminant(int k, const WaveParams& p) {
    const double t = tk(k);
    return 0.25 * p.gamma * p.gamma * t * t + (p.g + p.sigma * k * k) * t - p.eps0 * p.e0 * p.e0;
}

/// The pair of wave speeds at which mode k bifurcates from the flat state.
struct BifurcationSpeeds {
    double plus;
    double minus;
};

/// Roots lambda*_{k,+-} = (gamma/2) T_k +- sqrt(discriminant) of D_k = 0.
/// Empty when the discriminant is negative (field too strong for mode k).
/// Throws std::domain_error on a double root within tolerance: downstream
/// transversality degenerates there and no branch direction exists.
inline std::optional<BifurcationSpeeds> bifurcation_speeds(int k, const WaveParams& p) {
    const double t = tk(k);
    const double disc = speed_discriminant(k, p);
    const double scale =
        0.25 * p.gamma * p.gamma * t * t + (p.g + p.sigma * k * k) * t + p.eps0 * p.e0 * p.e0;
    if (std::abs(disc) <= 1e-14 * scale)
        throw std::domain_error("bifurcation_speeds: degenerate double root at mode k=" + std::to_string(k));
    if (disc < 0.0)
        return std::nullopt;
    const double half = 0.5 * p.gamma * t;
    const double root = std::sqrt(disc);
    return BifurcationSpeeds{half + root, half - root};
}

/// Certified check of (g + sigma k^2) T_k > eps0 E0^2 for ALL k >= 1.
/// Modes 1..kmax are checked explicitly.  The tail uses the monotone
/// split (g + sigma k^2) T_k = g T_k + sigma k tanh(k): the second term
/// is increasing, so once sigma k tanh(k) alone exceeds eps0 E0^2 every
/// larger mode passes.  With sigma = 0 the left side tends to zero and
/// a nonzero field always loses at large k.
inline bool admissible_field(const WaveParams& p, int kmax) {
    detail::require(kmax >= 1, "admissible_field: kmax must be >= 1");
    const double target = p.eps0 * p.e0 * p.e0;
    for (int k = 1; k <= kmax; ++k) {
        if ((p.g + p.sigma * k * k) * tk(k) <= target)
            return false;
    }
    if (target <= 0.0)
        return true;
    int k = kmax;
    while (p.sigma * k * std::tanh(static_cast<double>(k)) <= target) {
        if (p.sigma == 0.0)
            return false;
        ++k;
        if ((p.g + p.sigma * k * k) * tk(k) <= target)
            return false;
    }
    return true;
}

/// Electric field strength squared E_{k,l} at which the bifurcation
/// speeds of modes k and l coincide (both the + and the - pair).
/// Present only when
///   sigma gamma^2 (l^2-k^2) T_k T_l (T_k-T_l) > ((g+sigma k^2)T_k - (g+sigma l^2)T_l)^2,
/// which requires surface tension and enough vorticity.
inline std::optional<double> resonance_field(int k, int l, const WaveParams& p) {
    detail::require_mode(k);
    detail::require_mode(l);
    detail::require(k != l, "resonance_field: modes must differ");
    if (p.gamma == 0.0)
        throw std::invalid_argument("resonance_field: vorticity required (gamma = 0)");
    const double t_k = tk(k);
    const double t_l = tk(l);
    const double lhs = p.sigma * p.gamma * p.gamma * (static_cast<double>(l) * l - static_cast<double>(k) * k) *
                       t_k * t_l * (t_k - t_l);
    const double diff = (p.g + p.sigma * k * k) * t_k - (p.g + p.sigma * l * l) * t_l;
    const double rhs = diff * diff;
    if (lhs <= rhs)
        return std::nullopt;
    return (lhs - rhs) / ((t_k - t_l) * (t_k - t_l) * p.gamma * p.gamma * p.eps0);
}

/// Flat-state constants m(lambda) = gamma/2 - lambda and
/// Q(lambda) = lambda^2 - eps0 E0^2.
inline TrivialState trivial_constants(double lambda, const WaveParams& p) {
    return TrivialState{lambda, 0.5 * p.gamma - lambda, lambda * lambda - p.eps0 * p.e0 * p.e0};
}

/// Flat-state interface trace w_{k,p}(0) = ((gamma+lambda) T_k - lambda)/T_k of the
/// linearized stream response to a unit cos(kq) interface perturbation.
inline double stream_mode_trace(int k, double lambda, const WaveParams& p) {
    const double t = tk(k);
    return ((p.gamma + lambda) * t - lambda) / t;
}

/// Flat-state interface trace h_{k,p}(0) = ((1-T_k)/T_k) E0 of the linearized
/// voltage response to a unit cos(kq) interface perturbation.
inline double voltage_mode_trace(int k, const WaveParams& p) {
    const double t = tk(k);
    return (1.0 - t) / t * p.e0;
}

}  // namespace ehd
