// Even, zero-mean periodic interface profiles as finite cosine series.

#pragma once

#include <Eigen/Dense>

#include "ehd/common.hpp"
#include "ehd/grid.hpp"

namespace ehd {

/// eta(q) = sum_{n>=1} c_n cos(n q).  Evenness and zero mean hold by
/// construction; derivatives are taken analytically on the series (the
/// curvature term of the interface condition is the stiffest consumer).
class SurfaceProfile {
  public:
    SurfaceProfile() : c_(Eigen::VectorXd::Zero(2)) {}

    /// coeffs[i] is the coefficient of cos((i+1) q).
    static SurfaceProfile from_modes(const Vec& coeffs) {
        SurfaceProfile eta;
        eta.c_ = Vec::Zero(coeffs.size() + 1);
        eta.c_.tail(coeffs.size()) = coeffs;
        return eta;
    }

    static SurfaceProfile single_mode(int k, double amplitude) {
        detail::require_mode(k);
        SurfaceProfile eta;
        eta.c_ = Vec::Zero(k + 1);
        eta.c_[k] = amplitude;
        return eta;
    }

    int max_mode() const { return static_cast<int>(c_.size()) - 1; }

    double coeff(int n) const {
        detail::require_mode(n);
        return n <= max_mode() ? c_[n] : 0.0;
    }

    /// Coefficients of modes 1..count (zero-padded).
    Vec modes(int count) const {
        Vec out = Vec::Zero(count);
        const int m = std::min(count, max_mode());
        for (int n = 1; n <= m; ++n)
            out[n - 1] = c_[n];
        return out;
    }

    SurfaceProfile with_mode_increment(int n, double delta) const {
        detail::require_mode(n);
        SurfaceProfile out = *this;
        if (n > out.max_mode()) {
            Vec grown = Vec::Zero(n + 1);
            grown.head(out.c_.size()) = out.c_;
            out.c_ = grown;
        }
        out.c_[n] += delta;
        return out;
    }

    double eval(double q) const {
        double s = 0.0;
        for (int n = 1; n <= max_mode(); ++n)
            s += c_[n] * std::cos(n * q);
        return s;
    }

    double deriv(double q) const {
        double s = 0.0;
        for (int n = 1; n <= max_mode(); ++n)
            s -= c_[n] * n * std::sin(n * q);
        return s;
    }

    double deriv2(double q) const {
        double s = 0.0;
        for (int n = 1; n <= max_mode(); ++n)
            s -= c_[n] * n * n * std::cos(n * q);
        return s;
    }

    /// Max of |eta| sampled on a grid four times finer than the top mode.
    double sup_norm() const {
        const int samples = 8 * std::max(max_mode(), 4);
        double m = 0.0;
        for (int j = 0; j <= samples; ++j)
            m = std::max(m, std::abs(eval(pi * j / samples)));
        return m;
    }

    bool fits(const CosineBasis& basis) const {
        for (int n = basis.mh + 1; n <= max_mode(); ++n)
            if (c_[n] != 0.0)
                return false;
        return true;
    }

    /// Nodal values of eta, eta', eta'' on the basis half-grid.  The series
    /// is differentiated analytically (multiply by -n, -n^2), never by
    /// grid differencing.
    void sample(const CosineBasis& basis, Vec& vals, Vec& d1, Vec& d2) const {
        detail::require(fits(basis), "SurfaceProfile: retained mode exceeds grid capacity");
        const int n = basis.mh + 1;
        Vec c = Vec::Zero(n), cd1 = Vec::Zero(n), cd2 = Vec::Zero(n);
        const int m = std::min(max_mode(), basis.mh);
        for (int j = 1; j <= m; ++j) {
            c[j] = c_[j];
            cd1[j] = -c_[j] * j;  // sine-series coefficients of eta'
            cd2[j] = -c_[j] * j * j;
        }
        vals = basis.C * c;
        d1 = basis.S * cd1;
        d2 = basis.C * cd2;
    }

  private:
    Vec c_;  // c_[n] multiplies cos(n q); c_[0] stays zero
};

}  // namespace ehd
