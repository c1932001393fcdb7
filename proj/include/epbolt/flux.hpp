#pragma once

#include <cmath>
#include <stdexcept>

#include "epbolt/grid.hpp"

namespace epbolt {

/// Monotone two-point flux family G(s,t,u) = s g(u) - t (g(u) - u) built
/// from a Lipschitz regularization g of u -> max(u, 0).
///
/// The regularization is the quadratic blend of width w:
///     g(u) = u                  for u >= w,
///     g(u) = (u + w)^2 / (4 w)  for -w < u < w,
///     g(u) = 0                  for u <= -w,
/// so g(0) = w/4, g'(0) = 1/2 and Lip(g) = 1. The divided difference
/// ghat(u) = (g(u) - g(0))/u extends continuously by ghat(0) = g'(0)
/// and is C^1 on the whole line.
class FluxScheme {
public:
    /// Scheme with regularization width tied to the grid spacing.
    static FluxScheme for_grid(const PeriodicGrid& grid) { return FluxScheme(grid.dx()); }

    /// Scheme with a free regularization width.
    static FluxScheme with_width(double width) { return FluxScheme(width); }

    double width() const noexcept { return w_; }
    double g0() const noexcept { return w_ / 4.0; }
    double gprime0() const noexcept { return 0.5; }
    double lipschitz() const noexcept { return 1.0; }

    double g(double u) const noexcept {
        if (u >= w_) return u;
        if (u <= -w_) return 0.0;
        const double s = u + w_;
        return s * s / (4.0 * w_);
    }

    double ghat(double u) const noexcept {
        if (std::abs(u) < kZeroBranch) return 0.5;
        if (std::abs(u) < w_) return (u + 2.0 * w_) / (4.0 * w_);
        return (g(u) - g0()) / u;
    }

    double ghat_prime(double u) const noexcept {
        if (std::abs(u) < w_) return 1.0 / (4.0 * w_);
        return w_ / (4.0 * u * u);
    }

    double G(double s, double t, double u) const noexcept {
        const double gu = g(u);
        return s * gu - t * (gu - u);
    }

    /// Force density rho_tilde(s,t,u) = (G(s,t,u) - G(s,t,0))/u extended
    /// continuously through u = 0; equals t - (t - s) ghat(u).
    double rho_tilde(double s, double t, double u) const noexcept {
        return t - (t - s) * ghat(u);
    }

    double rho_tilde_du(double s, double t, double u) const noexcept {
        return -(t - s) * ghat_prime(u);
    }

private:
    explicit FluxScheme(double width) : w_(width) {
        if (!(width > 0.0)) {
            throw std::invalid_argument("FluxScheme: regularization width must be positive");
        }
    }

    // Below this the divided difference (g(u)-g(0))/u is evaluated by its
    // derivative branch; the velocity scales of interest are far larger.
    static constexpr double kZeroBranch = 1e-14;

    double w_;
};

/// F_{i+1/2} = G(rho_i, rho_{i+1}, u_{i+1/2}).
inline DualField mass_flux(const FluxScheme& scheme, const PrimalField& rho, const DualField& u) {
    require_same_grid(rho, u, "mass_flux");
    DualField f(rho.grid());
    for (int i = 0; i < rho.size(); ++i) {
        f[i] = scheme.G(rho[i], rho[i + 1], u[i]);
    }
    return f;
}

/// Flux at primal points, F_i = (F_{i+1/2} + F_{i-1/2}) / 2.
inline PrimalField dual_flux(const DualField& f) {
    PrimalField q(f.grid());
    for (int i = 0; i < f.size(); ++i) {
        q[i] = 0.5 * (f[i] + f[i - 1]);
    }
    return q;
}

/// rho_{i+1/2} = (rho_i + rho_{i+1}) / 2.
inline DualField dual_density(const PrimalField& rho) {
    DualField d(rho.grid());
    for (int i = 0; i < rho.size(); ++i) {
        d[i] = 0.5 * (rho[i] + rho[i + 1]);
    }
    return d;
}

/// Velocity at primal points, upwinded by the sign of the flux there:
/// u_i = v_{i-1/2} if F_i >= 0, else v_{i+1/2}.
inline PrimalField upwind_interface_velocity(const PrimalField& flux_at_centers,
                                             const DualField& v) {
    require_same_grid(flux_at_centers, v, "upwind_interface_velocity");
    PrimalField u(v.grid());
    for (int i = 0; i < v.size(); ++i) {
        u[i] = flux_at_centers[i] >= 0.0 ? v[i - 1] : v[i];
    }
    return u;
}

}  // namespace epbolt
