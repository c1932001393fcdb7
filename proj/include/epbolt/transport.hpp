#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "epbolt/calculus.hpp"
#include "epbolt/cyclic_tridiagonal.hpp"
#include "epbolt/errors.hpp"
#include "epbolt/flux.hpp"
#include "epbolt/grid.hpp"

namespace epbolt {

/// Rows of the linear implicit continuity operator L(u): the system
/// L(u) rho_bar = rho^n encodes the backward-Euler mass update with the
/// flux family G. Column sums are exactly 1 (mass conservation) and L is
/// an M-matrix (positivity of the solve).
struct ContinuitySystem {
    std::vector<double> sub, diag, sup;
};

inline ContinuitySystem continuity_system(const FluxScheme& scheme, const DualField& u,
                                          double dt) {
    const int n = u.size();
    const double r = dt / u.dx();
    ContinuitySystem s;
    s.sub.resize(static_cast<std::size_t>(n));
    s.diag.resize(static_cast<std::size_t>(n));
    s.sup.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double up = u[i];       // u_{i+1/2}
        const double um = u[i - 1];   // u_{i-1/2}
        const double gp = scheme.g(up);
        const double gm = scheme.g(um);
        s.diag[static_cast<std::size_t>(i)] = 1.0 + r * (gp + gm - um);
        s.sup[static_cast<std::size_t>(i)] = -r * (gp - up);
        s.sub[static_cast<std::size_t>(i)] = -r * gm;
    }
    return s;
}

/// Solves the implicit continuity step: returns rho_bar > 0 with
/// (rho_bar_i - rho_n_i)/dt + (F_{i+1/2} - F_{i-1/2})/dx = 0 where
/// F_{i+1/2} = G(rho_bar_i, rho_bar_{i+1}, u_{i+1/2}).
inline PrimalField solve_continuity(const FluxScheme& scheme, const PrimalField& rho_n,
                                    const DualField& u, double dt) {
    require_same_grid(rho_n, u, "solve_continuity");
    if (!(dt > 0.0)) throw std::invalid_argument("solve_continuity: dt must be positive");
    for (double r : rho_n.values()) {
        if (!(r > 0.0)) throw std::domain_error("solve_continuity: density must be positive");
    }

    const int n = rho_n.size();
    const ContinuitySystem s = continuity_system(scheme, u, dt);
    CyclicTridiagonalSolver solver(n);
    PrimalField rho_bar(rho_n.grid());
    solver.solve(s.sub, s.diag, s.sup, rho_n.values(), rho_bar.values());

    for (int i = 0; i < n; ++i) {
        if (!(rho_bar[i] > 0.0)) {
            throw ConvergenceError("solve_continuity: M-matrix solve lost positivity", rho_bar[i],
                                   0);
        }
    }
    return rho_bar;
}

/// Newton solver for the implicit momentum step of the fixed-point map.
///
/// Residual at interface i+1/2, unknown v:
///   (rho_bar_{i+1/2} v_{i+1/2} - rho^n_{i+1/2} u^n_{i+1/2})/dt
///     + (Q_{i+1} v_{i+1} - Q_i v_i)/dx
///     - rho_tilde(rho_bar_i, rho_bar_{i+1}, v_{i+1/2}) (delta phi)_{i+1/2} = 0,
/// where the advective coefficients Q_i and the upwind selection of v_i are
/// frozen at the current outer iterate u_frozen.
class MomentumSolver {
public:
    MomentumSolver() = default;

    DualField solve(const FluxScheme& scheme, const PrimalField& rho_bar, const PrimalField& phi,
                    const DualField& u_frozen, const DualField& rho_n_dual, const DualField& u_n,
                    double dt, double newton_tol = 1e-15, int max_iter = 60) {
        require_same_grid(rho_bar, u_frozen, "solve_momentum");
        require_same_grid(rho_bar, phi, "solve_momentum");
        require_same_grid(u_frozen, rho_n_dual, "solve_momentum");
        require_same_grid(u_frozen, u_n, "solve_momentum");
        if (!(dt > 0.0)) throw std::invalid_argument("solve_momentum: dt must be positive");

        const int n = rho_bar.size();
        const double dx = rho_bar.dx();
        resize(n);

        const DualField flux = mass_flux(scheme, rho_bar, u_frozen);
        const PrimalField q = dual_flux(flux);
        const DualField rb_dual = dual_density(rho_bar);
        const DualField dphi = discrete_gradient(phi);

        // Upwind pattern: v_j = v[sel_j] with sel_j in {j-1, j}, fixed for
        // the whole Newton loop.
        for (int j = 0; j < n; ++j) {
            sel_[static_cast<std::size_t>(j)] =
                q[j] >= 0.0 ? rho_bar.grid().wrap(j - 1) : j;
        }

        DualField v = u_frozen;
        DualField r(v.grid());
        residual(scheme, rho_bar, q, rb_dual, dphi, rho_n_dual, u_n, dt, dx, v, r);
        double rnorm = linf_norm(r);

        for (int it = 0; it < max_iter; ++it) {
            if (rnorm <= newton_tol) return v;

            assemble_jacobian(scheme, rho_bar, q, rb_dual, dphi, dt, dx, v);
            for (int i = 0; i < n; ++i) neg_r_[static_cast<std::size_t>(i)] = -r[i];
            solver_->solve(sub_, diag_, sup_, neg_r_, step_);

            double lambda = 1.0;
            DualField trial = v;
            bool accepted = false;
            for (int h = 0; h <= 30; ++h) {
                for (int i = 0; i < n; ++i) {
                    trial[i] = v[i] + lambda * step_[static_cast<std::size_t>(i)];
                }
                DualField rt(v.grid());
                residual(scheme, rho_bar, q, rb_dual, dphi, rho_n_dual, u_n, dt, dx, trial, rt);
                const double rtn = linf_norm(rt);
                if (rtn < rnorm) {
                    v = trial;
                    r = std::move(rt);
                    rnorm = rtn;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted) {
                if (rnorm <= floor) return v;
                throw ConvergenceError("momentum Newton stalled: residual " +
                                           std::to_string(rnorm) + " not reduced with damping",
                                       rnorm, it);
            }
        }
        throw ConvergenceError("momentum Newton did not converge: residual " +
                                   std::to_string(rnorm),
                               rnorm, max_iter);
    }

private:
    void resize(int n) {
        if (!solver_ || solver_->size() != n) {
            solver_.emplace(n);
            sub_.assign(static_cast<std::size_t>(n), 0.0);
            diag_.assign(static_cast<std::size_t>(n), 0.0);
            sup_.assign(static_cast<std::size_t>(n), 0.0);
            neg_r_.assign(static_cast<std::size_t>(n), 0.0);
            step_.assign(static_cast<std::size_t>(n), 0.0);
            sel_.assign(static_cast<std::size_t>(n), 0);
        }
    }

    void residual(const FluxScheme& scheme, const PrimalField& rho_bar, const PrimalField& q,
                  const DualField& rb_dual, const DualField& dphi, const DualField& rho_n_dual,
                  const DualField& u_n, double dt, double dx, const DualField& v,
                  DualField& out) const {
        const int n = v.size();
        for (int i = 0; i < n; ++i) {
            const int ip1 = v.grid().wrap(i + 1);
            const double v_right = v[sel_[static_cast<std::size_t>(ip1)]];
            const double v_left = v[sel_[static_cast<std::size_t>(i)]];
            const double force = scheme.rho_tilde(rho_bar[i], rho_bar[i + 1], v[i]) * dphi[i];
            out[i] = (rb_dual[i] * v[i] - rho_n_dual[i] * u_n[i]) / dt +
                     (q[ip1] * v_right - q[i] * v_left) / dx - force;
        }
    }

    void assemble_jacobian(const FluxScheme& scheme, const PrimalField& rho_bar,
                           const PrimalField& q, const DualField& rb_dual, const DualField& dphi,
                           double dt, double dx, const DualField& v) {
        const int n = v.size();
        for (int i = 0; i < n; ++i) {
            const int ip1 = v.grid().wrap(i + 1);
            const int im1 = v.grid().wrap(i - 1);
            double d = rb_dual[i] / dt -
                       scheme.rho_tilde_du(rho_bar[i], rho_bar[i + 1], v[i]) * dphi[i];
            double sp = 0.0;
            double sb = 0.0;
            if (sel_[static_cast<std::size_t>(ip1)] == i) {
                d += q[ip1] / dx;
            } else {
                sp += q[ip1] / dx;
            }
            if (sel_[static_cast<std::size_t>(i)] == i) {
                d -= q[i] / dx;
            } else if (sel_[static_cast<std::size_t>(i)] == im1) {
                sb -= q[i] / dx;
            }
            diag_[static_cast<std::size_t>(i)] = d;
            sup_[static_cast<std::size_t>(i)] = sp;
            sub_[static_cast<std::size_t>(i)] = sb;
        }
    }

    double rounding_floor(const DualField& rb_dual, const DualField& rho_n_dual,
                          const DualField& u_n, const PrimalField& q, const DualField& dphi,
                          const PrimalField& rho_bar, const DualField& v, double dt,
                          double dx) const {
        double scale = 0.0;
        for (int i = 0; i < v.size(); ++i) {
            const int ip1 = v.grid().wrap(i + 1);
            const double vmax = std::max(std::abs(v[sel_[static_cast<std::size_t>(ip1)]]),
                                         std::abs(v[sel_[static_cast<std::size_t>(i)]]));
            const double t = (std::abs(rb_dual[i] * v[i]) + std::abs(rho_n_dual[i] * u_n[i])) / dt +
                             (std::abs(q[ip1]) + std::abs(q[i])) * vmax / dx +
                             std::abs(rho_bar[i + 1] * dphi[i]) + std::abs(rho_bar[i] * dphi[i]);
            scale = std::max(scale, t);
        }
        return 32.0 * std::numeric_limits<double>::epsilon() * scale;
    }

    std::optional<CyclicTridiagonalSolver> solver_;
    std::vector<double> sub_, diag_, sup_, neg_r_, step_;
    std::vector<int> sel_;
};

/// One-call convenience wrapper.
inline DualField solve_momentum(const FluxScheme& scheme, const PrimalField& rho_bar,
                                const PrimalField& phi, const DualField& u_frozen,
                                const DualField& rho_n_dual, const DualField& u_n, double dt,
                                double newton_tol = 1e-15) {
    MomentumSolver s;
    return s.solve(scheme, rho_bar, phi, u_frozen, rho_n_dual, u_n, dt, newton_tol);
}

}  // namespace epbolt
