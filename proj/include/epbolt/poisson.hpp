#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "epbolt/calculus.hpp"
#include "epbolt/cyclic_tridiagonal.hpp"
#include "epbolt/errors.hpp"
#include "epbolt/grid.hpp"

namespace epbolt {

enum class PoissonGuess { previous_solution, log_density };

struct PoissonConfig {
    double epsilon = 1.0;      // Debye length, >= 0
    double newton_tol = 1e-15; // absolute max-norm residual
    int max_iter = 50;
    PoissonGuess initial_guess = PoissonGuess::previous_solution;
};

/// Residual of the discrete Poisson-Boltzmann equation,
/// r_i = eps^2 (Delta phi)_i + exp(-phi_i) - rho_i.
inline PrimalField poisson_residual(const PrimalField& rho, const PrimalField& phi,
                                    double epsilon) {
    require_same_grid(rho, phi, "poisson_residual");
    PrimalField r = discrete_laplacian(phi);
    for (int i = 0; i < r.size(); ++i) {
        r[i] = epsilon * epsilon * r[i] + std::exp(-phi[i]) - rho[i];
    }
    return r;
}

inline double poisson_residual_norm(const PrimalField& rho, const PrimalField& phi,
                                    double epsilon) {
    return linf_norm(poisson_residual(rho, phi, epsilon));
}

/// Damped Newton solver for eps^2 (Delta phi)_i + exp(-phi_i) = rho_i on the
/// torus. The eps = 0 limit is the algebraic relation phi = -log(rho) and is
/// handled by a dedicated branch. One instance owns its scratch buffers; use
/// one instance per thread.
class PoissonSolver {
public:
    explicit PoissonSolver(PoissonConfig cfg) : cfg_(cfg) {
        if (!(cfg.epsilon >= 0.0)) throw std::invalid_argument("PoissonSolver: epsilon < 0");
        if (!(cfg.newton_tol > 0.0)) throw std::invalid_argument("PoissonSolver: newton_tol <= 0");
        if (cfg.max_iter < 1) throw std::invalid_argument("PoissonSolver: max_iter < 1");
    }

    const PoissonConfig& config() const noexcept { return cfg_; }

    PrimalField solve(const PrimalField& rho) { return solve_impl(rho, nullptr); }

    PrimalField solve(const PrimalField& rho, const PrimalField& guess) {
        require_same_grid(rho, guess, "PoissonSolver::solve");
        const PrimalField* g =
            cfg_.initial_guess == PoissonGuess::previous_solution ? &guess : nullptr;
        return solve_impl(rho, g);
    }

private:
    PrimalField solve_impl(const PrimalField& rho, const PrimalField* guess) {
        for (double r : rho.values()) {
            if (!(r > 0.0)) {
                throw std::domain_error("PoissonSolver: density must be positive");
            }
        }
        if (cfg_.epsilon == 0.0) {
            PrimalField phi(rho.grid());
            for (int i = 0; i < rho.size(); ++i) phi[i] = -std::log(rho[i]);
            return phi;
        }

        const int n = rho.size();
        PrimalField phi = guess != nullptr ? *guess : PrimalField(rho.grid());
        if (guess == nullptr) {
            for (int i = 0; i < n; ++i) phi[i] = -std::log(rho[i]);
        }

        if (!solver_ || solver_->size() != n) {
            solver_.emplace(n);
            sub_.assign(static_cast<std::size_t>(n), 0.0);
            diag_.assign(static_cast<std::size_t>(n), 0.0);
            sup_.assign(static_cast<std::size_t>(n), 0.0);
            neg_r_.assign(static_cast<std::size_t>(n), 0.0);
            step_.assign(static_cast<std::size_t>(n), 0.0);
        }

        const double c = cfg_.epsilon * cfg_.epsilon / (rho.dx() * rho.dx());
        PrimalField r = poisson_residual(rho, phi, cfg_.epsilon);
        double rnorm = linf_norm(r);

        for (int it = 0; it < cfg_.max_iter; ++it) {
            if (rnorm <= cfg_.newton_tol) return phi;
            // Jacobian: cyclic tridiagonal, strictly diagonally dominant
            // since exp(-phi) > 0.
            for (int i = 0; i < n; ++i) {
                const double e = std::exp(-phi[i]);
                sub_[static_cast<std::size_t>(i)] = c;
                sup_[static_cast<std::size_t>(i)] = c;
                diag_[static_cast<std::size_t>(i)] = -2.0 * c - e;
                neg_r_[static_cast<std::size_t>(i)] = -r[i];
            }
            solver_->solve(sub_, diag_, sup_, neg_r_, step_);

            // Backtracking on the max-norm residual; never accept an increase.
            double lambda = 1.0;
            PrimalField trial = phi;
            bool accepted = false;
            for (int h = 0; h <= 30; ++h) {
                for (int i = 0; i < n; ++i) {
                    trial[i] = phi[i] + lambda * step_[static_cast<std::size_t>(i)];
                }
                PrimalField rt = poisson_residual(rho, trial, cfg_.epsilon);
                const double rtn = linf_norm(rt);
                if (rtn < rnorm) {
                    phi = trial;
                    r = std::move(rt);
                    rnorm = rtn;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted) {
                // Stagnated: accept only when the residual sits at the
                // rounding level of its own evaluation.
                if (rnorm <= rounding_floor(rho, phi, c)) return phi;
                throw ConvergenceError("Poisson Newton stalled at residual " +
                                           std::to_string(rnorm),
                                       rnorm, it);
            }
        }
        if (rnorm <= cfg_.newton_tol || rnorm <= rounding_floor(rho, phi, c)) return phi;
        throw ConvergenceError("Poisson Newton did not converge: residual " +
                                   std::to_string(rnorm),
                               rnorm, cfg_.max_iter);
    }

    // Smallest residual representable given the magnitudes of the summands.
    double rounding_floor(const PrimalField& rho, const PrimalField& phi, double c) const {
        double scale = 0.0;
        for (int i = 0; i < phi.size(); ++i) {
            const double lap = c * (std::abs(phi[i + 1]) + 2.0 * std::abs(phi[i]) + std::abs(phi[i - 1]));
            scale = std::max(scale, lap + std::exp(-phi[i]) + std::abs(rho[i]));
        }
        return 32.0 * std::numeric_limits<double>::epsilon() * scale;
    }

    PoissonConfig cfg_;
    std::optional<CyclicTridiagonalSolver> solver_;
    std::vector<double> sub_, diag_, sup_, neg_r_, step_;
};

/// One-call convenience wrapper.
inline PrimalField solve_poisson(const PrimalField& rho, const PoissonConfig& cfg) {
    PoissonSolver s(cfg);
    return s.solve(rho);
}

inline PrimalField solve_poisson(const PrimalField& rho, const PoissonConfig& cfg,
                                 const PrimalField& guess) {
    PoissonSolver s(cfg);
    return s.solve(rho, guess);
}

/// One inequality of the elliptic estimates: ok when slack = rhs - lhs is
/// nonnegative up to rounding allowance.
struct EllipticCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;

    double slack() const noexcept { return rhs - lhs; }
};

namespace detail {
inline EllipticCheck make_check(double lhs, double rhs) {
    const double tol = 1e-10 * (1.0 + std::abs(rhs));
    return EllipticCheck{lhs, rhs, lhs <= rhs + tol};
}
}  // namespace detail

/// Certificate for the discrete elliptic estimates of the Poisson solve.
struct EllipticReport {
    double residual = 0.0;

    std::array<EllipticCheck, 3> exp_lp;      // ||exp(-phi)||_p <= ||rho||_p, p = 1,2,3
    double p1_equality_gap = 0.0;             // the p = 1 bound is an equality
    std::array<EllipticCheck, 3> grad_exp;    // eps^2 sum |dphi d(exp(-(p-1)phi))| <= ||rho||_p^p
    EllipticCheck max_principle_lower;        // min log rho <= -phi_i
    EllipticCheck max_principle_upper;        // -phi_i <= max log rho
    EllipticCheck mean_value_lower;           // min log rho <= <-phi>
    EllipticCheck mean_value_upper;           // <-phi> <= max log rho
    EllipticCheck l2_bound;                   // alpha ||phi - <phi>||_2 <= ||rho||_2 + ||rho||_1
    EllipticCheck h1_bound;                   // eps |phi - <phi>|_H1 <= (||rho||_2+||rho||_1)/sqrt(alpha)

    bool all_ok() const {
        bool ok = max_principle_lower.ok && max_principle_upper.ok && mean_value_lower.ok &&
                  mean_value_upper.ok && l2_bound.ok && h1_bound.ok &&
                  std::abs(p1_equality_gap) <= 1e-11;
        for (const auto& c : exp_lp) ok = ok && c.ok;
        for (const auto& c : grad_exp) ok = ok && c.ok;
        return ok;
    }
};

/// Evaluates the discrete elliptic estimates for a solved pair (rho, phi).
/// The pair must satisfy the discrete Poisson equation to residual_tol.
inline EllipticReport elliptic_report(const PrimalField& rho, const PrimalField& phi,
                                      double epsilon, double residual_tol = 1e-9) {
    require_same_grid(rho, phi, "elliptic_report");
    for (double r : rho.values()) {
        if (!(r > 0.0)) throw std::domain_error("elliptic_report: density must be positive");
    }

    EllipticReport rep;
    rep.residual = poisson_residual_norm(rho, phi, epsilon);
    if (rep.residual > residual_tol) {
        throw std::invalid_argument("elliptic_report: phi does not solve the Poisson equation "
                                    "(residual " + std::to_string(rep.residual) + ")");
    }

    const int n = rho.size();
    const double dx = rho.dx();

    PrimalField exp_mphi(rho.grid());
    double min_log_rho = std::numeric_limits<double>::infinity();
    double max_log_rho = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        exp_mphi[i] = std::exp(-phi[i]);
        min_log_rho = std::min(min_log_rho, std::log(rho[i]));
        max_log_rho = std::max(max_log_rho, std::log(rho[i]));
    }

    for (int k = 0; k < 3; ++k) {
        const double p = k + 1.0;
        rep.exp_lp[static_cast<std::size_t>(k)] =
            detail::make_check(lp_norm(exp_mphi, p), lp_norm(rho, p));

        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double dphi = (phi[i + 1] - phi[i]) / dx;
            const double dexp =
                (std::exp(-(p - 1.0) * phi[i + 1]) - std::exp(-(p - 1.0) * phi[i])) / dx;
            s += std::abs(dphi * dexp);
        }
        const double rhop = lp_norm(rho, p);
        rep.grad_exp[static_cast<std::size_t>(k)] =
            detail::make_check(epsilon * epsilon * s * dx, std::pow(rhop, p));
    }
    rep.p1_equality_gap = rep.exp_lp[0].lhs - rep.exp_lp[0].rhs;

    double min_mphi = std::numeric_limits<double>::infinity();
    double max_mphi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        min_mphi = std::min(min_mphi, -phi[i]);
        max_mphi = std::max(max_mphi, -phi[i]);
    }
    rep.max_principle_lower = detail::make_check(min_log_rho, min_mphi);
    rep.max_principle_upper = detail::make_check(max_mphi, max_log_rho);

    const double phi_mean = mean(phi);
    rep.mean_value_lower = detail::make_check(min_log_rho, -phi_mean);
    rep.mean_value_upper = detail::make_check(-phi_mean, max_log_rho);

    PrimalField centered = phi;
    for (int i = 0; i < n; ++i) centered[i] = phi[i] - phi_mean;
    const double alpha = std::exp(min_log_rho);
    const double rho_l2_l1 = lp_norm(rho, 2.0) + lp_norm(rho, 1.0);
    rep.l2_bound = detail::make_check(alpha * lp_norm(centered, 2.0), rho_l2_l1);
    rep.h1_bound = detail::make_check(epsilon * h1_seminorm(centered), rho_l2_l1 / std::sqrt(alpha));

    return rep;
}

}  // namespace epbolt
