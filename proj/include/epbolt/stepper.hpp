#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "epbolt/errors.hpp"
#include "epbolt/flux.hpp"
#include "epbolt/poisson.hpp"
#include "epbolt/state.hpp"
#include "epbolt/transport.hpp"

namespace epbolt {

struct StepConfig {
    double dt = 0.0;
    double picard_rel_tol = 1e-7;
    int picard_max_iter = 200;
    PoissonConfig poisson_cfg{};         // epsilon is overridden by the state's
    double newton_tol_momentum = 1e-15;
    // Anderson depth for the outer fixed-point loop; 0 recovers the plain
    // iteration u_{k+1} = T(u_k). The accepted states are identical either
    // way (same residual test); the accelerated loop also converges where
    // the plain one cycles or crawls.
    int anderson_depth = 2;

    void check() const {
        if (!(dt > 0.0)) throw std::invalid_argument("StepConfig: dt must be positive");
        if (!(picard_rel_tol > 0.0)) throw std::invalid_argument("StepConfig: picard_rel_tol <= 0");
        if (picard_max_iter < 1) throw std::invalid_argument("StepConfig: picard_max_iter < 1");
        if (!(newton_tol_momentum > 0.0))
            throw std::invalid_argument("StepConfig: newton_tol_momentum <= 0");
        if (anderson_depth < 0) throw std::invalid_argument("StepConfig: anderson_depth < 0");
    }
};

struct PicardResult {
    PrimalField rho_bar;
    PrimalField phi;
    DualField v;
};

/// Shared scratch for one trajectory; one instance per thread.
class Stepper {
public:
    Stepper(FluxScheme scheme, StepConfig cfg)
        : scheme_(scheme), cfg_(cfg), poisson_(make_poisson_cfg(cfg, 1.0)) {
        cfg_.check();
    }

    const StepConfig& config() const noexcept { return cfg_; }
    const FluxScheme& scheme() const noexcept { return scheme_; }

    /// One application of the three-step map T^n at the outer iterate
    /// u_guess: continuity solve, Poisson solve, momentum solve.
    PicardResult picard_map(const PlasmaState& state_n, const DualField& u_guess,
                            const PrimalField* phi_warm_start = nullptr) {
        PrimalField rho_bar = solve_continuity(scheme_, state_n.rho, u_guess, cfg_.dt);
        sync_poisson(state_n.epsilon);
        PrimalField phi = phi_warm_start != nullptr ? poisson_.solve(rho_bar, *phi_warm_start)
                                                    : poisson_.solve(rho_bar, state_n.phi);
        const DualField rho_n_dual = dual_density(state_n.rho);
        DualField v = momentum_.solve(scheme_, rho_bar, phi, u_guess, rho_n_dual, state_n.u,
                                      cfg_.dt, cfg_.newton_tol_momentum);
        return PicardResult{std::move(rho_bar), std::move(phi), std::move(v)};
    }

    /// Advances one time step by the fixed-point iteration on u. Stops at
    /// the first iterate with ||T(u_k) - u_k|| / ||u_k|| <= picard_rel_tol
    /// (absolute test when u_k vanishes) and builds the new state from
    /// that iterate: rho^{n+1} = rho_bar(u_k), phi^{n+1} = phi(rho^{n+1}),
    /// u^{n+1} = u_k. Returns the state and the number of applications of
    /// the map.
    std::pair<PlasmaState, int> advance(const PlasmaState& state_n) {
        state_n.validate();
        const int n = state_n.grid().n_cells();

        DualField u_k = state_n.u;
        const PrimalField* warm = &state_n.phi;
        PrimalField last_phi = state_n.phi;

        std::deque<std::vector<double>> hist_u, hist_f;
        double last_rel = std::numeric_limits<double>::infinity();

        for (int k = 0; k < cfg_.picard_max_iter; ++k) {
            PicardResult res = picard_map(state_n, u_k, warm);
            last_phi = res.phi;
            warm = &last_phi;

            double inc = 0.0;
            double den = 0.0;
            for (int i = 0; i < n; ++i) {
                inc = std::max(inc, std::abs(res.v[i] - u_k[i]));
                den = std::max(den, std::abs(u_k[i]));
            }
            const bool converged = den > 0.0 ? inc <= cfg_.picard_rel_tol * den
                                             : inc <= cfg_.picard_rel_tol;
            last_rel = den > 0.0 ? inc / den : inc;
            if (converged) {
                PlasmaState next{std::move(res.rho_bar), std::move(u_k), std::move(res.phi),
                                 state_n.epsilon, state_n.time + cfg_.dt};
                return {std::move(next), k + 1};
            }
            u_k = next_iterate(u_k, res.v, hist_u, hist_f);
        }
        throw ConvergenceError("Picard iteration did not converge: relative increment " +
                                   std::to_string(last_rel),
                               last_rel, cfg_.picard_max_iter);
    }

private:
    static PoissonConfig make_poisson_cfg(const StepConfig& cfg, double epsilon) {
        PoissonConfig p = cfg.poisson_cfg;
        p.epsilon = epsilon;
        return p;
    }

    void sync_poisson(double epsilon) {
        if (poisson_.config().epsilon != epsilon) {
            poisson_ = PoissonSolver(make_poisson_cfg(cfg_, epsilon));
        }
    }

    /// Next outer iterate: plain u <- T(u), optionally Anderson-mixed over
    /// a short history of residuals f = T(u) - u.
    DualField next_iterate(const DualField& u_k, const DualField& v,
                           std::deque<std::vector<double>>& hist_u,
                           std::deque<std::vector<double>>& hist_f) const {
        const int n = u_k.size();
        if (cfg_.anderson_depth == 0) return v;

        std::vector<double> uv(u_k.values().begin(), u_k.values().end());
        std::vector<double> fv(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) fv[static_cast<std::size_t>(i)] = v[i] - u_k[i];
        hist_u.push_back(std::move(uv));
        hist_f.push_back(std::move(fv));
        while (static_cast<int>(hist_u.size()) > cfg_.anderson_depth + 1) {
            hist_u.pop_front();
            hist_f.pop_front();
        }

        const int m = static_cast<int>(hist_u.size()) - 1;
        if (m == 0) return v;

        const auto& f = hist_f.back();
        // Least squares min_gamma || f - dF gamma ||_2 over the difference
        // history, via regularized normal equations (m <= 2 in practice).
        std::vector<std::vector<double>> dF(static_cast<std::size_t>(m)),
            dU(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            dF[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(n));
            dU[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                const auto si = static_cast<std::size_t>(i);
                const auto sj = static_cast<std::size_t>(j);
                dF[sj][si] = hist_f[static_cast<std::size_t>(j + 1)][si] -
                             hist_f[static_cast<std::size_t>(j)][si];
                dU[sj][si] = hist_u[static_cast<std::size_t>(j + 1)][si] -
                             hist_u[static_cast<std::size_t>(j)][si];
            }
        }
        std::vector<double> gamma(static_cast<std::size_t>(m), 0.0);
        if (m == 1) {
            double a = 0.0, b = 0.0;
            for (int i = 0; i < n; ++i) {
                const auto si = static_cast<std::size_t>(i);
                a += dF[0][si] * dF[0][si];
                b += dF[0][si] * f[si];
            }
            if (a > 0.0) gamma[0] = b / a;
        } else {
            double a00 = 0.0, a01 = 0.0, a11 = 0.0, b0 = 0.0, b1 = 0.0;
            for (int i = 0; i < n; ++i) {
                const auto si = static_cast<std::size_t>(i);
                a00 += dF[0][si] * dF[0][si];
                a01 += dF[0][si] * dF[1][si];
                a11 += dF[1][si] * dF[1][si];
                b0 += dF[0][si] * f[si];
                b1 += dF[1][si] * f[si];
            }
            const double reg = 1e-14 * (a00 + a11) + 1e-300;
            const double det = (a00 + reg) * (a11 + reg) - a01 * a01;
            if (det > 0.0) {
                gamma[0] = ((a11 + reg) * b0 - a01 * b1) / det;
                gamma[1] = ((a00 + reg) * b1 - a01 * b0) / det;
            }
        }

        DualField u_next(u_k.grid());
        for (int i = 0; i < n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            double x = hist_u.back()[si] + f[si];
            for (int j = 0; j < m; ++j) {
                const auto sj = static_cast<std::size_t>(j);
                x -= (dU[sj][si] + dF[sj][si]) * gamma[sj];
            }
            u_next[i] = x;
        }
        return u_next;
    }

    FluxScheme scheme_;
    StepConfig cfg_;
    PoissonSolver poisson_;
    MomentumSolver momentum_;
};

/// Convenience wrappers matching the operation-style API.
inline PicardResult picard_map(const FluxScheme& scheme, const PlasmaState& state_n,
                               const DualField& u_guess, const StepConfig& cfg) {
    Stepper s(scheme, cfg);
    return s.picard_map(state_n, u_guess);
}

inline std::pair<PlasmaState, int> advance(const FluxScheme& scheme, const PlasmaState& state_n,
                                           const StepConfig& cfg) {
    Stepper s(scheme, cfg);
    return s.advance(state_n);
}

/// Called after each completed step with the step index (1-based), the new
/// state and the Picard iteration count of that step.
using StepObserver = std::function<void(int step, const PlasmaState& state, int picard_iters)>;

struct RunSummary {
    PlasmaState final_state;
    int steps_completed = 0;
    long total_picard_iters = 0;
};

/// Applies `advance` n_steps times, invoking the observer after each step.
/// Solver failures abort the loop and are rethrown annotated with the
/// failing step index.
inline RunSummary run(const FluxScheme& scheme, PlasmaState state_0, const StepConfig& cfg,
                      int n_steps, const StepObserver& observer = {}) {
    if (n_steps < 0) throw std::invalid_argument("run: n_steps must be nonnegative");
    state_0.validate();
    Stepper stepper(scheme, cfg);
    RunSummary summary{std::move(state_0), 0, 0};
    for (int s = 1; s <= n_steps; ++s) {
        try {
            auto [next, iters] = stepper.advance(summary.final_state);
            summary.final_state = std::move(next);
            summary.total_picard_iters += iters;
            summary.steps_completed = s;
            if (observer) observer(s, summary.final_state, iters);
        } catch (const ConvergenceError& e) {
            throw StepError(s, e.what());
        }
    }
    return summary;
}

struct CflBound {
    double dt_max = std::numeric_limits<double>::infinity();
    bool velocity_small_enough = true;  // |u_bar| <= g(0)/Lip(g)
};

/// Largest time step satisfying |u_bar| (dt/dx) (8 Lip(g) + 4 + 2 dx^2 K / eps^2) < 1,
/// the stability condition for modulated-energy decay around a moving
/// constant state. Vacuous (unbounded) when u_bar = 0.
inline CflBound cfl_bound(const FluxScheme& scheme, double u_bar, double K, double dx,
                          double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("cfl_bound: epsilon must be positive");
    if (!(dx > 0.0)) throw std::invalid_argument("cfl_bound: dx must be positive");
    if (K < 0.0) throw std::invalid_argument("cfl_bound: K must be nonnegative");
    CflBound b;
    b.velocity_small_enough = std::abs(u_bar) <= scheme.g0() / scheme.lipschitz();
    if (u_bar != 0.0) {
        const double factor = 8.0 * scheme.lipschitz() + 4.0 + 2.0 * dx * dx * K / (epsilon * epsilon);
        b.dt_max = dx / (std::abs(u_bar) * factor);
    }
    return b;
}

}  // namespace epbolt
