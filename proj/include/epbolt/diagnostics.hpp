#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "epbolt/calculus.hpp"
#include "epbolt/flux.hpp"
#include "epbolt/state.hpp"

namespace epbolt {

/// Potential energy density h(s) = -(s+1) e^{-s}.
inline double potential_density(double s) { return -(s + 1.0) * std::exp(-s); }

/// Constant reference state (u_bar, phi_bar) with rho_bar = exp(-phi_bar).
struct ConstantState {
    double u_bar = 0.0;
    double phi_bar = 0.0;
    double rho_bar = 1.0;

    ConstantState() = default;
    ConstantState(double u, double phi) : u_bar(u), phi_bar(phi), rho_bar(std::exp(-phi)) {}
};

namespace detail {
/// Bregman divergence of the Boltzmann entropy h~(psi) = psi log psi - psi
/// between psi = e^{-phi} and psi_bar = e^{-phi_bar}, evaluated in the
/// cancellation-free form e^{-phi_bar} (d^2/2 - d^3/3 + ...) with
/// d = phi - phi_bar:
///     B = e^{-phi_bar} * ( -expm1(-d) (1 + d) - d ).
inline double entropy_bregman(double phi, double phi_bar) {
    const double d = phi - phi_bar;
    return std::exp(-phi_bar) * (-std::expm1(-d) * (1.0 + d) - d);
}
}  // namespace detail

/// Discrete total energy
///   H = sum_i [ rho_{i+1/2} u_{i+1/2}^2 / 2 + (eps^2/2) |(delta phi)_{i+1/2}|^2
///               + h(phi_i) ] dx.
inline double total_energy(const PlasmaState& s) {
    const int n = s.grid().n_cells();
    const double dx = s.grid().dx();
    const double e2 = s.epsilon * s.epsilon;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double rd = 0.5 * (s.rho[i] + s.rho[i + 1]);
        const double dphi = (s.phi[i + 1] - s.phi[i]) / dx;
        acc += rd * s.u[i] * s.u[i] / 2.0 + 0.5 * e2 * dphi * dphi + potential_density(s.phi[i]);
    }
    return acc * dx;
}

/// Discrete modulated energy around a constant state: kinetic part relative
/// to u_bar, field part, and the Bregman divergence of the Boltzmann
/// entropy relative to rho_bar = e^{-phi_bar}. Nonnegative, and zero only
/// at the reference state.
inline double modulated_energy(const PlasmaState& s, const ConstantState& ref) {
    const int n = s.grid().n_cells();
    const double dx = s.grid().dx();
    const double e2 = s.epsilon * s.epsilon;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double rd = 0.5 * (s.rho[i] + s.rho[i + 1]);
        const double du = s.u[i] - ref.u_bar;
        const double dphi = (s.phi[i + 1] - s.phi[i]) / dx;
        acc += rd * du * du / 2.0 + 0.5 * e2 * dphi * dphi +
               detail::entropy_bregman(s.phi[i], ref.phi_bar);
    }
    return acc * dx;
}

/// The three-term split E = H + E_kin - E_int of the modulated energy.
struct EnergyDecomposition {
    double total = 0.0;     // H
    double kinetic = 0.0;   // E_kin(rho, u | u_bar)
    double internal = 0.0;  // E_int(phi | phi_bar)

    double combined() const noexcept { return total + kinetic - internal; }
};

inline EnergyDecomposition energy_decomposition(const PlasmaState& s, const ConstantState& ref) {
    const int n = s.grid().n_cells();
    const double dx = s.grid().dx();
    EnergyDecomposition d;
    d.total = total_energy(s);
    double kin = 0.0;
    double intern = 0.0;
    const double htilde_bar = ref.rho_bar * std::log(ref.rho_bar) - ref.rho_bar;
    const double htilde_prime_bar = std::log(ref.rho_bar);
    for (int i = 0; i < n; ++i) {
        const double rd = 0.5 * (s.rho[i] + s.rho[i + 1]);
        kin += rd * (ref.u_bar * ref.u_bar / 2.0 - s.u[i] * ref.u_bar);
        intern += htilde_bar + htilde_prime_bar * (std::exp(-s.phi[i]) - ref.rho_bar);
    }
    d.kinetic = kin * dx;
    d.internal = intern * dx;
    return d;
}

/// Dissipation functional tau of one accepted step: the per-step quantity
/// with H^{n+1} - H^n = -dt tau computed independently of the stepper.
/// The potential relaxation term is evaluated in its exact Bregman form
/// (1/dt) sum [e^{-phi^{n+1}} - e^{-phi^n} + e^{-phi^n}(phi^{n+1}-phi^n)]
/// instead of the mean-value form with an unknown intermediate point.
inline double tau(const FluxScheme& scheme, const PlasmaState& s_n, const PlasmaState& s_np1,
                  double dt) {
    require_same_grid(s_n.rho, s_np1.rho, "tau");
    if (!(dt > 0.0)) throw std::invalid_argument("tau: dt must be positive");
    const int n = s_n.grid().n_cells();
    const double dx = s_n.grid().dx();
    const double e2 = s_np1.epsilon * s_np1.epsilon;

    const DualField flux = mass_flux(scheme, s_np1.rho, s_np1.u);
    const PrimalField q = dual_flux(flux);
    const PrimalField u_at_centers = upwind_interface_velocity(q, s_np1.u);

    double kinetic_diss = 0.0;   // sum S_i dx
    double relax = 0.0;          // exact Bregman form of the e^{-xi} term
    double field_incr = 0.0;     // (eps^2 / 2 dt) sum (dphi^{n+1} - dphi^n)^2
    double g0_field = 0.0;       // (g0/dx) sum eps^2 |dphi_{i+1/2} - dphi_{i-1/2}|^2
    double g0_relax = 0.0;       // (g0/dx) sum |(e^{-phi_i} - e^{-phi_{i-1}})(phi_i - phi_{i-1})|

    for (int i = 0; i < n; ++i) {
        const double u_half = s_np1.u[i];
        const double du_r = u_at_centers[i + 1] - u_half;
        const double du_l = u_at_centers[i] - u_half;
        const double rd_n = 0.5 * (s_n.rho[i] + s_n.rho[i + 1]);
        const double du_t = s_n.u[i] - u_half;
        kinetic_diss += -q[i + 1] * du_r * du_r / (2.0 * dx) + q[i] * du_l * du_l / (2.0 * dx) +
                        rd_n * du_t * du_t / (2.0 * dt);

        const double d = s_np1.phi[i] - s_n.phi[i];
        relax += std::exp(-s_n.phi[i]) * (std::expm1(-d) + d);

        const double dphi_new = (s_np1.phi[i + 1] - s_np1.phi[i]) / dx;
        const double dphi_old = (s_n.phi[i + 1] - s_n.phi[i]) / dx;
        field_incr += (dphi_new - dphi_old) * (dphi_new - dphi_old);

        const double dphi_prev = (s_np1.phi[i] - s_np1.phi[i - 1]) / dx;
        g0_field += (dphi_new - dphi_prev) * (dphi_new - dphi_prev);

        const double de = std::exp(-s_np1.phi[i]) - std::exp(-s_np1.phi[i - 1]);
        g0_relax += std::abs(de * (s_np1.phi[i] - s_np1.phi[i - 1]));
    }

    // The two g(0)-weighted sums carry a 1/dx that cancels the dx of the sum.
    const double g0 = scheme.g0();
    return kinetic_diss * dx + relax * dx / dt + 0.5 * e2 * field_incr * dx / dt +
           g0 * e2 * g0_field + g0 * g0_relax;
}

/// Total mass, sum rho_i dx.
inline double mass(const PlasmaState& s) { return integral(s.rho); }

/// Total momentum, sum rho_{i+1/2} u_{i+1/2} dx. Logged as a diagnostic;
/// the scheme does not conserve it exactly.
inline double total_momentum(const PlasmaState& s) {
    const int n = s.grid().n_cells();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += 0.5 * (s.rho[i] + s.rho[i + 1]) * s.u[i];
    }
    return acc * s.grid().dx();
}

/// Numerical dissipation rate (log E_final - log E_initial) / T.
inline double dissipation_rate(double e_final, double e_initial, double T) {
    if (!(e_final > 0.0) || !(e_initial > 0.0)) {
        throw std::domain_error("dissipation_rate: energies must be positive");
    }
    if (!(T > 0.0)) throw std::invalid_argument("dissipation_rate: T must be positive");
    return (std::log(e_final) - std::log(e_initial)) / T;
}

/// Per-step scalar diagnostics of a trajectory.
struct DiagnosticsRecord {
    int step = 0;
    double time = 0.0;
    double mass = 0.0;
    double momentum = 0.0;
    double total_energy = 0.0;
    double modulated_energy = 0.0;
    double tau = 0.0;
    int picard_iters = 0;
    double min_rho = 0.0;
    double max_rho = 0.0;
};

inline DiagnosticsRecord make_record(const FluxScheme& scheme, const PlasmaState& prev,
                                     const PlasmaState& state, double dt,
                                     const ConstantState& ref, int step, int picard_iters) {
    DiagnosticsRecord r;
    r.step = step;
    r.time = state.time;
    r.mass = mass(state);
    r.momentum = total_momentum(state);
    r.total_energy = total_energy(state);
    r.modulated_energy = modulated_energy(state, ref);
    r.tau = tau(scheme, prev, state, dt);
    r.picard_iters = picard_iters;
    const auto vals = state.rho.values();
    r.min_rho = *std::min_element(vals.begin(), vals.end());
    r.max_rho = *std::max_element(vals.begin(), vals.end());
    return r;
}

}  // namespace epbolt
