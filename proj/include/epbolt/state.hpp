#pragma once

#include <cmath>
#include <stdexcept>

#include "epbolt/grid.hpp"
#include "epbolt/poisson.hpp"

namespace epbolt {

/// One time level of the scheme: density and potential on primal cells,
/// velocity on dual cells, plus the Debye length the trajectory runs at.
struct PlasmaState {
    PrimalField rho;
    DualField u;
    PrimalField phi;
    double epsilon = 1.0;
    double time = 0.0;

    const PeriodicGrid& grid() const { return rho.grid(); }

    /// Enforces the state invariants: positive density and a potential
    /// consistent with the discrete Poisson equation at this epsilon.
    void validate(double poisson_residual_tol = 1e-12) const {
        require_same_grid(rho, u, "PlasmaState");
        require_same_grid(rho, phi, "PlasmaState");
        if (!(epsilon >= 0.0)) throw std::invalid_argument("PlasmaState: epsilon < 0");
        for (double r : rho.values()) {
            if (!(r > 0.0)) throw std::domain_error("PlasmaState: density must be positive");
        }
        const double res = poisson_residual_norm(rho, phi, epsilon);
        if (res > poisson_residual_tol) {
            throw std::invalid_argument("PlasmaState: phi violates the Poisson equation, residual " +
                                        std::to_string(res));
        }
    }
};

}  // namespace epbolt
