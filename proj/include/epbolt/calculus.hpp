#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "epbolt/grid.hpp"

namespace epbolt {

/// (delta phi)_{i+1/2} = (phi_{i+1} - phi_i) / dx.
inline DualField discrete_gradient(const PrimalField& phi) {
    DualField g(phi.grid());
    const double dx = phi.dx();
    for (int i = 0; i < phi.size(); ++i) {
        g[i] = (phi[i + 1] - phi[i]) / dx;
    }
    return g;
}

/// (Delta phi)_i = (phi_{i+1} - 2 phi_i + phi_{i-1}) / dx^2.
inline PrimalField discrete_laplacian(const PrimalField& phi) {
    PrimalField l(phi.grid());
    const double dx2 = phi.dx() * phi.dx();
    for (int i = 0; i < phi.size(); ++i) {
        l[i] = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / dx2;
    }
    return l;
}

/// Discrete H^1 seminorm, ( sum_i |(phi_{i+1}-phi_i)/dx|^2 dx )^{1/2}.
inline double h1_seminorm(const PrimalField& phi) {
    const double dx = phi.dx();
    double s = 0.0;
    for (int i = 0; i < phi.size(); ++i) {
        const double d = (phi[i + 1] - phi[i]) / dx;
        s += d * d;
    }
    return std::sqrt(s * dx);
}

/// L^p norm of a piecewise-constant field; p may be infinity.
template <class Tag>
double lp_norm(const Field<Tag>& f, double p) {
    if (std::isinf(p) && p > 0) {
        double m = 0.0;
        for (double v : f.values()) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0)) {
        throw std::invalid_argument("lp_norm: p must satisfy p >= 1 or p = inf");
    }
    double s = 0.0;
    for (double v : f.values()) s += std::pow(std::abs(v), p);
    return std::pow(s * f.dx(), 1.0 / p);
}

template <class Tag>
double linf_norm(const Field<Tag>& f) {
    return lp_norm(f, std::numeric_limits<double>::infinity());
}

/// sum_i f_i dx (the integral of the piecewise-constant function).
template <class Tag>
double integral(const Field<Tag>& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.dx();
}

/// Discrete average <f> = (1/L) sum_i f_i dx.
template <class Tag>
double mean(const Field<Tag>& f) {
    return integral(f) / f.grid().length();
}

}  // namespace epbolt
