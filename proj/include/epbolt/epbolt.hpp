#pragma once

// Implicit staggered finite-volume solver for the pressureless
// Euler-Poisson-Boltzmann system on the 1-D torus, with energy-stability
// diagnostics.

#include "epbolt/calculus.hpp"
#include "epbolt/cyclic_tridiagonal.hpp"
#include "epbolt/diagnostics.hpp"
#include "epbolt/errors.hpp"
#include "epbolt/flux.hpp"
#include "epbolt/grid.hpp"
#include "epbolt/initial_data.hpp"
#include "epbolt/poisson.hpp"
#include "epbolt/runner.hpp"
#include "epbolt/state.hpp"
#include "epbolt/stepper.hpp"
#include "epbolt/transport.hpp"
