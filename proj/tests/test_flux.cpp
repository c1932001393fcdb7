#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "epbolt/flux.hpp"
#include "test_util.hpp"

using namespace epbolt;

namespace {
constexpr double kDx = 0.01;
const FluxScheme kScheme = FluxScheme::with_width(kDx);
}  // namespace

TEST(FluxScheme, RegularizationBranchValues) {
    EXPECT_DOUBLE_EQ(kScheme.g(kDx), kDx);        // branch boundary
    EXPECT_DOUBLE_EQ(kScheme.g(-kDx), 0.0);       // lower boundary
    EXPECT_DOUBLE_EQ(kScheme.g(0.0), kDx / 4.0);  // quadratic blend at zero
    EXPECT_DOUBLE_EQ(kScheme.g(5.0), 5.0);
    EXPECT_DOUBLE_EQ(kScheme.g(-5.0), 0.0);
    EXPECT_DOUBLE_EQ(kScheme.g0(), kDx / 4.0);
    EXPECT_DOUBLE_EQ(kScheme.gprime0(), 0.5);
}

TEST(FluxScheme, SatisfiesAdmissibilityAssumptionsOnSampleGrid) {
    // g >= max(u, 0) and |g(a) - g(b)| <= |a - b| on a sampling grid.
    double prev_u = -0.3;
    double prev_g = kScheme.g(prev_u);
    for (int k = 1; k <= 600; ++k) {
        const double u = -0.3 + 0.001 * k;
        const double gu = kScheme.g(u);
        EXPECT_GE(gu, std::max(u, 0.0) - 1e-15);
        EXPECT_LE(std::abs(gu - prev_g), kScheme.lipschitz() * std::abs(u - prev_u) + 1e-15);
        EXPECT_GE(gu - prev_g, -1e-15);  // nondecreasing
        prev_u = u;
        prev_g = gu;
    }
}

TEST(FluxScheme, DividedDifferenceGhat) {
    EXPECT_DOUBLE_EQ(kScheme.ghat(0.0), 0.5);
    EXPECT_DOUBLE_EQ(kScheme.ghat(2 * kDx), 7.0 / 8.0);  // (2dx - dx/4) / (2dx)
    for (double u = -0.5; u <= 0.5; u += 0.001) {
        EXPECT_LE(std::abs(kScheme.ghat(u)), kScheme.lipschitz() + 1e-15);
    }
    // continuity across the branch switches
    EXPECT_NEAR(kScheme.ghat(kDx * (1 + 1e-12)), kScheme.ghat(kDx * (1 - 1e-12)), 1e-10);
    EXPECT_NEAR(kScheme.ghat(-kDx * (1 + 1e-12)), kScheme.ghat(-kDx * (1 - 1e-12)), 1e-10);
}

TEST(FluxScheme, GhatPrimeMatchesFiniteDifference) {
    for (double u : {-0.04, -0.004, 0.0, 0.003, 0.02, 0.3}) {
        const double h = 1e-7;
        const double fd = (kScheme.ghat(u + h) - kScheme.ghat(u - h)) / (2 * h);
        EXPECT_NEAR(kScheme.ghat_prime(u), fd, 1e-4 * (1.0 + std::abs(fd)));
    }
}

TEST(FluxFamily, ConsistencyAndUpwindLimits) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double rho = dist(rng), u = dist(rng);
        EXPECT_NEAR(kScheme.G(rho, rho, u), rho * u, 1e-14);
    }
    // pure upwinding outside the regularization band
    EXPECT_DOUBLE_EQ(kScheme.G(1.3, 0.4, 0.5), 1.3 * 0.5);
    EXPECT_DOUBLE_EQ(kScheme.G(1.3, 0.4, -0.5), 0.4 * (-0.5));
}

TEST(FluxFamily, AlternateAlgebraicForm) {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int rep = 0; rep < 500; ++rep) {
        const double s = dist(rng), t = dist(rng), u = dist(rng);
        EXPECT_NEAR(kScheme.G(s, t, u), t * u + (s - t) * kScheme.g(u), 1e-13);
    }
}

TEST(FluxFamily, MonotoneInBothDensityArguments) {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::uniform_real_distribution<double> pos(0.0, 2.0);
    for (int rep = 0; rep < 500; ++rep) {
        const double s = dist(rng), t = dist(rng), u = dist(rng);
        const double ds = pos(rng), dT = pos(rng);
        EXPECT_LE(kScheme.G(s, t, u), kScheme.G(s + ds, t, u) + 1e-14);
        EXPECT_GE(kScheme.G(s, t, u), kScheme.G(s, t + dT, u) - 1e-14);
    }
}

TEST(ForceDensity, ZeroVelocityAndCancellation) {
    EXPECT_DOUBLE_EQ(kScheme.rho_tilde(1.0, 3.0, 0.0), 2.0);  // (s+t)/2 via g'(0) = 1/2
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double rho = dist(rng), u = dist(rng);
        EXPECT_NEAR(kScheme.rho_tilde(rho, rho, u), rho, 1e-14);
    }
}

TEST(ForceDensity, ContinuousThroughZeroVelocity) {
    const double s = 0.8, t = 1.7;
    const double limit = kScheme.rho_tilde(s, t, 0.0);
    for (int k = 1; k <= 15; ++k) {
        const double u = std::pow(10.0, -k);
        EXPECT_NEAR(kScheme.rho_tilde(s, t, u), limit, 2.0 * u / kDx + 1e-12);
        EXPECT_NEAR(kScheme.rho_tilde(s, t, -u), limit, 2.0 * u / kDx + 1e-12);
    }
}

TEST(ForceDensity, MatchesDividedDifferenceOfG) {
    std::mt19937 rng(10);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int rep = 0; rep < 500; ++rep) {
        const double s = dist(rng), t = dist(rng), u = dist(rng);
        const double expected = t - (t - s) * kScheme.ghat(u);
        EXPECT_NEAR(kScheme.rho_tilde(s, t, u), expected, 1e-13);
        if (std::abs(u) > 1e-6) {
            const double dd = (kScheme.G(s, t, u) - kScheme.G(s, t, 0.0)) / u;
            EXPECT_NEAR(kScheme.rho_tilde(s, t, u), dd, 1e-9);
        }
    }
}

TEST(ForceDensity, ConvexCombinationBounds) {
    // For the built-in g (nondecreasing, Lip <= 1) rho_tilde lies between
    // its density arguments.
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> dist(0.1, 3.0);
    std::uniform_real_distribution<double> vel(-2.0, 2.0);
    for (int rep = 0; rep < 500; ++rep) {
        const double s = dist(rng), t = dist(rng), u = vel(rng);
        const double r = kScheme.rho_tilde(s, t, u);
        EXPECT_GE(r, std::min(s, t) - 1e-13);
        EXPECT_LE(r, std::max(s, t) + 1e-13);
    }
}

TEST(MassFlux, ConstantStateAndDiffusionLimit) {
    PeriodicGrid g(8, 1.0);
    const FluxScheme scheme = FluxScheme::for_grid(g);

    PrimalField rho(g, 1.4);
    DualField u(g, 0.6);
    const DualField f = mass_flux(scheme, rho, u);
    for (int i = 0; i < g.n_cells(); ++i) EXPECT_NEAR(f[i], 1.4 * 0.6, 1e-14);

    DualField zero(g, 0.0);
    const DualField f0 = mass_flux(scheme, rho, zero);
    for (int i = 0; i < g.n_cells(); ++i) EXPECT_NEAR(f0[i], 0.0, 1e-16);

    std::mt19937 rng(21);
    PrimalField rr = epbolt::testing::random_density(g, rng);
    const DualField fd = mass_flux(scheme, rr, zero);
    for (int i = 0; i < g.n_cells(); ++i) {
        EXPECT_NEAR(fd[i], g.dx() / 4.0 * (rr[i] - rr[i + 1]), 1e-15);
    }
}

TEST(MassFlux, RejectsGridMismatch) {
    PeriodicGrid a(8, 1.0), b(9, 1.0);
    PrimalField rho(a, 1.0);
    DualField u(b, 0.0);
    EXPECT_THROW(mass_flux(kScheme, rho, u), std::invalid_argument);
}

TEST(DualFlux, AveragesNeighborInterfaces) {
    PeriodicGrid g(4, 1.0);
    DualField c(g, 2.5);
    const PrimalField fc = dual_flux(c);
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(fc[i], 2.5);

    DualField alt(g, {1.0, -1.0, 1.0, -1.0});
    const PrimalField fa = dual_flux(alt);
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(fa[i], 0.0);

    PeriodicGrid g3(3, 1.0);
    DualField lin(g3, {0.0, 1.0, 2.0});
    const PrimalField fl = dual_flux(lin);
    EXPECT_DOUBLE_EQ(fl[0], 1.0);  // (F_{1/2} + F_{-1/2})/2 = (0 + 2)/2
    EXPECT_DOUBLE_EQ(fl[1], 0.5);
    EXPECT_DOUBLE_EQ(fl[2], 1.5);
}

TEST(DualDensity, MidpointsAndLowerBound) {
    PeriodicGrid g(2, 1.0);
    PrimalField rho(g, {1.0, 3.0});
    const DualField d = dual_density(rho);
    EXPECT_DOUBLE_EQ(d[0], 2.0);
    EXPECT_DOUBLE_EQ(d[1], 2.0);

    std::mt19937 rng(31);
    PeriodicGrid g2(12, 1.0);
    const PrimalField rr = epbolt::testing::random_density(g2, rng);
    const DualField dd = dual_density(rr);
    double min_p = rr[0], min_d = dd[0];
    for (int i = 0; i < 12; ++i) {
        min_p = std::min(min_p, rr[i]);
        min_d = std::min(min_d, dd[i]);
    }
    EXPECT_GE(min_d, min_p);
}

TEST(UpwindInterfaceVelocity, SelectsBySignWithTieToLeft) {
    PeriodicGrid g(4, 1.0);
    DualField v(g, {10.0, 20.0, 30.0, 40.0});

    PrimalField pos(g, 1.0);
    const PrimalField up = upwind_interface_velocity(pos, v);
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(up[i], v[i - 1]);

    PrimalField neg(g, -1.0);
    const PrimalField un = upwind_interface_velocity(neg, v);
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(un[i], v[i]);

    PrimalField tie(g, 0.0);
    const PrimalField ut = upwind_interface_velocity(tie, v);
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(ut[i], v[i - 1]);  // >= 0 takes the left value
}
