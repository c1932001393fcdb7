#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace epbolt {

/// Direct solver for cyclic tridiagonal systems
///
///     sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i],  indices mod n,
///
/// via the Thomas algorithm plus a Sherman-Morrison rank-one correction
/// for the periodic corner entries. Intended for strictly diagonally
/// dominant matrices (M-matrices of the transport step, Newton Jacobians
/// of the Poisson step), so no pivoting is performed. Systems with
/// n <= 3 are solved densely because neighbor columns coincide there.
class CyclicTridiagonalSolver {
public:
    explicit CyclicTridiagonalSolver(int n) : n_(n) {
        if (n < 1) throw std::invalid_argument("CyclicTridiagonalSolver: n must be positive");
        work_.resize(4 * static_cast<std::size_t>(n));
    }

    int size() const noexcept { return n_; }

    void solve(std::span<const double> sub, std::span<const double> diag,
               std::span<const double> sup, std::span<const double> rhs,
               std::span<double> x) {
        const auto n = static_cast<std::size_t>(n_);
        if (sub.size() != n || diag.size() != n || sup.size() != n || rhs.size() != n ||
            x.size() != n) {
            throw std::invalid_argument("CyclicTridiagonalSolver: size mismatch");
        }
        if (n_ <= 3) {
            solve_dense(sub, diag, sup, rhs, x);
            return;
        }

        double* b = work_.data();          // modified diagonal
        double* y = b + n;                 // solution of A y = rhs
        double* z = y + n;                 // solution of A z = u
        double* cw = z + n;                // Thomas workspace

        const double beta = sub[0];        // corner (0, n-1)
        const double alpha = sup[n - 1];   // corner (n-1, 0)
        const double gamma = -diag[0];

        for (std::size_t i = 0; i < n; ++i) b[i] = diag[i];
        b[0] -= gamma;
        b[n - 1] -= alpha * beta / gamma;

        thomas(sub, {b, n}, sup, rhs, {y, n}, {cw, n});

        for (std::size_t i = 0; i < n; ++i) z[i] = 0.0;
        z[0] = gamma;
        z[n - 1] = alpha;
        thomas(sub, {b, n}, sup, {z, n}, {z, n}, {cw, n});

        const double num = y[0] + beta * y[n - 1] / gamma;
        const double den = 1.0 + z[0] + beta * z[n - 1] / gamma;
        const double fac = num / den;
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - fac * z[i];
    }

private:
    // Plain Thomas elimination for the acyclic part; rhs and x may alias.
    static void thomas(std::span<const double> sub, std::span<const double> diag,
                       std::span<const double> sup, std::span<const double> rhs,
                       std::span<double> x, std::span<double> cw) {
        const std::size_t n = diag.size();
        double piv = diag[0];
        cw[0] = sup[0] / piv;
        x[0] = rhs[0] / piv;
        for (std::size_t i = 1; i < n; ++i) {
            piv = diag[i] - sub[i] * cw[i - 1];
            cw[i] = sup[i] / piv;
            x[i] = (rhs[i] - sub[i] * x[i - 1]) / piv;
        }
        for (std::size_t i = n - 1; i-- > 0;) {
            x[i] -= cw[i] * x[i + 1];
        }
    }

    void solve_dense(std::span<const double> sub, std::span<const double> diag,
                     std::span<const double> sup, std::span<const double> rhs,
                     std::span<double> x) const {
        const int n = n_;
        std::array<std::array<double, 4>, 3> a{};  // up to 3x3 augmented
        for (int i = 0; i < n; ++i) {
            a[i].fill(0.0);
            a[i][static_cast<std::size_t>((i + n - 1) % n)] += sub[i];
            a[i][static_cast<std::size_t>(i)] += diag[i];
            a[i][static_cast<std::size_t>((i + 1) % n)] += sup[i];
            a[i][static_cast<std::size_t>(n)] = rhs[i];
        }
        for (int c = 0; c < n; ++c) {
            int p = c;
            for (int r = c + 1; r < n; ++r) {
                if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
            }
            std::swap(a[c], a[p]);
            for (int r = 0; r < n; ++r) {
                if (r == c) continue;
                const double f = a[r][c] / a[c][c];
                for (int k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
            }
        }
        for (int i = 0; i < n; ++i) x[i] = a[i][static_cast<std::size_t>(n)] / a[i][static_cast<std::size_t>(i)];
    }

    int n_;
    std::vector<double> work_;
};

}  // namespace epbolt
