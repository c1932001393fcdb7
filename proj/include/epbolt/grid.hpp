#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace epbolt {

/// Uniform periodic grid on a 1-D torus of length L.
///
/// Primal cells are centered at x_i = i*dx and dual cells at
/// x_{i+1/2} = (i + 1/2)*dx, for i = 0, ..., n_cells-1. All index
/// arithmetic is modular, so any integer addresses a valid cell.
class PeriodicGrid {
public:
    PeriodicGrid(int n_cells, double domain_length = 1.0)
        : n_(n_cells), length_(domain_length), dx_(domain_length / n_cells) {
        if (n_cells < 2) {
            throw std::invalid_argument("PeriodicGrid: n_cells must be >= 2");
        }
        if (!(domain_length > 0.0)) {
            throw std::invalid_argument("PeriodicGrid: domain_length must be positive");
        }
    }

    int n_cells() const noexcept { return n_; }
    double length() const noexcept { return length_; }
    double dx() const noexcept { return dx_; }

    /// Representative of i in {0, ..., n_cells-1}.
    int wrap(int i) const noexcept {
        int r = i % n_;
        return r < 0 ? r + n_ : r;
    }

    double primal_center(int i) const noexcept { return wrap(i) * dx_; }
    double dual_center(int i) const noexcept { return (wrap(i) + 0.5) * dx_; }

    friend bool operator==(const PeriodicGrid&, const PeriodicGrid&) = default;

private:
    int n_;
    double length_;
    double dx_;
};

namespace detail {
struct PrimalTag {};
struct DualTag {};
}  // namespace detail

/// Piecewise-constant field of cell averages with periodic indexing.
///
/// The tag distinguishes fields on primal cells (index i reads the
/// average over C_i) from fields on dual cells (index i reads the
/// average over C_{i+1/2}); mixing them is a type error.
template <class Tag>
class Field {
public:
    explicit Field(PeriodicGrid grid, double fill = 0.0)
        : grid_(grid), v_(static_cast<std::size_t>(grid.n_cells()), fill) {}

    Field(PeriodicGrid grid, std::vector<double> values)
        : grid_(grid), v_(std::move(values)) {
        if (v_.size() != static_cast<std::size_t>(grid_.n_cells())) {
            throw std::invalid_argument("Field: value count does not match grid");
        }
    }

    const PeriodicGrid& grid() const noexcept { return grid_; }
    int size() const noexcept { return grid_.n_cells(); }
    double dx() const noexcept { return grid_.dx(); }

    double operator[](int i) const noexcept { return v_[static_cast<std::size_t>(grid_.wrap(i))]; }
    double& operator[](int i) noexcept { return v_[static_cast<std::size_t>(grid_.wrap(i))]; }

    std::span<const double> values() const noexcept { return v_; }
    std::span<double> values() noexcept { return v_; }

    friend bool operator==(const Field&, const Field&) = default;

private:
    PeriodicGrid grid_;
    std::vector<double> v_;
};

using PrimalField = Field<detail::PrimalTag>;
using DualField = Field<detail::DualTag>;

/// Binary operations on fields from different grids are programming errors.
template <class TagA, class TagB>
void require_same_grid(const Field<TagA>& a, const Field<TagB>& b, const char* op) {
    if (a.grid() != b.grid()) {
        throw std::invalid_argument(std::string(op) + ": fields live on different grids");
    }
}

}  // namespace epbolt
