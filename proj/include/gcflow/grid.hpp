#ifndef GCFLOW_GRID_HPP
#define GCFLOW_GRID_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include <Eigen/Core>

#include "gcflow/errors.hpp"
#include "gcflow/sphere.hpp"

namespace gcf {

template <int N>
using Index = std::array<int, N>;

/// Discrete convex graph u over a uniform rectangular grid, with an active
/// mask marking the cells where u is defined (and below the height cap).
template <int N>
struct GraphGrid {
    static_assert(N == 1 || N == 2, "graphs over R^1 and R^2 only");

    Vec<N> origin = Vec<N>::Zero();
    double spacing = 1.0;
    Index<N> extents{};
    std::vector<double> u;
    std::vector<std::uint8_t> active;
    double time = 0.0;

    GraphGrid() = default;
    GraphGrid(Vec<N> grid_origin, double h, Index<N> grid_extents)
        : origin(grid_origin), spacing(h), extents(grid_extents) {
        u.assign(static_cast<std::size_t>(cell_count()), 0.0);
        active.assign(static_cast<std::size_t>(cell_count()), 1);
    }

    long cell_count() const {
        long n = 1;
        for (int a = 0; a < N; ++a) n *= extents[a];
        return n;
    }

    long linear(const Index<N>& idx) const {
        if constexpr (N == 1) {
            return idx[0];
        } else {
            return static_cast<long>(idx[0]) * extents[1] + idx[1];
        }
    }

    Index<N> unlinear(long cell) const {
        if constexpr (N == 1) {
            return {static_cast<int>(cell)};
        } else {
            return {static_cast<int>(cell / extents[1]), static_cast<int>(cell % extents[1])};
        }
    }

    Vec<N> position(const Index<N>& idx) const {
        Vec<N> x;
        for (int a = 0; a < N; ++a) x[a] = origin[a] + spacing * idx[a];
        return x;
    }

    bool in_bounds(const Index<N>& idx) const {
        for (int a = 0; a < N; ++a) {
            if (idx[a] < 0 || idx[a] >= extents[a]) return false;
        }
        return true;
    }

    bool is_active(const Index<N>& idx) const {
        return in_bounds(idx) && active[static_cast<std::size_t>(linear(idx))] != 0;
    }

    /// Interior cell: the full 3^N stencil neighborhood is active.
    bool is_interior(const Index<N>& idx) const {
        if constexpr (N == 1) {
            for (int di = -1; di <= 1; ++di) {
                if (!is_active({idx[0] + di})) return false;
            }
        } else {
            for (int di = -1; di <= 1; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    if (!is_active({idx[0] + di, idx[1] + dj})) return false;
                }
            }
        }
        return true;
    }

    double value(const Index<N>& idx) const { return u[static_cast<std::size_t>(linear(idx))]; }
    double& value(const Index<N>& idx) { return u[static_cast<std::size_t>(linear(idx))]; }
};

/// Checks finiteness on active cells and grid-connectivity of the active
/// region. Throws invalid_argument_error on failure.
template <int N>
void validate_grid(const GraphGrid<N>& g) {
    long first_active = -1;
    long active_count = 0;
    for (long c = 0; c < g.cell_count(); ++c) {
        if (!g.active[static_cast<std::size_t>(c)]) continue;
        ++active_count;
        if (first_active < 0) first_active = c;
        if (!std::isfinite(g.u[static_cast<std::size_t>(c)])) {
            throw invalid_argument_error("grid: u is not finite on an active cell");
        }
    }
    if (active_count == 0) throw invalid_argument_error("grid: no active cells");

    // Flood fill over face neighbors.
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(g.cell_count()), 0);
    std::deque<long> queue{first_active};
    seen[static_cast<std::size_t>(first_active)] = 1;
    long reached = 0;
    while (!queue.empty()) {
        const long c = queue.front();
        queue.pop_front();
        ++reached;
        const Index<N> idx = g.unlinear(c);
        for (int a = 0; a < N; ++a) {
            for (int d = -1; d <= 1; d += 2) {
                Index<N> nb = idx;
                nb[a] += d;
                if (!g.is_active(nb)) continue;
                const long nc = g.linear(nb);
                if (!seen[static_cast<std::size_t>(nc)]) {
                    seen[static_cast<std::size_t>(nc)] = 1;
                    queue.push_back(nc);
                }
            }
        }
    }
    if (reached != active_count) {
        throw invalid_argument_error("grid: active region is not grid-connected");
    }
}

}  // namespace gcf

#endif  // GCFLOW_GRID_HPP
