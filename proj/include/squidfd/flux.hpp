#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "squidfd/geometry.hpp"
#include "squidfd/grid.hpp"

namespace squidfd {

/// Closed rectilinear polygon given by its vertices (last vertex joins the first).
using Polygon = std::vector<std::pair<double, double>>;

/// Even-odd point-in-polygon test. Callers only query points off the polygon's edges.
inline bool inside(const Polygon& poly, double x, double y) {
    bool in = false;
    const std::size_t n = poly.size();
    for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
        const auto [xa, ya] = poly[a];
        const auto [xb, yb] = poly[b];
        if ((ya > y) != (yb > y) && x < xa + (y - ya) * (xb - xa) / (yb - ya)) in = !in;
    }
    return in;
}

/// Field flux carried by each quarter of every nodal cell.
///
/// The nodal field B used for totals cannot tell which half of a boundary
/// node's cell holds the field. Quarter cells can: loops and conductor
/// faces along grid lines never cut a quarter, so enclosed flux and the
/// flux inside a control volume are exact sums of quarters.
class QuarterFlux {
public:
    QuarterFlux() = default;

    /// Exact quarter fluxes of a uniform rectangular field.
    QuarterFlux(const GridSpec& grid, const FieldSpec& f) : grid_(grid), q_(grid.node_count()) {
        f.validate();
        const double hx = grid.hx();
        const double hy = grid.hy();
        const auto overlap = [](double lo, double hi, double a, double b) {
            return std::max(0.0, std::min(hi, b) - std::max(lo, a));
        };
        for (int j = 0; j < grid.ny(); ++j) {
            const double y = grid.y(j);
            const std::array<double, 2> wy{overlap(y - 0.5 * hy, y, f.y_extent_n, f.y_extent_p),
                                           overlap(y, y + 0.5 * hy, f.y_extent_n, f.y_extent_p)};
            for (int i = 0; i < grid.nx(); ++i) {
                const double x = grid.x(i);
                const std::array<double, 2> wx{overlap(x - 0.5 * hx, x, f.x_extent_n, f.x_extent_p),
                                               overlap(x, x + 0.5 * hx, f.x_extent_n, f.x_extent_p)};
                auto& q = q_[grid.index(i, j)];
                for (int k = 0; k < 4; ++k) q[k] = f.b0 * wx[k & 1] * wy[k >> 1];
            }
        }
    }

    /// Spread a nodal field evenly over each nodal cell.
    explicit QuarterFlux(const ScalarGrid& b) : grid_(b.grid()), q_(b.grid().node_count()) {
        const double area = 0.25 * grid_.hx() * grid_.hy();
        for (std::size_t k = 0; k < q_.size(); ++k) q_[k].fill(b.values()[k] * area);
    }

    [[nodiscard]] const GridSpec& grid() const { return grid_; }

    /// Quarter order: lower-left, lower-right, upper-left, upper-right.
    [[nodiscard]] const std::array<double, 4>& quarters(int i, int j) const { return q_[grid_.index(i, j)]; }

    /// Mean field over the open part of each node's control volume: the
    /// right-hand side expected by `assemble`, which scales it by the open
    /// volume fraction.
    [[nodiscard]] ScalarGrid source_density(const NodeMask& mask) const {
        if (!(mask.grid() == grid_)) throw InconsistentGrids("field and mask use different grids");
        ScalarGrid out(grid_);
        const double area = 0.25 * grid_.hx() * grid_.hy();
        for (int j = 0; j < grid_.ny(); ++j) {
            for (int i = 0; i < grid_.nx(); ++i) {
                const auto& q = quarters(i, j);
                const std::array<bool, 4> open{mask.cell_empty(i - 1, j - 1), mask.cell_empty(i, j - 1),
                                               mask.cell_empty(i - 1, j), mask.cell_empty(i, j)};
                double flux = 0.0;
                int n = 0;
                for (int k = 0; k < 4; ++k) {
                    if (open[k]) {
                        flux += q[k];
                        ++n;
                    }
                }
                if (n > 0) out(i, j) = flux / (n * area);
            }
        }
        return out;
    }

    /// Flux through the region bounded by a grid-aligned polygon.
    [[nodiscard]] double enclosed(const Polygon& poly) const {
        double sum = 0.0;
        const double hx = grid_.hx();
        const double hy = grid_.hy();
        for (int j = 0; j < grid_.ny(); ++j) {
            for (int i = 0; i < grid_.nx(); ++i) {
                const auto& q = quarters(i, j);
                for (int k = 0; k < 4; ++k) {
                    if (q[k] == 0.0) continue;
                    const double x = grid_.x(i) + ((k & 1) ? 0.25 : -0.25) * hx;
                    const double y = grid_.y(j) + ((k >> 1) ? 0.25 : -0.25) * hy;
                    if (inside(poly, x, y)) sum += q[k];
                }
            }
        }
        return sum;
    }

    [[nodiscard]] double max_abs_density() const {
        const double area = 0.25 * grid_.hx() * grid_.hy();
        double m = 0.0;
        for (const auto& q : q_) {
            for (double v : q) m = std::max(m, std::abs(v) / area);
        }
        return m;
    }

private:
    GridSpec grid_{};
    std::vector<std::array<double, 4>> q_;
};

}  // namespace squidfd
