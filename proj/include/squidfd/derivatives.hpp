#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "squidfd/geometry.hpp"
#include "squidfd/grid.hpp"

namespace squidfd {

/// Node-wise first derivatives of a scalar field.
struct Gradient {
    ScalarGrid dx;
    ScalarGrid dy;
};

namespace detail {

/// Whether the x-derivative at (i, j) is pinned to zero by a Neumann face:
/// a surface node with an x-facing normal and exactly one open x-edge.
inline bool neumann_x(const NodeMask* mask, int i, int j) {
    if (mask == nullptr || mask->node_class(i, j) != NodeClass::conductor_surface) return false;
    if (mask->normal(i, j).x == 0) return false;
    return mask->edge_open_x(i - 1, j) != mask->edge_open_x(i, j);
}

inline bool neumann_y(const NodeMask* mask, int i, int j) {
    if (mask == nullptr || mask->node_class(i, j) != NodeClass::conductor_surface) return false;
    if (mask->normal(i, j).y == 0) return false;
    return mask->edge_open_y(i, j - 1) != mask->edge_open_y(i, j);
}

enum class EdgeRule { first_order, second_order };

/// Derivative along x of `f` using central differences, zero on Neumann
/// faces, and one-sided differences on the left/right grid edges.
inline ScalarGrid diff_x(const ScalarGrid& f, const NodeMask* mask, EdgeRule edge) {
    const GridSpec& g = f.grid();
    ScalarGrid out(g);
    const double h = g.hx();
    const int last = g.x_divisions;
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i <= last; ++i) {
            double d;
            if (i == 0) {
                d = edge == EdgeRule::first_order ? (f(1, j) - f(0, j)) / h
                                                  : (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j)) / (2.0 * h);
            } else if (i == last) {
                d = edge == EdgeRule::first_order
                        ? (f(last, j) - f(last - 1, j)) / h
                        : (3.0 * f(last, j) - 4.0 * f(last - 1, j) + f(last - 2, j)) / (2.0 * h);
            } else if (neumann_x(mask, i, j)) {
                d = 0.0;
            } else {
                d = (f(i + 1, j) - f(i - 1, j)) / (2.0 * h);
            }
            out(i, j) = d;
        }
    }
    return out;
}

inline ScalarGrid diff_y(const ScalarGrid& f, const NodeMask* mask, EdgeRule edge) {
    const GridSpec& g = f.grid();
    ScalarGrid out(g);
    const double h = g.hy();
    const int last = g.y_divisions;
    for (int j = 0; j <= last; ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            double d;
            if (j == 0) {
                d = edge == EdgeRule::first_order ? (f(i, 1) - f(i, 0)) / h
                                                  : (-3.0 * f(i, 0) + 4.0 * f(i, 1) - f(i, 2)) / (2.0 * h);
            } else if (j == last) {
                d = edge == EdgeRule::first_order
                        ? (f(i, last) - f(i, last - 1)) / h
                        : (3.0 * f(i, last) - 4.0 * f(i, last - 1) + f(i, last - 2)) / (2.0 * h);
            } else if (neumann_y(mask, i, j)) {
                d = 0.0;
            } else {
                d = (f(i, j + 1) - f(i, j - 1)) / (2.0 * h);
            }
            out(i, j) = d;
        }
    }
    return out;
}

}  // namespace detail

/// Discrete gradient used by the summation (SM) integrals: central
/// differences, zero normal derivative on Neumann faces when a mask is
/// given, and (f1 - f0)/h on the outer boundary.
inline Gradient discrete_gradient(const ScalarGrid& f, const NodeMask* mask = nullptr) {
    if (mask && !(mask->grid() == f.grid())) throw InconsistentGrids("field and mask use different grids");
    return {detail::diff_x(f, mask, detail::EdgeRule::first_order),
            detail::diff_y(f, mask, detail::EdgeRule::first_order)};
}

/// A = z x grad(psi) = (-dpsi/dy, dpsi/dx).
inline VectorGrid vector_potential(const ScalarGrid& psi, const NodeMask* mask = nullptr) {
    Gradient g = discrete_gradient(psi, mask);
    g.dy *= -1.0;
    return {std::move(g.dy), std::move(g.dx)};
}

inline VectorGrid vector_potential(const ScalarGrid& psi, const NodeMask& mask) { return vector_potential(psi, &mask); }

/// Piecewise-bicubic Hermite interpolant (C1 across cells).
///
/// Node slopes come from the same stencils as the discrete gradient, with
/// second-order one-sided differences on the grid edges; the cross
/// derivative averages d/dx of f_y and d/dy of f_x.
class HermiteInterpolant {
public:
    explicit HermiteInterpolant(const ScalarGrid& f, const NodeMask* mask = nullptr)
        : f_(f),
          fx_(detail::diff_x(f, mask, detail::EdgeRule::second_order)),
          fy_(detail::diff_y(f, mask, detail::EdgeRule::second_order)),
          fxy_(f.grid()) {
        if (mask && !(mask->grid() == f.grid())) throw InconsistentGrids("field and mask use different grids");
        const ScalarGrid a = detail::diff_x(fy_, mask, detail::EdgeRule::second_order);
        const ScalarGrid b = detail::diff_y(fx_, mask, detail::EdgeRule::second_order);
        for (std::size_t k = 0; k < a.values().size(); ++k) {
            fxy_.values()[k] = 0.5 * (a.values()[k] + b.values()[k]);
        }
    }

    [[nodiscard]] const GridSpec& grid() const { return f_.grid(); }

    [[nodiscard]] double value(double x, double y) const { return eval(x, y, 0, 0); }
    [[nodiscard]] double dx(double x, double y) const { return eval(x, y, 1, 0); }
    [[nodiscard]] double dy(double x, double y) const { return eval(x, y, 0, 1); }

private:
    ScalarGrid f_, fx_, fy_, fxy_;

    // Cubic Hermite basis (h00, h10, h01, h11) or its derivative.
    static std::array<double, 4> basis(double t, int deriv) {
        const double t2 = t * t;
        const double t3 = t2 * t;
        if (deriv == 0) return {2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + t, -2 * t3 + 3 * t2, t3 - t2};
        return {6 * t2 - 6 * t, 3 * t2 - 4 * t + 1, -6 * t2 + 6 * t, 3 * t2 - 2 * t};
    }

    [[nodiscard]] double eval(double x, double y, int dx_order, int dy_order) const {
        const GridSpec& g = f_.grid();
        const double hx = g.hx();
        const double hy = g.hy();
        const double sx = (x - g.x_min) / hx;
        const double sy = (y - g.y_min) / hy;
        const int ci = std::clamp(static_cast<int>(std::floor(sx)), 0, g.x_divisions - 1);
        const int cj = std::clamp(static_cast<int>(std::floor(sy)), 0, g.y_divisions - 1);
        const auto bx = basis(sx - ci, dx_order);
        const auto by = basis(sy - cj, dy_order);
        double s = 0.0;
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                const int i = ci + a;
                const int j = cj + b;
                const double wx0 = bx[2 * a];
                const double wx1 = bx[2 * a + 1] * hx;
                const double wy0 = by[2 * b];
                const double wy1 = by[2 * b + 1] * hy;
                s += f_(i, j) * wx0 * wy0 + fx_(i, j) * wx1 * wy0 + fy_(i, j) * wx0 * wy1 +
                     fxy_(i, j) * wx1 * wy1;
            }
        }
        if (dx_order) s /= hx;
        if (dy_order) s /= hy;
        return s;
    }
};

}  // namespace squidfd
