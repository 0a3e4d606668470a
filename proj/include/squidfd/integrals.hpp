#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "squidfd/derivatives.hpp"
#include "squidfd/errors.hpp"
#include "squidfd/flux.hpp"
#include "squidfd/geometry.hpp"
#include "squidfd/grid.hpp"

namespace squidfd {

/// Polyline of axis-aligned segments whose vertices sit on grid nodes.
struct PathSpec {
    std::vector<std::pair<double, double>> vertices;

    PathSpec() = default;
    PathSpec(std::initializer_list<std::pair<double, double>> v) : vertices(v) {}
    explicit PathSpec(std::vector<std::pair<double, double>> v) : vertices(std::move(v)) {}

    [[nodiscard]] bool closed() const { return vertices.size() >= 2 && vertices.front() == vertices.back(); }

    [[nodiscard]] PathSpec reversed() const {
        return PathSpec(std::vector<std::pair<double, double>>(vertices.rbegin(), vertices.rend()));
    }

    /// Concatenate, dropping the duplicated joint vertex.
    [[nodiscard]] PathSpec then(const PathSpec& next) const {
        PathSpec out = *this;
        auto it = next.vertices.begin();
        if (!out.vertices.empty() && it != next.vertices.end() && *it == out.vertices.back()) ++it;
        out.vertices.insert(out.vertices.end(), it, next.vertices.end());
        return out;
    }

    /// Counter-clockwise rectangle starting at the lower-left corner.
    static PathSpec rectangle(double x0, double x1, double y0, double y1) {
        return PathSpec{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
    }
};

/// Path vertices resolved to grid indices.
struct GridPath {
    std::vector<std::pair<int, int>> nodes;
};

inline GridPath resolve(const PathSpec& path, const GridSpec& g) {
    if (path.vertices.size() < 2) throw PathOffGrid("path needs at least two vertices");
    GridPath out;
    for (const auto& [x, y] : path.vertices) {
        const auto i = g.column_of(x);
        const auto j = g.row_of(y);
        if (!i || !j || !g.contains(*i, *j)) {
            throw PathOffGrid("path vertex (" + std::to_string(x) + ", " + std::to_string(y) + ") is not a grid node");
        }
        out.nodes.emplace_back(*i, *j);
    }
    for (std::size_t k = 1; k < out.nodes.size(); ++k) {
        const auto [i0, j0] = out.nodes[k - 1];
        const auto [i1, j1] = out.nodes[k];
        if (i0 != i1 && j0 != j1) throw PathOffGrid("path segment is not axis-aligned");
    }
    return out;
}

/// One quadrature sample of a path integral: position, the weighted
/// integrand and whether it came from a horizontal segment.
struct PathSample {
    double x;
    double y;
    double value;
    bool horizontal;
};

/// Integrand of grad(psi) . (dl x z) for a unit step (sx, sy):
/// +x -> -dpsi/dy, -x -> +dpsi/dy, +y -> +dpsi/dx, -y -> -dpsi/dx.
inline double flux_integrand(int sx, int sy, double dpsi_dx, double dpsi_dy) {
    return sy * dpsi_dx - sx * dpsi_dy;
}

/// Summation samples over path nodes.
///
/// In open space this is the trapezoidal rule (weight 1/2 at segment
/// endpoints) applied to central differences. Each node's share of the
/// path is the average of the flux through the two dual faces beside it,
/// so near conductors only the parts of those faces bordering empty cells
/// count. On the outer boundary only the inward face exists, giving the
/// one-sided difference (f1 - f0)/h. With this weighting a closed loop
/// returns the flux its cells enclose, conductor faces included.
inline std::vector<PathSample> path_samples_sm(const ScalarGrid& psi, const PathSpec& path,
                                               const NodeMask* mask = nullptr) {
    const GridSpec& g = psi.grid();
    if (mask && !(mask->grid() == g)) throw InconsistentGrids("field and mask use different grids");
    const GridPath gp = resolve(path, g);
    const auto open = [&](int ci, int cj) { return mask == nullptr || mask->cell_empty(ci, cj) ? 1.0 : 0.0; };
    std::vector<PathSample> out;
    for (std::size_t k = 1; k < gp.nodes.size(); ++k) {
        const auto [i0, j0] = gp.nodes[k - 1];
        const auto [i1, j1] = gp.nodes[k];
        const int sx = (i1 > i0) - (i1 < i0);
        const int sy = (j1 > j0) - (j1 < j0);
        const int steps = std::abs(i1 - i0) + std::abs(j1 - j0);
        const bool vertical = sx == 0;
        const double h_par = vertical ? g.hy() : g.hx();
        const double h_norm = vertical ? g.hx() : g.hy();
        const int last = vertical ? g.x_divisions : g.y_divisions;
        for (int s = 0; s <= steps; ++s) {
            const int i = i0 + s * sx;
            const int j = j0 + s * sy;
            const int n = vertical ? i : j;  // position across the path
            const bool has_minus = n > 0;
            const bool has_plus = n < last;
            const double share = (has_minus && has_plus) ? 0.5 : 1.0;
            double deriv = 0.0;  // normal derivative times the path length it stands for
            for (int side : {-1, 1}) {
                if ((side < 0 && !has_minus) || (side > 0 && !has_plus)) continue;
                const double diff = vertical ? (side > 0 ? psi(i + 1, j) - psi(i, j) : psi(i, j) - psi(i - 1, j))
                                             : (side > 0 ? psi(i, j + 1) - psi(i, j) : psi(i, j) - psi(i, j - 1));
                // Cells beside the dual face: the one ahead along the path and the one behind.
                for (int along : {-1, 1}) {
                    if ((along < 0 && s == 0) || (along > 0 && s == steps)) continue;
                    const int dir = vertical ? sy : sx;
                    const int lo = along * dir > 0 ? 0 : -1;
                    const int ci = vertical ? (side > 0 ? i : i - 1) : i + lo;
                    const int cj = vertical ? j + lo : (side > 0 ? j : j - 1);
                    deriv += share * open(ci, cj) * 0.5 * h_par * diff / h_norm;
                }
            }
            const double value = vertical ? flux_integrand(sx, sy, deriv, 0.0) : flux_integrand(sx, sy, 0.0, deriv);
            out.push_back({g.x(i), g.y(j), value, !vertical});
        }
    }
    return out;
}

/// Composite Simpson samples of the interpolated integrand:
/// `samples_per_cell` panels of two subintervals in every grid cell.
inline std::vector<PathSample> path_samples_im(const HermiteInterpolant& f, const PathSpec& path,
                                               int samples_per_cell = 4) {
    if (samples_per_cell < 2) throw IntegralError("samples_per_cell must be at least 2");
    const GridSpec& g = f.grid();
    const GridPath gp = resolve(path, g);
    std::vector<PathSample> out;
    const int sub = 2 * samples_per_cell;
    for (std::size_t k = 1; k < gp.nodes.size(); ++k) {
        const auto [i0, j0] = gp.nodes[k - 1];
        const auto [i1, j1] = gp.nodes[k];
        const int sx = (i1 > i0) - (i1 < i0);
        const int sy = (j1 > j0) - (j1 < j0);
        const int cells = std::abs(i1 - i0) + std::abs(j1 - j0);
        const double h = sx != 0 ? g.hx() : g.hy();
        const double step = h / sub;
        for (int c = 0; c < cells; ++c) {
            for (int s = 0; s <= sub; ++s) {
                const double w = (s == 0 || s == sub) ? 1.0 : (s % 2 == 1 ? 4.0 : 2.0);
                const double x = g.x(i0) + sx * (c * h + s * step);
                const double y = g.y(j0) + sy * (c * h + s * step);
                const double v = flux_integrand(sx, sy, f.dx(x, y), f.dy(x, y));
                out.push_back({x, y, w * step / 3.0 * v, sx != 0});
            }
        }
    }
    return out;
}

inline double sum_samples(const std::vector<PathSample>& s) {
    double t = 0.0;
    for (const PathSample& p : s) t += p.value;
    return t;
}

/// Integral of grad(psi) . (dl x z) along `path` by node summation.
inline double path_integral_sm(const ScalarGrid& psi, const PathSpec& path, const NodeMask* mask = nullptr) {
    return sum_samples(path_samples_sm(psi, path, mask));
}

/// Same integral from the bicubic interpolant with Simpson quadrature.
inline double path_integral_im(const ScalarGrid& psi, const PathSpec& path, int samples_per_cell = 4,
                               const NodeMask* mask = nullptr) {
    return sum_samples(path_samples_im(HermiteInterpolant(psi, mask), path, samples_per_cell));
}

enum class Variant { sm, im };

/// Vertices of a closed path as a polygon (closing vertex dropped).
inline Polygon polygon_of(const PathSpec& loop) {
    if (!loop.closed()) throw OpenLoop("loop does not return to its first vertex");
    return Polygon(loop.vertices.begin(), loop.vertices.end() - 1);
}

/// Closed-loop summation integral of the magnetostatic stream function.
///
/// Each solved node carries the weight c = share of its open quarter
/// cells inside the loop (0 on the outer boundary), and the result is
/// sum over dual faces of (c_p - c_q) times the face flux from p to q.
/// Away from conductors this is the node summation along the loop; next
/// to them it also splits half-covered cells the way the finite-volume
/// rows do, so on a solved field it returns the enclosed source exactly.
inline double loop_integral_sm(const ScalarGrid& psi, const PathSpec& loop, const NodeMask* mask = nullptr) {
    const GridSpec& g = psi.grid();
    if (mask && !(mask->grid() == g)) throw InconsistentGrids("field and mask use different grids");
    const Polygon poly = polygon_of(loop);
    resolve(loop, g);
    double area2 = 0.0;
    for (std::size_t a = 0, b = poly.size() - 1; a < poly.size(); b = a++) {
        area2 += (poly[b].first - poly[a].first) * (poly[b].second + poly[a].second);
    }
    const double orientation = area2 >= 0.0 ? 1.0 : -1.0;

    const auto empty = [&](int ci, int cj) { return mask == nullptr || mask->cell_empty(ci, cj); };
    const double hx = g.hx();
    const double hy = g.hy();
    std::vector<double> c(g.node_count(), 0.0);
    for (int j = 1; j < g.y_divisions; ++j) {
        for (int i = 1; i < g.x_divisions; ++i) {
            int open = 0;
            int in = 0;
            for (int k = 0; k < 4; ++k) {
                const int dx = k & 1;
                const int dy = k >> 1;
                if (!empty(i - 1 + dx, j - 1 + dy)) continue;
                ++open;
                in += inside(poly, g.x(i) + (dx ? 0.25 : -0.25) * hx, g.y(j) + (dy ? 0.25 : -0.25) * hy);
            }
            if (open > 0) c[g.index(i, j)] = static_cast<double>(in) / open;
        }
    }
    const auto open_x = [&](int i, int j) { return mask == nullptr ? 1.0 : mask->open_fraction_x(i, j); };
    const auto open_y = [&](int i, int j) { return mask == nullptr ? 1.0 : mask->open_fraction_y(i, j); };
    double sum = 0.0;
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            const double cp = c[g.index(i, j)];
            if (i < g.x_divisions) {
                const double dc = cp - c[g.index(i + 1, j)];
                if (dc != 0.0) sum += dc * open_x(i, j) * (psi(i + 1, j) - psi(i, j)) * hy / hx;
            }
            if (j < g.y_divisions) {
                const double dc = cp - c[g.index(i, j + 1)];
                if (dc != 0.0) sum += dc * open_y(i, j) * (psi(i, j + 1) - psi(i, j)) * hx / hy;
            }
        }
    }
    return orientation * sum;
}

inline double loop_integral(const ScalarGrid& psi, const PathSpec& loop, Variant variant,
                            const NodeMask* mask = nullptr, int samples_per_cell = 4) {
    if (!loop.closed()) throw OpenLoop("loop does not return to its first vertex");
    return variant == Variant::sm ? loop_integral_sm(psi, loop, mask)
                                  : path_integral_im(psi, loop, samples_per_cell, mask);
}

/// Junction paths and the bulk closures that complete them into a loop.
struct JunctionLayout {
    PathSpec path1;           ///< across the left gap, island -> ground
    PathSpec path2;           ///< across the right gap, ground -> island
    PathSpec ground_closure;  ///< end of path1 to start of path2 along the ground surface
    PathSpec island_closure;  ///< end of path2 to start of path1 along the island surface
    double x1{0.0};
    double x2{0.0};
};

namespace detail {

/// Snap x onto the nearest grid column strictly inside (lo, hi).
inline double snap_inside(const GridSpec& g, double x, double lo, double hi) {
    const double h = g.hx();
    const auto ilo = g.column_of(lo);
    const auto ihi = g.column_of(hi);
    if (!ilo || !ihi || *ihi - *ilo < 2) throw PathOffGrid("capacitor gap too narrow for a junction path");
    const int i = std::clamp(static_cast<int>(std::lround((x - g.x_min) / h)), *ilo + 1, *ihi - 1);
    return g.x(i);
}

}  // namespace detail

/// Junction paths at x1 (left gap) and x2 (right gap), defaulting to the
/// middle of each plate. Off-grid positions snap to the nearest column
/// inside the gap.
inline JunctionLayout junction_layout(const GridSpec& g, const StructureParams& s,
                                      std::optional<double> x1 = std::nullopt,
                                      std::optional<double> x2 = std::nullopt) {
    JunctionLayout j;
    j.x1 = detail::snap_inside(g, x1.value_or(-s.lsc - 0.5 * s.w_l), s.left_gap_x0(), s.left_gap_x1());
    j.x2 = detail::snap_inside(g, x2.value_or(s.lsc + 0.5 * s.w_r), s.right_gap_x0(), s.right_gap_x1());
    const double a = s.gap_half_height();
    const double p = s.pos;
    j.path1 = PathSpec{{j.x1, a}, {j.x1, -a}};
    j.path2 = PathSpec{{j.x2, -a}, {j.x2, a}};
    j.ground_closure = PathSpec{{j.x1, -a}, {-s.lsc, -a}, {-s.lsc, -p}, {s.lsc, -p}, {s.lsc, -a}, {j.x2, -a}};
    j.island_closure = PathSpec{{j.x2, a}, {s.lsc, a}, {s.lsc, p}, {-s.lsc, p}, {-s.lsc, a}, {j.x1, a}};
    return j;
}

inline PathSpec junction_loop(const JunctionLayout& j) {
    return j.path1.then(j.ground_closure).then(j.path2).then(j.island_closure);
}

struct AlphaReport {
    double alpha1_sm{0.0};
    double alpha1_im{0.0};
    double alpha2_sm{0.0};
    double alpha2_im{0.0};
    double flux{0.0};        ///< flux enclosed by the junction loop
    double total_flux{0.0};  ///< flux of the whole field region
    std::optional<double> ratio_sm;
    std::optional<double> ratio_im;
    double loop_l4_sm{0.0};
    double loop_l4_im{0.0};
    std::optional<double> predicted_alpha;  ///< alpha1 / enclosed flux
    bool singular{false};                   ///< enclosed flux vanishes while alpha1 does not
};

inline std::optional<double> safe_ratio(double num, double den) {
    if (den == 0.0 || !std::isfinite(num / den)) return std::nullopt;
    return num / den;
}

/// Gauge parameters of a solved stream function.
///
/// psi must come from the magnetostatic solve on `mask`; `field` is the
/// driving field. The ratios are unset when the denominator is exactly zero.
inline AlphaReport compute_alphas(const ScalarGrid& psi, const NodeMask& mask, const QuarterFlux& field,
                                  const JunctionLayout& layout, int samples_per_cell = 4) {
    if (!(psi.grid() == mask.grid()) || !(field.grid() == mask.grid())) {
        throw InconsistentGrids("stream function, mask and field use different grids");
    }
    const auto join = [](const PathSpec& a, const PathSpec& b) {
        if (a.vertices.empty() || b.vertices.empty() || a.vertices.back() != b.vertices.front()) {
            throw PathsDoNotCloseLoop("junction paths and closures do not join end to end");
        }
    };
    join(layout.path1, layout.ground_closure);
    join(layout.ground_closure, layout.path2);
    join(layout.path2, layout.island_closure);
    join(layout.island_closure, layout.path1);

    const HermiteInterpolant interp(psi, &mask);
    const auto sm = [&](const PathSpec& p) { return sum_samples(path_samples_sm(psi, p, &mask)); };
    const auto im = [&](const PathSpec& p) { return sum_samples(path_samples_im(interp, p, samples_per_cell)); };

    AlphaReport r;
    r.alpha1_sm = sm(layout.path1);
    r.alpha2_sm = sm(layout.path2);
    r.alpha1_im = im(layout.path1);
    r.alpha2_im = im(layout.path2);
    const PathSpec loop = junction_loop(layout);
    r.loop_l4_sm = loop_integral_sm(psi, loop, &mask);
    r.loop_l4_im = im(loop);
    r.flux = field.enclosed(polygon_of(loop));
    double total = 0.0;
    for (int j = 0; j < field.grid().ny(); ++j) {
        for (int i = 0; i < field.grid().nx(); ++i) {
            for (double q : field.quarters(i, j)) total += q;
        }
    }
    r.total_flux = total;
    r.ratio_sm = safe_ratio(r.alpha1_sm, r.alpha2_sm);
    r.ratio_im = safe_ratio(r.alpha1_im, r.alpha2_im);
    const double cell = field.grid().hx() * field.grid().hy();
    const double threshold = 1e-12 * field.max_abs_density() * cell;
    if (std::abs(r.flux) <= threshold) {
        r.singular = r.alpha1_sm != 0.0;
    } else {
        r.predicted_alpha = r.alpha1_sm / r.flux;
    }
    return r;
}

struct JunctionExtremes {
    double alpha1{0.0};
    double alpha2_min{0.0};
    double alpha2_max{0.0};
    double x_min{0.0};  ///< junction-2 column of the minimum
    double x_max{0.0};
    std::optional<double> ratio_min;
    std::optional<double> ratio_max;
    double swept_flux{0.0};
    /// Largest deviation of alpha2 at interior positions from alpha2_min plus the flux swept so far.
    double interpolation_error{0.0};
    std::vector<std::pair<double, double>> profile;  ///< (x, alpha2) at every evaluated position
};

/// Alpha2 at the extreme junction-2 positions across the right gap, plus a
/// check at three interior positions that alpha2 grows by the flux swept.
/// Uses the SM variant unless `variant` says otherwise.
inline JunctionExtremes junction_alpha_extremes(const ScalarGrid& psi, const NodeMask& mask, const QuarterFlux& field,
                                                const StructureParams& s, std::optional<double> x1 = std::nullopt,
                                                Variant variant = Variant::sm, int samples_per_cell = 4) {
    const GridSpec& g = mask.grid();
    const double h = g.hx();
    const int i_lo = *g.column_of(s.right_gap_x0()) + 1;
    const int i_hi = *g.column_of(s.right_gap_x1()) - 1;
    if (i_hi <= i_lo) throw FieldNotInGap("right capacitor gap has no interior junction positions");
    const double a = s.gap_half_height();

    // Every quarter carrying flux must lie between the extreme paths and inside the gap rows.
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            const auto& q = field.quarters(i, j);
            for (int k = 0; k < 4; ++k) {
                if (q[k] == 0.0) continue;
                const double x = g.x(i) + ((k & 1) ? 0.25 : -0.25) * h;
                const double y = g.y(j) + ((k >> 1) ? 0.25 : -0.25) * g.hy();
                if (x < g.x(i_lo) || x > g.x(i_hi) || std::abs(y) > a) {
                    throw FieldNotInGap("field region is not inside the right capacitor gap");
                }
            }
        }
    }

    std::optional<HermiteInterpolant> interp;
    if (variant == Variant::im) interp.emplace(psi, &mask);
    const auto integrate = [&](const PathSpec& p) {
        return variant == Variant::sm ? sum_samples(path_samples_sm(psi, p, &mask))
                                      : sum_samples(path_samples_im(*interp, p, samples_per_cell));
    };
    const JunctionLayout base = junction_layout(g, s, x1);
    const auto alpha2_at = [&](int i) { return integrate(PathSpec{{g.x(i), -a}, {g.x(i), a}}); };

    JunctionExtremes e;
    e.alpha1 = integrate(base.path1);
    e.x_min = g.x(i_lo);
    e.x_max = g.x(i_hi);
    e.alpha2_min = alpha2_at(i_lo);
    e.alpha2_max = alpha2_at(i_hi);
    e.swept_flux = field.enclosed({{g.x(i_lo), -a}, {g.x(i_hi), -a}, {g.x(i_hi), a}, {g.x(i_lo), a}});
    e.ratio_min = safe_ratio(e.alpha1, e.alpha2_min);
    e.ratio_max = safe_ratio(e.alpha1, e.alpha2_max);
    e.profile.emplace_back(e.x_min, e.alpha2_min);
    for (int q = 1; q <= 3; ++q) {
        const int i = i_lo + (i_hi - i_lo) * q / 4;
        if (i <= i_lo || i >= i_hi) continue;
        const double v = alpha2_at(i);
        const double swept = field.enclosed({{g.x(i_lo), -a}, {g.x(i), -a}, {g.x(i), a}, {g.x(i_lo), a}});
        e.interpolation_error = std::max(e.interpolation_error, std::abs(v - (e.alpha2_min + swept)));
        e.profile.emplace_back(g.x(i), v);
    }
    e.profile.emplace_back(e.x_max, e.alpha2_max);
    return e;
}

/// The three fixed consistency loops: L1 reaches the outer boundary in y,
/// L2 is symmetric, L3 is asymmetric in x.
struct StandardLoops {
    PathSpec l1, l2, l3;
};

inline StandardLoops standard_loops(const GridSpec& g) {
    return {PathSpec::rectangle(-0.5, 0.5, g.y_min, g.y_max), PathSpec::rectangle(-0.5, 0.5, -7.0 / 8, 7.0 / 8),
            PathSpec::rectangle(-0.5, 5.0 / 8, -7.0 / 8, 7.0 / 8)};
}

/// Whether a loop lies on the grid and never cuts through conductor cells
/// (running along a conductor face is allowed).
inline bool loop_applicable(const PathSpec& loop, const NodeMask& mask) {
    GridPath gp;
    try {
        gp = resolve(loop, mask.grid());
    } catch (const PathOffGrid&) {
        return false;
    }
    for (std::size_t k = 1; k < gp.nodes.size(); ++k) {
        auto [i, j] = gp.nodes[k - 1];
        const auto [i1, j1] = gp.nodes[k];
        const int sx = (i1 > i) - (i1 < i);
        const int sy = (j1 > j) - (j1 < j);
        while (i != i1 || j != j1) {
            const bool open = sx != 0 ? mask.edge_open_x(std::min(i, i + sx), j) : mask.edge_open_y(i, std::min(j, j + sy));
            if (!open) return false;
            i += sx;
            j += sy;
        }
    }
    return true;
}

}  // namespace squidfd
