#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "squidfd/errors.hpp"
#include "squidfd/grid.hpp"

namespace squidfd {

enum class NodeClass : std::uint8_t {
    exterior = 0,
    conductor_interior = 1,
    conductor_surface = 2,
    outer_boundary = 3,
};

enum class ConductorId : std::uint8_t { none = 0, island = 1, ground = 2 };

inline const char* to_string(NodeClass c) {
    switch (c) {
        case NodeClass::exterior: return "exterior";
        case NodeClass::conductor_interior: return "interior";
        case NodeClass::conductor_surface: return "surface";
        case NodeClass::outer_boundary: return "boundary";
    }
    return "?";
}

/// Outward normal of a surface node. A corner node carries one nonzero
/// component per exposed face.
struct Normal {
    std::int8_t x{0};
    std::int8_t y{0};
    friend bool operator==(const Normal&, const Normal&) = default;
};

/// Axis-aligned conductor rectangle in physical coordinates.
struct ConductorRect {
    double x0, x1, y0, y1;
    ConductorId id;
};

/// Parametric parallel-plate SQUID cross-section.
///
/// The island is a wire spanning x in [-lsc, lsc] at y in [pos, pos+t]
/// with a plate hanging below each end: the left plate covers
/// x in [-lsc-w_l, -lsc], the right plate x in [lsc, lsc+w_r], both
/// y in [pos-d-t, pos+t]. The ground is the mirror image in y = 0, so
/// the capacitor gaps span |y| < pos-d-t.
struct StructureParams {
    double lsc{1.0 / 8};
    double w_l{1.0 / 16};
    double w_r{1.0 / 16};
    double d{7.0 / 16};
    double pos{1.0 / 2};
    double t{1.0 / 64};

    void validate() const {
        for (double v : {lsc, w_l, w_r, d, pos, t}) {
            if (!(v > 0.0)) throw GeometryError("structure parameters must be positive");
        }
        if (!(gap_half_height() > 0.0)) throw GeometryOverlap("plates reach y = 0: pos must exceed d + t");
    }

    /// Non-fatal remarks (thin-wire assumption).
    [[nodiscard]] std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (!(t < d / 4)) w.emplace_back("wire thickness t is not small against plate length d (t >= d/4)");
        return w;
    }

    /// Half-height of the capacitor gaps (y of the island plate bottom face).
    [[nodiscard]] double gap_half_height() const { return pos - d - t; }
    [[nodiscard]] double left_gap_x0() const { return -lsc - w_l; }
    [[nodiscard]] double left_gap_x1() const { return -lsc; }
    [[nodiscard]] double right_gap_x0() const { return lsc; }
    [[nodiscard]] double right_gap_x1() const { return lsc + w_r; }

    [[nodiscard]] StructureParams mirrored() const {
        StructureParams m = *this;
        std::swap(m.w_l, m.w_r);
        return m;
    }

    [[nodiscard]] std::vector<ConductorRect> rects() const {
        const double top = pos + t;
        const double bottom = gap_half_height();
        return {
            {-lsc, lsc, pos, top, ConductorId::island},
            {-lsc - w_l, -lsc, bottom, top, ConductorId::island},
            {lsc, lsc + w_r, bottom, top, ConductorId::island},
            {-lsc, lsc, -top, -pos, ConductorId::ground},
            {-lsc - w_l, -lsc, -top, -bottom, ConductorId::ground},
            {lsc, lsc + w_r, -top, -bottom, ConductorId::ground},
        };
    }

    friend bool operator==(const StructureParams&, const StructureParams&) = default;
};

/// Rectangular region of uniform field B0.
struct FieldSpec {
    double x_extent_n{-1.0 / 16};
    double x_extent_p{1.0 / 16};
    double y_extent_n{-1.0 / 16};
    double y_extent_p{1.0 / 16};
    double b0{1.0};

    void validate() const {
        if (x_extent_n > x_extent_p || y_extent_n > y_extent_p) {
            throw GeometryError("field extents must satisfy n <= p");
        }
        if (!std::isfinite(b0)) throw GeometryError("field magnitude must be finite");
    }

    friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

/// Per-node classification of a rasterized structure.
///
/// Conductors are stored as occupied grid cells; node classes, normals
/// and the finite-volume face fractions all derive from that cell map.
class NodeMask {
public:
    NodeMask() = default;
    explicit NodeMask(GridSpec grid)
        : grid_(grid),
          cells_(static_cast<std::size_t>(grid.x_divisions) * grid.y_divisions, ConductorId::none),
          classes_(grid.node_count(), NodeClass::exterior),
          conductors_(grid.node_count(), ConductorId::none),
          normals_(grid.node_count()) {
        for (int j = 0; j < grid_.ny(); ++j) {
            for (int i = 0; i < grid_.nx(); ++i) {
                if (grid_.on_boundary(i, j)) classes_[grid_.index(i, j)] = NodeClass::outer_boundary;
            }
        }
    }

    [[nodiscard]] const GridSpec& grid() const { return grid_; }

    [[nodiscard]] NodeClass node_class(int i, int j) const { return classes_[grid_.index(i, j)]; }
    [[nodiscard]] ConductorId conductor(int i, int j) const { return conductors_[grid_.index(i, j)]; }
    [[nodiscard]] Normal normal(int i, int j) const { return normals_[grid_.index(i, j)]; }
    [[nodiscard]] std::span<const NodeClass> classes() const { return classes_; }
    [[nodiscard]] std::span<const ConductorId> conductors() const { return conductors_; }

    /// Conductor occupying cell (ci, cj); cells outside the grid are empty.
    [[nodiscard]] ConductorId cell(int ci, int cj) const {
        if (ci < 0 || cj < 0 || ci >= grid_.x_divisions || cj >= grid_.y_divisions) {
            return ConductorId::none;
        }
        return cells_[static_cast<std::size_t>(cj) * grid_.x_divisions + ci];
    }
    [[nodiscard]] bool cell_empty(int ci, int cj) const { return cell(ci, cj) == ConductorId::none; }

    /// Fraction (0, 1/2, 1) of the dual face between (i,j) and (i+1,j) lying outside conductors.
    [[nodiscard]] double open_fraction_x(int i, int j) const {
        return 0.5 * (static_cast<int>(cell_empty(i, j - 1)) + static_cast<int>(cell_empty(i, j)));
    }
    /// Same for the dual face between (i,j) and (i,j+1).
    [[nodiscard]] double open_fraction_y(int i, int j) const {
        return 0.5 * (static_cast<int>(cell_empty(i - 1, j)) + static_cast<int>(cell_empty(i, j)));
    }
    [[nodiscard]] bool edge_open_x(int i, int j) const { return open_fraction_x(i, j) > 0.0; }
    [[nodiscard]] bool edge_open_y(int i, int j) const { return open_fraction_y(i, j) > 0.0; }

    /// Share of the nodal cell of (i, j) outside conductors.
    [[nodiscard]] double volume_fraction(int i, int j) const {
        const int open = static_cast<int>(cell_empty(i - 1, j - 1)) + static_cast<int>(cell_empty(i, j - 1)) +
                         static_cast<int>(cell_empty(i - 1, j)) + static_cast<int>(cell_empty(i, j));
        return 0.25 * open;
    }

    [[nodiscard]] bool has_conductor(ConductorId id) const {
        return std::find(cells_.begin(), cells_.end(), id) != cells_.end();
    }

    [[nodiscard]] std::size_t count(NodeClass c) const {
        return static_cast<std::size_t>(std::count(classes_.begin(), classes_.end(), c));
    }

    friend bool operator==(const NodeMask&, const NodeMask&) = default;

    friend NodeMask rasterize(const GridSpec& grid, std::span<const ConductorRect> rects);

private:
    GridSpec grid_{};
    std::vector<ConductorId> cells_;
    std::vector<NodeClass> classes_;
    std::vector<ConductorId> conductors_;
    std::vector<Normal> normals_;

    void set_cell(int ci, int cj, ConductorId id) {
        cells_[static_cast<std::size_t>(cj) * grid_.x_divisions + ci] = id;
    }

    void classify();
    void check_connected(ConductorId id) const;
};

namespace detail {

inline int sign(int v) { return (v > 0) - (v < 0); }

}  // namespace detail

inline void NodeMask::classify() {
    for (int j = 0; j < grid_.ny(); ++j) {
        for (int i = 0; i < grid_.nx(); ++i) {
            const std::size_t k = grid_.index(i, j);
            const std::array<ConductorId, 4> quad{cell(i - 1, j - 1), cell(i, j - 1), cell(i - 1, j), cell(i, j)};
            bool island = false;
            bool ground = false;
            int occupied = 0;
            for (ConductorId c : quad) {
                island |= c == ConductorId::island;
                ground |= c == ConductorId::ground;
                occupied += c != ConductorId::none;
            }
            if (island && ground) {
                throw GeometryOverlap("island and ground touch at node (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
            }
            if (grid_.on_boundary(i, j)) {
                classes_[k] = NodeClass::outer_boundary;
                continue;
            }
            if (occupied == 0) continue;
            conductors_[k] = island ? ConductorId::island : ConductorId::ground;
            if (occupied == 4) {
                classes_[k] = NodeClass::conductor_interior;
                continue;
            }
            classes_[k] = NodeClass::conductor_surface;
            const auto open = [](ConductorId c) { return static_cast<int>(c == ConductorId::none); };
            // quad order: lower-left, lower-right, upper-left, upper-right
            normals_[k].x = static_cast<std::int8_t>(
                detail::sign(open(quad[1]) + open(quad[3]) - open(quad[0]) - open(quad[2])));
            normals_[k].y = static_cast<std::int8_t>(
                detail::sign(open(quad[2]) + open(quad[3]) - open(quad[0]) - open(quad[1])));
        }
    }
}

inline void NodeMask::check_connected(ConductorId id) const {
    std::vector<char> seen(grid_.node_count(), 0);
    std::size_t total = 0;
    int si = -1;
    int sj = -1;
    for (int j = 0; j < grid_.ny(); ++j) {
        for (int i = 0; i < grid_.nx(); ++i) {
            if (conductor(i, j) == id) {
                ++total;
                if (si < 0) {
                    si = i;
                    sj = j;
                }
            }
        }
    }
    if (total == 0) return;
    std::deque<std::pair<int, int>> queue{{si, sj}};
    seen[grid_.index(si, sj)] = 1;
    std::size_t reached = 0;
    while (!queue.empty()) {
        auto [i, j] = queue.front();
        queue.pop_front();
        ++reached;
        constexpr std::array<std::pair<int, int>, 4> steps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
        for (auto [di, dj] : steps) {
            const int a = i + di;
            const int b = j + dj;
            if (!grid_.contains(a, b) || conductor(a, b) != id || seen[grid_.index(a, b)]) continue;
            seen[grid_.index(a, b)] = 1;
            queue.emplace_back(a, b);
        }
    }
    if (reached != total) {
        throw GeometryError(std::string(id == ConductorId::island ? "island" : "ground") +
                            " conductor is not 4-connected");
    }
}

/// Rasterize conductor rectangles onto the grid. Every rectangle edge must
/// lie on a grid line and keep two nodes of margin to the outer boundary.
inline NodeMask rasterize(const GridSpec& grid, std::span<const ConductorRect> rects) {
    grid.validate();
    NodeMask mask(grid);
    for (const ConductorRect& r : rects) {
        if (r.id == ConductorId::none) throw GeometryError("conductor rectangle without conductor id");
        const auto i0 = grid.column_of(r.x0);
        const auto i1 = grid.column_of(r.x1);
        const auto j0 = grid.row_of(r.y0);
        const auto j1 = grid.row_of(r.y1);
        if (!i0 || !i1 || !j0 || !j1) {
            throw GeometryOffGrid("conductor edge not on a grid line: [" + std::to_string(r.x0) + ", " +
                                  std::to_string(r.x1) + "] x [" + std::to_string(r.y0) + ", " +
                                  std::to_string(r.y1) + "]");
        }
        if (*i1 <= *i0 || *j1 <= *j0) throw GeometryError("conductor rectangle has no area");
        if (*i0 < 2 || *j0 < 2 || *i1 > grid.x_divisions - 2 || *j1 > grid.y_divisions - 2) {
            throw MarginViolation("structure lies within 2 nodes of the outer boundary");
        }
        for (int cj = *j0; cj < *j1; ++cj) {
            for (int ci = *i0; ci < *i1; ++ci) {
                const ConductorId prev = mask.cell(ci, cj);
                if (prev != ConductorId::none && prev != r.id) {
                    throw GeometryOverlap("island and ground overlap");
                }
                mask.set_cell(ci, cj, r.id);
            }
        }
    }
    mask.classify();
    mask.check_connected(ConductorId::island);
    mask.check_connected(ConductorId::ground);
    return mask;
}

inline NodeMask rasterize(const GridSpec& grid, const StructureParams& s) {
    s.validate();
    const std::vector<ConductorRect> rects = s.rects();
    return rasterize(grid, rects);
}

/// Nodal field of a uniform rectangular region. Each node carries B0 times
/// the fraction of its nodal cell inside the region.
inline ScalarGrid field_values(const GridSpec& grid, const FieldSpec& f) {
    f.validate();
    ScalarGrid b(grid);
    const double hx = grid.hx();
    const double hy = grid.hy();
    const auto overlap = [](double c, double h, double lo, double hi) {
        return std::max(0.0, std::min(c + 0.5 * h, hi) - std::max(c - 0.5 * h, lo)) / h;
    };
    for (int j = 0; j < grid.ny(); ++j) {
        const double wy = overlap(grid.y(j), hy, f.y_extent_n, f.y_extent_p);
        if (wy == 0.0) continue;
        for (int i = 0; i < grid.nx(); ++i) {
            const double wx = overlap(grid.x(i), hx, f.x_extent_n, f.x_extent_p);
            if (wx != 0.0) b(i, j) = f.b0 * wx * wy;
        }
    }
    return b;
}

/// As above, rejecting a field that reaches into a conductor bulk.
inline ScalarGrid field_values(const NodeMask& mask, const FieldSpec& f) {
    ScalarGrid b = field_values(mask.grid(), f);
    const GridSpec& g = mask.grid();
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            if (b(i, j) != 0.0 && mask.node_class(i, j) == NodeClass::conductor_interior) {
                throw FieldInConductor("field region reaches conductor interior at (" + std::to_string(g.x(i)) +
                                       ", " + std::to_string(g.y(j)) + ")");
            }
        }
    }
    return b;
}

/// Discrete surface integral of B, summed row-major.
inline double total_flux(const ScalarGrid& b) {
    double sum = 0.0;
    for (double v : b.values()) sum += v;
    return sum * b.grid().hx() * b.grid().hy();
}

}  // namespace squidfd
