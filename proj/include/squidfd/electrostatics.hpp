#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "squidfd/errors.hpp"
#include "squidfd/geometry.hpp"
#include "squidfd/integrals.hpp"
#include "squidfd/solver.hpp"

namespace squidfd {

/// Laplace solution with the island at V = 1, the ground and the outer boundary at V = 0.
inline SolveOutput solve_potential(const NodeMask& mask, const SolverOptions& opt = {}) {
    if (!mask.has_conductor(ConductorId::island)) throw MissingConductor("structure has no island conductor");
    if (!mask.has_conductor(ConductorId::ground)) throw MissingConductor("structure has no ground conductor");
    DirichletValues dv;
    dv.island = 1.0;
    dv.ground = 0.0;
    const LinearSystem sys = assemble(mask, ScalarGrid(mask.grid()), dv);
    return solve(sys, opt);
}

/// Counter-clockwise boundary of a conductor's cells dilated by `offset`
/// cells in every direction (diagonals included).
inline PathSpec gaussian_contour(const NodeMask& mask, ConductorId id, int offset = 1) {
    if (offset < 1) throw IntegralError("Gaussian contour offset must be at least one cell");
    const GridSpec& g = mask.grid();
    const int cx = g.x_divisions;
    const int cy = g.y_divisions;
    std::vector<char> in(static_cast<std::size_t>(cx) * cy, 0);
    bool any = false;
    for (int cj = 0; cj < cy; ++cj) {
        for (int ci = 0; ci < cx; ++ci) {
            if (mask.cell(ci, cj) != id) continue;
            any = true;
            for (int b = std::max(0, cj - offset); b <= std::min(cy - 1, cj + offset); ++b) {
                for (int a = std::max(0, ci - offset); a <= std::min(cx - 1, ci + offset); ++a) {
                    in[static_cast<std::size_t>(b) * cx + a] = 1;
                }
            }
        }
    }
    if (!any) throw MissingConductor("conductor absent from mask");
    const auto filled = [&](int ci, int cj) {
        return ci >= 0 && cj >= 0 && ci < cx && cj < cy && in[static_cast<std::size_t>(cj) * cx + ci];
    };

    // Directed boundary edges keyed by their start node, each cell walked counter-clockwise.
    std::map<std::pair<int, int>, std::pair<int, int>> next;
    const auto add = [&](int i0, int j0, int i1, int j1) {
        if (!next.emplace(std::make_pair(i0, j0), std::make_pair(i1, j1)).second) {
            throw IntegralError("Gaussian contour touches itself");
        }
    };
    for (int cj = 0; cj < cy; ++cj) {
        for (int ci = 0; ci < cx; ++ci) {
            if (!filled(ci, cj)) continue;
            if (!filled(ci, cj - 1)) add(ci, cj, ci + 1, cj);
            if (!filled(ci + 1, cj)) add(ci + 1, cj, ci + 1, cj + 1);
            if (!filled(ci, cj + 1)) add(ci + 1, cj + 1, ci, cj + 1);
            if (!filled(ci - 1, cj)) add(ci, cj + 1, ci, cj);
        }
    }
    const std::pair<int, int> start = next.begin()->first;
    std::vector<std::pair<int, int>> nodes{start};
    std::pair<int, int> at = start;
    do {
        at = next.at(at);
        nodes.push_back(at);
    } while (at != start);
    if (nodes.size() - 1 != next.size()) throw IntegralError("Gaussian contour is not a single loop");

    // Keep only the corners.
    std::vector<std::pair<int, int>> corners{nodes.front()};
    for (std::size_t k = 1; k + 1 < nodes.size(); ++k) {
        const auto [a0, b0] = nodes[k - 1];
        const auto [a1, b1] = nodes[k];
        const auto [a2, b2] = nodes[k + 1];
        if ((a1 - a0) != (a2 - a1) || (b1 - b0) != (b2 - b1)) corners.push_back(nodes[k]);
    }
    corners.push_back(nodes.back());
    PathSpec out;
    for (auto [i, j] : corners) {
        if (mask.node_class(i, j) != NodeClass::exterior) {
            throw IntegralError("Gaussian contour runs through a conductor or the outer boundary");
        }
        out.vertices.emplace_back(g.x(i), g.y(j));
    }
    // Edges between corners must stay in the exterior too.
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        if (mask.node_class(nodes[k].first, nodes[k].second) != NodeClass::exterior) {
            throw IntegralError("Gaussian contour runs through a conductor or the outer boundary");
        }
    }
    return out;
}

struct SideCharges {
    double left{0.0};
    double right{0.0};
    double excluded{0.0};
};

/// Split contour samples by the x = 0 plane (samples on it count half to each side).
inline SideCharges split_at_zero(const std::vector<PathSample>& samples) {
    SideCharges c;
    for (const PathSample& s : samples) {
        if (s.x < 0.0) {
            c.left += s.value;
        } else if (s.x > 0.0) {
            c.right += s.value;
        } else {
            c.left += 0.5 * s.value;
            c.right += 0.5 * s.value;
        }
    }
    return c;
}

/// Split by the planes x = +-lsc. Horizontal samples over the wire span are
/// excluded (half on the planes themselves); vertical samples go by sign of x.
inline SideCharges split_at_lsc(const std::vector<PathSample>& samples, double lsc) {
    SideCharges c;
    const double tol = 1e-12 * std::max(1.0, lsc);
    for (const PathSample& s : samples) {
        if (!s.horizontal) {
            if (s.x < 0.0) {
                c.left += s.value;
            } else if (s.x > 0.0) {
                c.right += s.value;
            } else {
                c.excluded += s.value;
            }
            continue;
        }
        const double ax = std::abs(s.x);
        double& side = s.x < 0.0 ? c.left : c.right;
        if (ax > lsc + tol) {
            side += s.value;
        } else if (ax >= lsc - tol) {
            side += 0.5 * s.value;
            c.excluded += 0.5 * s.value;
        } else {
            c.excluded += s.value;
        }
    }
    return c;
}

struct CapacitanceReport {
    double ratio_sm_0{0.0};
    double ratio_im_0{0.0};
    double ratio_sm_lsc{0.0};
    double ratio_im_lsc{0.0};
    double q_island{0.0};  ///< SM charge inside the island contour
    double q_ground{0.0};
    double q_outer{0.0};  ///< SM charge inside a loop one node within the outer boundary
    double q_left_sm_0{0.0};
    double q_right_sm_0{0.0};
    double q_wire_sm{0.0};  ///< island charge left out by the lsc delimiter
    double predicted_alpha_you{0.0};  ///< C2 / (C1 + C2) from the SM x = 0 ratio
    int contour_offset{1};
};

/// Junction capacitance ratios C2/C1 (right over left) from the flux of
/// E = -grad V through a contour around the island.
inline CapacitanceReport capacitance_ratios(const ScalarGrid& v, const NodeMask& mask, const StructureParams& s,
                                            int offset = 1, int samples_per_cell = 4) {
    if (!(v.grid() == mask.grid())) throw InconsistentGrids("potential and mask use different grids");
    const GridSpec& g = mask.grid();
    const HermiteInterpolant interp(v);
    const PathSpec island = gaussian_contour(mask, ConductorId::island, offset);
    const PathSpec ground = gaussian_contour(mask, ConductorId::ground, offset);

    // Charge is minus the outward flux of grad V.
    const auto negate = [](std::vector<PathSample> s) {
        for (PathSample& p : s) p.value = -p.value;
        return s;
    };
    const auto sm = negate(path_samples_sm(v, island));
    const auto im = negate(path_samples_im(interp, island, samples_per_cell));

    const auto ratio = [](const SideCharges& c) {
        if (std::abs(c.left) < 1e-12) throw DegenerateCharge("left-side charge vanishes");
        return c.right / c.left;
    };
    CapacitanceReport r;
    r.contour_offset = offset;
    const SideCharges sm0 = split_at_zero(sm);
    const SideCharges smlsc = split_at_lsc(sm, s.lsc);
    r.ratio_sm_0 = ratio(sm0);
    r.ratio_im_0 = ratio(split_at_zero(im));
    r.ratio_sm_lsc = ratio(smlsc);
    r.ratio_im_lsc = ratio(split_at_lsc(im, s.lsc));
    r.q_left_sm_0 = sm0.left;
    r.q_right_sm_0 = sm0.right;
    r.q_wire_sm = smlsc.excluded;
    r.q_island = sum_samples(sm);
    r.q_ground = -sum_samples(path_samples_sm(v, ground));
    const PathSpec outer = PathSpec::rectangle(g.x(1), g.x(g.x_divisions - 1), g.y(1), g.y(g.y_divisions - 1));
    r.q_outer = -sum_samples(path_samples_sm(v, outer));
    r.predicted_alpha_you = r.ratio_sm_0 / (1.0 + r.ratio_sm_0);
    return r;
}

}  // namespace squidfd
