#pragma once

#include <string>
#include <vector>

#include "squidfd/squidfd.hpp"

namespace squidfd::test {

/// Symmetric plate structure with a central unit field. The spacing stays
/// at 1/64, so the domain is [-d/128, d/128]^2 for `divisions` d.
inline Config symmetric_config(int divisions = 128) {
    Config c;
    const double half = divisions / 128.0;
    c.grid = {-half, half, -half, half, divisions, divisions};
    c.structure = {1.0 / 8, 1.0 / 16, 1.0 / 16, 7.0 / 16, 1.0 / 2, 1.0 / 64};
    c.field = {-1.0 / 16, 1.0 / 16, -1.0 / 16, 1.0 / 16, 1.0};
    return c;
}

inline Config plate_config(double wl, double wr, int divisions = 128) {
    Config c = symmetric_config(divisions);
    c.structure.w_l = wl;
    c.structure.w_r = wr;
    return c;
}

/// Wide-plate structure with narrow capacitor gaps.
inline Config wide_plate_config(double bxn, double bxp, double byn, double byp) {
    Config c = symmetric_config();
    c.structure = {1.0 / 8, 3.0 / 8, 3.0 / 8, 14.0 / 64, 1.0 / 4, 1.0 / 64};
    c.field = {bxn, bxp, byn, byp, 1.0};
    return c;
}

/// Small structure on a coarse grid, cheap enough for dense oracles.
inline Config small_config(int divisions = 16) {
    Config c;
    c.grid = {-1.0, 1.0, -1.0, 1.0, divisions, divisions};
    c.structure = {1.0 / 8, 1.0 / 8, 2.0 / 8, 3.0 / 8, 5.0 / 8, 1.0 / 8};
    c.field = {-1.0 / 8, 1.0 / 8, -1.0 / 8, 1.0 / 8, 1.0};
    return c;
}

/// x -> -x reflection of a node field.
inline ScalarGrid reflect_x(const ScalarGrid& f) {
    ScalarGrid out(f.grid());
    const int last = f.grid().x_divisions;
    for (int j = 0; j < f.grid().ny(); ++j) {
        for (int i = 0; i < f.grid().nx(); ++i) out(i, j) = f(last - i, j);
    }
    return out;
}

inline double max_abs_diff(const ScalarGrid& a, const ScalarGrid& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    return m;
}

inline ScalarGrid solve_magnetic(const Config& c) {
    const NodeMask mask = rasterize(c.grid, c.structure);
    const QuarterFlux q(c.grid, c.field);
    return solve(assemble(mask, q.source_density(mask), {}), c.solver).field;
}

}  // namespace squidfd::test
