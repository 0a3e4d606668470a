#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <sstream>
#include <vector>

#include "helpers.hpp"

using namespace squidfd;

namespace {

const GridSpec coarse{-1.0, 1.0, -1.0, 1.0, 16, 16};

std::vector<ConductorRect> block() { return {{-2.0 / 8, 1.0 / 8, 2.0 / 8, 3.0 / 8, ConductorId::island}}; }

// Island ring one cell thick around a pocket at |x|, |y| < 2/8.
std::vector<ConductorRect> ring() {
    const double a = 2.0 / 8;
    const double b = 3.0 / 8;
    return {{-b, b, -b, -a, ConductorId::island},
            {-b, b, a, b, ConductorId::island},
            {-b, -a, -a, a, ConductorId::island},
            {a, b, -a, a, ConductorId::island}};
}

double entry(const LinearSystem& s, int i0, int j0, int i1, int j1) {
    const auto r = s.node_to_unknown[s.grid.index(i0, j0)];
    const auto c = s.node_to_unknown[s.grid.index(i1, j1)];
    EXPECT_GE(r, 0);
    EXPECT_GE(c, 0);
    return s.matrix.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
}

// Independent oracle: LU solve of the assembled matrix.
std::vector<double> dense_oracle(const LinearSystem& s) {
    const auto n = static_cast<Eigen::Index>(s.unknowns());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b(n);
    for (std::size_t r = 0; r < s.matrix.rows; ++r) {
        for (std::size_t k = s.matrix.row_start[r]; k < s.matrix.row_start[r + 1]; ++k) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s.matrix.col[k])) = s.matrix.val[k];
        }
        b(static_cast<Eigen::Index>(r)) = s.rhs[r];
    }
    const Eigen::VectorXd x = m.fullPivLu().solve(b);
    return {x.data(), x.data() + n};
}

std::vector<Config> small_family() {
    std::vector<Config> out{test::small_config(16)};
    Config c = test::small_config();
    c.grid = {-1.5, 1.5, -1.5, 1.5, 24, 24};
    c.field = {-3.0 / 8, 1.0 / 8, -1.0 / 8, 1.0 / 8, 1.0};
    out.push_back(c);
    c.structure.w_l = 3.0 / 8;
    out.push_back(c);
    return out;
}

}  // namespace

TEST(Assemble, FlatFaceRowIsHalfTheMirroredStencil) {
    const NodeMask m = rasterize(coarse, block());
    const double ih2 = 64.0;
    const LinearSystem s = assemble(m, ScalarGrid(coarse, 3.0), {});
    // (7, 11) sits on the top face of the block.
    EXPECT_DOUBLE_EQ(entry(s, 7, 11, 7, 12), 1.0 * ih2);
    EXPECT_DOUBLE_EQ(entry(s, 7, 11, 6, 11), 0.5 * ih2);
    EXPECT_DOUBLE_EQ(entry(s, 7, 11, 8, 11), 0.5 * ih2);
    EXPECT_DOUBLE_EQ(entry(s, 7, 11, 7, 11), -2.0 * ih2);
    EXPECT_DOUBLE_EQ(entry(s, 7, 11, 7, 10), 0.0);
    const auto r = static_cast<std::size_t>(s.node_to_unknown[coarse.index(7, 11)]);
    EXPECT_DOUBLE_EQ(s.rhs[r], 1.5);
}

TEST(Assemble, ConvexCornerRow) {
    const NodeMask m = rasterize(coarse, block());
    const double ih2 = 64.0;
    const LinearSystem s = assemble(m, ScalarGrid(coarse, 4.0), {});
    EXPECT_DOUBLE_EQ(entry(s, 6, 11, 5, 11), 1.0 * ih2);
    EXPECT_DOUBLE_EQ(entry(s, 6, 11, 6, 12), 1.0 * ih2);
    EXPECT_DOUBLE_EQ(entry(s, 6, 11, 7, 11), 0.5 * ih2);
    EXPECT_DOUBLE_EQ(entry(s, 6, 11, 6, 10), 0.5 * ih2);
    EXPECT_DOUBLE_EQ(entry(s, 6, 11, 6, 11), -3.0 * ih2);
    const auto r = static_cast<std::size_t>(s.node_to_unknown[coarse.index(6, 11)]);
    EXPECT_DOUBLE_EQ(s.rhs[r], 3.0);
}

TEST(Assemble, BoundaryNeighboursMoveToRhs) {
    const GridSpec g{0.0, 1.0, 0.0, 1.0, 8, 8};
    DirichletValues dv;
    dv.boundary = 2.0;
    const LinearSystem s = assemble(NodeMask(g), ScalarGrid(g, 1.0), dv);
    EXPECT_EQ(s.unknowns(), 49u);
    const auto r = static_cast<std::size_t>(s.node_to_unknown[g.index(1, 1)]);
    EXPECT_TRUE(s.anchored[r]);
    EXPECT_DOUBLE_EQ(s.rhs[r], 1.0 - 2.0 * 64.0 * 2.0);
    EXPECT_DOUBLE_EQ(entry(s, 1, 1, 1, 1), -4.0 * 64.0);
    const auto centre = static_cast<std::size_t>(s.node_to_unknown[g.index(4, 4)]);
    EXPECT_FALSE(s.anchored[centre]);
    EXPECT_DOUBLE_EQ(s.rhs[centre], 1.0);
}

TEST(Assemble, DirichletConductorsAreFixed) {
    const NodeMask m = rasterize(GridSpec{}, StructureParams{});
    DirichletValues dv;
    dv.island = 1.0;
    dv.ground = 0.0;
    const LinearSystem s = assemble(m, ScalarGrid(GridSpec{}), dv);
    EXPECT_EQ(s.unknowns(), m.count(NodeClass::exterior));
    EXPECT_TRUE(s.fill_nodes.empty());
    const LinearSystem neumann = assemble(m, ScalarGrid(GridSpec{}), {});
    EXPECT_EQ(neumann.unknowns(), m.count(NodeClass::exterior) + m.count(NodeClass::conductor_surface));
    EXPECT_EQ(neumann.fill_nodes.size(), m.count(NodeClass::conductor_interior));
}

TEST(AssembleProperty, MatrixSymmetricWithNegativeDiagonal) {
    std::vector<Config> family = small_family();
    for (int wl = 1; wl <= 5; ++wl) family.push_back(test::plate_config(wl / 16.0, 1.0 / 16));
    family.push_back(test::wide_plate_config(6.0 / 64, 7.0 / 64, -1.0 / 16, 1.0 / 16));
    for (const Config& c : family) {
        const NodeMask m = rasterize(c.grid, c.structure);
        const LinearSystem s = assemble(m, QuarterFlux(c.grid, c.field).source_density(m), {});
        const CsrMatrix& a = s.matrix;
        ASSERT_TRUE(a.structurally_symmetric());
        for (std::size_t r = 0; r < a.rows; ++r) {
            double row_sum = 0.0;
            for (std::size_t k = a.row_start[r]; k < a.row_start[r + 1]; ++k) {
                ASSERT_EQ(a.val[k], a.at(a.col[k], r));
                row_sum += a.val[k];
            }
            ASSERT_LT(a.at(r, r), 0.0);
            if (s.anchored[r]) {
                ASSERT_LT(row_sum, 0.0);
            } else {
                ASSERT_NEAR(row_sum, 0.0, 1e-9);
            }
        }
    }
}

TEST(Assemble, Errors) {
    const NodeMask m(coarse);
    EXPECT_THROW(assemble(m, ScalarGrid(GridSpec{}), {}), InconsistentGrids);
    DirichletValues dv;
    dv.boundary_field = ScalarGrid(GridSpec{});
    EXPECT_THROW(assemble(m, ScalarGrid(coarse), dv), InconsistentGrids);
}

TEST(Solve, MatchesDenseOracle) {
    for (const Config& c : small_family()) {
        const NodeMask m = rasterize(c.grid, c.structure);
        const LinearSystem s = assemble(m, QuarterFlux(c.grid, c.field).source_density(m), {});
        const std::vector<double> oracle = dense_oracle(s);
        double scale = 0.0;
        for (double v : oracle) scale = std::max(scale, std::abs(v));
        ASSERT_GT(scale, 0.0);
        for (SolveMethod method : {SolveMethod::cg, SolveMethod::sor, SolveMethod::dense_direct}) {
            SolverOptions opt;
            opt.method = method;
            opt.tol = 1e-12;
            opt.max_iter = 100000;
            const SolveOutput out = solve(s, opt);
            double err = 0.0;
            for (std::size_t r = 0; r < oracle.size(); ++r) {
                err = std::max(err, std::abs(out.field.values()[s.unknown_to_node[r]] - oracle[r]));
            }
            EXPECT_LE(err, 1e-10 * scale) << to_string(method);
        }
    }
}

TEST(Solve, ManufacturedPolynomialsAreExact) {
    const GridSpec g{-1.0, 1.0, -1.0, 1.0, 32, 32};
    const auto check = [&](auto exact, double laplacian) {
        ScalarGrid truth(g);
        for (int j = 0; j < g.ny(); ++j) {
            for (int i = 0; i < g.nx(); ++i) truth(i, j) = exact(g.x(i), g.y(j));
        }
        DirichletValues dv;
        dv.boundary_field = truth;
        SolverOptions opt;
        opt.tol = 1e-12;
        const SolveOutput out = solve(assemble(NodeMask(g), ScalarGrid(g, laplacian), dv), opt);
        EXPECT_LE(test::max_abs_diff(out.field, truth), 10 * opt.tol * std::max(1.0, truth.max_abs()));
    };
    check([](double x, double y) { return x * x + y * y; }, 4.0);
    check([](double x, double y) { return x * x * x - 3.0 * x * y * y; }, 0.0);
    check([](double x, double y) { return 0.5 * x * x - 2.0 * y + 1.0; }, 1.0);
}

TEST(Solve, ZeroSourceGivesZeroField) {
    const Config c = test::symmetric_config(96);
    const NodeMask m = rasterize(c.grid, c.structure);
    const SolveOutput out = solve(assemble(m, ScalarGrid(c.grid), {}));
    EXPECT_EQ(out.field.max_abs(), 0.0);
    EXPECT_EQ(out.report.iterations, 0u);
}

TEST(SolveProperty, Linearity) {
    const Config c = test::plate_config(3.0 / 16, 1.0 / 16, 96);
    const NodeMask m = rasterize(c.grid, c.structure);
    const ScalarGrid rhs = QuarterFlux(c.grid, c.field).source_density(m);
    const SolverOptions opt{SolveMethod::cg, 1e-12, 0};
    const ScalarGrid base = solve(assemble(m, rhs, {}), opt).field;
    for (double k : {-1.0, 2.0, 10.0}) {
        const ScalarGrid scaled = solve(assemble(m, k * rhs, {}), opt).field;
        EXPECT_LE(test::max_abs_diff(scaled, k * base), 1e-9 * std::abs(k) * base.max_abs()) << k;
    }
}

TEST(SolveProperty, Superposition) {
    Config c = test::plate_config(2.0 / 16, 1.0 / 16, 96);
    const NodeMask m = rasterize(c.grid, c.structure);
    const ScalarGrid a = QuarterFlux(c.grid, FieldSpec{-0.25, 0.0, -0.125, 0.125, 1.0}).source_density(m);
    const ScalarGrid b = QuarterFlux(c.grid, FieldSpec{0.0, 0.125, -0.25, 0.0, 3.0}).source_density(m);
    const SolverOptions opt{SolveMethod::cg, 1e-12, 0};
    const ScalarGrid sa = solve(assemble(m, a, {}), opt).field;
    const ScalarGrid sb = solve(assemble(m, b, {}), opt).field;
    const ScalarGrid sab = solve(assemble(m, a + b, {}), opt).field;
    EXPECT_LE(test::max_abs_diff(sab, sa + sb), 1e-9 * sab.max_abs());
}

TEST(SolveProperty, MirrorSymmetry) {
    for (int wl = 2; wl <= 5; wl += 3) {
        Config c = test::plate_config(wl / 16.0, 1.0 / 16, 96);
        c.field = {-0.125, 0.25, -0.0625, 0.125, 1.0};
        c.solver.tol = 1e-12;
        Config mirror = c;
        mirror.structure = c.structure.mirrored();
        mirror.field.x_extent_n = -c.field.x_extent_p;
        mirror.field.x_extent_p = -c.field.x_extent_n;
        const ScalarGrid a = test::solve_magnetic(c);
        const ScalarGrid b = test::solve_magnetic(mirror);
        EXPECT_LE(test::max_abs_diff(a, test::reflect_x(b)), 1e-9 * a.max_abs());
    }
}

TEST(SolveProperty, NeumannFaceFluxVanishes) {
    // With a solved field the finite-volume balance of every surface row holds.
    const Config c = test::small_config(16);
    const NodeMask m = rasterize(c.grid, c.structure);
    const LinearSystem s = assemble(m, QuarterFlux(c.grid, c.field).source_density(m), {});
    const SolveOutput out = solve(s, {SolveMethod::dense_direct, 1e-10, 0});
    std::vector<double> x(s.unknowns());
    for (std::size_t r = 0; r < x.size(); ++r) x[r] = out.field.values()[s.unknown_to_node[r]];
    std::vector<double> ax;
    s.matrix.multiply(x, ax);
    for (std::size_t r = 0; r < x.size(); ++r) EXPECT_NEAR(ax[r], s.rhs[r], 1e-9);
    EXPECT_TRUE(out.field.all_finite());
}

TEST(Solve, FillsNeumannInteriorsHarmonically) {
    const Config c = test::symmetric_config(96);
    const NodeMask m = rasterize(c.grid, c.structure);
    const SolveOutput out = solve(assemble(m, QuarterFlux(c.grid, c.field).source_density(m), {}));
    EXPECT_EQ(out.immaterial_nodes.size(), m.count(NodeClass::conductor_interior));
    for (std::size_t k : out.immaterial_nodes) {
        const int i = static_cast<int>(k % static_cast<std::size_t>(c.grid.nx()));
        const int j = static_cast<int>(k / static_cast<std::size_t>(c.grid.nx()));
        const double mean = 0.25 * (out.field(i - 1, j) + out.field(i + 1, j) + out.field(i, j - 1) + out.field(i, j + 1));
        EXPECT_NEAR(out.field(i, j), mean, 1e-8 * out.field.max_abs());
    }
}

TEST(Solve, Errors) {
    const Config c = test::symmetric_config(96);
    const NodeMask m = rasterize(c.grid, c.structure);
    const LinearSystem s = assemble(m, QuarterFlux(c.grid, c.field).source_density(m), {});
    try {
        solve(s, {SolveMethod::cg, 1e-10, 1});
        FAIL() << "expected NoConvergence";
    } catch (const NoConvergence& e) {
        EXPECT_EQ(e.report.iterations, 1u);
        EXPECT_GT(e.report.residual_norm, 1e-10);
    }
    EXPECT_THROW(solve(s, {SolveMethod::cg, 0.0, 0}), SolverError);
    EXPECT_THROW(solve(LinearSystem{}), EmptySystem);

    const NodeMask r = rasterize(coarse, ring());
    EXPECT_THROW(solve(assemble(r, ScalarGrid(coarse), {})), SingularSystem);
    DirichletValues dv;
    dv.island = 0.0;
    EXPECT_NO_THROW(solve(assemble(r, ScalarGrid(coarse, 1.0), dv)));
}

TEST(Solve, DumpListsEveryEntry) {
    const NodeMask m = rasterize(coarse, block());
    const LinearSystem s = assemble(m, ScalarGrid(coarse, 1.0), {});
    std::ostringstream os;
    dump_system(s, os);
    std::istringstream is(os.str());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(is, line)) ++lines;
    EXPECT_EQ(lines, s.matrix.col.size() + 1 + s.unknowns());
}
