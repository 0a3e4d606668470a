#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "helpers.hpp"

using namespace squidfd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("squidfd_test_" + std::to_string(::getpid()) + "_" + name);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    os << text;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST(ParseNumber, FractionsAndDecimals) {
    EXPECT_EQ(parse_number("1/16", "k"), 0.0625);
    EXPECT_EQ(parse_number(" 14/64 ", "k"), 0.21875);
    EXPECT_EQ(parse_number("-3/8", "k"), -0.375);
    EXPECT_EQ(parse_number("0.1", "k"), 0.1);
    EXPECT_EQ(parse_number("+2.5e-1", "k"), 0.25);
    EXPECT_EQ(parse_number("1 / 3", "k"), 1.0 / 3.0);
}

TEST(ParseNumber, ErrorsNameTheKey) {
    try {
        parse_number("1/0", "structure.wl");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("structure.wl"), std::string::npos);
    }
    EXPECT_THROW(parse_number("", "k"), ConfigError);
    EXPECT_THROW(parse_number("abc", "k"), ConfigError);
    EXPECT_THROW(parse_number("1/2/3", "k"), ConfigError);
    EXPECT_THROW(parse_number("inf", "k"), ConfigError);
    EXPECT_THROW(parse_int("2.5", "k"), ConfigError);
}

TEST(Config, ParsesSections) {
    const Config c = parse_config(
        "[grid]\nxmin = -2\nxmax = 2\nxdiv = 256\n"
        "[structure]\nwl = 5/16\n"
        "[field]\nb0 = 3\n"
        "[junctions]\nx2 = 1/4\n"
        "[solver]\nmethod = sor\ntol = 1e-8\nmax_iter = 500\n"
        "[verify]\nloop_tol = 1e-3\n");
    EXPECT_EQ(c.grid.x_min, -2.0);
    EXPECT_EQ(c.grid.x_divisions, 256);
    EXPECT_EQ(c.grid.y_divisions, 128);
    EXPECT_EQ(c.structure.w_l, 5.0 / 16);
    EXPECT_EQ(c.field.b0, 3.0);
    EXPECT_EQ(c.junction_x2.value(), 0.25);
    EXPECT_FALSE(c.junction_x1.has_value());
    EXPECT_EQ(c.solver.method, SolveMethod::sor);
    EXPECT_EQ(c.solver.tol, 1e-8);
    EXPECT_EQ(c.solver.max_iter, 500u);
    EXPECT_EQ(c.verify.loop_tol, 1e-3);
}

TEST(Config, RejectsUnknownKeysAndValues) {
    EXPECT_THROW(parse_config("[grid]\nxdivs = 3\n"), ConfigError);
    EXPECT_THROW(parse_config("[nosuch]\nx = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("[solver]\nmethod = gauss\n"), ConfigError);
    EXPECT_THROW(parse_config("loose = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("[grid\n"), ConfigError);
    Config c;
    c.solver.tol = 0.0;
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, LaterFilesOverrideEarlierOnes) {
    const fs::path dir = scratch("override");
    write_file(dir / "a.ini", "[structure]\nwl = 1/16\nwr = 3/16\n[field]\nb0 = 2\n");
    write_file(dir / "b.ini", "[structure]\nwl = 5/16\n");
    const Config c = load_config({(dir / "a.ini").string(), (dir / "b.ini").string()});
    EXPECT_EQ(c.structure.w_l, 5.0 / 16);
    EXPECT_EQ(c.structure.w_r, 3.0 / 16);
    EXPECT_EQ(c.field.b0, 2.0);
    EXPECT_THROW(load_config({(dir / "missing.ini").string()}), ConfigError);
    fs::remove_all(dir);
}

TEST(Config, SweepSection) {
    const Config c = parse_config(
        "[sweep]\nid = demo\n"
        "axis2 = field.bxn field.bxp : 0 1/64 | 1/64 2/64\n"
        "axis10 = solver.tol : 1e-9\n"
        "axis1 = structure.wl : 1/16 | 2/16 | 3/16\n"
        "columns = ratio_sm, flux alpha1_sm\n");
    ASSERT_TRUE(c.sweep.has_value());
    const SweepDef& s = *c.sweep;
    EXPECT_EQ(s.id, "demo");
    ASSERT_EQ(s.axes.size(), 3u);
    EXPECT_EQ(s.axes[0].keys, std::vector<std::string>{"structure.wl"});
    EXPECT_EQ(s.axes[0].steps.size(), 3u);
    EXPECT_EQ(s.axes[1].keys, (std::vector<std::string>{"field.bxn", "field.bxp"}));
    EXPECT_EQ(s.axes[1].steps[1], (std::vector<std::string>{"1/64", "2/64"}));
    EXPECT_EQ(s.axes[2].keys, std::vector<std::string>{"solver.tol"});
    EXPECT_EQ(s.columns, (std::vector<std::string>{"ratio_sm", "flux", "alpha1_sm"}));
}

TEST(Config, InvalidAxes) {
    EXPECT_THROW(parse_axis("structure.wl 1/16", "axis1"), InvalidAxis);
    EXPECT_THROW(parse_axis(" : 1", "axis1"), InvalidAxis);
    EXPECT_THROW(parse_axis("structure.nope : 1", "axis1"), InvalidAxis);
    EXPECT_THROW(parse_axis("field.bxn field.bxp : 0 1 | 2", "axis1"), InvalidAxis);
    EXPECT_THROW(parse_config("[sweep]\nbogus = 1\n"), ConfigError);
}

TEST(Config, ShippedConfigsLoadAndValidate) {
    const fs::path dir = SQUIDFD_CONFIGS;
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() != ".ini") continue;
        const Config c = load_config({e.path().string()});
        EXPECT_NO_THROW(validate(c)) << e.path();
        EXPECT_NO_THROW(rasterize(c.grid, c.structure)) << e.path();
        ++n;
    }
    EXPECT_GE(n, 5u);
    for (const auto& e : fs::directory_iterator(dir / "sweeps")) {
        const Config c = load_config({(dir / "wide_plates.ini").string(), e.path().string()});
        ASSERT_TRUE(c.sweep.has_value()) << e.path();
        for (const std::string& col : c.sweep->columns) EXPECT_NO_THROW(find_column(col)) << col;
    }
}

TEST(GridFile, RoundTripIsBitExact) {
    const GridSpec g{-1.5, 0.75, -0.3, 2.0 / 3.0, 17, 9};
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    ScalarGrid f(g);
    for (double& v : f.values()) v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    f(0, 0) = -0.0;
    f(1, 0) = 5e-324;
    std::stringstream ss;
    write_grid(ss, f);
    const ScalarGrid back = read_grid(ss);
    EXPECT_TRUE(back.grid() == g);
    for (std::size_t k = 0; k < f.values().size(); ++k) {
        EXPECT_EQ(std::memcmp(&f.values()[k], &back.values()[k], sizeof(double)), 0) << k;
    }
}

TEST(GridFile, MalformedInputRejected) {
    const auto read = [](const std::string& s) {
        std::istringstream is(s);
        return read_grid(is);
    };
    EXPECT_THROW(read("nonsense\n"), FormatError);
    EXPECT_THROW(read("squidfd-grid 1\n0 1 0 1 8\n"), FormatError);
    EXPECT_THROW(read("squidfd-grid 1\n1 0 0 1 8 8\n"), FormatError);
    EXPECT_THROW(read("squidfd-grid 1\n0 1 0 1 8 8\n1 2 3\n"), FormatError);
    std::stringstream ss;
    write_grid(ss, ScalarGrid(GridSpec{0, 1, 0, 1, 8, 8}));
    EXPECT_NO_THROW(read(ss.str()));
    EXPECT_THROW(read(ss.str() + "7\n"), FormatError);
    EXPECT_THROW(read_grid_file("/nonexistent/psi.grid"), FormatError);
}

TEST(Export, RowCountsAndColumns) {
    const Config c = test::symmetric_config();
    const NodeMask m = rasterize(c.grid, c.structure);
    const ScalarGrid psi = test::solve_magnetic(c);
    const VectorGrid a = vector_potential(psi, m);
    const ScalarGrid classes = class_grid(m);
    const std::size_t nodes = c.grid.node_count();

    std::ostringstream contour, vectors, mask;
    export_contour(contour, psi);
    export_vectors(vectors, a.x, a.y, classes);
    export_mask(mask, classes);
    EXPECT_EQ(count_lines(contour.str()), nodes + 1);
    EXPECT_EQ(count_lines(vectors.str()), nodes + 1);
    EXPECT_EQ(count_lines(mask.str()), nodes + 1);
    EXPECT_EQ(contour.str().rfind("x,y,psi\n", 0), 0u);
    EXPECT_EQ(vectors.str().rfind("x,y,ax,ay,interior\n", 0), 0u);

    std::size_t interior_rows = 0;
    std::istringstream is(vectors.str());
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) interior_rows += line.back() == '1';
    EXPECT_EQ(interior_rows, m.count(NodeClass::conductor_interior));
}

TEST(Export, ClassCodesRoundTrip) {
    const Config c = test::symmetric_config();
    const NodeMask m = rasterize(c.grid, c.structure);
    const ScalarGrid codes = class_grid(m);
    for (int j = 0; j < c.grid.ny(); ++j) {
        for (int i = 0; i < c.grid.nx(); ++i) ASSERT_EQ(class_from_code(codes(i, j)), m.node_class(i, j));
    }
    EXPECT_THROW(class_from_code(7.0), FormatError);
}

TEST(Io, AtomicWriteReplacesFile) {
    const fs::path dir = scratch("atomic");
    const fs::path p = dir / "out.txt";
    write_atomically(p, "first");
    write_atomically(p, "second");
    std::ifstream is(p);
    std::string s;
    std::getline(is, s);
    EXPECT_EQ(s, "second");
    EXPECT_FALSE(fs::exists(dir / "out.txt.tmp"));
    fs::remove_all(dir);
}

TEST(Io, FormatDoubleIsShortestRoundTrip) {
    EXPECT_EQ(format_double(0.0625), "0.0625");
    EXPECT_EQ(format_double(1.0), "1");
    EXPECT_EQ(format_optional(std::nullopt), "UNDEFINED");
    const double v = 0.1 + 0.2;
    EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Config, PathsSection) {
    const Config c = parse_config(
        "[paths]\ngap = 0 -3/64 ; 0 3/64\n"
        "box = -1/8 -1/8; 1/8 -1/8; 1/8 1/8; -1/8 1/8; -1/8 -1/8\n");
    ASSERT_EQ(c.paths.size(), 2u);
    EXPECT_EQ(c.paths[0].name, "gap");
    EXPECT_EQ(c.paths[0].vertices[1], (std::pair<double, double>{0.0, 3.0 / 64}));
    EXPECT_EQ(c.paths[1].vertices.size(), 5u);
    EXPECT_NO_THROW(validate(c));
    EXPECT_THROW(parse_config("[paths]\nbad = 0 0 ; 1\n"), ConfigError);
    EXPECT_THROW(parse_config("[paths]\nbad = 0 0\n"), ConfigError);
    EXPECT_THROW(validate(parse_config("[paths]\nbad = 0 0 ; 1/8 1/8\n")), ConfigError);
    EXPECT_THROW(validate(parse_config("[paths]\nbad = 0 0 ; 0.001 0\n")), ConfigError);
    EXPECT_THROW(validate(parse_config("[paths]\nbad = 0 0 ; 2 0\n")), ConfigError);
}
