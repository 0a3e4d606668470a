#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include "squidfd/errors.hpp"
#include "squidfd/geometry.hpp"
#include "squidfd/grid.hpp"

namespace squidfd {

/// Malformed or unreadable data file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw FormatError("cannot format number");
    return std::string(buf.data(), p);
}

/// Text form of an optional ratio; unset values become the UNDEFINED sentinel.
inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("UNDEFINED");
}

inline constexpr const char* grid_magic = "squidfd-grid 1";

/// Grid file: a magic line, "xmin xmax ymin ymax xdiv ydiv", then one line
/// of values per grid row (j ascending), x varying along the line.
inline void write_grid(std::ostream& os, const ScalarGrid& f) {
    const GridSpec& g = f.grid();
    os << grid_magic << '\n'
       << format_double(g.x_min) << ' ' << format_double(g.x_max) << ' ' << format_double(g.y_min) << ' '
       << format_double(g.y_max) << ' ' << g.x_divisions << ' ' << g.y_divisions << '\n';
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            if (i) os << ' ';
            os << format_double(f(i, j));
        }
        os << '\n';
    }
}

namespace detail {

inline double read_double(std::istream& is, const char* what) {
    std::string tok;
    if (!(is >> tok)) throw FormatError(std::string("grid file ends before ") + what);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
        throw FormatError(std::string("grid file: bad number '") + tok + "' in " + what);
    }
    return v;
}

}  // namespace detail

inline ScalarGrid read_grid(std::istream& is) {
    std::string magic;
    std::getline(is, magic);
    if (magic != grid_magic) throw FormatError("not a grid file (missing header line)");
    GridSpec g;
    g.x_min = detail::read_double(is, "header");
    g.x_max = detail::read_double(is, "header");
    g.y_min = detail::read_double(is, "header");
    g.y_max = detail::read_double(is, "header");
    if (!(is >> g.x_divisions >> g.y_divisions)) throw FormatError("grid file: bad division counts");
    try {
        g.validate();
    } catch (const GeometryError& e) {
        throw FormatError(std::string("grid file: ") + e.what());
    }
    ScalarGrid f(g);
    for (double& v : f.values()) v = detail::read_double(is, "values");
    std::string extra;
    if (is >> extra) throw FormatError("grid file has trailing data");
    return f;
}

inline void write_grid_file(const std::filesystem::path& path, const ScalarGrid& f) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write '" + path.string() + "'");
    write_grid(os, f);
    if (!os) throw FormatError("write to '" + path.string() + "' failed");
}

inline ScalarGrid read_grid_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot read '" + path.string() + "'");
    return read_grid(is);
}

/// Node classes as a grid of codes: 0 exterior, 1 conductor interior,
/// 2 conductor surface, 3 outer boundary.
inline ScalarGrid class_grid(const NodeMask& mask) {
    const GridSpec& g = mask.grid();
    ScalarGrid out(g);
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) out(i, j) = static_cast<double>(mask.node_class(i, j));
    }
    return out;
}

inline NodeClass class_from_code(double code) {
    if (code == 0.0) return NodeClass::exterior;
    if (code == 1.0) return NodeClass::conductor_interior;
    if (code == 2.0) return NodeClass::conductor_surface;
    if (code == 3.0) return NodeClass::outer_boundary;
    throw FormatError("unknown node class code " + format_double(code));
}

/// CSV of (x, y, psi) triples, one per node.
inline void export_contour(std::ostream& os, const ScalarGrid& psi) {
    const GridSpec& g = psi.grid();
    os << "x,y,psi\n";
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            os << format_double(g.x(i)) << ',' << format_double(g.y(j)) << ',' << format_double(psi(i, j)) << '\n';
        }
    }
}

/// CSV of (x, y, ax, ay, interior); interior = 1 marks conductor-bulk
/// nodes whose values carry no physical meaning.
inline void export_vectors(std::ostream& os, const ScalarGrid& ax, const ScalarGrid& ay, const ScalarGrid& classes) {
    ax.require_same_grid(ay);
    ax.require_same_grid(classes);
    const GridSpec& g = ax.grid();
    os << "x,y,ax,ay,interior\n";
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            const bool interior = class_from_code(classes(i, j)) == NodeClass::conductor_interior;
            os << format_double(g.x(i)) << ',' << format_double(g.y(j)) << ',' << format_double(ax(i, j)) << ','
               << format_double(ay(i, j)) << ',' << (interior ? 1 : 0) << '\n';
        }
    }
}

/// CSV of (x, y, class) with class names.
inline void export_mask(std::ostream& os, const ScalarGrid& classes) {
    const GridSpec& g = classes.grid();
    os << "x,y,class\n";
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            os << format_double(g.x(i)) << ',' << format_double(g.y(j)) << ','
               << to_string(class_from_code(classes(i, j))) << '\n';
        }
    }
}

/// Write through a temporary file and rename, so readers never see a partial file.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw FormatError("cannot write '" + tmp.string() + "'");
        os << content;
        if (!os) throw FormatError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw FormatError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

}  // namespace squidfd
