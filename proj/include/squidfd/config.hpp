#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "squidfd/errors.hpp"
#include "squidfd/geometry.hpp"
#include "squidfd/grid.hpp"
#include "squidfd/solver.hpp"

namespace squidfd {

/// Thresholds used by the consistency checks.
struct VerifyOptions {
    double loop_tol{2e-3};        ///< loop equality, relative to max(|flux|, max |loop|)
    double refine_tol{4e-2};      ///< change of alpha1/alpha2 under refinement
    double domain_tol{5e-3};      ///< change under domain doubling, relative to the same scale
    double prediction_tol{4e-2};  ///< |alpha ratio - capacitance ratio| still called consistent
    int refine_factor{2};
    int domain_scale{2};
};

/// One sweep axis: the keys it sets and, per step, one value for each key.
struct SweepAxis {
    std::vector<std::string> keys;
    std::vector<std::vector<std::string>> steps;
};

struct SweepDef {
    std::string id{"sweep"};
    std::vector<SweepAxis> axes;  ///< first axis varies slowest
    std::vector<std::string> columns;
};

/// Named polyline from the [paths] section, vertices in domain coordinates.
struct NamedPath {
    std::string name;
    std::vector<std::pair<double, double>> vertices;
};

struct Config {
    GridSpec grid;
    StructureParams structure;
    FieldSpec field;
    std::optional<double> junction_x1;
    std::optional<double> junction_x2;
    SolverOptions solver;
    int samples_per_cell{4};
    int contour_offset{1};
    VerifyOptions verify;
    std::optional<SweepDef> sweep;
    std::vector<NamedPath> paths;

    /// Set one scalar key ("section.name") from its text form.
    void set(const std::string& key, const std::string& value);

    /// Every key accepted by `set`.
    static const std::vector<std::string>& keys();
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto at = s.find(sep, start);
        out.push_back(trim(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start)));
        if (at == std::string_view::npos) break;
        start = at + 1;
    }
    return out;
}

inline std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == ',') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline double parse_decimal(std::string_view s, const std::string& key) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (b != e && *b == '+') ++b;
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v)) {
        throw ConfigError("key '" + key + "': cannot parse '" + std::string(s) + "' as a number");
    }
    return v;
}

}  // namespace detail

/// Parse a decimal ("0.0625") or a fraction ("1/16"). A fraction is the
/// correctly rounded quotient of its two parts, so dyadic values are exact.
inline double parse_number(const std::string& text, const std::string& key) {
    const std::string s = detail::trim(text);
    if (s.empty()) throw ConfigError("key '" + key + "': empty value");
    const auto slash = s.find('/');
    if (slash == std::string::npos) return detail::parse_decimal(s, key);
    const double num = detail::parse_decimal(detail::trim(std::string_view(s).substr(0, slash)), key);
    const double den = detail::parse_decimal(detail::trim(std::string_view(s).substr(slash + 1)), key);
    if (den == 0.0) throw ConfigError("key '" + key + "': zero denominator in '" + s + "'");
    return num / den;
}

inline int parse_int(const std::string& text, const std::string& key) {
    const std::string s = detail::trim(text);
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw ConfigError("key '" + key + "': cannot parse '" + s + "' as an integer");
    }
    return v;
}

namespace detail {

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;

inline const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = [] {
        std::vector<std::pair<std::string, Setter>> t;
        const auto real = [&t](std::string key, std::function<double&(Config&)> ref) {
            t.emplace_back(std::move(key), [ref](Config& c, const std::string& k, const std::string& v) {
                ref(c) = parse_number(v, k);
            });
        };
        const auto integer = [&t](std::string key, std::function<int&(Config&)> ref) {
            t.emplace_back(std::move(key), [ref](Config& c, const std::string& k, const std::string& v) {
                ref(c) = parse_int(v, k);
            });
        };
        real("grid.xmin", [](Config& c) -> double& { return c.grid.x_min; });
        real("grid.xmax", [](Config& c) -> double& { return c.grid.x_max; });
        real("grid.ymin", [](Config& c) -> double& { return c.grid.y_min; });
        real("grid.ymax", [](Config& c) -> double& { return c.grid.y_max; });
        integer("grid.xdiv", [](Config& c) -> int& { return c.grid.x_divisions; });
        integer("grid.ydiv", [](Config& c) -> int& { return c.grid.y_divisions; });
        real("structure.lsc", [](Config& c) -> double& { return c.structure.lsc; });
        real("structure.wl", [](Config& c) -> double& { return c.structure.w_l; });
        real("structure.wr", [](Config& c) -> double& { return c.structure.w_r; });
        real("structure.d", [](Config& c) -> double& { return c.structure.d; });
        real("structure.pos", [](Config& c) -> double& { return c.structure.pos; });
        real("structure.t", [](Config& c) -> double& { return c.structure.t; });
        real("field.bxn", [](Config& c) -> double& { return c.field.x_extent_n; });
        real("field.bxp", [](Config& c) -> double& { return c.field.x_extent_p; });
        real("field.byn", [](Config& c) -> double& { return c.field.y_extent_n; });
        real("field.byp", [](Config& c) -> double& { return c.field.y_extent_p; });
        real("field.b0", [](Config& c) -> double& { return c.field.b0; });
        t.emplace_back("junctions.x1", [](Config& c, const std::string& k, const std::string& v) {
            c.junction_x1 = parse_number(v, k);
        });
        t.emplace_back("junctions.x2", [](Config& c, const std::string& k, const std::string& v) {
            c.junction_x2 = parse_number(v, k);
        });
        t.emplace_back("solver.method", [](Config& c, const std::string& k, const std::string& v) {
            try {
                c.solver.method = parse_method(trim(v));
            } catch (const ConfigError& e) {
                throw ConfigError("key '" + k + "': " + e.what());
            }
        });
        real("solver.tol", [](Config& c) -> double& { return c.solver.tol; });
        t.emplace_back("solver.max_iter", [](Config& c, const std::string& k, const std::string& v) {
            const int n = parse_int(v, k);
            if (n < 0) throw ConfigError("key '" + k + "': must not be negative");
            c.solver.max_iter = static_cast<std::size_t>(n);
        });
        integer("integrals.samples_per_cell", [](Config& c) -> int& { return c.samples_per_cell; });
        integer("electrostatics.contour_offset", [](Config& c) -> int& { return c.contour_offset; });
        real("verify.loop_tol", [](Config& c) -> double& { return c.verify.loop_tol; });
        real("verify.refine_tol", [](Config& c) -> double& { return c.verify.refine_tol; });
        real("verify.domain_tol", [](Config& c) -> double& { return c.verify.domain_tol; });
        real("verify.prediction_tol", [](Config& c) -> double& { return c.verify.prediction_tol; });
        integer("verify.refine_factor", [](Config& c) -> int& { return c.verify.refine_factor; });
        integer("verify.domain_scale", [](Config& c) -> int& { return c.verify.domain_scale; });
        return t;
    }();
    return table;
}

}  // namespace detail

inline const std::vector<std::string>& Config::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [name, fn] : detail::setters()) out.push_back(name);
        return out;
    }();
    return k;
}

inline void Config::set(const std::string& key, const std::string& value) {
    for (const auto& [name, fn] : detail::setters()) {
        if (name == key) {
            fn(*this, key, value);
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + key + "'");
}

/// Sweep axis syntax: "key [key ...] : v [v ...] | v [v ...] | ...", one
/// value per key in every step; keys in one axis change together.
inline SweepAxis parse_axis(const std::string& text, const std::string& name) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw InvalidAxis("sweep axis '" + name + "' needs 'keys : values'");
    SweepAxis axis;
    axis.keys = detail::words(std::string_view(text).substr(0, colon));
    if (axis.keys.empty()) throw InvalidAxis("sweep axis '" + name + "' names no keys");
    const auto& known = Config::keys();
    for (const std::string& k : axis.keys) {
        if (std::find(known.begin(), known.end(), k) == known.end()) {
            throw InvalidAxis("sweep axis '" + name + "' uses unknown key '" + k + "'");
        }
    }
    for (const std::string& step : detail::split(std::string_view(text).substr(colon + 1), '|')) {
        auto values = detail::words(step);
        if (values.size() != axis.keys.size()) {
            throw InvalidAxis("sweep axis '" + name + "': step '" + step + "' does not give one value per key");
        }
        axis.steps.push_back(std::move(values));
    }
    if (axis.steps.empty()) throw InvalidAxis("sweep axis '" + name + "' has no values");
    return axis;
}

namespace detail {

inline void apply_sweep(Config& c, const boost::property_tree::ptree& section) {
    SweepDef def = c.sweep.value_or(SweepDef{});
    std::map<std::string, SweepAxis> axes;
    for (const auto& [key, node] : section) {
        const std::string v = node.get_value<std::string>();
        if (key == "id") {
            def.id = trim(v);
        } else if (key == "columns") {
            def.columns = words(v);
        } else if (key.rfind("axis", 0) == 0) {
            axes[key] = parse_axis(v, key);
        } else {
            throw ConfigError("unknown configuration key 'sweep." + key + "'");
        }
    }
    if (!axes.empty()) {
        // axis1, axis2, ... ordered numerically when the suffix is a number.
        std::vector<std::pair<std::string, SweepAxis>> ordered(axes.begin(), axes.end());
        std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
            const auto num = [](const std::string& s) {
                int n = 0;
                const auto r = std::from_chars(s.data() + 4, s.data() + s.size(), n);
                return r.ec == std::errc() && r.ptr == s.data() + s.size() ? n : 0;
            };
            return num(a.first) < num(b.first);
        });
        def.axes.clear();
        for (auto& [k, a] : ordered) def.axes.push_back(std::move(a));
    }
    c.sweep = std::move(def);
}

/// Path syntax: "x y ; x y ; ...". Redefining a name replaces it.
inline void apply_paths(Config& c, const boost::property_tree::ptree& section) {
    for (const auto& [name, node] : section) {
        const std::string key = "paths." + name;
        NamedPath path{name, {}};
        for (const std::string& vertex : split(node.get_value<std::string>(), ';')) {
            const auto xy = words(vertex);
            if (xy.size() != 2) throw ConfigError("key '" + key + "': vertex '" + vertex + "' needs x and y");
            path.vertices.emplace_back(parse_number(xy[0], key), parse_number(xy[1], key));
        }
        if (path.vertices.size() < 2) throw ConfigError("key '" + key + "': a path needs at least two vertices");
        const auto same = [&](const NamedPath& p) { return p.name == name; };
        const auto it = std::find_if(c.paths.begin(), c.paths.end(), same);
        if (it != c.paths.end()) {
            *it = std::move(path);
        } else {
            c.paths.push_back(std::move(path));
        }
    }
}

}  // namespace detail

/// Apply an INI document on top of `c`. Keys not present keep their values.
inline void apply_ini(Config& c, std::istream& in, const std::string& source = "<config>") {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    for (const auto& [section, node] : tree) {
        if (node.empty()) throw ConfigError(source + ": key '" + section + "' must sit inside a section");
        if (section == "sweep") {
            detail::apply_sweep(c, node);
            continue;
        }
        if (section == "paths") {
            detail::apply_paths(c, node);
            continue;
        }
        for (const auto& [key, leaf] : node) c.set(section + "." + key, leaf.get_value<std::string>());
    }
}

inline Config parse_config(const std::string& text) {
    Config c;
    std::istringstream in(text);
    apply_ini(c, in);
    return c;
}

/// Load config files in order; later files override earlier ones key by key.
inline Config load_config(const std::vector<std::string>& paths) {
    Config c;
    for (const std::string& p : paths) {
        std::ifstream in(p);
        if (!in) throw ConfigError("cannot read config file '" + p + "'");
        apply_ini(c, in, p);
    }
    return c;
}

/// Whole-config checks that individual keys cannot make.
inline void validate(const Config& c) {
    c.grid.validate();
    c.structure.validate();
    c.field.validate();
    if (!(c.solver.tol > 0.0)) throw ConfigError("key 'solver.tol': must be positive");
    if (c.samples_per_cell < 2) throw ConfigError("key 'integrals.samples_per_cell': must be at least 2");
    if (c.contour_offset < 1) throw ConfigError("key 'electrostatics.contour_offset': must be at least 1");
    if (c.verify.refine_factor < 2) throw ConfigError("key 'verify.refine_factor': must be at least 2");
    if (c.verify.domain_scale < 2) throw ConfigError("key 'verify.domain_scale': must be at least 2");
    for (const NamedPath& p : c.paths) {
        const std::string key = "paths." + p.name;
        for (std::size_t k = 0; k < p.vertices.size(); ++k) {
            const auto [x, y] = p.vertices[k];
            const auto i = c.grid.column_of(x);
            const auto j = c.grid.row_of(y);
            if (!i || !j || !c.grid.contains(*i, *j)) {
                throw ConfigError("key '" + key + "': vertex " + std::to_string(k + 1) + " is not a grid node");
            }
            if (k > 0 && x != p.vertices[k - 1].first && y != p.vertices[k - 1].second) {
                throw ConfigError("key '" + key + "': segment " + std::to_string(k) + " is not axis-aligned");
            }
        }
    }
}

}  // namespace squidfd
