#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "squidfd/config.hpp"
#include "squidfd/io.hpp"
#include "squidfd/pipeline.hpp"
#include "squidfd/verification.hpp"

namespace squidfd {

/// Which stage a report column needs.
enum class ColumnNeeds { alphas, capacitance, extremes };

struct Column {
    std::string name;
    ColumnNeeds needs;
    std::function<std::string(const Evaluation&)> value;
};

namespace detail {

inline std::string extremes_value(const Evaluation& ev, const std::function<std::string(const JunctionExtremes&)>& f) {
    return ev.extremes ? f(*ev.extremes) : std::string("UNDEFINED");
}

inline PredictionRecord prediction_of(const Evaluation& ev) {
    return compare_to_prediction(ev.alphas, *ev.capacitance, ev.config.verify.prediction_tol);
}

}  // namespace detail

/// Report fields that sweeps can tabulate.
inline const std::vector<Column>& report_columns() {
    using N = ColumnNeeds;
    static const std::vector<Column> cols = [] {
        std::vector<Column> c;
        const auto num = [&c](std::string name, N needs, std::function<double(const Evaluation&)> f) {
            c.push_back({std::move(name), needs, [f](const Evaluation& ev) { return format_double(f(ev)); }});
        };
        const auto opt = [&c](std::string name, N needs, std::function<std::optional<double>(const Evaluation&)> f) {
            c.push_back({std::move(name), needs, [f](const Evaluation& ev) { return format_optional(f(ev)); }});
        };
        num("alpha1_sm", N::alphas, [](const Evaluation& e) { return e.alphas.alpha1_sm; });
        num("alpha2_sm", N::alphas, [](const Evaluation& e) { return e.alphas.alpha2_sm; });
        num("alpha1_im", N::alphas, [](const Evaluation& e) { return e.alphas.alpha1_im; });
        num("alpha2_im", N::alphas, [](const Evaluation& e) { return e.alphas.alpha2_im; });
        opt("ratio_sm", N::alphas, [](const Evaluation& e) { return e.alphas.ratio_sm; });
        opt("ratio_im", N::alphas, [](const Evaluation& e) { return e.alphas.ratio_im; });
        num("flux", N::alphas, [](const Evaluation& e) { return e.alphas.flux; });
        num("total_flux", N::alphas, [](const Evaluation& e) { return e.alphas.total_flux; });
        num("loop_l4_sm", N::alphas, [](const Evaluation& e) { return e.alphas.loop_l4_sm; });
        num("loop_l4_im", N::alphas, [](const Evaluation& e) { return e.alphas.loop_l4_im; });
        opt("predicted_alpha", N::alphas, [](const Evaluation& e) { return e.alphas.predicted_alpha; });
        c.push_back({"singular", N::alphas, [](const Evaluation& e) { return std::string(e.alphas.singular ? "1" : "0"); }});
        c.push_back({"iterations", N::alphas,
                     [](const Evaluation& e) { return std::to_string(e.magnetic.report.iterations); }});
        num("c_ratio_sm_0", N::capacitance, [](const Evaluation& e) { return e.capacitance->ratio_sm_0; });
        num("c_ratio_im_0", N::capacitance, [](const Evaluation& e) { return e.capacitance->ratio_im_0; });
        num("c_ratio_sm_lsc", N::capacitance, [](const Evaluation& e) { return e.capacitance->ratio_sm_lsc; });
        num("c_ratio_im_lsc", N::capacitance, [](const Evaluation& e) { return e.capacitance->ratio_im_lsc; });
        num("q_island", N::capacitance, [](const Evaluation& e) { return e.capacitance->q_island; });
        num("q_ground", N::capacitance, [](const Evaluation& e) { return e.capacitance->q_ground; });
        num("q_outer", N::capacitance, [](const Evaluation& e) { return e.capacitance->q_outer; });
        num("predicted_alpha_you", N::capacitance,
            [](const Evaluation& e) { return e.capacitance->predicted_alpha_you; });
        opt("deviation_sm", N::capacitance, [](const Evaluation& e) { return detail::prediction_of(e).deviation_sm; });
        opt("deviation_im", N::capacitance, [](const Evaluation& e) { return detail::prediction_of(e).deviation_im; });
        c.push_back({"verdict", N::capacitance,
                     [](const Evaluation& e) { return std::string(to_string(detail::prediction_of(e).verdict)); }});
        c.push_back({"alpha2_min", N::extremes, [](const Evaluation& e) {
                         return detail::extremes_value(e, [](const JunctionExtremes& x) { return format_double(x.alpha2_min); });
                     }});
        c.push_back({"alpha2_max", N::extremes, [](const Evaluation& e) {
                         return detail::extremes_value(e, [](const JunctionExtremes& x) { return format_double(x.alpha2_max); });
                     }});
        c.push_back({"ratio_min", N::extremes, [](const Evaluation& e) {
                         return detail::extremes_value(e, [](const JunctionExtremes& x) { return format_optional(x.ratio_min); });
                     }});
        c.push_back({"ratio_max", N::extremes, [](const Evaluation& e) {
                         return detail::extremes_value(e, [](const JunctionExtremes& x) { return format_optional(x.ratio_max); });
                     }});
        c.push_back({"interpolation_error", N::extremes, [](const Evaluation& e) {
                         return detail::extremes_value(
                             e, [](const JunctionExtremes& x) { return format_double(x.interpolation_error); });
                     }});
        return c;
    }();
    return cols;
}

inline const Column& find_column(const std::string& name) {
    for (const Column& c : report_columns()) {
        if (c.name == name) return c;
    }
    throw ConfigError("unknown sweep column '" + name + "'");
}

struct SweepTable {
    std::string id;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t failures{0};
    std::size_t solves{0};  ///< distinct field solves after caching
};

/// Evaluate the cartesian product of the axes over `base`, first axis
/// slowest. A row that fails keeps its axis values and records the error
/// in the final `status` column; the sweep carries on.
inline SweepTable run_sweep(const Config& base, const SweepDef& def) {
    if (def.columns.empty()) throw ConfigError("sweep '" + def.id + "' lists no columns");
    std::vector<const Column*> cols;
    Stages stages{.capacitance = false, .extremes = false};
    for (const std::string& name : def.columns) {
        const Column& c = find_column(name);
        cols.push_back(&c);
        stages.capacitance |= c.needs == ColumnNeeds::capacitance;
        stages.extremes |= c.needs == ColumnNeeds::extremes;
    }
    const auto& known = Config::keys();
    for (const SweepAxis& axis : def.axes) {
        if (axis.steps.empty()) throw InvalidAxis("sweep axis without values");
        for (const std::string& k : axis.keys) {
            if (std::find(known.begin(), known.end(), k) == known.end()) {
                throw InvalidAxis("sweep axis uses unknown key '" + k + "'");
            }
        }
    }

    SweepTable t;
    t.id = def.id;
    for (const SweepAxis& axis : def.axes) t.header.insert(t.header.end(), axis.keys.begin(), axis.keys.end());
    t.header.insert(t.header.end(), def.columns.begin(), def.columns.end());
    t.header.emplace_back("status");

    SolveCache cache;
    std::vector<std::size_t> at(def.axes.size(), 0);
    for (;;) {
        std::vector<std::string> row;
        for (std::size_t a = 0; a < def.axes.size(); ++a) {
            const auto& step = def.axes[a].steps[at[a]];
            row.insert(row.end(), step.begin(), step.end());
        }
        Config c = base;
        c.sweep.reset();
        try {
            for (std::size_t a = 0; a < def.axes.size(); ++a) {
                for (std::size_t k = 0; k < def.axes[a].keys.size(); ++k) {
                    c.set(def.axes[a].keys[k], def.axes[a].steps[at[a]][k]);
                }
            }
            const Evaluation ev = evaluate(c, stages, &cache);
            std::vector<std::string> values;
            for (const Column* col : cols) values.push_back(col->value(ev));
            row.insert(row.end(), values.begin(), values.end());
            row.emplace_back("ok");
        } catch (const Error& e) {
            ++t.failures;
            row.resize(row.size() + cols.size(), "ERROR");
            std::string msg = e.what();
            std::replace_if(msg.begin(), msg.end(), [](char ch) { return ch == '\t' || ch == '\n'; }, ' ');
            row.push_back("error: " + msg);
        }
        t.rows.push_back(std::move(row));

        // Odometer step, last axis fastest.
        bool carry = true;
        for (std::size_t a = def.axes.size(); carry && a > 0; --a) {
            if (++at[a - 1] < def.axes[a - 1].steps.size()) {
                carry = false;
            } else {
                at[a - 1] = 0;
            }
        }
        if (carry) break;
    }
    t.solves = cache.solves();
    return t;
}

/// Tab-separated table with a header row.
inline void write_table(std::ostream& os, const SweepTable& t) {
    const auto line = [&os](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) os << '\t';
            os << cells[k];
        }
        os << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

}  // namespace squidfd
