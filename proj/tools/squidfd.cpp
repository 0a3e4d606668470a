// Command-line front end: solve, report, verify, sweep and export.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "squidfd/squidfd.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace squidfd;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_solver = 3;
constexpr int exit_verify = 4;

struct Options {
    std::vector<std::string> configs;
    std::string out{"."};
    std::optional<std::string> method;
    std::optional<double> tol;
    std::optional<int> refine;
    std::string in;
    std::string what;
};

ordered_json optional_json(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json("UNDEFINED");
}

ordered_json to_json(const SolveReport& r, const std::string& stage) {
    return {{"stage", stage},
            {"method", to_string(r.method)},
            {"iterations", r.iterations},
            {"residual_norm", r.residual_norm},
            {"wall_time", r.wall_time}};
}

ordered_json to_json(const AlphaReport& a) {
    return {{"alpha1_sm", a.alpha1_sm},
            {"alpha2_sm", a.alpha2_sm},
            {"alpha1_im", a.alpha1_im},
            {"alpha2_im", a.alpha2_im},
            {"ratio_sm", optional_json(a.ratio_sm)},
            {"ratio_im", optional_json(a.ratio_im)},
            {"flux", a.flux},
            {"total_flux", a.total_flux},
            {"loop_l4_sm", a.loop_l4_sm},
            {"loop_l4_im", a.loop_l4_im},
            {"predicted_alpha", optional_json(a.predicted_alpha)},
            {"singular", a.singular}};
}

ordered_json to_json(const CapacitanceReport& c) {
    return {{"ratio_sm_0", c.ratio_sm_0},
            {"ratio_im_0", c.ratio_im_0},
            {"ratio_sm_lsc", c.ratio_sm_lsc},
            {"ratio_im_lsc", c.ratio_im_lsc},
            {"q_island", c.q_island},
            {"q_ground", c.q_ground},
            {"q_outer", c.q_outer},
            {"q_wire_sm", c.q_wire_sm},
            {"predicted_alpha_you", c.predicted_alpha_you},
            {"contour_offset", c.contour_offset}};
}

ordered_json to_json(const PredictionRecord& p) {
    return {{"deviation_sm", optional_json(p.deviation_sm)},
            {"deviation_im", optional_json(p.deviation_im)},
            {"tolerance", p.tolerance},
            {"verdict", to_string(p.verdict)}};
}

ordered_json to_json(const JunctionExtremes& e) {
    ordered_json profile = ordered_json::array();
    for (const auto& [x, v] : e.profile) profile.push_back({x, v});
    return {{"alpha1", e.alpha1},
            {"alpha2_min", e.alpha2_min},
            {"alpha2_max", e.alpha2_max},
            {"x_min", e.x_min},
            {"x_max", e.x_max},
            {"ratio_min", optional_json(e.ratio_min)},
            {"ratio_max", optional_json(e.ratio_max)},
            {"swept_flux", e.swept_flux},
            {"interpolation_error", e.interpolation_error},
            {"profile", profile}};
}

/// Collects run metadata and writes manifest.json when the run ends, failed or not.
class Manifest {
public:
    Manifest(std::string command, const Options& opt)
        : command_(std::move(command)), opt_(opt), start_(std::chrono::steady_clock::now()) {}

    void solve(const SolveReport& r, const std::string& stage) { solves_.push_back(to_json(r, stage)); }
    void artifact(const fs::path& p) { artifacts_.push_back(p.filename().string()); }
    void fail(const std::string& kind, const std::string& msg) { error_ = {{"kind", kind}, {"message", msg}}; }

    void write() const {
        ordered_json j;
        j["tool"] = "squidfd";
        j["version"] = version;
        j["command"] = command_;
        j["configs"] = opt_.configs;
        j["out_dir"] = opt_.out;
        j["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        j["solves"] = solves_;
        j["artifacts"] = artifacts_;
        j["status"] = error_.is_null() ? "ok" : "error";
        if (!error_.is_null()) j["error"] = error_;
        write_atomically(fs::path(opt_.out) / "manifest.json", j.dump(2) + "\n");
    }

private:
    std::string command_;
    const Options& opt_;
    std::chrono::steady_clock::time_point start_;
    ordered_json solves_ = ordered_json::array();
    std::vector<std::string> artifacts_;
    ordered_json error_;
};

Config load(const Options& opt) {
    if (opt.configs.empty()) throw ConfigError("no --config given");
    Config c = load_config(opt.configs);
    if (opt.method) c.solver.method = parse_method(*opt.method);
    if (opt.tol) c.solver.tol = *opt.tol;
    validate(c);
    return c;
}

/// --refine multiplies the grid divisions for solve, report and sweep.
Config apply_refine(Config c, const Options& opt) {
    if (opt.refine) {
        if (*opt.refine < 1) throw ConfigError("--refine must be at least 1");
        c = refined(c, *opt.refine);
    }
    return c;
}

void write_text(const fs::path& p, const std::string& text, Manifest& m) {
    write_atomically(p, text);
    m.artifact(p);
}

int cmd_solve(const Options& opt, Manifest& m) {
    const Config c = apply_refine(load(opt), opt);
    const NodeMask mask = rasterize(c.grid, c.structure);
    field_values(mask, c.field);
    const QuarterFlux flux(c.grid, c.field);
    const SolveOutput out = solve(assemble(mask, flux.source_density(mask), {}), c.solver);
    m.solve(out.report, "magnetostatic");
    const VectorGrid a = vector_potential(out.field, mask);
    const fs::path dir(opt.out);
    const std::vector<std::pair<std::string, const ScalarGrid*>> grids{
        {"psi.grid", &out.field}, {"ax.grid", &a.x}, {"ay.grid", &a.y}};
    for (const auto& [name, g] : grids) {
        std::ostringstream os;
        write_grid(os, *g);
        write_text(dir / name, os.str(), m);
    }
    std::ostringstream os;
    write_grid(os, class_grid(mask));
    write_text(dir / "mask.grid", os.str(), m);
    std::cout << "solved " << mask.grid().node_count() << " nodes in " << out.report.iterations << " iterations ("
              << to_string(out.report.method) << ", residual " << out.report.residual_norm << ")\n";
    return exit_ok;
}

int cmd_report(const Options& opt, Manifest& m) {
    const Config c = apply_refine(load(opt), opt);
    const Evaluation ev = evaluate(c);
    m.solve(ev.magnetic.report, "magnetostatic");
    m.solve(ev.electric->report, "electrostatic");
    const PredictionRecord pred = compare_to_prediction(ev.alphas, *ev.capacitance, c.verify.prediction_tol);

    ordered_json j;
    j["alpha"] = to_json(ev.alphas);
    j["junctions"] = {{"x1", ev.layout.x1}, {"x2", ev.layout.x2}};
    j["capacitance"] = to_json(*ev.capacitance);
    j["comparison"] = to_json(pred);
    j["paths"] = ordered_json::array();
    for (const PathValue& p : ev.paths) {
        ordered_json e{{"name", p.name}, {"sm", p.sm}, {"im", p.im}};
        if (p.enclosed) e["enclosed_flux"] = *p.enclosed;
        j["paths"].push_back(e);
    }
    if (ev.extremes) {
        j["extremes"] = to_json(*ev.extremes);
    } else {
        j["extremes"] = {{"skipped", ev.extremes_skipped}};
    }
    write_text(fs::path(opt.out) / "report.json", j.dump(2) + "\n", m);

    const auto& a = ev.alphas;
    const auto& cap = *ev.capacitance;
    std::cout << "alpha1/alpha2  SM " << format_optional(a.ratio_sm) << "  IM " << format_optional(a.ratio_im) << '\n'
              << "C2/C1 (x=0)    SM " << format_double(cap.ratio_sm_0) << "  IM " << format_double(cap.ratio_im_0)
              << '\n'
              << "C2/C1 (x=+-lsc) SM " << format_double(cap.ratio_sm_lsc) << "  IM "
              << format_double(cap.ratio_im_lsc) << '\n'
              << "comparison     " << to_string(pred.verdict) << '\n';
    return exit_ok;
}

int cmd_verify(const Options& opt, Manifest& m) {
    const Config c = load(opt);
    const Evaluation ev = evaluate(c, {.capacitance = true, .extremes = false});
    m.solve(ev.magnetic.report, "magnetostatic");
    m.solve(ev.electric->report, "electrostatic");
    ConsistencyReport r = verify(c, opt.refine);
    const PredictionRecord pred = compare_to_prediction(ev.alphas, *ev.capacitance, c.verify.prediction_tol);

    std::ostringstream tsv;
    tsv << "check\tvalue\ttolerance\tverdict\n";
    for (const Verdict& v : r.verdicts) {
        tsv << v.check << '\t' << format_double(v.value) << '\t' << format_double(v.tolerance) << '\t'
            << to_string(v.status) << '\n';
    }
    // The prediction comparison is a finding, never a failure.
    tsv << "prediction\t" << format_optional(pred.deviation_sm) << '\t' << format_double(pred.tolerance) << '\t'
        << to_string(pred.verdict) << '\n';
    write_text(fs::path(opt.out) / "verify.tsv", tsv.str(), m);

    std::ostringstream loops;
    loops << "loop\tapplicable\tsm\tim\tenclosed_flux\n";
    for (const LoopValue& l : r.loops) {
        loops << l.name << '\t' << (l.applicable ? "yes" : "no") << '\t' << format_double(l.sm) << '\t'
              << format_double(l.im) << '\t' << format_double(l.enclosed) << '\n';
    }
    write_text(fs::path(opt.out) / "loops.tsv", loops.str(), m);

    std::cout << "total flux " << format_double(r.total_flux) << "\n\n" << loops.str() << '\n';
    for (const Verdict& v : r.verdicts) {
        std::printf("%-14s %-15s %12.4e  tol %10.3e\n", to_string(v.status), v.check.c_str(), v.value, v.tolerance);
    }
    std::printf("%-14s %-15s %s\n", to_string(pred.verdict), "prediction", format_optional(pred.deviation_sm).c_str());
    return r.passed() ? exit_ok : exit_verify;
}

int cmd_sweep(const Options& opt, Manifest& m) {
    const Config c = apply_refine(load(opt), opt);
    if (!c.sweep) throw ConfigError("config has no [sweep] section");
    const SweepTable t = run_sweep(c, *c.sweep);
    std::ostringstream os;
    write_table(os, t);
    write_text(fs::path(opt.out) / (t.id + ".tsv"), os.str(), m);
    std::cout << os.str();
    std::cerr << t.rows.size() << " rows, " << t.failures << " failed, " << t.solves << " field solves\n";
    return exit_ok;
}

int cmd_export(const Options& opt) {
    const fs::path in(opt.in);
    std::ostringstream os;
    if (opt.what == "contour") {
        export_contour(os, read_grid_file(in / "psi.grid"));
    } else if (opt.what == "vectors") {
        export_vectors(os, read_grid_file(in / "ax.grid"), read_grid_file(in / "ay.grid"),
                       read_grid_file(in / "mask.grid"));
    } else if (opt.what == "mask") {
        export_mask(os, read_grid_file(in / "mask.grid"));
    } else {
        throw ConfigError("--what must be contour, vectors or mask");
    }
    if (opt.out.empty() || opt.out == "-") {
        std::cout << os.str();
    } else {
        fs::create_directories(opt.out);
        write_atomically(fs::path(opt.out) / (opt.what + ".csv"), os.str());
    }
    return exit_ok;
}

template <class F>
int guarded(const std::string& command, const Options& opt, F&& body) {
    std::optional<Manifest> m;
    int code = exit_ok;
    try {
        if (command != "export") {
            fs::create_directories(opt.out);
            m.emplace(command, opt);
        }
        code = body(m ? &*m : nullptr);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        if (m) m->fail("config", e.what());
        code = exit_config;
    } catch (const GeometryError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        if (m) m->fail("config", e.what());
        code = exit_config;
    } catch (const FormatError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        if (m) m->fail("input", e.what());
        code = exit_config;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        if (m) m->fail("solver", e.what());
        code = exit_solver;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return exit_config;
    }
    if (m) {
        try {
            m->write();
        } catch (const Error& e) {
            std::cerr << "cannot write manifest: " << e.what() << '\n';
        }
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stream-function field solver for parallel-plate SQUID gauge parameters"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);
    Options opt;

    const auto common = [&opt](CLI::App* sub, bool with_solver) {
        sub->add_option("--config", opt.configs, "INI config file; repeat to layer overrides")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory")->capture_default_str();
        if (with_solver) {
            sub->add_option("--method", opt.method, "linear solver: cg, sor or dense");
            sub->add_option("--tol", opt.tol, "relative residual tolerance");
        }
    };
    CLI::App* solve_cmd = app.add_subcommand("solve", "solve for the stream function and write grids");
    common(solve_cmd, true);
    solve_cmd->add_option("--refine", opt.refine, "multiply grid divisions by N");
    CLI::App* report_cmd = app.add_subcommand("report", "alpha, capacitance and comparison records");
    common(report_cmd, true);
    report_cmd->add_option("--refine", opt.refine, "multiply grid divisions by N");
    CLI::App* verify_cmd = app.add_subcommand("verify", "loop, refinement and domain consistency checks");
    common(verify_cmd, true);
    verify_cmd->add_option("--refine", opt.refine, "refinement factor of the grid-refinement check");
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "tabulate report fields over a parameter sweep");
    common(sweep_cmd, true);
    sweep_cmd->add_option("--refine", opt.refine, "multiply grid divisions by N");
    CLI::App* export_cmd = app.add_subcommand("export", "export solve output as CSV point sets");
    export_cmd->add_option("--in", opt.in, "directory written by solve")->required()->check(CLI::ExistingDirectory);
    export_cmd->add_option("--what", opt.what, "contour, vectors or mask")
        ->required()
        ->check(CLI::IsMember({"contour", "vectors", "mask"}));
    export_cmd->add_option("--out", opt.out, "output directory ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    if (*export_cmd) {
        if (export_cmd->count("--out") == 0) opt.out = "-";
        return guarded("export", opt, [&](Manifest*) { return cmd_export(opt); });
    }
    if (*solve_cmd) return guarded("solve", opt, [&](Manifest* m) { return cmd_solve(opt, *m); });
    if (*report_cmd) return guarded("report", opt, [&](Manifest* m) { return cmd_report(opt, *m); });
    if (*verify_cmd) return guarded("verify", opt, [&](Manifest* m) { return cmd_verify(opt, *m); });
    return guarded("sweep", opt, [&](Manifest* m) { return cmd_sweep(opt, *m); });
}
