#pragma once

#include <boost/container_hash/hash.hpp>

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "squidfd/config.hpp"
#include "squidfd/electrostatics.hpp"
#include "squidfd/flux.hpp"
#include "squidfd/geometry.hpp"
#include "squidfd/integrals.hpp"
#include "squidfd/solver.hpp"

namespace squidfd {

/// Reuses solutions of identical systems (same mask, source and solver
/// settings), e.g. when a sweep only moves the junction paths.
class SolveCache {
public:
    const SolveOutput& magnetic(const NodeMask& mask, const ScalarGrid& rhs, const SolverOptions& opt) {
        return lookup(mask, &rhs, opt, [&] { return solve(assemble(mask, rhs, {}), opt); });
    }

    const SolveOutput& electric(const NodeMask& mask, const SolverOptions& opt) {
        return lookup(mask, nullptr, opt, [&] { return solve_potential(mask, opt); });
    }

    [[nodiscard]] std::size_t solves() const { return solves_; }
    [[nodiscard]] std::size_t hits() const { return hits_; }

private:
    struct Entry {
        NodeMask mask;
        std::optional<ScalarGrid> rhs;
        SolverOptions opt;
        SolveOutput out;
    };
    std::unordered_multimap<std::size_t, std::unique_ptr<Entry>> entries_;
    std::size_t solves_{0};
    std::size_t hits_{0};

    template <class F>
    const SolveOutput& lookup(const NodeMask& mask, const ScalarGrid* rhs, const SolverOptions& opt, F&& run) {
        std::size_t h = 0;
        const GridSpec& g = mask.grid();
        boost::hash_combine(h, g.x_min);
        boost::hash_combine(h, g.x_max);
        boost::hash_combine(h, g.y_min);
        boost::hash_combine(h, g.y_max);
        boost::hash_combine(h, g.x_divisions);
        boost::hash_combine(h, g.y_divisions);
        for (ConductorId c : mask.conductors()) boost::hash_combine(h, static_cast<int>(c));
        boost::hash_combine(h, rhs != nullptr);
        if (rhs) boost::hash_range(h, rhs->values().begin(), rhs->values().end());
        boost::hash_combine(h, static_cast<int>(opt.method));
        boost::hash_combine(h, opt.tol);
        boost::hash_combine(h, opt.max_iter);

        const auto [lo, hi] = entries_.equal_range(h);
        for (auto it = lo; it != hi; ++it) {
            const Entry& e = *it->second;
            const bool same_rhs = rhs ? (e.rhs && *e.rhs == *rhs) : !e.rhs;
            if (same_rhs && e.mask == mask && e.opt.method == opt.method && e.opt.tol == opt.tol &&
                e.opt.max_iter == opt.max_iter) {
                ++hits_;
                return e.out;
            }
        }
        ++solves_;
        auto entry = std::make_unique<Entry>(Entry{mask, rhs ? std::optional<ScalarGrid>(*rhs) : std::nullopt, opt, run()});
        return entries_.emplace(h, std::move(entry))->second->out;
    }
};

/// Optional stages on top of the magnetostatic solve and junction alphas.
struct Stages {
    bool capacitance{true};
    bool extremes{true};
};

/// Line integral of A along a configured path; closed paths also carry
/// the flux they enclose.
struct PathValue {
    std::string name;
    double sm{0.0};
    double im{0.0};
    std::optional<double> enclosed;
};

/// Everything computed for one configuration.
struct Evaluation {
    Config config;
    NodeMask mask;
    QuarterFlux flux;
    ScalarGrid field;  ///< nodal field values
    SolveOutput magnetic;
    JunctionLayout layout;
    AlphaReport alphas;
    std::optional<SolveOutput> electric;
    std::optional<CapacitanceReport> capacitance;
    std::optional<JunctionExtremes> extremes;
    std::string extremes_skipped;  ///< why `extremes` is unset, if it was requested
    std::vector<PathValue> paths;
};

inline Evaluation evaluate(const Config& config, Stages stages = {}, SolveCache* cache = nullptr) {
    validate(config);
    Evaluation ev;
    ev.config = config;
    ev.mask = rasterize(config.grid, config.structure);
    ev.field = field_values(ev.mask, config.field);
    ev.flux = QuarterFlux(config.grid, config.field);
    const ScalarGrid rhs = ev.flux.source_density(ev.mask);
    ev.magnetic = cache ? cache->magnetic(ev.mask, rhs, config.solver) : solve(assemble(ev.mask, rhs, {}), config.solver);
    ev.layout = junction_layout(config.grid, config.structure, config.junction_x1, config.junction_x2);
    ev.alphas = compute_alphas(ev.magnetic.field, ev.mask, ev.flux, ev.layout, config.samples_per_cell);
    for (const NamedPath& p : config.paths) {
        const PathSpec path(p.vertices);
        PathValue v{p.name, 0.0, 0.0, std::nullopt};
        if (path.closed()) {
            v.sm = loop_integral(ev.magnetic.field, path, Variant::sm, &ev.mask, config.samples_per_cell);
            v.im = loop_integral(ev.magnetic.field, path, Variant::im, &ev.mask, config.samples_per_cell);
            v.enclosed = ev.flux.enclosed(polygon_of(path));
        } else {
            v.sm = path_integral_sm(ev.magnetic.field, path, &ev.mask);
            v.im = path_integral_im(ev.magnetic.field, path, config.samples_per_cell, &ev.mask);
        }
        ev.paths.push_back(std::move(v));
    }
    if (stages.capacitance) {
        ev.electric = cache ? cache->electric(ev.mask, config.solver) : solve_potential(ev.mask, config.solver);
        ev.capacitance = capacitance_ratios(ev.electric->field, ev.mask, config.structure, config.contour_offset,
                                            config.samples_per_cell);
    }
    if (stages.extremes) {
        try {
            ev.extremes = junction_alpha_extremes(ev.magnetic.field, ev.mask, ev.flux, config.structure,
                                                  ev.layout.x1, Variant::sm, config.samples_per_cell);
        } catch (const FieldNotInGap& e) {
            ev.extremes_skipped = e.what();
        }
    }
    return ev;
}

}  // namespace squidfd
