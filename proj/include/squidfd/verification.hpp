#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "squidfd/config.hpp"
#include "squidfd/integrals.hpp"
#include "squidfd/pipeline.hpp"

namespace squidfd {

enum class Status { pass, fail, not_applicable };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::pass: return "PASS";
        case Status::fail: return "FAIL";
        case Status::not_applicable: return "NOT_APPLICABLE";
    }
    return "?";
}

struct Verdict {
    std::string check;
    double value{0.0};
    double tolerance{0.0};
    Status status{Status::pass};
};

/// PASS when |value| <= tolerance; a NaN value fails.
inline Verdict judge(std::string check, double value, double tolerance) {
    const Status s = std::abs(value) <= tolerance ? Status::pass : Status::fail;
    return {std::move(check), value, tolerance, s};
}

struct LoopValue {
    std::string name;
    bool applicable{true};
    double sm{0.0};
    double im{0.0};
    double enclosed{0.0};  ///< field flux inside the loop
};

struct ConsistencyReport {
    std::vector<LoopValue> loops;  ///< L1, L2, L3, L4
    double total_flux{0.0};
    double scale{0.0};  ///< max(|flux|, max |loop|) used to normalise loop differences
    std::optional<double> refinement_delta;
    std::optional<double> domain_delta;
    std::vector<Verdict> verdicts;

    [[nodiscard]] bool passed() const {
        return std::none_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.status == Status::fail; });
    }
};

/// Loop integrals L1-L3 and the junction loop L4, checked against each
/// other and against the flux they enclose. Only SM values are judged.
inline ConsistencyReport loop_battery(const Evaluation& ev) {
    ConsistencyReport r;
    const ScalarGrid& psi = ev.magnetic.field;
    const StandardLoops std_loops = standard_loops(ev.config.grid);
    const std::vector<std::pair<std::string, const PathSpec*>> named{
        {"L1", &std_loops.l1}, {"L2", &std_loops.l2}, {"L3", &std_loops.l3}};
    for (const auto& [name, loop] : named) {
        LoopValue v{name};
        v.applicable = loop_applicable(*loop, ev.mask);
        if (v.applicable) {
            v.sm = loop_integral(psi, *loop, Variant::sm, &ev.mask);
            v.im = loop_integral(psi, *loop, Variant::im, &ev.mask, ev.config.samples_per_cell);
            v.enclosed = ev.flux.enclosed(polygon_of(*loop));
        }
        r.loops.push_back(v);
    }
    r.loops.push_back({"L4", true, ev.alphas.loop_l4_sm, ev.alphas.loop_l4_im, ev.alphas.flux});
    r.total_flux = ev.alphas.total_flux;

    r.scale = std::abs(r.total_flux);
    for (const LoopValue& v : r.loops) {
        if (v.applicable) r.scale = std::max({r.scale, std::abs(v.sm), std::abs(v.enclosed)});
    }
    const double tol = ev.config.verify.loop_tol * r.scale;
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = a + 1; b < 3; ++b) {
            const LoopValue& la = r.loops[a];
            const LoopValue& lb = r.loops[b];
            Verdict v = judge(la.name + "_vs_" + lb.name, la.sm - lb.sm, tol);
            if (!la.applicable || !lb.applicable) v = {v.check, 0.0, tol, Status::not_applicable};
            r.verdicts.push_back(v);
        }
    }
    for (const LoopValue& l : r.loops) {
        Verdict v = judge(l.name + "_vs_flux", l.sm - l.enclosed, tol);
        if (!l.applicable) v = {v.check, 0.0, tol, Status::not_applicable};
        r.verdicts.push_back(v);
    }
    r.verdicts.push_back(judge("sum_rule", ev.alphas.alpha1_sm + ev.alphas.alpha2_sm - ev.alphas.flux, tol));
    return r;
}

inline ConsistencyReport loop_battery(const Config& config) {
    return loop_battery(evaluate(config, {.capacitance = false, .extremes = false}));
}

/// Config with `factor` times the divisions over the same domain.
inline Config refined(Config c, int factor) {
    c.grid.x_divisions *= factor;
    c.grid.y_divisions *= factor;
    return c;
}

/// Config on a domain `scale` times larger about the same centre, at the same spacing.
inline Config enlarged(Config c, int scale) {
    const double cx = 0.5 * (c.grid.x_min + c.grid.x_max);
    const double cy = 0.5 * (c.grid.y_min + c.grid.y_max);
    const double wx = 0.5 * (c.grid.x_max - c.grid.x_min) * scale;
    const double wy = 0.5 * (c.grid.y_max - c.grid.y_min) * scale;
    c.grid = {cx - wx, cx + wx, cy - wy, cy + wy, c.grid.x_divisions * scale, c.grid.y_divisions * scale};
    return c;
}

struct RatioChange {
    std::optional<double> coarse_sm, fine_sm, coarse_im, fine_im;
    double delta_sm{0.0};
    double delta_im{0.0};
};

namespace detail {

/// |a - b| for optional ratios: 0 when both are undefined, NaN when only one is.
inline double ratio_delta(std::optional<double> a, std::optional<double> b) {
    if (!a && !b) return 0.0;
    if (!a || !b) return std::nan("");
    return std::abs(*a - *b);
}

}  // namespace detail

/// Change of alpha1/alpha2 when the grid is refined by `factor`.
inline RatioChange refinement_check(const Config& config, int factor = 2) {
    if (factor < 2) throw ConfigError("refinement factor must be at least 2");
    const Stages alphas_only{.capacitance = false, .extremes = false};
    const Evaluation coarse = evaluate(config, alphas_only);
    Evaluation fine;
    try {
        fine = evaluate(refined(config, factor), alphas_only);
    } catch (const GeometryOffGrid&) {
        throw GeometryOffGrid("refined grid cannot hold the structure (integer refinement keeps all grid lines)");
    }
    RatioChange r{coarse.alphas.ratio_sm, fine.alphas.ratio_sm, coarse.alphas.ratio_im, fine.alphas.ratio_im};
    r.delta_sm = detail::ratio_delta(r.coarse_sm, r.fine_sm);
    r.delta_im = detail::ratio_delta(r.coarse_im, r.fine_im);
    return r;
}

struct DomainChange {
    double alpha1{0.0};  ///< |change| of alpha1 (SM)
    double alpha2{0.0};
    double loops{0.0};   ///< largest |change| of an applicable loop value (SM)
    double scale{0.0};   ///< normaliser: max(|flux|, |alpha|, |loop|) on the base domain
    double delta{0.0};   ///< largest of the above divided by scale
};

/// Largest change of the alphas and loop values when the domain grows by
/// `scale` at constant spacing, relative to the base configuration's flux scale.
inline DomainChange domain_scaling_check(const Config& config, int scale = 2) {
    if (scale < 2) throw ConfigError("domain scale must be at least 2");
    const Stages alphas_only{.capacitance = false, .extremes = false};
    const Evaluation base = evaluate(config, alphas_only);
    const Evaluation big = evaluate(enlarged(config, scale), alphas_only);
    const ConsistencyReport lb = loop_battery(base);
    const ConsistencyReport lg = loop_battery(big);
    DomainChange d;
    d.alpha1 = std::abs(big.alphas.alpha1_sm - base.alphas.alpha1_sm);
    d.alpha2 = std::abs(big.alphas.alpha2_sm - base.alphas.alpha2_sm);
    // L1 follows the domain edge, so it is compared only where both domains have it.
    for (std::size_t k = 0; k < lb.loops.size(); ++k) {
        if (lb.loops[k].applicable && lg.loops[k].applicable) {
            d.loops = std::max(d.loops, std::abs(lg.loops[k].sm - lb.loops[k].sm));
        }
    }
    d.scale = std::max({lb.scale, std::abs(base.alphas.alpha1_sm), std::abs(base.alphas.alpha2_sm)});
    const double worst = std::max({d.alpha1, d.alpha2, d.loops});
    d.delta = d.scale > 0.0 ? worst / d.scale : worst;
    return d;
}

enum class Agreement { consistent, deviates, undefined };

inline const char* to_string(Agreement a) {
    switch (a) {
        case Agreement::consistent: return "CONSISTENT";
        case Agreement::deviates: return "DEVIATES";
        case Agreement::undefined: return "UNDEFINED";
    }
    return "?";
}

/// Gauge ratio against the lumped-element prediction C2/C1 (x = 0 delimiter).
struct PredictionRecord {
    std::optional<double> deviation_sm;  ///< alpha1/alpha2 - C2/C1, SM
    std::optional<double> deviation_im;
    double tolerance{0.0};
    Agreement verdict{Agreement::undefined};
};

inline PredictionRecord compare_to_prediction(const AlphaReport& alpha, const CapacitanceReport& cap,
                                              double tolerance = 4e-2) {
    PredictionRecord p;
    p.tolerance = tolerance;
    if (alpha.ratio_sm) p.deviation_sm = *alpha.ratio_sm - cap.ratio_sm_0;
    if (alpha.ratio_im) p.deviation_im = *alpha.ratio_im - cap.ratio_im_0;
    if (p.deviation_sm && p.deviation_im) {
        const double worst = std::max(std::abs(*p.deviation_sm), std::abs(*p.deviation_im));
        p.verdict = worst <= tolerance ? Agreement::consistent : Agreement::deviates;
    }
    return p;
}

/// Full battery for the verify command: loops, refinement, domain growth.
inline ConsistencyReport verify(const Config& config, std::optional<int> refine_factor = std::nullopt) {
    const Evaluation ev = evaluate(config, {.capacitance = false, .extremes = false});
    ConsistencyReport r = loop_battery(ev);
    const RatioChange rc = refinement_check(config, refine_factor.value_or(config.verify.refine_factor));
    r.refinement_delta = std::isnan(rc.delta_sm) ? rc.delta_sm : std::max(rc.delta_sm, rc.delta_im);
    r.verdicts.push_back(judge("refinement", *r.refinement_delta, config.verify.refine_tol));
    const DomainChange dc = domain_scaling_check(config, config.verify.domain_scale);
    r.domain_delta = dc.delta;
    r.verdicts.push_back(judge("domain_scaling", dc.delta, config.verify.domain_tol));
    return r;
}

}  // namespace squidfd
