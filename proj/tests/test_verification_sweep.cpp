#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"

using namespace squidfd;

namespace {

const Verdict& find_verdict(const ConsistencyReport& r, const std::string& name) {
    for (const Verdict& v : r.verdicts) {
        if (v.check == name) return v;
    }
    throw std::runtime_error("no verdict " + name);
}

SweepDef one_axis(std::string key, std::vector<std::string> values, std::vector<std::string> columns) {
    SweepDef d;
    d.id = "t";
    SweepAxis a;
    a.keys = {std::move(key)};
    for (auto& v : values) a.steps.push_back({std::move(v)});
    d.axes.push_back(std::move(a));
    d.columns = std::move(columns);
    return d;
}

}  // namespace

TEST(Judge, Thresholds) {
    EXPECT_EQ(judge("a", 1e-3, 2e-3).status, Status::pass);
    EXPECT_EQ(judge("a", -3e-3, 2e-3).status, Status::fail);
    EXPECT_EQ(judge("a", std::nan(""), 2e-3).status, Status::fail);
}

TEST(LoopBattery, SymmetricStructurePasses) {
    const ConsistencyReport r = loop_battery(test::symmetric_config());
    ASSERT_EQ(r.loops.size(), 4u);
    for (const LoopValue& l : r.loops) {
        EXPECT_TRUE(l.applicable) << l.name;
        EXPECT_NEAR(l.sm, 1.0 / 64, 1e-10) << l.name;
        EXPECT_NEAR(l.im, 1.0 / 64, 0.1 / 64) << l.name;
    }
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(find_verdict(r, "sum_rule").status, Status::pass);
}

TEST(LoopBattery, LoopsThroughTheWireAreNotApplicable) {
    Config c = test::symmetric_config(256);
    c.structure.lsc = 1.0;
    c.structure.w_l = c.structure.w_r = 3.0 / 8;
    c.structure.d = 14.0 / 64;
    c.structure.pos = 1.0 / 4;
    c.field = {0.5, 7.0 / 8, -1.0 / 16, 1.0 / 16, 1.0};
    const ConsistencyReport r = loop_battery(c);
    for (int k = 0; k < 3; ++k) EXPECT_FALSE(r.loops[k].applicable);
    EXPECT_TRUE(r.loops[3].applicable);
    EXPECT_EQ(find_verdict(r, "L1_vs_L2").status, Status::not_applicable);
    EXPECT_EQ(find_verdict(r, "L4_vs_flux").status, Status::pass);
    EXPECT_TRUE(r.passed());
}

TEST(Refinement, GridHelpers) {
    const Config c = test::symmetric_config();
    const Config f = refined(c, 2);
    EXPECT_EQ(f.grid.x_divisions, 256);
    EXPECT_EQ(f.grid.x_max, 1.0);
    const Config e = enlarged(c, 2);
    EXPECT_EQ(e.grid.x_min, -2.0);
    EXPECT_EQ(e.grid.x_divisions, 256);
    EXPECT_DOUBLE_EQ(e.grid.hx(), c.grid.hx());
    EXPECT_THROW(refinement_check(c, 1), ConfigError);
    EXPECT_THROW(domain_scaling_check(c, 1), ConfigError);
}

TEST(Refinement, UndefinedRatiosCompareEqual) {
    Config c = test::symmetric_config();
    c.field = {0.0, 1.0 / 64, 0.0, 0.0, 1.0};
    const RatioChange r = refinement_check(c);
    EXPECT_EQ(r.delta_sm, 0.0);
    EXPECT_FALSE(r.fine_sm.has_value());
}

TEST(Prediction, Verdicts) {
    AlphaReport a;
    CapacitanceReport cap;
    cap.ratio_sm_0 = 0.8;
    cap.ratio_im_0 = 0.81;
    a.ratio_sm = 0.82;
    a.ratio_im = 0.83;
    EXPECT_EQ(compare_to_prediction(a, cap, 4e-2).verdict, Agreement::consistent);
    a.ratio_im = 0.9;
    const PredictionRecord p = compare_to_prediction(a, cap, 4e-2);
    EXPECT_EQ(p.verdict, Agreement::deviates);
    EXPECT_NEAR(*p.deviation_im, 0.09, 1e-12);
    a.ratio_sm.reset();
    EXPECT_EQ(compare_to_prediction(a, cap).verdict, Agreement::undefined);
}

TEST(Sweep, SinglePointEqualsDirectEvaluation) {
    const Config base = test::plate_config(1.0 / 16, 1.0 / 16);
    const SweepTable t =
        run_sweep(base, one_axis("structure.wl", {"3/16"}, {"alpha1_sm", "alpha2_sm", "ratio_sm", "c_ratio_sm_0"}));
    ASSERT_EQ(t.rows.size(), 1u);
    Config direct = base;
    direct.structure.w_l = 3.0 / 16;
    const Evaluation ev = evaluate(direct, {.capacitance = true, .extremes = false});
    EXPECT_EQ(t.rows[0][0], "3/16");
    EXPECT_EQ(t.rows[0][1], format_double(ev.alphas.alpha1_sm));
    EXPECT_EQ(t.rows[0][2], format_double(ev.alphas.alpha2_sm));
    EXPECT_EQ(t.rows[0][3], format_optional(ev.alphas.ratio_sm));
    EXPECT_EQ(t.rows[0][4], format_double(ev.capacitance->ratio_sm_0));
    EXPECT_EQ(t.rows[0][5], "ok");
    EXPECT_EQ(t.header, (std::vector<std::string>{"structure.wl", "alpha1_sm", "alpha2_sm", "ratio_sm",
                                                  "c_ratio_sm_0", "status"}));
}

TEST(Sweep, DeterministicOutput) {
    const Config base = test::plate_config(1.0 / 16, 1.0 / 16);
    const SweepDef d = one_axis("structure.wr", {"1/16", "2/16"}, {"ratio_sm", "ratio_im", "flux"});
    std::ostringstream a, b;
    write_table(a, run_sweep(base, d));
    write_table(b, run_sweep(base, d));
    EXPECT_EQ(a.str(), b.str());
}

TEST(Sweep, CartesianOrderFirstAxisSlowest) {
    SweepDef d = one_axis("structure.wl", {"1/16", "2/16"}, {"flux"});
    SweepAxis second;
    second.keys = {"field.bxn", "field.bxp"};
    second.steps = {{"-1/16", "0"}, {"0", "1/16"}, {"-1/16", "1/16"}};
    d.axes.push_back(second);
    const SweepTable t = run_sweep(test::symmetric_config(), d);
    ASSERT_EQ(t.rows.size(), 6u);
    EXPECT_EQ(t.rows[0][0], "1/16");
    EXPECT_EQ(t.rows[2][0], "1/16");
    EXPECT_EQ(t.rows[3][0], "2/16");
    EXPECT_EQ(t.rows[4][1], "0");
    EXPECT_EQ(t.rows[4][2], "1/16");
}

TEST(Sweep, PathOnlyChangesReuseTheSolve) {
    const Config base = test::wide_plate_config(2.0 / 8, 3.0 / 8, -1.0 / 64, 1.0 / 64);
    const SweepTable t = run_sweep(base, one_axis("junctions.x2", {"9/64", "16/64", "31/64"}, {"alpha2_sm"}));
    EXPECT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(t.solves, 1u);
    const SweepTable u = run_sweep(base, one_axis("junctions.x2", {"9/64", "16/64"}, {"alpha2_sm", "c_ratio_sm_0"}));
    EXPECT_EQ(u.solves, 2u);
}

TEST(Sweep, FailedRowsAreRecorded) {
    const Config base = test::symmetric_config();
    const SweepTable t = run_sweep(base, one_axis("structure.wl", {"1/16", "1/100", "2/16"}, {"ratio_sm"}));
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(t.failures, 1u);
    EXPECT_EQ(t.rows[1][1], "ERROR");
    EXPECT_EQ(t.rows[1][2].rfind("error: ", 0), 0u);
    EXPECT_EQ(t.rows[2][2], "ok");
}

TEST(Sweep, InvalidDefinitions) {
    const Config base = test::symmetric_config();
    EXPECT_THROW(run_sweep(base, one_axis("structure.nope", {"1"}, {"flux"})), InvalidAxis);
    EXPECT_THROW(run_sweep(base, one_axis("structure.wl", {}, {"flux"})), InvalidAxis);
    EXPECT_THROW(run_sweep(base, one_axis("structure.wl", {"1/16"}, {"nope"})), ConfigError);
    EXPECT_THROW(run_sweep(base, one_axis("structure.wl", {"1/16"}, {})), ConfigError);
}

TEST(Sweep, ExtremesColumnsUndefinedOutsideGap) {
    const SweepTable t = run_sweep(test::symmetric_config(), one_axis("field.b0", {"1"}, {"ratio_max"}));
    EXPECT_EQ(t.rows[0][1], "UNDEFINED");
}

TEST(SolveCache, CountsHits) {
    const Config c = test::symmetric_config();
    SolveCache cache;
    evaluate(c, {}, &cache);
    evaluate(c, {}, &cache);
    EXPECT_EQ(cache.solves(), 2u);
    EXPECT_EQ(cache.hits(), 2u);
    Config other = c;
    other.solver.tol = 1e-11;
    evaluate(other, {.capacitance = false, .extremes = false}, &cache);
    EXPECT_EQ(cache.solves(), 3u);
}
