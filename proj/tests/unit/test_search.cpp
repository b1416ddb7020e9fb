#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <map>
#include <numbers>

#include "magwaist/errors.hpp"
#include "magwaist/presets.hpp"
#include "magwaist/search.hpp"

using namespace magwaist;

namespace {

constexpr double kPi = std::numbers::pi;

const MagneticTonelliData& torus() {
    static const MagneticTonelliData d = make_preset("torus-example");
    return d;
}

SearchOptions torus_options(int seeds = 16) {
    static const CriticalEstimate c0 = compute_c0(torus());
    SearchOptions o;
    o.seeds = seeds;
    o.c0 = c0;
    return o;
}

const SearchReport& report_at(double e) {
    static std::map<double, SearchReport> cache;
    auto it = cache.find(e);
    if (it == cache.end()) it = cache.emplace(e, minimal_boundary_search(torus(), e, torus_options())).first;
    return it->second;
}

Multicurve latitude_pair(double speed) {
    const auto& s = torus().surface;
    return make_multicurve(s, {latitude_loop(s, 0.0, +1, 128, speed), latitude_loop(s, 0.5, -1, 128, speed)});
}

}  // namespace

TEST(Search, MinimalBoundaryBelowC0) {
    const auto& r = report_at(0.3);
    EXPECT_NEAR(r.action, 2 * (std::sqrt(0.6) - 1.0), 1e-3);
    EXPECT_TRUE(r.negative);
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(r.topological);
    EXPECT_TRUE(r.embedded);
    ASSERT_EQ(r.best.components.size(), 2u);
    for (double res : r.energy_residuals) EXPECT_LT(res, 1e-4);
    EXPECT_LT(hausdorff_distance(torus().surface, r.best, latitude_pair(std::sqrt(0.6))), 1e-2);
    EXPECT_GT(r.disjointness[0][1], 0.4);
}

TEST(Search, MinimalBoundaryAtC0) {
    const auto& r = report_at(0.5);
    EXPECT_NEAR(r.action, 0.0, 1e-3);
    EXPECT_TRUE(r.topological);
    EXPECT_LT(hausdorff_distance(torus().surface, r.best, latitude_pair(1.0)), 1e-2);
}

TEST(Search, RandomSeedsReachTheWaistPair) {
    const auto& r = report_at(0.3);
    int random_ok = 0;
    for (const auto& s : r.seed_log)
        if (s.ok && (s.kind == "blob" || s.kind == "fourier")) {
            ++random_ok;
            EXPECT_NEAR(s.action, r.action, 1e-3);
        }
    EXPECT_GE(random_ok, 1);
}

TEST(Search, ActionIncreasesWithEnergy) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double e : {0.1, 0.3, 0.45}) {
        const double a = minimal_boundary_search(torus(), e, torus_options(3)).action;
        EXPECT_GT(a, prev) << e;
        prev = a;
    }
}

TEST(Search, EnergyRange) {
    EXPECT_THROW(minimal_boundary_search(torus(), 0.0, torus_options()), EnergyRangeError);
    EXPECT_THROW(minimal_boundary_search(torus(), 0.7, torus_options()), EnergyRangeError);
}

TEST(Search, ReportJson) {
    const auto j = search_report_to_json(torus(), report_at(0.3));
    for (const char* key : {"energy", "action", "components", "certificate", "seeds", "flags", "c0"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_FALSE(j["certificate"].is_null());
    EXPECT_EQ(j["components"].size(), 2u);
    EXPECT_TRUE(j["flags"]["topological"].get<bool>());
}

TEST(GraphCheck, SameReportIsIdentical) {
    const auto& r = report_at(0.3);
    const auto v = graph_theorem_check(torus(), {r, r});
    ASSERT_EQ(v.size(), 4u);
    int identical = 0;
    for (const auto& p : v) {
        EXPECT_NE(p.kind, PairKind::Violation);
        identical += p.kind == PairKind::Identical;
    }
    EXPECT_EQ(identical, 2);
}

TEST(GraphCheck, CrossingCurvesViolate) {
    const auto& s = torus().surface;
    SearchReport a, b;
    a.energy = b.energy = 0.3;
    a.best = latitude_pair(std::sqrt(0.6));
    b.best = make_multicurve(s, {longitude_loop(s, 0.25, +1, 128, 1.0), longitude_loop(s, 0.75, -1, 128, 1.0)});
    const auto v = graph_theorem_check(torus(), {a, b});
    for (const auto& p : v) {
        EXPECT_EQ(p.kind, PairKind::Violation);
        EXPECT_LT(s.periodic_delta(p.witness_a, p.witness_b).norm(), 0.05);
    }
}

TEST(GraphCheck, ReversedCurveViolates) {
    const auto& s = torus().surface;
    SearchReport a, b;
    a.energy = b.energy = 0.3;
    const auto l = latitude_loop(s, 0.0, +1, 128, 1.0);
    a.best = make_multicurve(s, {l});
    b.best = make_multicurve(s, {reversed(l, s)});
    const auto v = graph_theorem_check(torus(), {a, b});
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, PairKind::Violation);
}

TEST(GraphCheck, TimeShiftIsIdentical) {
    const auto& s = torus().surface;
    auto l = latitude_loop(s, 0.0, +1, 128, 1.0);
    auto shifted = l;
    std::rotate(shifted.samples.begin(), shifted.samples.begin() + 37, shifted.samples.end());
    // Keep the lift continuous across the old starting point.
    for (int k = l.size() - 37; k < l.size(); ++k) shifted.samples[static_cast<std::size_t>(k)](0) += 1.0;
    EXPECT_LT(aligned_distance(s, l, shifted), 1e-6);
}

TEST(GraphCheck, MixedEnergies) {
    SearchReport a, b;
    a.energy = 0.3;
    b.energy = 0.4;
    EXPECT_THROW(graph_theorem_check(torus(), {a, b}), MixedEnergyError);
}

TEST(Continuation, WaistsAboveC0) {
    const auto c = waist_continuation_above_c0(torus(), report_at(0.5), {0.52, 0.6, 0.72});
    ASSERT_EQ(c.steps.size(), 3u);
    for (const auto& st : c.steps) {
        EXPECT_TRUE(st.success) << st.energy;
        for (double d : st.center_distances) EXPECT_LT(d, kTubeInterior);
    }
    for (double a : c.steps[1].actions) EXPECT_NEAR(a, std::sqrt(1.2) - 1.0, 1e-3);
    ASSERT_TRUE(c.cw_estimate.has_value());
    EXPECT_GT(*c.cw_estimate, 0.5);
}

TEST(Continuation, AtC0ReproducesBoundary) {
    const auto c = waist_continuation_above_c0(torus(), report_at(0.5), {0.5});
    ASSERT_EQ(c.steps.size(), 1u);
    double total = 0.0;
    for (double a : c.steps[0].actions) total += a;
    EXPECT_NEAR(total, 0.0, 1e-3);
}

TEST(Continuation, RejectsFabricatedReport) {
    const auto rs = make_preset("round-sphere-free");
    SearchReport r;
    r.energy = 0.5;
    r.best = make_multicurve(rs.surface, {latitude_loop(rs.surface, 0.2, +1, 64, 1.0)});
    EXPECT_THROW(waist_continuation_above_c0(rs, r, {0.6}), NotAMinimalBoundaryError);
}

TEST(Minimax, SphereMagneticLevels) {
    const auto sm = make_preset("sphere-magnetic");
    const auto w = descend_to_waist(sm, latitude_loop(sm.surface, 0.0, -1, 128, 0.6), 0.18);
    ASSERT_TRUE(w.converged);
    const auto m = minimax_orbits(sm, 0.18, w.loop, 3);
    ASSERT_EQ(m.levels.size(), 3u);
    const double s1 = m.levels[0].s_m;
    EXPECT_NEAR(s1, w.value, 2e-3);
    EXPECT_GT(m.levels[1].s_m, 2 * s1);
    EXPECT_GT(m.levels[2].s_m, 3 * s1);
    EXPECT_LT(m.levels[0].s_m, m.levels[1].s_m);
    EXPECT_LT(m.levels[1].s_m, m.levels[2].s_m);
    EXPECT_GE(m.distinct_orbits, 3);
}

TEST(Minimax, RejectsNonMinimizer) {
    const auto sm = make_preset("sphere-magnetic");
    // Off the equator the latitude is not even critical.
    const auto l = latitude_loop(sm.surface, 0.3, -1, 128, 0.6);
    EXPECT_THROW(minimax_orbits(sm, 0.18, l, 2), NotAWaistError);
}

TEST(Ambient, RoundTrip) {
    const auto sm = make_preset("sphere-magnetic");
    const auto l = latitude_loop(sm.surface, 0.3, -1, 64, 0.5);
    const auto a = to_ambient(sm.surface, l);
    for (const auto& x : a.samples) EXPECT_NEAR(x.norm(), 1.0, 1e-14);
    const auto back = to_chart(sm.surface, a);
    ASSERT_TRUE(back.has_value());
    EXPECT_LT(hausdorff_distance(sm.surface, l, *back), 1e-12);
    EXPECT_NEAR(ambient_action(sm, a, 0.18), action_free_period(sm, l, 0.18), 5e-3);
}

TEST(OrbitMeasure, MinimalBoundaryAtC0) {
    const auto m = orbit_measure_stats(torus(), report_at(0.5).best);
    EXPECT_NEAR(m.rotation_vector.norm(), 0.0, 1e-12);
    EXPECT_NEAR(m.measure_action, -0.5, 1e-3);
}

TEST(OrbitMeasure, SingleLatitude) {
    const auto& s = torus().surface;
    const auto m = orbit_measure_stats(torus(), make_multicurve(s, {latitude_loop(s, 0.0, +1, 128, 1.0)}));
    EXPECT_NEAR(m.rotation_vector(0), 1.0, 1e-12);
    EXPECT_NEAR(m.rotation_vector(1), 0.0, 1e-12);
    EXPECT_NEAR(m.measure_action, -0.5, 1e-9);
}

TEST(OrbitMeasure, NotAnOrbit) {
    const auto& s = torus().surface;
    const auto l = chart_circle(Vec2(0.3, 0.3), 0.1, 64, true, 1.0);
    EXPECT_THROW(orbit_measure_stats(torus(), make_multicurve(s, {l})), NotAnOrbitError);
}

TEST(ZOrbitCriterion, SphereMagnetic) {
    const auto r = lemma52_criterion(make_preset("sphere-magnetic"));
    EXPECT_TRUE(r.satisfied);
    EXPECT_NEAR(r.theta_sup, 0.5, 1e-6);
    EXPECT_NEAR(r.r0, 0.5, 1e-6);
    EXPECT_EQ(r.n_components, 1);
    ASSERT_TRUE(r.boundary.has_value());
    for (const auto& q : r.n_set) EXPECT_NEAR(q(1), 0.0, 1e-2);
    for (double a : r.orbit_actions) EXPECT_NEAR(a, 0.0, 1e-6);
}

TEST(ZOrbitCriterion, TorusExample) {
    const auto r = lemma52_criterion(torus());
    EXPECT_TRUE(r.satisfied);
    EXPECT_NEAR(r.r0, 1.0, 1e-6);
    EXPECT_EQ(r.n_components, 2);
    ASSERT_TRUE(r.boundary.has_value());
    EXPECT_LT(hausdorff_distance(torus().surface, *r.boundary, latitude_pair(1.0)), 1e-2);
    EXPECT_NEAR(0.5 * r.r0 * r.r0, compute_c0(torus()).value, 0.01);
}

TEST(ZOrbitCriterion, ClosedForm) {
    EXPECT_THROW(lemma52_criterion(make_preset("flat-torus")), ClosedFormError);
}

TEST(Randers, CensusAtPointSix) {
    const auto c = randers_geodesic_census(make_preset("sphere-magnetic"), 0.6);
    EXPECT_NEAR(c.waist_F_length, 0.2 * kPi, 1e-3);
    EXPECT_NEAR(c.waist_action, c.waist_F_length, 1e-12);
    EXPECT_NEAR(c.waist_unit_F_length, c.waist_F_length / 0.6, 1e-12);
    double zmax = 0.0;
    for (const auto& q : c.waist.samples) zmax = std::max(zmax, std::abs(q(1)));
    EXPECT_LT(zmax, 1e-3);
    EXPECT_GE(c.geodesics.size(), 3u);
    for (std::size_t i = 0; i < c.geodesics.size(); ++i)
        for (std::size_t j = i + 1; j < c.geodesics.size(); ++j)
            EXPECT_GT(ambient_hausdorff(c.geodesics[i], c.geodesics[j]), 1e-2);
}

TEST(Randers, OutOfRange) {
    EXPECT_THROW(randers_geodesic_census(make_preset("sphere-magnetic"), 0.4), RandersDomainError);
}

TEST(Poles, FreeSphereLatitudeCollapsesOverThePole) {
    const auto rs = make_preset("round-sphere-free");
    const auto r = descend_across_poles(rs, latitude_loop(rs.surface, 0.4, 1, 64, 1.0), 0.5);
    EXPECT_TRUE(r.hit_period_floor);
    EXPECT_FALSE(r.converged);
    EXPECT_FALSE(r.stalled_at_pole);
}

TEST(Poles, MagneticWaistIsUnaffected) {
    const auto sm = make_preset("sphere-magnetic");
    const auto r = descend_across_poles(sm, latitude_loop(sm.surface, 0.3, -1, 64, 0.6), 0.18);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 0.2 * std::numbers::pi, 1e-3);
}
