#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "magwaist/errors.hpp"
#include "magwaist/loops.hpp"

using namespace magwaist;

namespace {

constexpr double kPi = std::numbers::pi;
const SurfaceModel kTorus = SurfaceModel::flat_torus();
const SurfaceModel kSphere = SurfaceModel::round_sphere();

int count_type(const std::vector<CrossingRecord>& r, CrossingType t) {
    int n = 0;
    for (const auto& x : r) n += x.type == t;
    return n;
}

double total_length(const Multicurve& mc) {
    double l = 0.0;
    for (const auto& c : mc.components) l += chart_length(kTorus, c);
    return l;
}

double total_period(const Multicurve& mc) {
    double p = 0.0;
    for (const auto& c : mc.components) p += c.period;
    return p;
}

// Two ccw circles of radius 0.1 whose polygons nearly touch at one vertex each.
Multicurve osculating_pair(double gap) {
    LoopPath a = chart_circle(Vec2(0.4, 0.5), 0.1, 64, true, 1.0);
    LoopPath b = chart_circle(Vec2(0.6 + gap, 0.5), 0.1, 64, true, 1.0);
    // Rotate b so that its vertex 0 sits at angle π.
    std::rotate(b.samples.begin(), b.samples.begin() + 32, b.samples.end());
    return make_multicurve(kTorus, {a, b});
}

}  // namespace

TEST(Loops, LatitudeBuilders) {
    const LoopPath t = latitude_loop(kTorus, 0.0, 1, 16, 1.0);
    EXPECT_NO_THROW(t.validate(kTorus));
    EXPECT_EQ(homology_class(kTorus, t), Eigen::Vector2i(1, 0));
    EXPECT_NEAR(t.period, 1.0, 1e-15);
    const LoopPath s = latitude_loop(kSphere, 0.6, -1, 32, 0.5);
    EXPECT_NO_THROW(s.validate(kSphere));
    EXPECT_NEAR(s.period, 2 * kPi * 0.8 / 0.5, 1e-12);
    EXPECT_EQ(homology_class(kSphere, s).size(), 0);
}

TEST(Loops, ValidateRejectsBrokenLoops) {
    LoopPath l = latitude_loop(kTorus, 0.0, 1, 16, 1.0);
    LoopPath few = l;
    few.samples.resize(6);
    EXPECT_THROW(few.validate(kTorus), std::invalid_argument);
    LoopPath tiny = l;
    tiny.period = 1e-4;
    EXPECT_THROW(tiny.validate(kTorus), std::invalid_argument);
    LoopPath wrong = l;
    wrong.winding = Eigen::Vector2i(2, 0);
    EXPECT_THROW(wrong.validate(kTorus), std::invalid_argument);
}

TEST(Loops, ResampleRefinesCircle) {
    const LoopPath c16 = chart_circle(Vec2(0.5, 0.5), 0.2, 16, true, 1.0);
    const LoopPath c64 = resample_uniform(kTorus, c16, 64);
    ASSERT_EQ(c64.size(), 64);
    double worst = 0.0;
    for (const Vec2& p : c64.samples) worst = std::max(worst, std::abs((p - Vec2(0.5, 0.5)).norm() - 0.2));
    EXPECT_LT(worst, 1e-2);
    EXPECT_EQ(c64.period, c16.period);
}

TEST(Loops, ResampleSameSizeIsIdentity) {
    const LoopPath c = fixtures::figure_eight(Vec2(0.5, 0.5), 0.3, 40);
    const LoopPath r = resample_uniform(kTorus, c, 40);
    for (int k = 0; k < 40; ++k) EXPECT_EQ(r.samples[k], c.samples[k]);
}

TEST(Loops, ResamplePreservesHomology) {
    const LoopPath f = fixtures::figure_eight(Vec2(0.5, 0.5), 0.3, 100);
    EXPECT_EQ(homology_class(kTorus, resample_uniform(kTorus, f, 50)), Eigen::Vector2i(0, 0));
    const LoopPath w = fixtures::wavy_latitude(0.3, 0.05, 3, 90, 1.0);
    EXPECT_EQ(homology_class(kTorus, resample_uniform(kTorus, w, 37)), Eigen::Vector2i(1, 0));
}

TEST(Loops, HomologyOfPairCancels) {
    const auto mc = make_multicurve(kTorus, {latitude_loop(kTorus, 0.0, 1, 16, 1.0),
                                             latitude_loop(kTorus, 0.5, -1, 16, 1.0)});
    EXPECT_EQ(mc.homology, Eigen::Vector2i(0, 0));
}

TEST(Loops, WindingResidualDetected) {
    LoopPath l = latitude_loop(kTorus, 0.0, 1, 16, 1.0);
    l.winding = Eigen::Vector2i(3, 0);
    EXPECT_THROW(homology_class(kTorus, l), WindingResidualError);
}

TEST(Loops, DisjointCirclesHaveNoCrossings) {
    const auto mc = make_multicurve(kTorus, {latitude_loop(kTorus, 0.1, 1, 64, 1.0),
                                             latitude_loop(kTorus, 0.6, -1, 64, 1.0)});
    EXPECT_TRUE(self_intersections(kTorus, mc).empty());
}

TEST(Loops, FigureEightHasOneTransverseCrossing) {
    const auto mc = make_multicurve(kTorus, {fixtures::figure_eight(Vec2(0.5, 0.5), 0.3, 101)});
    const auto r = self_intersections(kTorus, mc);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].type, CrossingType::Transverse);
    EXPECT_LT((r[0].location - Vec2(0.5, 0.5)).norm(), 1e-3);
}

TEST(Loops, CrossingThroughAVertexIsTransverse) {
    // Even sample count places a vertex exactly on the double point.
    LoopPath f;
    for (int k = 0; k < 40; ++k) {
        const double t = 2 * kPi * k / 40;
        f.samples.emplace_back(0.5 + 0.3 * std::sin(t), 0.5 + 0.3 * std::sin(t) * std::cos(t));
    }
    const auto r = self_intersections(kTorus, make_multicurve(kTorus, {f}));
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].type, CrossingType::Transverse);
}

TEST(Loops, OsculatingCirclesGiveOneTangency) {
    const auto r = self_intersections(kTorus, osculating_pair(4e-7));
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].type, CrossingType::Tangency);
    EXPECT_TRUE(self_intersections(kTorus, osculating_pair(1e-3)).empty());
}

TEST(Loops, CrossingsAcrossTheSeam) {
    // A wavy +x curve against a −x latitude: two crossings, one near the seam x = 0.
    const LoopPath w = fixtures::wavy_latitude(0.5, 0.1, 1, 128, 1.0);
    const LoopPath l = latitude_loop(kTorus, 0.5, -1, 97, 1.0);
    const auto r = self_intersections(kTorus, make_multicurve(kTorus, {w, l}));
    EXPECT_EQ(count_type(r, CrossingType::Transverse), 2);
}

TEST(Loops, DegenerateSegmentRejected) {
    LoopPath c = chart_circle(Vec2(0.5, 0.5), 0.2, 16, true, 1.0);
    c.samples[3] = c.samples[2] + Vec2(1e-7, 0.0);
    EXPECT_THROW(self_intersections(kTorus, make_multicurve(kTorus, {c})), DegenerateSegmentError);
}

TEST(Loops, RearrangeFigureEight) {
    const auto mc = make_multicurve(kTorus, {fixtures::figure_eight(Vec2(0.5, 0.5), 0.3, 101, 2.0)});
    const auto out = rearrange_double_points(kTorus, mc);
    ASSERT_EQ(out.components.size(), 2u);
    const auto r = self_intersections(kTorus, out);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].type, CrossingType::Tangency);
    EXPECT_EQ(out.homology, Eigen::Vector2i(0, 0));
    EXPECT_NEAR(total_length(out), total_length(mc), 1e-12);
    EXPECT_NEAR(total_period(out), 2.0, 1e-14);
}

TEST(Loops, RearrangeLeavesEmbeddedCurvesAlone) {
    const auto mc = make_multicurve(kTorus, {chart_circle(Vec2(0.5, 0.5), 0.2, 32, true, 1.0)});
    const auto out = rearrange_double_points(kTorus, mc);
    ASSERT_EQ(out.components.size(), 1u);
    for (int k = 0; k < 32; ++k) EXPECT_EQ(out.components[0].samples[k], mc.components[0].samples[k]);
    EXPECT_TRUE(out.embedded);
}

TEST(Loops, RearrangeTrefoilGivesTwoCircles) {
    const auto mc = make_multicurve(kTorus, {fixtures::trefoil(Vec2(0.5, 0.5), 0.1, 301)});
    ASSERT_EQ(count_type(self_intersections(kTorus, mc), CrossingType::Transverse), 3);
    const auto out = rearrange_double_points(kTorus, mc);
    EXPECT_EQ(out.components.size(), 2u);
    const auto r = self_intersections(kTorus, out);
    EXPECT_EQ(count_type(r, CrossingType::Transverse), 0);
    EXPECT_EQ(count_type(r, CrossingType::Tangency), 3);
    EXPECT_NEAR(total_length(out), total_length(mc), 1e-12);
}

TEST(Loops, RearrangeKeepsSupportExactly) {
    const auto mc = make_multicurve(kTorus, {fixtures::trefoil(Vec2(0.5, 0.5), 0.1, 211)});
    const auto out = rearrange_double_points(kTorus, mc);
    for (const auto& c : out.components)
        for (const Vec2& p : c.samples)
            EXPECT_LT(point_to_loop_distance(kTorus, p, mc.components[0]), 1e-12);
    for (const Vec2& p : mc.components[0].samples) {
        double best = 1e9;
        for (const auto& c : out.components) best = std::min(best, point_to_loop_distance(kTorus, p, c));
        EXPECT_LT(best, 1e-12);
    }
}

TEST(Loops, RearrangeMergesComponentsOnTheTorus) {
    const LoopPath w = fixtures::wavy_latitude(0.5, 0.1, 1, 128, 1.0);
    const LoopPath l = latitude_loop(kTorus, 0.5, -1, 97, 1.0);
    const auto mc = make_multicurve(kTorus, {w, l});
    const auto out = rearrange_double_points(kTorus, mc);
    EXPECT_EQ(out.homology, Eigen::Vector2i(0, 0));
    EXPECT_EQ(count_type(self_intersections(kTorus, out), CrossingType::Transverse), 0);
    EXPECT_NEAR(total_length(out), total_length(mc), 1e-12);
    EXPECT_NEAR(total_period(out), 2.0, 1e-14);
    for (const auto& c : out.components) EXPECT_NO_THROW(c.validate(kTorus));
}

TEST(Loops, ChamferTangentLoops) {
    const auto mc = make_multicurve(kTorus, {fixtures::figure_eight(Vec2(0.5, 0.5), 0.3, 101)});
    const auto tangent = rearrange_double_points(kTorus, mc);
    const auto out = chamfer(kTorus, tangent, 1e-3);
    EXPECT_TRUE(out.embedded);
    EXPECT_TRUE(self_intersections(kTorus, out, 0.25e-3).empty());
    EXPECT_LT(hausdorff_distance(kTorus, out, tangent), 1e-3);
    EXPECT_NEAR(total_period(out), total_period(tangent), 1e-12);
}

TEST(Loops, ChamferOsculatingCircles) {
    const auto mc = osculating_pair(4e-7);
    const auto out = chamfer(kTorus, mc, 1e-3);
    EXPECT_TRUE(out.embedded);
    EXPECT_LT(hausdorff_distance(kTorus, out, mc), 1e-3);
}

TEST(Loops, ChamferTorusPairKeepsClass) {
    const LoopPath w = fixtures::wavy_latitude(0.5, 0.1, 1, 128, 1.0);
    const LoopPath l = latitude_loop(kTorus, 0.5, -1, 97, 1.0);
    const auto tangent = rearrange_double_points(kTorus, make_multicurve(kTorus, {w, l}));
    const auto out = chamfer(kTorus, tangent, 1e-3);
    EXPECT_TRUE(out.embedded);
    EXPECT_EQ(homology_class(kTorus, out), Eigen::Vector2i(0, 0));
}

TEST(Loops, ChamferEmbeddedIsUnchanged) {
    const auto mc = make_multicurve(kTorus, {chart_circle(Vec2(0.5, 0.5), 0.2, 32, true, 1.0)});
    const auto out = chamfer(kTorus, mc, 1e-3);
    EXPECT_EQ(out.components[0].samples, mc.components[0].samples);
}

TEST(Loops, ChamferRejectsLargeEps) {
    const auto tangent = rearrange_double_points(
        kTorus, make_multicurve(kTorus, {fixtures::figure_eight(Vec2(0.5, 0.5), 0.3, 101)}));
    EXPECT_THROW(chamfer(kTorus, tangent, 0.05), EpsTooLargeError);
}

TEST(Loops, ChamferRejectsTransverseInput) {
    const auto mc = make_multicurve(kTorus, {fixtures::figure_eight(Vec2(0.5, 0.5), 0.3, 101)});
    EXPECT_THROW(chamfer(kTorus, mc, 1e-3), PreconditionError);
}

TEST(Loops, HausdorffOfShiftedLatitudes) {
    const LoopPath a = latitude_loop(kTorus, 0.1, 1, 64, 1.0);
    const LoopPath b = latitude_loop(kTorus, 0.13, 1, 50, 1.0);
    EXPECT_NEAR(hausdorff_distance(kTorus, a, b), 0.03, 1e-12);
    EXPECT_NEAR(support_distance(kTorus, a, b), 0.03, 1e-12);
    const LoopPath c = latitude_loop(kTorus, 0.95, 1, 64, 1.0);
    EXPECT_NEAR(support_distance(kTorus, a, c), 0.15, 1e-12);
}

TEST(Loops, ReversedAndIterated) {
    const LoopPath f = fixtures::wavy_latitude(0.2, 0.05, 2, 40, 1.5);
    const LoopPath r = reversed(f, kTorus);
    EXPECT_EQ(homology_class(kTorus, r), Eigen::Vector2i(-1, 0));
    EXPECT_NO_THROW(r.validate(kTorus));
    EXPECT_LT(hausdorff_distance(kTorus, f, r), 1e-12);
    const LoopPath i3 = iterate_loop(kTorus, f, 3);
    EXPECT_EQ(i3.size(), 120);
    EXPECT_NEAR(i3.period, 4.5, 1e-14);
    EXPECT_EQ(homology_class(kTorus, i3), Eigen::Vector2i(3, 0));
    EXPECT_NEAR(chart_length(kTorus, i3), 3 * chart_length(kTorus, f), 1e-12);
}

TEST(Loops, CsvRoundTrip) {
    const auto tangent = rearrange_double_points(
        kTorus, make_multicurve(kTorus, {fixtures::figure_eight(Vec2(0.5, 0.5), 0.3, 51),
                                         latitude_loop(kTorus, 0.05, 1, 16, 1.0)}));
    std::stringstream ss;
    write_loops_csv(ss, kTorus, tangent.components);
    EXPECT_EQ(ss.str().rfind("t,x,y\n", 0), 0u);
    const auto back = read_loops_csv(ss, kTorus);
    ASSERT_EQ(back.size(), tangent.components.size());
    for (std::size_t c = 0; c < back.size(); ++c) {
        const auto& a = tangent.components[c];
        const auto& b = back[c];
        ASSERT_EQ(a.size(), b.size());
        EXPECT_EQ(a.winding, b.winding);
        EXPECT_NEAR(a.period, b.period, 1e-14);
        for (int k = 0; k < a.size(); ++k) {
            EXPECT_NEAR((a.samples[k] - b.samples[k]).norm(), 0.0, 1e-14);
            EXPECT_NEAR(a.weight(k), b.weight(k), 1e-12);
        }
    }
}

TEST(Loops, SvgHasOnePolylinePerUnwrappedRun) {
    LoopPath lat = latitude_loop(kTorus, 0.25, 1, 16, 1.0);
    for (Vec2& p : lat.samples) p(0) += 0.5;
    const std::string svg = render_svg(kTorus, {lat,
                                               chart_circle(Vec2(0.5, 0.5), 0.1, 16, true, 1.0)});
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    std::size_t n = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) ++n, ++pos;
    EXPECT_EQ(n, 3u);  // the latitude wraps once at the seam
    EXPECT_NE(svg.find("<polygon"), std::string::npos);
}

TEST(Loops, RandomSelfTransverseLoopsBecomeEmbedded) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int done = 0;
    for (int trial = 0; trial < 20; ++trial) {
        LoopPath l;
        const double a1 = u(rng), a2 = u(rng), b1 = u(rng), b2 = u(rng);
        for (int k = 0; k < 160; ++k) {
            const double t = 2 * kPi * (k + 0.5) / 160;
            l.samples.emplace_back(0.5 + 0.15 * std::cos(t) + 0.08 * a1 * std::cos(3 * t) + 0.05 * a2 * std::sin(2 * t),
                                   0.5 + 0.15 * std::sin(t) + 0.08 * b1 * std::sin(3 * t) + 0.05 * b2 * std::cos(2 * t));
        }
        const auto mc = make_multicurve(kTorus, {l});
        const auto tangent = rearrange_double_points(kTorus, mc);
        const auto out = chamfer(kTorus, tangent, 1e-4);
        EXPECT_TRUE(out.embedded) << "trial " << trial;
        EXPECT_LT(hausdorff_distance(kTorus, out, mc), 1e-4);
        ++done;
    }
    EXPECT_EQ(done, 20);
}
