#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "magwaist/surface.hpp"

namespace magwaist {

inline constexpr int kMinSamples = 8;
inline constexpr double kDefaultPeriodFloor = 1e-3;
inline constexpr double kDefaultSnap = 1e-6;
inline constexpr double kTangencyAngleDeg = 5.0;

// A closed curve Γ: ℝ/ℤ → M sampled at N points, with free period p; the
// physical curve is γ(t) = Γ(t/p). Chart coordinates are unreduced: the point
// following samples[N-1] is samples[0] + lattice_shift(winding).
//
// Segment k joins sample k to sample k+1 and lasts weights[k]·period. An
// empty weight vector means uniform spacing 1/N.
struct LoopPath {
    std::vector<Vec2> samples;
    double period = 1.0;
    Eigen::Vector2i winding = Eigen::Vector2i::Zero();
    std::vector<double> weights;

    int size() const { return static_cast<int>(samples.size()); }
    bool uniform() const { return weights.empty(); }
    double weight(int k) const {
        return weights.empty() ? 1.0 / samples.size() : weights[static_cast<std::size_t>(k)];
    }
    // Lifted sample for any integer index.
    Vec2 point(const SurfaceModel& s, long k) const;
    // Displacement of segment k (0 <= k < N).
    Vec2 segment(const SurfaceModel& s, int k) const { return point(s, k + 1) - point(s, k); }
    // Parameter value of sample k in [0, 1).
    double parameter(int k) const;

    // Throws std::invalid_argument when an invariant is broken.
    void validate(const SurfaceModel& s, double period_floor = kDefaultPeriodFloor) const;
};

struct Multicurve {
    std::vector<LoopPath> components;
    Eigen::VectorXi homology;
    bool embedded = false;
};

// Builders for the structured curves used throughout the test suite.
// Torus: the curve y = height traversed in the ±x direction.
// Sphere: the latitude z = height traversed in the ±φ direction.
LoopPath latitude_loop(const SurfaceModel& s, double height, int direction, int n, double speed);
// Torus only: the curve x = position traversed in the ±y direction.
LoopPath longitude_loop(const SurfaceModel& s, double position, int direction, int n,
                        double speed);
// Euclidean chart circle, counterclockwise when ccw is set.
LoopPath chart_circle(const Vec2& center, double radius, int n, bool ccw, double period);

Multicurve make_multicurve(const SurfaceModel& s, std::vector<LoopPath> components);

// Piecewise-linear resampling at n points equally spaced in the loop
// parameter (equivalently, in time). Weights are dropped; the period and the
// homology class are unchanged.
LoopPath resample_uniform(const SurfaceModel& s, const LoopPath& loop, int n);
// Samples equally spaced in chart arclength, period kept.
LoopPath equalize_arclength(const SurfaceModel& s, const LoopPath& loop, int n);

Eigen::VectorXi homology_class(const SurfaceModel& s, const LoopPath& loop);
Eigen::VectorXi homology_class(const SurfaceModel& s, const Multicurve& mc);

enum class CrossingType { Transverse, Tangency };

struct CrossingRecord {
    int component_i = 0;
    int segment_a = 0;
    double t_a = 0.0;  // position along segment a
    int component_j = 0;
    int segment_b = 0;
    double t_b = 0.0;
    CrossingType type = CrossingType::Transverse;
    Vec2 location;  // in the lifted frame of component i
    Eigen::Vector2i shift_ij = Eigen::Vector2i::Zero();  // lattice offset frame_j - frame_i
};

std::vector<CrossingRecord> self_intersections(const SurfaceModel& s, const Multicurve& mc,
                                               double snap = kDefaultSnap);

struct RearrangeOptions {
    double snap = kDefaultSnap;
    bool jitter_triple_points = true;
};
Multicurve rearrange_double_points(const SurfaceModel& s, const Multicurve& mc,
                                   const RearrangeOptions& opts = {});

Multicurve chamfer(const SurfaceModel& s, const Multicurve& mc, double eps,
                   double snap = kDefaultSnap);

// Symmetric Hausdorff distance between the supports, measured on the
// polylines modulo the lattice.
double hausdorff_distance(const SurfaceModel& s, const LoopPath& a, const LoopPath& b);
double hausdorff_distance(const SurfaceModel& s, const Multicurve& a, const Multicurve& b);
// Minimum distance between the supports of two loops.
double support_distance(const SurfaceModel& s, const LoopPath& a, const LoopPath& b);
// Distance from a point to the support of a loop.
double point_to_loop_distance(const SurfaceModel& s, const Vec2& p, const LoopPath& loop);

double chart_length(const SurfaceModel& s, const LoopPath& loop);
LoopPath reversed(const LoopPath& loop, const SurfaceModel& s);
LoopPath iterate_loop(const SurfaceModel& s, const LoopPath& loop, int m);

// CSV with header `t,x,y`; each block ends with its closing row at t = period
// and blocks are separated by a blank line.
void write_loops_csv(std::ostream& os, const SurfaceModel& s, const std::vector<LoopPath>& loops);
std::vector<LoopPath> read_loops_csv(std::istream& is, const SurfaceModel& s);
// SVG of the fundamental domain with the reduced curves and orientation arrows.
std::string render_svg(const SurfaceModel& s, const std::vector<LoopPath>& loops);

}  // namespace magwaist
