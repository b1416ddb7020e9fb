#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include "magwaist/action.hpp"
#include "magwaist/critical.hpp"
#include "magwaist/homology.hpp"

namespace magwaist {

// ---------------------------------------------------------------------------
// Minimal boundaries

struct SearchOptions {
    int seeds = 16;
    int samples = 128;  // N per component
    double grad_tol = 1e-7;
    int max_iters = 3000;  // descent budget per seed
    std::uint64_t rng_seed = 1;
    int homology_grid = kDefaultHomologyGrid;
    double chamfer_eps = 2e-3;
    // c₀ estimate; computed with compute_c0 when absent.
    std::optional<CriticalEstimate> c0;
};

struct SeedOutcome {
    int index = 0;
    std::string kind;  // latitude-pair, blob, fourier
    bool ok = false;
    double action = 0.0;
    int components = 0;
    std::string error;  // error kind when !ok
};

struct SearchReport {
    double energy = 0.0;
    Multicurve best;
    double action = 0.0;
    std::vector<double> energy_residuals;
    std::vector<double> periods;
    std::optional<BoundaryCertificate> certificate;
    int seeds_used = 0;
    int best_seed = -1;
    std::vector<std::vector<double>> disjointness;  // pairwise support distances
    bool negative = false;
    bool converged = false;
    bool topological = false;
    bool embedded = false;
    double c0 = 0.0;
    double c0_tolerance = 0.0;
    std::vector<SeedOutcome> seed_log;
};

struct MulticurveDescent {
    Multicurve curves;
    bool converged = false;
    int surgeries = 0;
    int dropped = 0;
    std::string stopped;  // NonPrimitiveClass or ComponentBlowup when abandoned
};

// Components are descended together in rounds of 50 iterations. Between
// rounds transverse crossings are removed by rearrangement and chamfering,
// and components that hit the period floor or grow longer than 8 (torus) or
// four equators (sphere) are dropped. Descent is abandoned when a component
// lands in a non-primitive class or more than 12 components remain.
MulticurveDescent descend_multicurve(const MagneticTonelliData& data, const Multicurve& mc, double e,
                                     const SearchOptions& opts);

SearchReport minimal_boundary_search(const MagneticTonelliData& data, double e,
                                     const SearchOptions& opts = {});

// Fills energy residuals, periods, disjointness and the verdict flags for a
// report whose `best` multicurve is set.
void finalize_report(const MagneticTonelliData& data, SearchReport& r, int homology_grid);

// ---------------------------------------------------------------------------
// Graph theorem

enum class PairKind { Identical, Disjoint, Violation };
std::string to_string(PairKind k);

struct PairVerdict {
    int report_a = 0, component_a = 0;
    int report_b = 0, component_b = 0;
    PairKind kind = PairKind::Disjoint;
    double hausdorff = 0.0;
    double aligned = 0.0;   // time-shift-aligned pointwise distance
    double distance = 0.0;  // support distance
    Vec2 witness_a = Vec2::Zero();
    Vec2 witness_b = Vec2::Zero();
};

// Compares every pair of components from distinct reports.
std::vector<PairVerdict> graph_theorem_check(const MagneticTonelliData& data,
                                             const std::vector<SearchReport>& reports,
                                             double threshold = 1e-3);

// min over time shifts τ of max_t d(a(t), b(t + τ)); infinite when the periods differ by
// more than the threshold.
double aligned_distance(const SurfaceModel& s, const LoopPath& a, const LoopPath& b,
                        double period_tol = 1e-3);

// ---------------------------------------------------------------------------
// Waists above c₀

struct ContinuationStep {
    double energy = 0.0;
    bool success = false;
    Multicurve curves;
    std::vector<double> actions;
    std::vector<double> center_distances;  // max distance to the tube center
    bool topological = false;
};

struct ContinuationResult {
    std::vector<ContinuationStep> steps;
    std::optional<double> cw_estimate;
};

inline constexpr double kTubeRadius = 0.1;
inline constexpr double kTubeInterior = 0.08;

ContinuationResult waist_continuation_above_c0(const MagneticTonelliData& data,
                                               const SearchReport& report_at_c0,
                                               const std::vector<double>& e_grid,
                                               int homology_grid = kDefaultHomologyGrid);

// ---------------------------------------------------------------------------
// Loops in the ambient R³ of the unit sphere (needed for paths over the poles).

struct AmbientLoop {
    std::vector<Vec3> samples;
    double period = 1.0;
};

AmbientLoop to_ambient(const SurfaceModel& s, const LoopPath& loop);
// Chart loop when every sample is admissible.
std::optional<LoopPath> to_chart(const SurfaceModel& s, const AmbientLoop& loop);
// Midpoint-rule action with the ambient extension of θ; V must vanish.
double ambient_action(const MagneticTonelliData& data, const AmbientLoop& loop, double e);
double ambient_hausdorff(const AmbientLoop& a, const AmbientLoop& b);

// Chart descent that continues in R³ when a sphere loop stalls at a pole cap
// (V = 0 with ambient θ). Without an ambient form the stall is reported in
// `stalled_at_pole`. The returned loop is the last chart-representable one.
DescentResult descend_across_poles(const MagneticTonelliData& data, const LoopPath& loop, double e,
                                   const DescentOptions& opts = {});

// ---------------------------------------------------------------------------
// Minimax

struct MinimaxLevel {
    int m = 1;
    double s_m = 0.0;
    AmbientLoop critical_loop;
    double critical_gradient = 0.0;  // tangential gradient norm at the max node
};

struct MinimaxResult {
    double waist_action = 0.0;
    std::vector<MinimaxLevel> levels;
    int distinct_orbits = 0;  // pairwise Hausdorff > 1e-2 among waist and critical loops
};

struct MinimaxOptions {
    int nodes = 21;
    int sweeps = 500;
    int samples_per_wind = 128;
    double lift = 4.0;  // β in normalize((1−s)A + sB + βs(1−s)ẑ)
    std::uint64_t rng_seed = 1;
};

// Throws NotAWaistError when a single Fourier mode (|j| <= 3, either sign) or one
// of 20 random mixtures of amplitude 1e-3 lowers S_e.
void check_local_minimum(const MagneticTonelliData& data, const LoopPath& waist, double e,
                         std::uint64_t rng_seed = 1);

MinimaxResult minimax_orbits(const MagneticTonelliData& data, double e, const LoopPath& waist,
                             int m_max, const MinimaxOptions& opts = {});

// ---------------------------------------------------------------------------
// Invariant measures of orbits

struct OrbitMeasure {
    Eigen::VectorXd rotation_vector;
    double measure_action = 0.0;
};

OrbitMeasure orbit_measure_stats(const MagneticTonelliData& data, const Multicurve& mc);

// ---------------------------------------------------------------------------
// The Z-orbit criterion and the Randers census

struct Lemma52Result {
    bool satisfied = false;
    double theta_sup = 0.0;
    std::vector<Vec2> n_set;  // grid points where |θ| attains its max
    int n_components = 0;
    std::optional<Multicurve> boundary;
    std::vector<double> orbit_actions;  // at e = ½‖θ‖∞²
    double r0 = 0.0;
};

Lemma52Result lemma52_criterion(const MagneticTonelliData& data, int grid = 256);

struct RandersCensus {
    double r = 0.0;
    LoopPath waist;
    double waist_action = 0.0;
    double waist_F_length = 0.0;       // ∫ (r|v| + θ(v)) dt, equal to the action
    double waist_unit_F_length = 0.0;  // ∫ (|v| + θ(v)/r) dt
    MinimaxResult minimax;
    std::vector<AmbientLoop> geodesics;  // constant-F-speed closed geodesics, pairwise distinct
};

RandersCensus randers_geodesic_census(const MagneticTonelliData& data, double r,
                                      const MinimaxOptions& opts = {});

// JSON forms used by the CLI.
nlohmann::json search_report_to_json(const MagneticTonelliData& data, const SearchReport& r);
nlohmann::json ambient_loop_to_json(const AmbientLoop& l);

}  // namespace magwaist
