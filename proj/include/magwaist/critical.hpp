#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include "magwaist/lagrangian.hpp"
#include "magwaist/loops.hpp"

namespace magwaist {

// A critical value bracketed by an upper and a lower bound. `value` is the
// upper bound; tolerance = upper − lower.
struct CriticalEstimate {
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double tolerance = 0.0;
    std::string method;
    bool converged = true;  // false raises the NonConvergenceWarning flag
};

struct EnergySpectrum {
    double e0 = 0.0;
    CriticalEstimate c;
    CriticalEstimate c0;
    CriticalEstimate cu;
    std::optional<double> cw_estimate;
    std::vector<std::string> warnings;
};

double compute_e0(const MagneticTonelliData& data, int grid = 512);

struct ManeOptions {
    int grid = 64;
    int stages = 16;           // temperatures annealed geometrically 1e-1 → 1e-4
    int iters_per_stage = 30;
    int test_loops = 32;       // positions per test-loop family
};

// Lower bound for the critical value from a family of test multicurves: the
// least k with Σ_i min_{T_i} S_k(γ_i, T_i) ≥ 0 when each component is run at
// constant g-speed, with θ replaced by θ − η.
double test_multicurve_bound(const MagneticTonelliData& data, const std::vector<LoopPath>& mc,
                             const Vec2& eta = Vec2::Zero());

// inf_u max_q H(q, du + η) on a K×K grid, by annealed soft-max descent.
CriticalEstimate compute_mane_c(const MagneticTonelliData& data, const ManeOptions& opts = {},
                                const Vec2& eta = Vec2::Zero());
CriticalEstimate compute_c0(const MagneticTonelliData& data, const ManeOptions& opts = {});
// Torus: c_u = c₀. Sphere: c_u = c.
CriticalEstimate compute_cu(const MagneticTonelliData& data, const ManeOptions& opts = {});
EnergySpectrum compute_spectrum(const MagneticTonelliData& data, const ManeOptions& opts = {});

// λ(q) = 2|d²V(q)|^{1/2} − |f(q)| with |d²V| the g-operator norm of Hess V.
double lambda_eval(const MagneticTonelliData& data, const Vec2& q);

struct LambdaScan {
    bool negative_found = false;
    Vec2 witness = Vec2::Zero();
    double value = 0.0;
};
LambdaScan lambda_somewhere_negative(const MagneticTonelliData& data, int grid = 128);

struct ProbeResult {
    double intercept = 0.0;  // fitted limit of S/(πr²)
    double slope = 0.0;
    double predicted = 0.0;  // 2√(a+b) + f with the chosen orientation
    bool flipped = false;    // clockwise circles were used
    double b = 0.0;
    double f = 0.0;
    std::vector<double> radii;
    std::vector<double> normalized_actions;
};

// Small g-circles around a point of V⁻¹(e₀) at energy e₀ + ½ar² and speed
// r√(a+b), where b is the g-operator norm of Hess V.
ProbeResult small_loop_probe(const MagneticTonelliData& data, const Vec2& q, double a,
                             const std::vector<double>& radii = {0.04, 0.02, 0.01});

nlohmann::json spectrum_to_json(const EnergySpectrum& s);

}  // namespace magwaist
