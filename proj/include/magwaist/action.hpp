#pragma once

#include <iosfwd>
#include <vector>

#include "magwaist/lagrangian.hpp"
#include "magwaist/loops.hpp"

namespace magwaist {

// Discrete free-period action. Segment k of a loop lasts h_k = p·w_k and
// contributes h_k·L(m_k, d_k/h_k) with m_k its chart midpoint and d_k its
// displacement; the total is Σ_k h_k L(m_k, d_k/h_k) + p·e.
struct ActionEvaluation {
    double value = 0.0;
    std::vector<Vec2> gradient_samples;  // ∂S/∂Γ_k
    double gradient_period = 0.0;        // ∂S/∂p
    double energy_residual = 0.0;        // max_k |E(m_k, d_k/h_k) − e|
    // Scale-free norm √(N Σ|∂S/∂Γ_k|² + (p ∂S/∂p)²) used for convergence.
    double norm() const;
};

double action_free_period(const MagneticTonelliData& data, const LoopPath& loop, double e);
double action_free_period(const MagneticTonelliData& data, const Multicurve& mc, double e);
ActionEvaluation action_gradient(const MagneticTonelliData& data, const LoopPath& loop, double e);

// ∫₀ᵖ L dt of the discrete loop, i.e. the action without the p·e term.
double lagrangian_integral(const MagneticTonelliData& data, const LoopPath& loop);

struct DescentOptions {
    int max_iters = 4000;
    double grad_tol = 1e-7;
    double p_floor = kDefaultPeriodFloor;
    int memory = 8;  // L-BFGS history
    // Optional tube constraint: trial loops leaving the tube are rejected.
    const LoopPath* tube_center = nullptr;
    double tube_radius = 0.0;
    // Optional CSV trace: iteration,value,grad_norm,period.
    std::ostream* trace = nullptr;
};

struct DescentResult {
    LoopPath loop;
    double value = 0.0;
    bool converged = false;
    bool hit_period_floor = false;
    bool stalled_at_pole = false;  // the sphere chart blocked every step at a pole cap
    int iterations = 0;
    double grad_norm = 0.0;
    double energy_residual = 0.0;
};

// L-BFGS on (samples, log p) with an H¹ preconditioner and Armijo
// backtracking (c = 1e-4, halving, 40 trials). Chart-domain failures during
// the line search reject the trial step.
DescentResult descend_to_waist(const MagneticTonelliData& data, const LoopPath& loop, double e,
                               const DescentOptions& opts = {});

struct FlowState {
    double t = 0.0;
    Vec2 q;
    Vec2 v;
};

struct FlowResult {
    std::vector<FlowState> states;
    double energy_drift = 0.0;  // |E(end) − E(start)|
};

// Acceleration of the Euler–Lagrange system at (q, v).
Vec2 el_acceleration(const MagneticTonelliData& data, const Vec2& q, const Vec2& v);

// Classical RK4 with step h (the last step is shortened to land on t_end).
FlowResult el_flow(const MagneticTonelliData& data, const Vec2& q, const Vec2& v, double t_end,
                   double h);

struct ConnectingArc {
    std::vector<Vec2> samples;  // from q0 to q1 (lifted), equally spaced in time
    double tau = 0.0;
    double action = 0.0;  // ∫₀^τ L dt + τ e
    Vec2 initial_velocity;
};

// Free-time Euler–Lagrange arc from q0 to q1 at energy e by Newton shooting
// over the launch angle and the duration τ ≤ τ_inj.
ConnectingArc el_connect(const MagneticTonelliData& data, const Vec2& q0, const Vec2& q1, double e);

// Fixed-endpoint free-time action of a polyline traversed at constant g-speed,
// minimized over the total duration (closed form). Each edge is split into
// `subdivide` pieces before the midpoint rule is applied.
double polyline_free_time_action(const MagneticTonelliData& data, const std::vector<Vec2>& pts,
                                 double e, int subdivide = 64);

}  // namespace magwaist
