#include "magwaist/action.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

#include "magwaist/errors.hpp"
#include "magwaist/numerics.hpp"

namespace magwaist {

namespace {

struct SegmentTerms {
    double value;     // h·L(m, d/h)
    double kinetic;   // ½ vᵀG v
    double pot;       // V(m)
    Vec2 dd;          // ∂/∂d
    Vec2 dm;          // ∂/∂m
};

SegmentTerms segment_terms(const MagneticTonelliData& data, const Vec2& a, const Vec2& b, double h,
                           bool with_gradient) {
    const SurfaceModel& s = data.surface;
    const Vec2 d = b - a;
    const Vec2 m = 0.5 * (a + b);
    s.require_admissible(m);
    const Mat2 g = s.metric(m);
    const Vec2 th = data.theta.at(m);
    const double V = data.potential.at(m);
    const Vec2 gd = g * d;
    SegmentTerms t;
    t.kinetic = 0.5 * d.dot(gd) / (h * h);
    t.pot = V;
    t.value = 0.5 * d.dot(gd) / h + th.dot(d) - h * V;
    if (with_gradient) {
        t.dd = gd / h + th;
        const auto dg = s.metric_derivative(m);
        t.dm = data.theta.jac(m).transpose() * d - h * data.potential.grad(m);
        for (int j = 0; j < 2; ++j) t.dm(j) += 0.5 * d.dot(dg[j] * d) / h;
    }
    return t;
}

void check_loop(const MagneticTonelliData& data, const LoopPath& loop) {
    if (loop.size() < 2) throw std::invalid_argument("loop needs at least two samples");
    if (!(loop.period > 0.0)) throw std::invalid_argument("loop period must be positive");
    for (const Vec2& q : loop.samples) data.surface.require_admissible(q);
}

}  // namespace

double ActionEvaluation::norm() const {
    double sq = 0.0;
    for (const Vec2& g : gradient_samples) sq += g.squaredNorm();
    return std::sqrt(static_cast<double>(gradient_samples.size()) * sq);
}

double lagrangian_integral(const MagneticTonelliData& data, const LoopPath& loop) {
    check_loop(data, loop);
    const int n = loop.size();
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double h = loop.period * loop.weight(k);
        sum += segment_terms(data, loop.point(data.surface, k), loop.point(data.surface, k + 1), h,
                             false)
                   .value;
    }
    return sum;
}

double action_free_period(const MagneticTonelliData& data, const LoopPath& loop, double e) {
    return lagrangian_integral(data, loop) + loop.period * e;
}

double action_free_period(const MagneticTonelliData& data, const Multicurve& mc, double e) {
    double sum = 0.0;
    for (const auto& c : mc.components) sum += action_free_period(data, c, e);
    return sum;
}

ActionEvaluation action_gradient(const MagneticTonelliData& data, const LoopPath& loop, double e) {
    check_loop(data, loop);
    const int n = loop.size();
    ActionEvaluation out;
    out.gradient_samples.assign(static_cast<std::size_t>(n), Vec2::Zero());
    double integral = 0.0;
    double mean_energy = 0.0;
    for (int k = 0; k < n; ++k) {
        const double w = loop.weight(k);
        const double h = loop.period * w;
        const auto t = segment_terms(data, loop.point(data.surface, k),
                                     loop.point(data.surface, k + 1), h, true);
        integral += t.value;
        const double energy = t.kinetic + t.pot;
        mean_energy += w * energy;
        out.energy_residual = std::max(out.energy_residual, std::abs(energy - e));
        out.gradient_samples[static_cast<std::size_t>(k)] += -t.dd + 0.5 * t.dm;
        out.gradient_samples[static_cast<std::size_t>((k + 1) % n)] += t.dd + 0.5 * t.dm;
    }
    out.value = integral + loop.period * e;
    out.gradient_period = e - mean_energy;
    return out;
}

// ---------------------------------------------------------------------------
// Descent

namespace {

using Eigen::VectorXd;

struct Problem {
    const MagneticTonelliData& data;
    const LoopPath& shape;  // winding and weights
    double e;
    const DescentOptions& opts;

    int n() const { return shape.size(); }

    LoopPath unpack(const VectorXd& x) const {
        LoopPath l = shape;
        for (int k = 0; k < n(); ++k) l.samples[static_cast<std::size_t>(k)] = x.segment<2>(2 * k);
        l.period = std::exp(x(2 * n()));
        return l;
    }

    VectorXd pack(const LoopPath& l) const {
        VectorXd x(2 * n() + 1);
        for (int k = 0; k < n(); ++k) x.segment<2>(2 * k) = l.samples[static_cast<std::size_t>(k)];
        x(2 * n()) = std::log(l.period);
        return x;
    }

    bool inside_tube(const LoopPath& l) const {
        if (!opts.tube_center) return true;
        for (const Vec2& q : l.samples)
            if (point_to_loop_distance(data.surface, q, *opts.tube_center) > opts.tube_radius)
                return false;
        return true;
    }

    // Value, gradient in x, and the evaluation record.
    ActionEvaluation eval(const VectorXd& x, VectorXd& grad) const {
        const LoopPath l = unpack(x);
        ActionEvaluation ev = action_gradient(data, l, e);
        grad.resize(x.size());
        for (int k = 0; k < n(); ++k)
            grad.segment<2>(2 * k) = ev.gradient_samples[static_cast<std::size_t>(k)];
        grad(2 * n()) = l.period * ev.gradient_period;
        return ev;
    }

    double full_norm(const ActionEvaluation& ev, double period) const {
        const double a = ev.norm();
        const double b = period * ev.gradient_period;
        return std::sqrt(a * a + b * b);
    }

    // H¹ preconditioner: per coordinate a scaled cyclic (−Δ + σ) inverse; the
    // log-period entry is scaled by the kinetic part of its second derivative.
    VectorXd precondition(const VectorXd& x, const VectorXd& g) const {
        const int N = n();
        const LoopPath l = unpack(x);
        const double sigma = std::pow(2.0 * M_PI / N, 2);
        VectorXd out(g.size());
        std::vector<double> scale(static_cast<std::size_t>(2 * N));
        for (int k = 0; k < N; ++k) {
            const Mat2 G = data.surface.metric(l.samples[static_cast<std::size_t>(k)]);
            scale[static_cast<std::size_t>(2 * k)] = 1.0 / std::sqrt(G(0, 0));
            scale[static_cast<std::size_t>(2 * k + 1)] = 1.0 / std::sqrt(G(1, 1));
        }
        const double stiffness = N / l.period;
        for (int c = 0; c < 2; ++c) {
            std::vector<double> rhs(static_cast<std::size_t>(N));
            for (int k = 0; k < N; ++k)
                rhs[static_cast<std::size_t>(k)] =
                    g(2 * k + c) * scale[static_cast<std::size_t>(2 * k + c)] / stiffness;
            const auto sol = numerics::solve_cyclic_tridiagonal(-1.0, 2.0 + sigma, rhs);
            for (int k = 0; k < N; ++k)
                out(2 * k + c) =
                    sol[static_cast<std::size_t>(k)] * scale[static_cast<std::size_t>(2 * k + c)];
        }
        double kin = 0.0;
        for (int k = 0; k < N; ++k) {
            const Vec2 d = l.segment(data.surface, k);
            const Vec2 m = 0.5 * (l.point(data.surface, k) + l.point(data.surface, k + 1));
            kin += 0.5 * d.dot(data.surface.metric(m) * d) / (l.period * l.weight(k));
        }
        out(2 * N) = g(2 * N) / std::max(kin, 1e-3);
        return out;
    }
};

}  // namespace

DescentResult descend_to_waist(const MagneticTonelliData& data, const LoopPath& loop, double e,
                               const DescentOptions& opts) {
    if (loop.size() < 3) throw std::invalid_argument("descent needs at least three samples");
    LoopPath start = loop;
    if (start.period < opts.p_floor) start.period = opts.p_floor;
    Problem prob{data, start, e, opts};
    const int N = prob.n();
    const double log_floor = std::log(opts.p_floor);

    VectorXd x = prob.pack(start);
    VectorXd g;
    ActionEvaluation ev = prob.eval(x, g);  // inadmissible start propagates
    double f = ev.value;

    std::deque<std::pair<VectorXd, VectorXd>> memory;  // (s, y)
    DescentResult res;
    auto finish = [&](bool converged, bool floor_hit, int it) {
        res.loop = prob.unpack(x);
        res.value = f;
        res.converged = converged;
        res.hit_period_floor = floor_hit;
        res.iterations = it;
        res.grad_norm = prob.full_norm(ev, res.loop.period);
        res.energy_residual = ev.energy_residual;
        return res;
    };

    if (opts.trace) *opts.trace << "iteration,value,grad_norm,period\n";
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        const double gnorm = prob.full_norm(ev, std::exp(x(2 * N)));
        if (opts.trace)
            *opts.trace << it << ',' << f << ',' << gnorm << ',' << std::exp(x(2 * N)) << '\n';
        if (gnorm < opts.grad_tol) return finish(true, false, it);

        // Two-loop recursion with the H¹ operator as initial inverse Hessian.
        VectorXd q = g;
        std::vector<double> alpha(memory.size());
        for (std::size_t i = memory.size(); i-- > 0;) {
            const auto& [s, y] = memory[i];
            alpha[i] = s.dot(q) / y.dot(s);
            q -= alpha[i] * y;
        }
        VectorXd r = prob.precondition(x, q);
        if (!memory.empty()) {
            // Rescale the H¹ operator by the latest curvature estimate.
            const auto& [s, y] = memory.back();
            const VectorXd hy = prob.precondition(x, y);
            const double gamma = s.dot(y) / y.dot(hy);
            if (std::isfinite(gamma) && gamma > 0.0) r *= gamma;
        }
        for (std::size_t i = 0; i < memory.size(); ++i) {
            const auto& [s, y] = memory[i];
            const double beta = y.dot(r) / y.dot(s);
            r += s * (alpha[i] - beta);
        }
        VectorXd dir = -r;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            memory.clear();
            dir = -prob.precondition(x, g);
            slope = g.dot(dir);
            if (!(slope < 0.0)) return finish(false, false, it);
        }

        // Cap the first trial so that no sample moves more than 0.05 and the
        // period changes by at most a factor e^{0.5}.
        double step = 1.0;
        double max_move = 0.0;
        for (int k = 0; k < N; ++k) max_move = std::max(max_move, dir.segment<2>(2 * k).norm());
        if (max_move * step > 0.05) step = 0.05 / max_move;
        if (std::abs(dir(2 * N)) * step > 0.5) step = 0.5 / std::abs(dir(2 * N));

        bool accepted = false;
        VectorXd xn, gn;
        ActionEvaluation evn;
        for (int trial = 0; trial < 40; ++trial, step *= 0.5) {
            xn = x + step * dir;
            if (xn(2 * N) < log_floor) xn(2 * N) = log_floor;
            try {
                if (!prob.inside_tube(prob.unpack(xn))) continue;
                evn = prob.eval(xn, gn);
            } catch (const ChartDomainError&) {
                continue;
            }
            if (std::isfinite(evn.value) && evn.value <= f + 1e-4 * g.dot(xn - x)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!memory.empty()) {
                memory.clear();
                continue;
            }
            return finish(false, false, it);
        }
        const VectorXd s = xn - x;
        const VectorXd y = gn - g;
        if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
            memory.emplace_back(s, y);
            if (static_cast<int>(memory.size()) > opts.memory) memory.pop_front();
        }
        x = xn;
        g = gn;
        ev = evn;
        f = evn.value;
        if (x(2 * N) <= log_floor + 1e-12) return finish(false, true, it + 1);
    }
    return finish(false, false, it);
}

// ---------------------------------------------------------------------------
// Euler–Lagrange flow

Vec2 el_acceleration(const MagneticTonelliData& data, const Vec2& q, const Vec2& v) {
    const SurfaceModel& s = data.surface;
    s.require_admissible(q);
    const auto dg = s.metric_derivative(q);
    const Mat2 J = data.theta.jac(q);
    Vec2 rhs = (J.transpose() - J) * v - data.potential.grad(q);
    for (int k = 0; k < 2; ++k) rhs(k) += 0.5 * v.dot(dg[k] * v);
    rhs -= (v(0) * dg[0] + v(1) * dg[1]) * v;
    return s.metric(q).ldlt().solve(rhs);
}

FlowResult el_flow(const MagneticTonelliData& data, const Vec2& q, const Vec2& v, double t_end,
                   double h) {
    if (!(h > 0.0)) throw std::invalid_argument("el_flow step must be positive");
    if (t_end < 0.0) throw std::invalid_argument("el_flow needs t_end >= 0");
    data.surface.require_admissible(q);
    FlowResult out;
    out.states.push_back({0.0, q, v});
    const long steps = std::max(1L, static_cast<long>(std::ceil(t_end / h - 1e-9)));
    Vec2 x = q, u = v;
    double t = 0.0;
    for (long i = 0; i < steps && t_end > 0.0; ++i) {
        const double dt = std::min(h, t_end - t);
        const Vec2 k1x = u, k1v = el_acceleration(data, x, u);
        const Vec2 k2x = u + 0.5 * dt * k1v, k2v = el_acceleration(data, x + 0.5 * dt * k1x, k2x);
        const Vec2 k3x = u + 0.5 * dt * k2v, k3v = el_acceleration(data, x + 0.5 * dt * k2x, k3x);
        const Vec2 k4x = u + dt * k3v, k4v = el_acceleration(data, x + dt * k3x, k4x);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        u += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        t = (i + 1 == steps) ? t_end : t + dt;
        data.surface.require_admissible(x);
        out.states.push_back({t, x, u});
    }
    out.energy_drift = std::abs(energy_eval(data, x, u) - energy_eval(data, q, v));
    return out;
}

// ---------------------------------------------------------------------------
// Connecting arcs

namespace {

constexpr int kShootSteps = 200;

Vec2 launch_velocity(const MagneticTonelliData& data, const Vec2& q0, double speed, double angle) {
    const Mat2 g = data.surface.metric(q0);
    // g is diagonal for both chart models; g^{-1/2} maps unit vectors to g-unit vectors.
    const Vec2 u(std::cos(angle) / std::sqrt(g(0, 0)), std::sin(angle) / std::sqrt(g(1, 1)));
    return speed * u;
}

}  // namespace

ConnectingArc el_connect(const MagneticTonelliData& data, const Vec2& q0, const Vec2& q1, double e) {
    const SurfaceModel& s = data.surface;
    s.require_admissible(q0);
    s.require_admissible(q1);
    const Vec2 delta = s.periodic_delta(q0, q1);
    if (delta.norm() > data.rho_inj)
        throw TooFarApart("endpoints are " + std::to_string(delta.norm()) +
                          " apart, beyond rho_inj = " + std::to_string(data.rho_inj));
    if (delta.norm() < 1e-12) throw NoLocalMinimizer("coincident endpoints give a zero-duration arc");
    const double kin = e - data.potential.at(q0);
    if (!(kin > 0.0)) throw NoLocalMinimizer("energy level below the potential at q0");
    const double speed = std::sqrt(2.0 * kin);
    const Vec2 target = q0 + delta;

    auto shoot = [&](double angle, double tau) -> Vec2 {
        const Vec2 v = launch_velocity(data, q0, speed, angle);
        return el_flow(data, q0, v, tau, tau / kShootSteps).states.back().q - target;
    };

    const Mat2 g0 = s.metric(q0);
    const Vec2 dg(delta(0) * std::sqrt(g0(0, 0)), delta(1) * std::sqrt(g0(1, 1)));
    double angle = std::atan2(dg(1), dg(0));
    double tau = dg.norm() / speed;
    bool ok = false;
    for (int iter = 0; iter < 60; ++iter) {
        Vec2 r;
        try {
            r = shoot(angle, tau);
        } catch (const ChartDomainError&) {
            break;
        }
        if (r.norm() < 1e-10) {
            ok = true;
            break;
        }
        const double ha = 1e-7, ht = 1e-7 * std::max(tau, 1e-3);
        Mat2 jac;
        try {
            jac.col(0) = (shoot(angle + ha, tau) - shoot(angle - ha, tau)) / (2 * ha);
            jac.col(1) = (shoot(angle, tau + ht) - shoot(angle, tau - ht)) / (2 * ht);
        } catch (const ChartDomainError&) {
            break;
        }
        const Eigen::FullPivLU<Mat2> lu(jac);
        if (!lu.isInvertible()) break;
        Vec2 step = lu.solve(r);
        // Damp so that the duration stays positive and the angle moves < 0.5 rad.
        double lam = 1.0;
        if (std::abs(step(0)) > 0.5) lam = 0.5 / std::abs(step(0));
        while (tau - lam * step(1) <= 0.0) lam *= 0.5;
        angle -= lam * step(0);
        tau -= lam * step(1);
    }
    if (!ok) throw NoLocalMinimizer("shooting did not converge");
    if (tau > data.tau_inj)
        throw NoLocalMinimizer("connecting arc duration " + std::to_string(tau) +
                               " exceeds tau_inj = " + std::to_string(data.tau_inj));

    ConnectingArc arc;
    arc.tau = tau;
    arc.initial_velocity = launch_velocity(data, q0, speed, angle);
    const auto flow = el_flow(data, q0, arc.initial_velocity, tau, tau / kShootSteps);
    // Composite Simpson on the RK4 nodes (kShootSteps is even).
    double integral = 0.0;
    const auto& st = flow.states;
    const int m = static_cast<int>(st.size()) - 1;
    for (int i = 0; i <= m; ++i) {
        const double wgt = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        integral += wgt * lagrangian_eval(data, st[static_cast<std::size_t>(i)].q,
                                          st[static_cast<std::size_t>(i)].v);
    }
    integral *= (tau / m) / 3.0;
    arc.action = integral + tau * e;
    for (int i = 0; i <= m; i += kShootSteps / 32) arc.samples.push_back(st[static_cast<std::size_t>(i)].q);
    arc.samples.back() = target;
    return arc;
}

double polyline_free_time_action(const MagneticTonelliData& data, const std::vector<Vec2>& pts,
                                 double e, int subdivide) {
    if (pts.size() < 2) throw std::invalid_argument("polyline needs two points");
    if (subdivide > 1) {
        std::vector<Vec2> fine{pts.front()};
        for (std::size_t k = 0; k + 1 < pts.size(); ++k)
            for (int j = 1; j <= subdivide; ++j)
                fine.push_back(pts[k] + (static_cast<double>(j) / subdivide) * (pts[k + 1] - pts[k]));
        return polyline_free_time_action(data, fine, e, 1);
    }
    // With durations T·w_k, w_k ∝ g-length, the action is A/T + B + C·T.
    std::vector<double> len;
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const Vec2 m = 0.5 * (pts[k] + pts[k + 1]);
        const Vec2 d = pts[k + 1] - pts[k];
        len.push_back(std::sqrt(d.dot(metric_eval(data.surface, m) * d)));
        total += len.back();
    }
    if (!(total > 0.0)) throw std::invalid_argument("polyline has zero length");
    double A = 0.0, B = 0.0, C = e;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double w = len[k] / total;
        if (w <= 0.0) continue;
        const Vec2 m = 0.5 * (pts[k] + pts[k + 1]);
        const Vec2 d = pts[k + 1] - pts[k];
        A += 0.5 * len[k] * len[k] / w;
        B += data.theta.at(m).dot(d);
        C -= w * data.potential.at(m);
    }
    if (C < 0.0) return -std::numeric_limits<double>::infinity();
    if (C == 0.0) return B;
    return 2.0 * std::sqrt(A * C) + B;
}

}  // namespace magwaist
