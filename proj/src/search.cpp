#include "magwaist/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <numeric>
#include <sstream>

#include "magwaist/errors.hpp"
#include "magwaist/numerics.hpp"

namespace magwaist {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kSurgeryRound = 50;
constexpr int kMaxSurgeries = 20;
constexpr double kCoincident = 2e-2;
constexpr int kMaxComponents = 12;

std::mt19937_64 seed_rng(std::uint64_t base, int index) {
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(index), 0x6d77u};
    return std::mt19937_64(seq);
}

double mean_potential_bound(const MagneticTonelliData& data, double e) {
    // Speed used to time seeds: √(2(e − V)) with V replaced by e₀-free guess 0 when possible.
    const double kin = e - (data.potential.identically_zero ? 0.0 : data.potential.at(Vec2(0, 0)));
    return std::sqrt(2.0 * std::max(kin, 0.05 * std::abs(e) + 1e-3));
}

LoopPath timed_by_length(const SurfaceModel& s, LoopPath l, double speed) {
    l.period = std::max(chart_length(s, l) / speed, 10 * kDefaultPeriodFloor);
    return l;
}

// Rearrangement and chamfering at uniform resolution.
Multicurve surgery(const SurfaceModel& s, const Multicurve& mc, double eps, int n) {
    std::vector<LoopPath> comps;
    double min_len = kInf;
    for (const auto& c : mc.components) {
        comps.push_back(resample_uniform(s, c, n));
        const LoopPath& l = comps.back();
        for (int k = 0; k < l.size(); ++k) min_len = std::min(min_len, l.segment(s, k).norm());
    }
    const Multicurve arranged = rearrange_double_points(s, make_multicurve(s, comps));
    Multicurve out;
    // Splitting at crossings can leave short segments; halve ε until it fits.
    for (double e = std::min(eps, 0.25 * min_len);; e *= 0.5) {
        try {
            out = chamfer(s, arranged, e);
            break;
        } catch (const EpsTooLargeError&) {
            if (e < 1e-7) throw;
        }
    }
    for (auto& c : out.components) c = resample_uniform(s, c, n);
    return make_multicurve(s, out.components);
}

// Removes near-coincident components: of two in the same class the one with
// lower action stays, opposite classes cancel.
std::vector<LoopPath> drop_coincident(const MagneticTonelliData& data, double e,
                                      std::vector<LoopPath> comps) {
    const SurfaceModel& s = data.surface;
    std::vector<bool> gone(comps.size(), false);
    std::vector<double> action(comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i) action[i] = action_free_period(data, comps[i], e);
    for (std::size_t i = 0; i < comps.size(); ++i)
        for (std::size_t j = i + 1; j < comps.size() && !gone[i]; ++j) {
            if (gone[j] || hausdorff_distance(s, comps[i], comps[j]) > kCoincident) continue;
            const Eigen::VectorXi hi = homology_class(s, comps[i]), hj = homology_class(s, comps[j]);
            if (!hi.any()) continue;
            if (hi == hj) {
                gone[action[i] <= action[j] ? j : i] = true;
            } else if (hi == -hj) {
                gone[i] = gone[j] = true;
            }
        }
    std::vector<LoopPath> out;
    for (std::size_t i = 0; i < comps.size(); ++i)
        if (!gone[i]) out.push_back(std::move(comps[i]));
    return out;
}

// Structured and random null-homologous seeds.
Multicurve make_seed(const MagneticTonelliData& data, double e, int index, std::mt19937_64& rng,
                     int n, std::string& kind, double eps) {
    const SurfaceModel& s = data.surface;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double speed = mean_potential_bound(data, e);
    const int type = index % 3;
    if (type == 0) {
        if (s.is_torus()) {
            const double ya = u(rng), yb = ya + 0.2 + 0.6 * u(rng);
            const bool longitudes = index % 6 == 3;
            kind = longitudes ? "longitude-pair" : "latitude-pair";
            if (longitudes)
                return make_multicurve(s, {longitude_loop(s, ya, 1, n, speed),
                                           longitude_loop(s, yb - std::floor(yb), -1, n, speed)});
            return make_multicurve(s, {latitude_loop(s, ya, 1, n, speed),
                                       latitude_loop(s, yb - std::floor(yb), -1, n, speed)});
        }
        kind = "latitude";
        const double z = -0.7 + 1.4 * u(rng);
        return make_multicurve(s, {latitude_loop(s, z, u(rng) < 0.5 ? 1 : -1, n, speed)});
    }
    const Vec2 center = s.is_torus() ? Vec2(u(rng), u(rng)) : Vec2(2 * kPi * u(rng), -0.4 + 0.8 * u(rng));
    LoopPath l;
    if (type == 1) {
        kind = "blob";
        const double rx = 0.1 + 0.25 * u(rng), ry = 0.1 + (s.is_torus() ? 0.25 : 0.15) * u(rng);
        const double c2 = 0.03 * (2 * u(rng) - 1), c3 = 0.03 * (2 * u(rng) - 1);
        const double sgn = u(rng) < 0.5 ? 1.0 : -1.0;
        for (int k = 0; k < n; ++k) {
            const double t = sgn * 2 * kPi * k / n;
            l.samples.push_back(center + Vec2(rx * std::cos(t) + c2 * std::cos(2 * t),
                                              ry * std::sin(t) + c3 * std::sin(3 * t)));
        }
        return make_multicurve(s, {timed_by_length(s, l, speed)});
    }
    kind = "fourier";
    std::array<Vec2, 4> a, b;
    for (int j = 0; j < 4; ++j) {
        a[j] = Vec2(0.4 * u(rng) - 0.2, 0.4 * u(rng) - 0.2);
        b[j] = Vec2(0.4 * u(rng) - 0.2, 0.4 * u(rng) - 0.2);
        if (s.is_sphere()) {
            a[j](1) *= 0.5;
            b[j](1) *= 0.5;
        }
    }
    for (int k = 0; k < n; ++k) {
        const double t = 2 * kPi * k / n;
        Vec2 q = center;
        for (int j = 0; j < 4; ++j) q += a[j] * std::cos((j + 1) * t) + b[j] * std::sin((j + 1) * t);
        l.samples.push_back(q);
    }
    return surgery(s, make_multicurve(s, {timed_by_length(s, l, speed)}), eps, n);
}

}  // namespace

// ---------------------------------------------------------------------------

MulticurveDescent descend_multicurve(const MagneticTonelliData& data, const Multicurve& mc, double e,
                                     const SearchOptions& opts) {
    const SurfaceModel& s = data.surface;
    MulticurveDescent out;
    std::vector<LoopPath> comps;
    for (const auto& c : mc.components) comps.push_back(resample_uniform(s, c, opts.samples));
    int used = 0;
    while (true) {
        std::vector<LoopPath> kept;
        bool all_converged = true;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            DescentOptions d;
            d.max_iters = kSurgeryRound;
            d.grad_tol = opts.grad_tol;
            const auto r = descend_to_waist(data, comps[i], e, d);
            if (r.hit_period_floor) {
                ++out.dropped;
                continue;
            }
            kept.push_back(r.loop);
            all_converged = all_converged && r.converged;
        }
        used += kSurgeryRound;
        comps = drop_coincident(data, e, std::move(kept));
        Multicurve cur = make_multicurve(s, comps);
        bool crossing = false;
        for (const auto& rec : self_intersections(s, cur))
            if (rec.type == CrossingType::Transverse) crossing = true;
        if (crossing) {
            comps = surgery(s, cur, opts.chamfer_eps, opts.samples).components;
            ++out.surgeries;
            all_converged = false;
        }
        // A simple closed curve on the torus has a primitive class. Very long
        // components are escaping along spirals or folds and are dropped.
        const double max_length = s.is_torus() ? 8.0 : 8 * kPi;
        std::vector<LoopPath> bounded;
        for (const auto& c : comps) {
            const Eigen::VectorXi h = homology_class(s, c);
            if (h.size() == 2 && std::gcd(std::abs(h(0)), std::abs(h(1))) > 1) {
                out.curves = make_multicurve(s, comps);
                out.stopped = "NonPrimitiveClass";
                return out;
            }
            if (chart_length(s, c) > max_length) {
                ++out.dropped;
                continue;
            }
            bounded.push_back(c);
        }
        comps = std::move(bounded);
        if (comps.size() > static_cast<std::size_t>(kMaxComponents)) {
            out.curves = make_multicurve(s, comps);
            out.stopped = "ComponentBlowup";
            return out;
        }
        if (comps.empty()) {
            out.curves = make_multicurve(s, {});
            out.converged = true;
            return out;
        }
        if (all_converged || used >= opts.max_iters || out.surgeries > kMaxSurgeries) {
            out.curves = make_multicurve(s, comps);
            out.curves.embedded = !crossing;
            out.converged = all_converged;
            return out;
        }
    }
}

void finalize_report(const MagneticTonelliData& data, SearchReport& r, int homology_grid) {
    const SurfaceModel& s = data.surface;
    r.energy_residuals.clear();
    r.periods.clear();
    r.converged = true;
    for (const auto& c : r.best.components) {
        const auto ev = action_gradient(data, c, r.energy);
        r.energy_residuals.push_back(ev.energy_residual);
        r.periods.push_back(c.period);
        r.converged = r.converged && std::hypot(ev.norm(), c.period * ev.gradient_period) < 1e-5;
    }
    r.action = action_free_period(data, r.best, r.energy);
    r.negative = r.action < 0.0;
    const std::size_t m = r.best.components.size();
    r.disjointness.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            r.disjointness[i][j] = r.disjointness[j][i] =
                support_distance(s, r.best.components[i], r.best.components[j]);
    r.certificate = m > 0 ? solve_bounding_chain(s, r.best, homology_grid) : std::nullopt;
    r.topological = r.certificate && r.certificate->topological() && verify_boundary(*r.certificate);
    try {
        r.embedded = m > 0 && self_intersections(s, r.best, 1e-4).empty();
    } catch (const DegenerateSegmentError&) {
        r.embedded = false;
    }
}

SearchReport minimal_boundary_search(const MagneticTonelliData& data, double e,
                                     const SearchOptions& opts) {
    const SurfaceModel& s = data.surface;
    const double e0 = compute_e0(data);
    if (!(e > e0)) {
        std::ostringstream os;
        os << "energy " << e << " must exceed e0 = " << e0;
        throw EnergyRangeError(os.str());
    }
    const CriticalEstimate c0 = opts.c0 ? *opts.c0 : compute_c0(data);
    if (e > c0.upper + c0.tolerance + 1e-9) {
        std::ostringstream os;
        os << "energy " << e << " exceeds c0 = " << c0.value << " (tolerance " << c0.tolerance << ")";
        throw EnergyRangeError(os.str());
    }

    SearchReport report;
    report.energy = e;
    report.c0 = c0.value;
    report.c0_tolerance = c0.tolerance;
    double best_action = kInf;
    Multicurve best;
    for (int i = 0; i < opts.seeds; ++i) {
        SeedOutcome out;
        out.index = i;
        auto rng = seed_rng(opts.rng_seed, i);
        try {
            const Multicurve seed = make_seed(data, e, i, rng, opts.samples, out.kind, opts.chamfer_eps);
            const auto md = descend_multicurve(data, seed, e, opts);
            if (!md.stopped.empty()) {
                out.error = md.stopped;
                report.seed_log.push_back(out);
                continue;
            }
            if (md.curves.components.empty()) {
                out.error = "Collapsed";
                report.seed_log.push_back(out);
                continue;
            }
            auto cert = solve_bounding_chain(s, md.curves, opts.homology_grid);
            if (!cert) {
                out.error = "NotABoundaryError";
                report.seed_log.push_back(out);
                continue;
            }
            const auto pieces = decompose_topological_boundaries(*cert);
            double piece_best = kInf;
            Multicurve piece_mc;
            for (const auto& p : pieces) {
                const double a = action_free_period(data, p, e);
                if (a < piece_best) {
                    piece_best = a;
                    piece_mc = p;
                }
            }
            if (pieces.empty()) {
                out.error = "EmptyDecomposition";
                report.seed_log.push_back(out);
                continue;
            }
            out.ok = true;
            out.action = piece_best;
            out.components = static_cast<int>(piece_mc.components.size());
            if (piece_best < best_action) {
                best_action = piece_best;
                best = piece_mc;
                report.best_seed = i;
            }
        } catch (const Error& ex) {
            out.error = ex.kind();
        }
        report.seed_log.push_back(out);
    }
    report.seeds_used = opts.seeds;
    if (report.best_seed < 0) throw NoNegativeCandidate("no seed produced a topological boundary");
    if (e < c0.lower - 1e-9 && !(best_action < 0.0)) {
        std::ostringstream os;
        os << "no negative-action boundary found below c0; least action " << best_action;
        throw NoNegativeCandidate(os.str());
    }
    report.best = best;
    finalize_report(data, report, opts.homology_grid);
    return report;
}

// ---------------------------------------------------------------------------
// Graph theorem

std::string to_string(PairKind k) {
    switch (k) {
        case PairKind::Identical: return "identical";
        case PairKind::Disjoint: return "disjoint";
        case PairKind::Violation: return "VIOLATION";
    }
    return "?";
}

double aligned_distance(const SurfaceModel& s, const LoopPath& a, const LoopPath& b,
                        double period_tol) {
    if (std::abs(a.period - b.period) > period_tol) return kInf;
    const int m = 256;
    const LoopPath ra = resample_uniform(s, a, m), rb = resample_uniform(s, b, m);
    auto at = [&](double pos) {
        const double f = std::floor(pos);
        const double t = pos - f;
        const long k = static_cast<long>(f);
        return Vec2((1 - t) * rb.point(s, k) + t * rb.point(s, k + 1));
    };
    auto dist = [&](double shift) {
        double worst = 0.0;
        for (int i = 0; i < m; ++i)
            worst = std::max(worst, s.periodic_delta(ra.samples[static_cast<std::size_t>(i)],
                                                     at(i + shift))
                                        .norm());
        return worst;
    };
    int best_k = 0;
    double best = kInf;
    for (int k = 0; k < m; ++k) {
        const double d = dist(k);
        if (d < best) {
            best = d;
            best_k = k;
        }
    }
    // Golden-section refinement of the fractional shift.
    double lo = best_k - 1.0, hi = best_k + 1.0;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = dist(x1), f2 = dist(x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = dist(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = dist(x2);
        }
    }
    return std::min({best, f1, f2});
}

std::vector<PairVerdict> graph_theorem_check(const MagneticTonelliData& data,
                                             const std::vector<SearchReport>& reports,
                                             double threshold) {
    const SurfaceModel& s = data.surface;
    for (const auto& r : reports)
        if (std::abs(r.energy - reports.front().energy) > 1e-12)
            throw MixedEnergyError("graph check needs reports at one energy");
    std::vector<PairVerdict> out;
    for (std::size_t ra = 0; ra < reports.size(); ++ra)
        for (std::size_t rb = ra + 1; rb < reports.size(); ++rb) {
            const auto& A = reports[ra].best.components;
            const auto& B = reports[rb].best.components;
            for (std::size_t i = 0; i < A.size(); ++i)
                for (std::size_t j = 0; j < B.size(); ++j) {
                    PairVerdict v;
                    v.report_a = static_cast<int>(ra);
                    v.component_a = static_cast<int>(i);
                    v.report_b = static_cast<int>(rb);
                    v.component_b = static_cast<int>(j);
                    v.distance = support_distance(s, A[i], B[j]);
                    v.hausdorff = hausdorff_distance(s, A[i], B[j]);
                    v.aligned = v.hausdorff < threshold ? aligned_distance(s, A[i], B[j], threshold) : kInf;
                    if (v.hausdorff < threshold && v.aligned < threshold) {
                        v.kind = PairKind::Identical;
                    } else if (v.distance > threshold) {
                        v.kind = PairKind::Disjoint;
                    } else {
                        v.kind = PairKind::Violation;
                        double best = kInf;
                        for (const Vec2& p : A[i].samples) {
                            const double d = point_to_loop_distance(s, p, B[j]);
                            if (d < best) {
                                best = d;
                                v.witness_a = p;
                            }
                        }
                        best = kInf;
                        for (const Vec2& q : B[j].samples) {
                            const double d = s.periodic_delta(v.witness_a, q).norm();
                            if (d < best) {
                                best = d;
                                v.witness_b = q;
                            }
                        }
                    }
                    out.push_back(v);
                }
        }
    return out;
}

// ---------------------------------------------------------------------------
// Continuation above c₀

ContinuationResult waist_continuation_above_c0(const MagneticTonelliData& data,
                                               const SearchReport& report_at_c0,
                                               const std::vector<double>& e_grid,
                                               int homology_grid) {
    const SurfaceModel& s = data.surface;
    const auto& centers = report_at_c0.best.components;
    if (centers.empty()) throw NotAMinimalBoundaryError("empty multicurve");
    const double a0 = action_free_period(data, report_at_c0.best, report_at_c0.energy);
    if (std::abs(a0) > 1e-3) {
        std::ostringstream os;
        os << "action " << a0 << " at e = " << report_at_c0.energy
           << " is not zero; not a minimal boundary at c0";
        throw NotAMinimalBoundaryError(os.str());
    }
    for (const auto& c : centers)
        if (action_gradient(data, c, report_at_c0.energy).energy_residual > 1e-3)
            throw NotAMinimalBoundaryError("a component is not an orbit at the report energy");
    const auto cert = solve_bounding_chain(s, report_at_c0.best, homology_grid);
    if (!cert || !cert->topological()) throw NotAMinimalBoundaryError("not a topological boundary");

    ContinuationResult res;
    std::vector<LoopPath> current = centers;
    for (double e : e_grid) {
        ContinuationStep step;
        step.energy = e;
        step.success = true;
        std::vector<LoopPath> next;
        for (std::size_t i = 0; i < centers.size(); ++i) {
            DescentOptions d;
            d.tube_center = &centers[i];
            d.tube_radius = kTubeRadius;
            d.max_iters = 3000;
            const auto r = descend_to_waist(data, current[i], e, d);
            double far = 0.0;
            for (const auto& q : r.loop.samples)
                far = std::max(far, point_to_loop_distance(s, q, centers[i]));
            step.center_distances.push_back(far);
            step.actions.push_back(r.value);
            step.success = step.success && r.converged && far < kTubeInterior;
            next.push_back(r.loop);
        }
        step.curves = make_multicurve(s, next);
        const auto c = solve_bounding_chain(s, step.curves, homology_grid);
        step.topological = c && c->topological();
        step.success = step.success && step.topological;
        if (step.success) {
            current = next;
            if (!res.cw_estimate || e > *res.cw_estimate) res.cw_estimate = e;
        }
        res.steps.push_back(std::move(step));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Ambient loops

AmbientLoop to_ambient(const SurfaceModel& s, const LoopPath& loop) {
    AmbientLoop a;
    a.period = loop.period;
    const LoopPath u = loop.uniform() ? loop : resample_uniform(s, loop, loop.size());
    for (const Vec2& q : u.samples) a.samples.push_back(s.embed(q));
    return a;
}

std::optional<LoopPath> to_chart(const SurfaceModel& s, const AmbientLoop& loop) {
    LoopPath l;
    l.period = loop.period;
    double prev = 0.0;
    for (std::size_t k = 0; k < loop.samples.size(); ++k) {
        const Vec3 x = loop.samples[k].normalized();
        if (std::abs(x(2)) > 1.0 - s.pole_snap()) return std::nullopt;
        Vec2 q = s.chart_of(x);
        if (k > 0) q(0) = prev + std::remainder(q(0) - prev, 2 * kPi);
        prev = q(0);
        l.samples.push_back(q);
    }
    const Vec2 first = l.samples.front();
    const double close = prev + std::remainder(first(0) - prev, 2 * kPi);
    l.winding = Eigen::Vector2i(static_cast<int>(std::lround((close - first(0)) / (2 * kPi))), 0);
    return l;
}

namespace {

void require_ambient(const MagneticTonelliData& data) {
    if (!data.surface.is_sphere()) throw std::invalid_argument("ambient loops live on the sphere");
    if (!data.potential.identically_zero)
        throw std::invalid_argument("ambient loops need V identically zero");
    if (!data.theta.has_ambient()) throw std::invalid_argument("theta has no ambient extension");
}

Vec3 ambient_theta(const MagneticTonelliData& data, const Vec3& x) {
    return data.theta.identically_zero ? Vec3::Zero() : data.theta.ambient_value(x);
}

Mat3 ambient_theta_jac(const MagneticTonelliData& data, const Vec3& x) {
    return data.theta.identically_zero ? Mat3::Zero() : data.theta.ambient_jacobian(x);
}

struct AmbientEval {
    double value = 0.0;
    std::vector<Vec3> grad;  // tangential part
    double grad_logp = 0.0;
    double kinetic = 0.0;    // ∫ kinetic energy
};

AmbientEval ambient_eval(const MagneticTonelliData& data, const AmbientLoop& l, double e) {
    const int n = static_cast<int>(l.samples.size());
    const double h = l.period / n;
    AmbientEval out;
    out.grad.assign(static_cast<std::size_t>(n), Vec3::Zero());
    double mean_kin = 0.0;
    for (int k = 0; k < n; ++k) {
        const Vec3& a = l.samples[static_cast<std::size_t>(k)];
        const Vec3& b = l.samples[static_cast<std::size_t>((k + 1) % n)];
        const Vec3 d = b - a, m = 0.5 * (a + b);
        const Vec3 th = ambient_theta(data, m);
        out.value += 0.5 * d.squaredNorm() / h + th.dot(d);
        out.kinetic += 0.5 * d.squaredNorm() / h;
        mean_kin += 0.5 * d.squaredNorm() / (h * h) / n;
        const Vec3 dd = d / h + th;
        const Vec3 dm = ambient_theta_jac(data, m).transpose() * d;
        out.grad[static_cast<std::size_t>(k)] += -dd + 0.5 * dm;
        out.grad[static_cast<std::size_t>((k + 1) % n)] += dd + 0.5 * dm;
    }
    out.value += l.period * e;
    for (int k = 0; k < n; ++k) {
        Vec3& g = out.grad[static_cast<std::size_t>(k)];
        const Vec3& x = l.samples[static_cast<std::size_t>(k)];
        g -= g.dot(x) * x;
    }
    out.grad_logp = l.period * (e - mean_kin);
    return out;
}

double ambient_grad_norm(const AmbientEval& ev) {
    double sq = 0.0;
    for (const auto& g : ev.grad) sq += g.squaredNorm();
    return std::hypot(std::sqrt(sq * ev.grad.size()), ev.grad_logp);
}

struct AmbientDirection {
    std::vector<Vec3> dir;
    double dlogp = 0.0;
    AmbientEval ev;
};

// H¹-preconditioned descent direction, tangent to the sphere at every sample.
AmbientDirection ambient_direction(const MagneticTonelliData& data, const AmbientLoop& l, double e) {
    AmbientDirection out;
    out.ev = ambient_eval(data, l, e);
    const int n = static_cast<int>(l.samples.size());
    const double sigma = std::pow(2 * kPi / n, 2);
    out.dir.assign(static_cast<std::size_t>(n), Vec3::Zero());
    for (int c = 0; c < 3; ++c) {
        std::vector<double> rhs(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
            rhs[static_cast<std::size_t>(k)] = out.ev.grad[static_cast<std::size_t>(k)](c) * l.period / n;
        const auto sol = numerics::solve_cyclic_tridiagonal(-1.0, 2.0 + sigma, rhs);
        for (int k = 0; k < n; ++k) out.dir[static_cast<std::size_t>(k)](c) = -sol[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < n; ++k) {
        const Vec3& x = l.samples[static_cast<std::size_t>(k)];
        out.dir[static_cast<std::size_t>(k)] -= out.dir[static_cast<std::size_t>(k)].dot(x) * x;
    }
    out.dlogp = -out.ev.grad_logp / std::max(out.ev.kinetic, 1e-3);
    return out;
}

double ambient_slope(const AmbientDirection& d) {
    double slope = d.ev.grad_logp * d.dlogp;
    for (std::size_t k = 0; k < d.dir.size(); ++k) slope += d.ev.grad[k].dot(d.dir[k]);
    return slope;
}

// Largest step keeping sample moves below 0.05 and the log-period move below 0.5.
double capped_step(const AmbientDirection& d) {
    double max_move = 0.0;
    for (const auto& v : d.dir) max_move = std::max(max_move, v.norm());
    double step = 1.0;
    if (max_move > 0.05) step = 0.05 / max_move;
    if (std::abs(d.dlogp) * step > 0.5) step = 0.5 / std::abs(d.dlogp);
    return step;
}

AmbientLoop moved(const AmbientLoop& l, const AmbientDirection& d, double step) {
    AmbientLoop out = l;
    for (std::size_t k = 0; k < l.samples.size(); ++k)
        out.samples[k] = (l.samples[k] + step * d.dir[k]).normalized();
    out.period = l.period * std::exp(step * d.dlogp);
    return out;
}

// Armijo step along d; returns false when no decrease was found.
bool ambient_armijo(const MagneticTonelliData& data, AmbientLoop& l, const AmbientDirection& d, double e,
                    double& value) {
    const double slope = ambient_slope(d);
    if (!(slope < 0.0)) return false;
    double step = capped_step(d);
    for (int t = 0; t < 40; ++t, step *= 0.5) {
        AmbientLoop trial = moved(l, d, step);
        const double v = ambient_action(data, trial, e);
        if (v <= value + 1e-4 * step * slope) {
            l = std::move(trial);
            value = v;
            return true;
        }
    }
    return false;
}

double segment_point_distance3(const Vec3& a, const Vec3& b, const Vec3& p) {
    const Vec3 d = b - a;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (a + t * d - p).norm();
}

double directed_hausdorff3(const AmbientLoop& a, const AmbientLoop& b) {
    double worst = 0.0;
    const std::size_t n = b.samples.size();
    for (const Vec3& p : a.samples) {
        double best = kInf;
        for (std::size_t k = 0; k < n; ++k)
            best = std::min(best, segment_point_distance3(b.samples[k], b.samples[(k + 1) % n], p));
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

double ambient_action(const MagneticTonelliData& data, const AmbientLoop& loop, double e) {
    require_ambient(data);
    const std::size_t n = loop.samples.size();
    const double h = loop.period / static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Vec3& a = loop.samples[k];
        const Vec3& b = loop.samples[(k + 1) % n];
        const Vec3 d = b - a;
        sum += 0.5 * d.squaredNorm() / h + ambient_theta(data, 0.5 * (a + b)).dot(d);
    }
    return sum + loop.period * e;
}

double ambient_hausdorff(const AmbientLoop& a, const AmbientLoop& b) {
    return std::max(directed_hausdorff3(a, b), directed_hausdorff3(b, a));
}

// ---------------------------------------------------------------------------
// Minimax

DescentResult descend_across_poles(const MagneticTonelliData& data, const LoopPath& loop, double e,
                                   const DescentOptions& opts) {
    DescentResult r = descend_to_waist(data, loop, e, opts);
    const SurfaceModel& s = data.surface;
    if (r.converged || r.hit_period_floor || !s.is_sphere()) return r;
    double zmax = 0.0;
    for (const auto& p : r.loop.samples) zmax = std::max(zmax, std::abs(p(1)));
    if (zmax < 1.0 - 2.0 * s.pole_snap()) return r;
    if (!data.potential.identically_zero || !data.theta.has_ambient()) {
        r.stalled_at_pole = true;
        return r;
    }
    AmbientLoop a = to_ambient(s, r.loop);
    double v = ambient_action(data, a, e);
    for (int it = 0; it < opts.max_iters; ++it) {
        const auto d = ambient_direction(data, a, e);
        r.grad_norm = ambient_grad_norm(d.ev);
        ++r.iterations;
        if (r.grad_norm < opts.grad_tol) {
            r.converged = true;
            break;
        }
        if (!ambient_armijo(data, a, d, e, v)) break;
        if (a.period <= opts.p_floor) {
            r.hit_period_floor = true;
            break;
        }
        if (auto c = to_chart(s, a)) r.loop = *c;
    }
    r.value = v;
    r.stalled_at_pole = !r.converged && !r.hit_period_floor;
    return r;
}

void check_local_minimum(const MagneticTonelliData& data, const LoopPath& waist, double e,
                         std::uint64_t rng_seed) {
    const double s0 = action_free_period(data, waist, e);
    // Exact symmetries leave S_e unchanged up to rounding.
    const double slack = 1e-12 * (1.0 + std::abs(s0));
    const double amp = 1e-3;
    const int n = waist.size();
    auto probe = [&](const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b, double log_p,
                     const std::string& label) {
        LoopPath p = waist;
        for (int k = 0; k < n; ++k) {
            const double t = 2 * kPi * waist.parameter(k);
            Vec2 d = a[0];
            for (int j = 1; j < 4; ++j) d += a[j] * std::cos(j * t) + b[j] * std::sin(j * t);
            p.samples[static_cast<std::size_t>(k)] += amp * d;
        }
        p.period *= std::exp(amp * log_p);
        double v;
        try {
            v = action_free_period(data, p, e);
        } catch (const ChartDomainError&) {
            return;
        }
        if (v < s0 - slack) {
            std::ostringstream os;
            os.precision(12);
            os << label << " lowers the action from " << s0 << " to " << v;
            throw NotAWaistError(os.str());
        }
    };

    // Single Fourier modes in each chart direction, both signs.
    for (int j = 0; j < 4; ++j) {
        for (int trig = 0; trig < (j == 0 ? 1 : 2); ++trig) {
            for (int c = 0; c < 2; ++c) {
                for (double sign : {-1.0, 1.0}) {
                    std::array<Vec2, 4> a{}, b{};
                    for (auto& x : a) x.setZero();
                    for (auto& x : b) x.setZero();
                    (trig == 0 ? a : b)[static_cast<std::size_t>(j)](c) = sign;
                    probe(a, b, 0.0,
                          "mode " + std::to_string(j) + (trig == 0 ? " cos" : " sin") + " in coordinate " +
                              std::to_string(c) + (sign < 0 ? " (-)" : " (+)"));
                }
            }
        }
    }
    // Random mixtures with a period change.
    auto rng = seed_rng(rng_seed, 0x5a17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::array<Vec2, 4> a, b;
        for (int j = 0; j < 4; ++j) {
            a[j] = Vec2(u(rng), u(rng));
            b[j] = Vec2(u(rng), u(rng));
        }
        probe(a, b, u(rng), "perturbation " + std::to_string(trial));
    }
}

MinimaxResult minimax_orbits(const MagneticTonelliData& data, double e, const LoopPath& waist,
                             int m_max, const MinimaxOptions& opts) {
    require_ambient(data);
    if (m_max < 1) throw std::invalid_argument("m_max must be at least 1");
    const SurfaceModel& s = data.surface;
    check_local_minimum(data, waist, e, opts.rng_seed);

    MinimaxResult res;
    const AmbientLoop base = to_ambient(s, resample_uniform(s, waist, opts.samples_per_wind));
    res.waist_action = ambient_action(data, base, e);
    {
        MinimaxLevel one;
        one.m = 1;
        one.s_m = res.waist_action;
        one.critical_loop = base;
        one.critical_gradient = ambient_grad_norm(ambient_eval(data, base, e));
        res.levels.push_back(one);
    }
    const int nodes = std::max(3, opts.nodes);
    for (int m = 2; m <= m_max; ++m) {
        const int M = opts.samples_per_wind * m;
        const AmbientLoop A = to_ambient(s, resample_uniform(s, waist, M));
        const AmbientLoop B = to_ambient(s, resample_uniform(s, iterate_loop(s, resample_uniform(s, waist, opts.samples_per_wind), m), M));
        const Vec3 up(0, 0, 1);
        std::vector<AmbientLoop> path(static_cast<std::size_t>(nodes));
        std::vector<double> vals(static_cast<std::size_t>(nodes));
        auto build = [&](double t) {
            AmbientLoop l;
            for (int k = 0; k < M; ++k)
                l.samples.push_back(((1 - t) * A.samples[static_cast<std::size_t>(k)] +
                                     t * B.samples[static_cast<std::size_t>(k)] +
                                     opts.lift * t * (1 - t) * up)
                                        .normalized());
            l.period = std::exp((1 - t) * std::log(A.period) + t * std::log(B.period));
            return l;
        };
        for (int j = 0; j < nodes; ++j) {
            path[static_cast<std::size_t>(j)] = build(double(j) / (nodes - 1));
            vals[static_cast<std::size_t>(j)] = ambient_action(data, path[static_cast<std::size_t>(j)], e);
        }
        auto node_distance = [&](const AmbientLoop& x, const AmbientLoop& y) {
            double sq = 0.0;
            for (std::size_t k = 0; k < x.samples.size(); ++k) sq += (x.samples[k] - y.samples[k]).squaredNorm();
            return std::sqrt(sq / x.samples.size() + std::pow(std::log(x.period / y.period), 2));
        };
        auto reparametrize = [&]() {
            std::vector<double> arc(static_cast<std::size_t>(nodes), 0.0);
            for (int j = 1; j < nodes; ++j)
                arc[static_cast<std::size_t>(j)] = arc[static_cast<std::size_t>(j - 1)] +
                    node_distance(path[static_cast<std::size_t>(j - 1)], path[static_cast<std::size_t>(j)]);
            const double total = arc.back();
            if (!(total > 0.0)) return;
            std::vector<AmbientLoop> fresh = path;
            int seg = 0;
            for (int j = 1; j + 1 < nodes; ++j) {
                const double target = total * j / (nodes - 1);
                while (seg + 1 < nodes - 1 && arc[static_cast<std::size_t>(seg + 1)] < target) ++seg;
                const double len = arc[static_cast<std::size_t>(seg + 1)] - arc[static_cast<std::size_t>(seg)];
                const double t = len > 0 ? (target - arc[static_cast<std::size_t>(seg)]) / len : 0.0;
                const auto& x = path[static_cast<std::size_t>(seg)];
                const auto& y = path[static_cast<std::size_t>(seg + 1)];
                AmbientLoop l;
                for (int k = 0; k < M; ++k)
                    l.samples.push_back(((1 - t) * x.samples[static_cast<std::size_t>(k)] +
                                         t * y.samples[static_cast<std::size_t>(k)]).normalized());
                l.period = std::exp((1 - t) * std::log(x.period) + t * std::log(y.period));
                fresh[static_cast<std::size_t>(j)] = std::move(l);
            }
            path = std::move(fresh);
            for (int j = 1; j + 1 < nodes; ++j)
                vals[static_cast<std::size_t>(j)] = ambient_action(data, path[static_cast<std::size_t>(j)], e);
        };
        for (int sweep = 0; sweep < opts.sweeps; ++sweep) {
            int top = 1;
            for (int j = 2; j + 1 < nodes; ++j)
                if (vals[static_cast<std::size_t>(j)] > vals[static_cast<std::size_t>(top)]) top = j;
            auto& node = path[static_cast<std::size_t>(top)];
            ambient_armijo(data, node, ambient_direction(data, node, e), e, vals[static_cast<std::size_t>(top)]);
            if ((sweep + 1) % 10 == 0) reparametrize();
        }
        int top = 0;
        for (int j = 1; j < nodes; ++j)
            if (vals[static_cast<std::size_t>(j)] > vals[static_cast<std::size_t>(top)]) top = j;
        MinimaxLevel lvl;
        lvl.m = m;
        lvl.s_m = vals[static_cast<std::size_t>(top)];
        lvl.critical_loop = path[static_cast<std::size_t>(top)];
        lvl.critical_gradient = ambient_grad_norm(ambient_eval(data, lvl.critical_loop, e));
        res.levels.push_back(std::move(lvl));
    }
    std::vector<const AmbientLoop*> distinct;
    for (const auto& lvl : res.levels) {
        bool fresh = true;
        for (const AmbientLoop* d : distinct)
            if (ambient_hausdorff(*d, lvl.critical_loop) <= 1e-2) fresh = false;
        if (fresh) distinct.push_back(&lvl.critical_loop);
    }
    res.distinct_orbits = static_cast<int>(distinct.size());
    return res;
}

// ---------------------------------------------------------------------------
// Orbit measures

OrbitMeasure orbit_measure_stats(const MagneticTonelliData& data, const Multicurve& mc) {
    const SurfaceModel& s = data.surface;
    if (mc.components.empty()) throw std::invalid_argument("empty multicurve");
    OrbitMeasure out;
    out.rotation_vector = Eigen::VectorXd::Zero(s.homology_rank());
    double total_p = 0.0, total_l = 0.0;
    for (const auto& c : mc.components) {
        // Mean segment energy, then the gradient of S at that level.
        double mean = 0.0;
        for (int k = 0; k < c.size(); ++k) {
            const Vec2 a = c.point(s, k), b = c.point(s, k + 1);
            const double h = c.period * c.weight(k);
            mean += c.weight(k) * energy_eval(data, 0.5 * (a + b), (b - a) / h);
        }
        const auto ev = action_gradient(data, c, mean);
        const double residual = std::max(ev.energy_residual, ev.norm());
        if (residual >= 1e-4) {
            std::ostringstream os;
            os << "component is not a closed orbit (residual " << residual << ")";
            throw NotAnOrbitError(os.str());
        }
        if (s.is_torus()) out.rotation_vector += homology_class(s, c).cast<double>();
        total_p += c.period;
        total_l += lagrangian_integral(data, c);
    }
    out.rotation_vector /= total_p;
    out.measure_action = total_l / total_p;
    return out;
}

// ---------------------------------------------------------------------------
// Z-orbits

namespace {

Vec2 z_field(const MagneticTonelliData& data, const Vec2& q) {
    return -(data.surface.metric_inverse(q) * data.theta.at(q));
}

Vec2 z_step(const MagneticTonelliData& data, const Vec2& q, double h) {
    const Vec2 k1 = z_field(data, q);
    const Vec2 k2 = z_field(data, q + 0.5 * h * k1);
    const Vec2 k3 = z_field(data, q + 0.5 * h * k2);
    const Vec2 k4 = z_field(data, q + h * k3);
    return q + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
}

Vec2 z_flow(const MagneticTonelliData& data, Vec2 q, double t, int steps) {
    for (int i = 0; i < steps; ++i) q = z_step(data, q, t / steps);
    return q;
}

// Closed orbit of Z through q0 sampled at n points, or nullopt.
std::optional<LoopPath> closed_z_orbit(const MagneticTonelliData& data, const Vec2& q0, int n) {
    const SurfaceModel& s = data.surface;
    const double speed = oneform_norm(s, data.theta, q0);
    if (!(speed > 0.0)) return std::nullopt;
    const double h = 1e-3 / speed;
    Vec2 q = q0;
    bool left = false;
    double prev = kInf;
    double t = 0.0;
    double t_close = -1.0;
    const int max_steps = static_cast<int>(200.0 / (speed * h));
    for (int i = 0; i < max_steps; ++i) {
        q = z_step(data, q, h);
        t += h;
        if (!s.admissible(q)) return std::nullopt;
        const double d = s.periodic_delta(q0, q).norm();
        if (d > 0.05) left = true;
        if (left && d > prev && prev < 10 * h * speed) {
            t_close = t - h;
            break;
        }
        prev = d;
    }
    if (t_close < 0) return std::nullopt;
    // Golden-section refinement of the closing time.
    auto gap = [&](double T) {
        return s.periodic_delta(q0, z_flow(data, q0, T, std::max(64, static_cast<int>(T / h)))).norm();
    };
    double lo = t_close - 2 * h, hi = t_close + 2 * h;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 50; ++it) {
        const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        (gap(x1) < gap(x2) ? hi : lo) = (gap(x1) < gap(x2) ? x2 : x1);
    }
    const double T = 0.5 * (lo + hi);
    if (gap(T) > 1e-6) return std::nullopt;
    LoopPath l;
    l.period = T;
    Vec2 x = q0;
    const int sub = std::max(1, static_cast<int>(std::ceil(T / (n * h))));
    for (int k = 0; k < n; ++k) {
        l.samples.push_back(x);
        for (int j = 0; j < sub; ++j) x = z_step(data, x, T / (n * sub));
    }
    const Vec2 shift = x - q0;
    const Vec2 per = s.periods();
    l.winding = Eigen::Vector2i(per(0) > 0 ? static_cast<int>(std::lround(shift(0) / per(0))) : 0,
                                per(1) > 0 ? static_cast<int>(std::lround(shift(1) / per(1))) : 0);
    return l;
}

}  // namespace

Lemma52Result lemma52_criterion(const MagneticTonelliData& data, int grid) {
    const SurfaceModel& s = data.surface;
    const auto g = numerics::chart_node_grid(s, grid);
    double fmax = 0.0;
    if (!data.theta.identically_zero)
        for (const Vec2& q : g.nodes) fmax = std::max(fmax, std::abs(two_form_density(s, data.theta, q)));
    if (!(fmax > 1e-8)) throw ClosedFormError("d(theta) vanishes on the grid");

    Lemma52Result res;
    res.theta_sup = theta_sup_norm(data);
    std::vector<int> label(g.nodes.size(), -1);
    std::vector<bool> in_n(g.nodes.size(), false);
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (oneform_norm(s, data.theta, g.nodes[i]) >= res.theta_sup - 1e-6) {
            in_n[i] = true;
            res.n_set.push_back(g.nodes[i]);
        }
    // 8-connected components with periodic x (and periodic y on the torus).
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (!in_n[i] || label[i] >= 0) continue;
        const int id = static_cast<int>(reps.size());
        reps.push_back(i);
        std::vector<std::size_t> stack{i};
        label[i] = id;
        while (!stack.empty()) {
            const std::size_t c = stack.back();
            stack.pop_back();
            const int ci = static_cast<int>(c % g.nx), cj = static_cast<int>(c / g.nx);
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    int ni = (ci + di + g.nx) % g.nx, nj = cj + dj;
                    if (s.is_torus()) nj = (nj + g.ny) % g.ny;
                    else if (nj < 0 || nj >= g.ny) continue;
                    const std::size_t nb = static_cast<std::size_t>(nj) * g.nx + ni;
                    if (in_n[nb] && label[nb] < 0) {
                        label[nb] = id;
                        stack.push_back(nb);
                    }
                }
        }
    }
    res.n_components = static_cast<int>(reps.size());
    std::vector<LoopPath> orbits;
    const double e = 0.5 * res.theta_sup * res.theta_sup;
    bool inside = true;
    for (std::size_t r : reps) {
        const auto orbit = closed_z_orbit(data, g.nodes[r], 128);
        if (!orbit) {
            inside = false;
            continue;
        }
        for (const Vec2& q : orbit->samples)
            if (oneform_norm(s, data.theta, q) < res.theta_sup - 1e-6) inside = false;
        bool dup = false;
        for (const auto& o : orbits)
            if (hausdorff_distance(s, o, *orbit) < 1e-3) dup = true;
        if (dup) continue;
        orbits.push_back(*orbit);
        res.orbit_actions.push_back(action_free_period(data, *orbit, e));
    }
    if (!orbits.empty() && inside) {
        const Multicurve mc = make_multicurve(s, orbits);
        const auto cert = solve_bounding_chain(s, mc);
        bool zero = true;
        for (double a : res.orbit_actions) zero = zero && std::abs(a) < 1e-6;
        if (cert && cert->topological() && zero) {
            res.satisfied = true;
            res.boundary = mc;
            res.r0 = res.theta_sup;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Randers census

namespace {

// Resample so that F = r|v| + θ(v) is constant along the loop.
AmbientLoop constant_f_speed(const MagneticTonelliData& data, const AmbientLoop& l, double r) {
    const std::size_t n = l.samples.size();
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec3& a = l.samples[k];
        const Vec3& b = l.samples[(k + 1) % n];
        const Vec3 d = b - a;
        const double f = r * d.norm() + ambient_theta(data, 0.5 * (a + b)).dot(d);
        cum[k + 1] = cum[k] + std::max(f, 0.0);
    }
    AmbientLoop out;
    out.period = l.period;
    const double total = cum.back();
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double target = total * j / n;
        while (k + 1 < n && cum[k + 1] < target) ++k;
        const double len = cum[k + 1] - cum[k];
        const double t = len > 0 ? (target - cum[k]) / len : 0.0;
        out.samples.push_back(((1 - t) * l.samples[k] + t * l.samples[(k + 1) % n]).normalized());
    }
    return out;
}

}  // namespace

RandersCensus randers_geodesic_census(const MagneticTonelliData& data, double r,
                                      const MinimaxOptions& opts) {
    const SurfaceModel& s = data.surface;
    if (!s.is_sphere()) throw std::invalid_argument("the Randers census runs on the sphere");
    const RandersMetric metric(data, r);  // validates V ≡ 0 and r > ‖θ‖∞
    const double e = 0.5 * r * r;
    RandersCensus out;
    out.r = r;
    double best = kInf;
    for (int i = 0; i <= 8; ++i)
        for (int dir : {1, -1}) {
            const double z = -0.6 + 0.15 * i;
            const LoopPath seed = latitude_loop(s, z, dir, 128, r);
            const auto res = descend_to_waist(data, seed, e);
            if (!res.converged || res.hit_period_floor) continue;
            try {
                check_local_minimum(data, res.loop, e, opts.rng_seed);
            } catch (const NotAWaistError&) {
                continue;
            }
            if (res.value < best - 1e-9) {
                best = res.value;
                out.waist = res.loop;
            }
        }
    if (!(best < kInf)) throw NoWaistFound("no latitude seed descended to a local minimizer");
    out.waist_action = best;
    double flen = 0.0;
    for (int k = 0; k < out.waist.size(); ++k) {
        const Vec2 a = out.waist.point(s, k), b = out.waist.point(s, k + 1);
        const Vec2 d = b - a, m = 0.5 * (a + b);
        flen += r * std::sqrt(d.dot(s.metric(m) * d)) + data.theta.at(m).dot(d);
    }
    out.waist_F_length = flen;
    out.waist_unit_F_length = flen / r;
    out.minimax = minimax_orbits(data, e, out.waist, 3, opts);
    for (const auto& lvl : out.minimax.levels) {
        const AmbientLoop geo = constant_f_speed(data, lvl.critical_loop, r);
        bool fresh = true;
        for (const auto& g : out.geodesics)
            if (ambient_hausdorff(g, geo) <= 1e-2) fresh = false;
        if (fresh) out.geodesics.push_back(geo);
    }
    (void)metric;
    return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json ambient_loop_to_json(const AmbientLoop& l) {
    nlohmann::json pts = nlohmann::json::array();
    for (const Vec3& x : l.samples) pts.push_back({x(0), x(1), x(2)});
    return {{"period", l.period}, {"samples", pts}};
}

nlohmann::json search_report_to_json(const MagneticTonelliData& data, const SearchReport& r) {
    const SurfaceModel& s = data.surface;
    nlohmann::json comps = nlohmann::json::array();
    for (std::size_t i = 0; i < r.best.components.size(); ++i) {
        const auto& c = r.best.components[i];
        nlohmann::json cls = nlohmann::json::array();
        if (s.is_torus())
            for (int k = 0; k < homology_class(s, c).size(); ++k) cls.push_back(homology_class(s, c)(k));
        comps.push_back({{"period", c.period},
                         {"samples", c.size()},
                         {"action", action_free_period(data, c, r.energy)},
                         {"energy_residual", r.energy_residuals.at(i)},
                         {"homology_class", cls}});
    }
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& o : r.seed_log) {
        nlohmann::json j{{"index", o.index}, {"kind", o.kind}, {"ok", o.ok}};
        if (o.ok) {
            j["action"] = o.action;
            j["components"] = o.components;
        } else {
            j["error"] = o.error;
        }
        seeds.push_back(j);
    }
    nlohmann::json j{{"energy", r.energy},
                     {"action", r.action},
                     {"components", comps},
                     {"seeds_used", r.seeds_used},
                     {"best_seed", r.best_seed},
                     {"disjointness", r.disjointness},
                     {"flags",
                      {{"negative", r.negative},
                       {"converged", r.converged},
                       {"topological", r.topological},
                       {"embedded", r.embedded}}},
                     {"c0", {{"value", r.c0}, {"tolerance", r.c0_tolerance}}},
                     {"seeds", seeds}};
    j["certificate"] = r.certificate ? certificate_to_json(*r.certificate) : nlohmann::json(nullptr);
    return j;
}

}  // namespace magwaist
