#include "magwaist/critical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "magwaist/action.hpp"
#include "magwaist/errors.hpp"
#include "magwaist/numerics.hpp"

namespace magwaist {

namespace {

constexpr double kPi = std::numbers::pi;

struct LoopStats {
    double theta = 0.0;   // ∮(θ − η)
    double length = 0.0;  // g-length
    double vbar = 0.0;    // mean of V at constant g-speed
};

LoopStats loop_stats(const MagneticTonelliData& data, const LoopPath& l, const Vec2& eta) {
    const SurfaceModel& s = data.surface;
    LoopStats st;
    double vint = 0.0;
    for (int k = 0; k < l.size(); ++k) {
        const Vec2 a = l.point(s, k), b = l.point(s, k + 1);
        const Vec2 m = 0.5 * (a + b), d = b - a;
        const double len = std::sqrt(d.dot(s.metric(m) * d));
        st.theta += (data.theta.at(m) - eta).dot(d);
        st.length += len;
        vint += len * data.potential.at(m);
    }
    st.vbar = st.length > 0.0 ? vint / st.length : 0.0;
    return st;
}

// Single loops of every homotopy type used for the lower bound on c.
std::vector<LoopPath> single_test_loops(const SurfaceModel& s, int n) {
    std::vector<LoopPath> out;
    for (int j = 0; j < n; ++j)
        for (int dir : {1, -1}) {
            if (s.is_torus()) {
                out.push_back(latitude_loop(s, double(j) / n, dir, 64, 1.0));
                out.push_back(longitude_loop(s, double(j) / n, dir, 64, 1.0));
            } else {
                const double z = -1.0 + 2.0 * (j + 0.5) / n;
                out.push_back(latitude_loop(s, z, dir, 128, 1.0));
            }
        }
    // Include the exact equator/zero rows.
    if (s.is_sphere())
        for (int dir : {1, -1}) out.push_back(latitude_loop(s, 0.0, dir, 128, 1.0));
    return out;
}

// Null-homologous pairs of oppositely oriented parallel circles on the torus.
std::vector<std::vector<LoopPath>> boundary_test_pairs(const SurfaceModel& s, int n) {
    std::vector<std::vector<LoopPath>> out;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            out.push_back({latitude_loop(s, double(a) / n, 1, 64, 1.0),
                           latitude_loop(s, double(b) / n, -1, 64, 1.0)});
            out.push_back({longitude_loop(s, double(a) / n, 1, 64, 1.0),
                           longitude_loop(s, double(b) / n, -1, 64, 1.0)});
        }
    return out;
}

// Discrete Hamiltonian max over a node grid for u given as node values.
class GridHamiltonian {
public:
    GridHamiltonian(const MagneticTonelliData& data, int k, const Vec2& eta) {
        grid_ = numerics::chart_node_grid(data.surface, k);
        const std::size_t m = grid_.nodes.size();
        shift_.resize(m);
        ginv_.resize(m);
        pot_.resize(m);
        for (std::size_t n = 0; n < m; ++n) {
            const Vec2& q = grid_.nodes[n];
            shift_[n] = eta - data.theta.at(q);
            ginv_[n] = data.surface.metric_inverse(q);
            pot_[n] = data.potential.at(q);
        }
        periodic_y_ = data.surface.is_torus();
    }

    std::size_t size() const { return grid_.nodes.size(); }

    // Node values H_n for u; w receives g⁻¹(du + η − θ).
    void eval(const std::vector<double>& u, std::vector<double>& h, std::vector<Vec2>* w) const {
        const int nx = grid_.nx, ny = grid_.ny;
        h.resize(size());
        if (w) w->resize(size());
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t n = idx(i, j);
                const Vec2 p = Vec2((u[idx(i + 1, j)] - u[idx(i - 1, j)]) / (2 * grid_.spacing(0)),
                                    (u[idy(i, j + 1)] - u[idy(i, j - 1)]) / (2 * grid_.spacing(1))) +
                               shift_[n];
                const Vec2 gp = ginv_[n] * p;
                h[n] = 0.5 * p.dot(gp) + pot_[n];
                if (w) (*w)[n] = gp;
            }
    }

    // g⁻¹ du at every node (no shift).
    void metric_gradient(const std::vector<double>& u, std::vector<Vec2>& out) const {
        const int nx = grid_.nx, ny = grid_.ny;
        out.resize(size());
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t n = idx(i, j);
                const Vec2 p((u[idx(i + 1, j)] - u[idx(i - 1, j)]) / (2 * grid_.spacing(0)),
                             (u[idy(i, j + 1)] - u[idy(i, j - 1)]) / (2 * grid_.spacing(1)));
                out[n] = ginv_[n] * p;
            }
    }

    // Least-squares primitive: argmin_u Σ_n |du + η − θ|²_{g⁻¹} by conjugate
    // gradients on the normal equations Dᵀg⁻¹D u = −Dᵀg⁻¹(η − θ).
    std::vector<double> least_squares_primitive(int max_iters) const {
        std::vector<Vec2> z(size());
        for (std::size_t n = 0; n < size(); ++n) z[n] = -(ginv_[n] * shift_[n]);
        std::vector<double> b, x(size(), 0.0), r, p, ap;
        std::vector<Vec2> tmp;
        adjoint(z, b);
        r = b;
        p = r;
        auto dot = [](const std::vector<double>& a, const std::vector<double>& c) {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * c[i];
            return s;
        };
        double rr = dot(r, r);
        const double stop = 1e-20 * std::max(1.0, rr);
        for (int it = 0; it < max_iters && rr > stop; ++it) {
            metric_gradient(p, tmp);
            adjoint(tmp, ap);
            const double pap = dot(p, ap);
            if (!(pap > 0.0)) break;
            const double alpha = rr / pap;
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            const double rr_new = dot(r, r);
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + rr_new / rr * p[i];
            rr = rr_new;
        }
        return x;
    }

    // Adjoint of the difference operator applied to per-node covectors z.
    void adjoint(const std::vector<Vec2>& z, std::vector<double>& out) const {
        const int nx = grid_.nx, ny = grid_.ny;
        out.assign(size(), 0.0);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const Vec2& zz = z[idx(i, j)];
                const double cx = zz(0) / (2 * grid_.spacing(0));
                const double cy = zz(1) / (2 * grid_.spacing(1));
                out[idx(i + 1, j)] += cx;
                out[idx(i - 1, j)] -= cx;
                out[idy(i, j + 1)] += cy;
                out[idy(i, j - 1)] -= cy;
            }
    }

private:
    std::size_t idx(int i, int j) const {
        const int nx = grid_.nx;
        i = ((i % nx) + nx) % nx;
        return static_cast<std::size_t>(j) * nx + i;
    }
    // Periodic rows on the torus; reflected ghost rows at the sphere caps.
    std::size_t idy(int i, int j) const {
        const int ny = grid_.ny;
        if (periodic_y_) j = ((j % ny) + ny) % ny;
        else j = std::clamp(j, 0, ny - 1);
        return idx(i, j);
    }

    numerics::ChartGrid grid_;
    std::vector<Vec2> shift_;
    std::vector<Mat2> ginv_;
    std::vector<double> pot_;
    bool periodic_y_ = true;
};

double softmax(const std::vector<double>& h, double tau, std::vector<double>* weights) {
    const double m = *std::max_element(h.begin(), h.end());
    double sum = 0.0;
    if (weights) weights->resize(h.size());
    for (std::size_t n = 0; n < h.size(); ++n) {
        const double w = std::exp((h[n] - m) / tau);
        sum += w;
        if (weights) (*weights)[n] = w;
    }
    if (weights)
        for (double& w : *weights) w /= sum;
    return m + tau * std::log(sum);
}

// Upper bound: annealed soft-max descent, best hard max over all iterates.
double grid_upper_bound(const MagneticTonelliData& data, const ManeOptions& opts, const Vec2& eta) {
    GridHamiltonian gh(data, opts.grid, eta);
    std::vector<double> u(gh.size(), 0.0), h, weights, grad, trial(gh.size()), ht;
    std::vector<Vec2> w;
    gh.eval(u, h, nullptr);
    double best = *std::max_element(h.begin(), h.end());
    {
        const auto ls = gh.least_squares_primitive(4 * opts.grid);
        gh.eval(ls, h, nullptr);
        const double m = *std::max_element(h.begin(), h.end());
        if (m < best) {
            best = m;
            u = ls;
        }
    }
    double step = 1e-3;
    for (int s = 0; s < opts.stages; ++s) {
        const double tau =
            opts.stages > 1 ? 1e-1 * std::pow(1e-3, double(s) / (opts.stages - 1)) : 1e-1;
        for (int it = 0; it < opts.iters_per_stage; ++it) {
            gh.eval(u, h, &w);
            const double f = softmax(h, tau, &weights);
            for (std::size_t n = 0; n < w.size(); ++n) w[n] *= weights[n];
            gh.adjoint(w, grad);
            double gsq = 0.0;
            for (double g : grad) gsq += g * g;
            if (gsq == 0.0) break;
            bool accepted = false;
            for (int t = 0; t < 30; ++t) {
                for (std::size_t n = 0; n < u.size(); ++n) trial[n] = u[n] - step * grad[n];
                gh.eval(trial, ht, nullptr);
                if (softmax(ht, tau, nullptr) <= f - 1e-4 * step * gsq) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
            u.swap(trial);
            best = std::min(best, *std::max_element(ht.begin(), ht.end()));
            step *= 1.5;
        }
    }
    return best;
}

double single_loops_bound(const MagneticTonelliData& data, const std::vector<LoopPath>& loops,
                          const Vec2& eta) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& l : loops) best = std::max(best, test_multicurve_bound(data, {l}, eta));
    return best;
}

CriticalEstimate make_estimate(double upper, double lower, std::string method) {
    CriticalEstimate est;
    est.upper = upper;
    est.lower = lower;
    est.value = upper;
    est.tolerance = std::max(0.0, upper - lower);
    est.method = std::move(method);
    est.converged = !(est.tolerance > 0.05 * std::abs(upper));
    return est;
}

}  // namespace

double compute_e0(const MagneticTonelliData& data, int grid) {
    if (data.potential.identically_zero) return 0.0;
    const auto g = numerics::chart_node_grid(data.surface, grid);
    std::vector<std::pair<double, Vec2>> scored;
    scored.reserve(g.nodes.size());
    for (const Vec2& q : g.nodes) scored.emplace_back(data.potential.at(q), q);
    const std::size_t keep = std::min<std::size_t>(8, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    double best = scored.front().first;
    auto v = [&](const Vec2& q) {
        data.surface.require_admissible(q);
        return data.potential.at(q);
    };
    for (std::size_t i = 0; i < keep; ++i) {
        const Vec2 x =
            numerics::pattern_search_maximize(v, scored[i].second, g.spacing.minCoeff(), 1e-8);
        best = std::max(best, v(x));
    }
    return best;
}

double test_multicurve_bound(const MagneticTonelliData& data, const std::vector<LoopPath>& mc,
                             const Vec2& eta) {
    if (mc.empty()) throw std::invalid_argument("empty test multicurve");
    std::vector<LoopStats> st;
    double kmin = -std::numeric_limits<double>::infinity();
    for (const auto& l : mc) {
        st.push_back(loop_stats(data, l, eta));
        kmin = std::max(kmin, st.back().vbar);
    }
    // Σ_i (Θ_i + L_i √(2(k − V̄_i))) is nondecreasing in k.
    auto total = [&](double k) {
        double sum = 0.0;
        for (const auto& s : st) sum += s.theta + s.length * std::sqrt(2.0 * std::max(0.0, k - s.vbar));
        return sum;
    };
    if (total(kmin) >= 0.0) return kmin;
    if (st.size() == 1) {
        const auto& s = st.front();
        return s.vbar + s.theta * s.theta / (2.0 * s.length * s.length);
    }
    double lo = kmin, hi = kmin + 1.0;
    while (total(hi) < 0.0) hi = kmin + 2.0 * (hi - kmin);
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) >= 0.0 ? hi : lo) = mid;
    }
    return hi;
}

CriticalEstimate compute_mane_c(const MagneticTonelliData& data, const ManeOptions& opts,
                                const Vec2& eta) {
    const double upper = grid_upper_bound(data, opts, eta);
    const double e0 = compute_e0(data);
    const double loops = single_loops_bound(data, single_test_loops(data.surface, opts.test_loops), eta);
    std::ostringstream m;
    m << "upper: least-squares primitive then soft-max descent on a " << opts.grid
      << "-grid, hard max; lower: max(e0, closed test loops)";
    return make_estimate(upper, std::max(e0, loops), m.str());
}

CriticalEstimate compute_c0(const MagneticTonelliData& data, const ManeOptions& opts) {
    if (data.surface.is_sphere()) {
        auto est = compute_mane_c(data, opts);
        est.method = "c0 = c on the sphere; " + est.method;
        return est;
    }
    const double sup = theta_sup_norm(data);
    Vec2 eta_best = Vec2::Zero();
    if (sup > 0.0) {
        ManeOptions coarse = opts;
        coarse.grid = std::min(opts.grid, 32);
        coarse.stages = std::max(4, opts.stages / 2);
        coarse.iters_per_stage = std::max(5, opts.iters_per_stage / 2);
        auto alpha = [&](const Vec2& eta) { return grid_upper_bound(data, coarse, eta); };
        const int n = 5;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Vec2 eta(-2 * sup + 4 * sup * i / (n - 1), -2 * sup + 4 * sup * j / (n - 1));
                const double v = alpha(eta);
                if (v < best) {
                    best = v;
                    eta_best = eta;
                }
            }
        const auto nm = numerics::nelder_mead(alpha, eta_best, sup / 2, 1e-6, 60);
        if (nm.value < best) eta_best = nm.x;
    }
    const double upper = grid_upper_bound(data, opts, eta_best);
    double lower = compute_e0(data);
    for (const auto& pair : boundary_test_pairs(data.surface, opts.test_loops))
        lower = std::max(lower, test_multicurve_bound(data, pair));
    std::ostringstream m;
    m << "upper: min over cohomology classes of the grid bound, eta = (" << eta_best(0) << ", "
      << eta_best(1) << "); lower: max(e0, null-homologous test pairs)";
    return make_estimate(upper, lower, m.str());
}

CriticalEstimate compute_cu(const MagneticTonelliData& data, const ManeOptions& opts) {
    auto est = data.surface.is_torus() ? compute_c0(data, opts) : compute_mane_c(data, opts);
    est.method = (data.surface.is_torus() ? "cu = c0 (abelian fundamental group); "
                                          : "cu = c (simply connected); ") +
                 est.method;
    return est;
}

EnergySpectrum compute_spectrum(const MagneticTonelliData& data, const ManeOptions& opts) {
    EnergySpectrum s;
    s.e0 = compute_e0(data);
    s.c = compute_mane_c(data, opts);
    if (data.surface.is_sphere()) {
        s.c0 = s.c;
        s.c0.method = "c0 = c on the sphere; " + s.c.method;
        s.cu = s.c;
        s.cu.method = "cu = c (simply connected); " + s.c.method;
    } else {
        s.c0 = compute_c0(data, opts);
        s.cu = s.c0;
        s.cu.method = "cu = c0 (abelian fundamental group); " + s.c0.method;
    }
    for (const auto& [name, est] :
         {std::pair<const char*, const CriticalEstimate*>{"c", &s.c}, {"c0", &s.c0}, {"cu", &s.cu}})
        if (!est->converged)
            s.warnings.push_back(std::string("NonConvergenceWarning: ") + name + " tolerance " +
                                 std::to_string(est->tolerance) + " exceeds 5% of the upper bound");
    return s;
}

double lambda_eval(const MagneticTonelliData& data, const Vec2& q) {
    data.surface.require_admissible(q);
    const double e0 = compute_e0(data);
    const double v = data.potential.at(q);
    if (v < e0 - 1e-6) {
        std::ostringstream os;
        os << "V(q) = " << v << " is below e0 = " << e0;
        throw NotAtMaxError(os.str());
    }
    const Mat2 a = data.surface.metric_inverse(q) * data.potential.hess(q);
    const auto ev = a.eigenvalues();
    double op = 0.0;
    for (int i = 0; i < 2; ++i) op = std::max(op, std::abs(ev(i)));
    return 2.0 * std::sqrt(op) - std::abs(two_form_density(data.surface, data.theta, q));
}

LambdaScan lambda_somewhere_negative(const MagneticTonelliData& data, int grid) {
    const double e0 = compute_e0(data);
    const auto g = numerics::chart_node_grid(data.surface, grid);
    LambdaScan out;
    bool any = false;
    for (const Vec2& q : g.nodes) {
        if (data.potential.at(q) < e0 - 1e-6) continue;
        const double lam = lambda_eval(data, q);
        if (!any || lam < out.value) {
            out.value = lam;
            out.witness = q;
            any = true;
        }
    }
    out.negative_found = any && out.value < -1e-9;
    return out;
}

ProbeResult small_loop_probe(const MagneticTonelliData& data, const Vec2& q, double a,
                             const std::vector<double>& radii) {
    if (!(a > 0.0)) throw std::invalid_argument("probe parameter a must be positive");
    if (radii.size() < 2) throw std::invalid_argument("probe needs at least two radii");
    const double e0 = compute_e0(data);
    if (data.potential.at(q) < e0 - 1e-6) throw NotAtMaxError("probe point is not on V = e0");
    ProbeResult res;
    const Mat2 ginv = data.surface.metric_inverse(q);
    {
        const auto ev = (ginv * data.potential.hess(q)).eigenvalues();
        for (int i = 0; i < 2; ++i) res.b = std::max(res.b, std::abs(ev(i)));
    }
    const double f = two_form_density(data.surface, data.theta, q);
    const double lead = 2.0 * std::sqrt(a + res.b);
    // Counterclockwise circles see +f, clockwise ones −f.
    if (lead + f < 0.0) {
        res.flipped = false;
        res.f = f;
    } else if (lead - f < 0.0) {
        res.flipped = true;
        res.f = -f;
    } else {
        std::ostringstream os;
        os << "2 sqrt(a+b) + f >= 0 for both orientations (2 sqrt(a+b) = " << lead << ", f = " << f
           << ")";
        throw SignGuardError(os.str());
    }
    res.predicted = lead + res.f;
    const Eigen::SelfAdjointEigenSolver<Mat2> es(data.surface.metric(q));
    const Mat2 g_isqrt = es.operatorInverseSqrt();
    const int n = 256;
    for (double r : radii) {
        LoopPath l;
        l.period = 2.0 * kPi / std::sqrt(a + res.b);
        for (int k = 0; k < n; ++k) {
            const double t = 2.0 * kPi * k / n * (res.flipped ? -1.0 : 1.0);
            l.samples.push_back(q + r * g_isqrt * Vec2(std::cos(t), std::sin(t)));
        }
        const double s = action_free_period(data, l, e0 + 0.5 * a * r * r);
        res.radii.push_back(r);
        res.normalized_actions.push_back(s / (kPi * r * r));
    }
    const auto [c0, c1] = numerics::linear_fit(res.radii, res.normalized_actions);
    res.intercept = c0;
    res.slope = c1;
    return res;
}

nlohmann::json spectrum_to_json(const EnergySpectrum& s) {
    auto est = [](const CriticalEstimate& e) {
        return nlohmann::json{{"value", e.value},         {"lower", e.lower},
                              {"upper", e.upper},         {"tolerance", e.tolerance},
                              {"method", e.method},       {"converged", e.converged}};
    };
    nlohmann::json j{{"e0", s.e0}, {"c", est(s.c)}, {"c0", est(s.c0)}, {"cu", est(s.cu)}};
    j["cw_estimate"] = s.cw_estimate ? nlohmann::json(*s.cw_estimate) : nlohmann::json(nullptr);
    j["warnings"] = s.warnings;
    return j;
}

}  // namespace magwaist
