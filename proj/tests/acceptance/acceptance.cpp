// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "magwaist/action.hpp"
#include "magwaist/cli.hpp"
#include "magwaist/critical.hpp"
#include "magwaist/errors.hpp"
#include "magwaist/homology.hpp"
#include "magwaist/loops.hpp"
#include "magwaist/presets.hpp"
#include "magwaist/search.hpp"

using namespace magwaist;
using json = nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

json cli(const std::vector<std::string>& args, int expected_status = kExitOk) {
    std::ostringstream out, err;
    std::vector<std::string> full = args;
    full.push_back("--json-only");
    const int status = run_cli(full, out, err);
    json j = json::parse(out.str());
    if (status != expected_status)
        throw std::runtime_error("exit status " + std::to_string(status) + ": " + j.dump());
    return j;
}

double closed_form_pair(double e) { return 2.0 * (std::sqrt(2.0 * e) - 1.0); }

// ---------------------------------------------------------------------------

void golden_critical_values(Outcome& o) {
    const json r = cli({"spectrum", "--preset", "torus-example"})["result"];
    const double e0 = r["e0"];
    o.require(e0 == 0.0, "e0 == 0");
    o.detail << "e0=" << e0;
    for (const char* k : {"c", "c0", "cu"}) {
        const double v = r[k]["value"];
        o.require(v >= 0.49 && v <= 0.51, std::string(k) + " in [0.49, 0.51]");
        o.detail << " " << k << "=" << v;
    }
}

// Brute force over latitude pairs (+x at y1, -x at y2) at their optimal speed.
double latitude_pair_oracle(const MagneticTonelliData& d, double e) {
    const int grid = 64;
    double best = 1e300;
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            if (i == j) continue;
            const auto mc = make_multicurve(
                d.surface, {latitude_loop(d.surface, double(i) / grid, +1, 64, std::sqrt(2 * e)),
                            latitude_loop(d.surface, double(j) / grid, -1, 64, std::sqrt(2 * e))});
            best = std::min(best, action_free_period(d, mc, e));
        }
    }
    return best;
}

void minimal_boundary_below_c0(Outcome& o) {
    const auto d = make_preset("torus-example");
    const json r = cli({"minimal-boundary", "--preset", "torus-example", "--energy", "0.3", "--seeds", "16"})["result"];
    const double a = r["action"];
    const double oracle = latitude_pair_oracle(d, 0.3);
    const double exact = closed_form_pair(0.3);
    o.require(std::abs(oracle - exact) < 1e-9, "oracle matches the closed form");
    o.require(r["components"].size() == 2, "two components");
    o.require(r["flags"]["topological"].get<bool>(), "topological boundary");
    o.require(std::abs(a - exact) < 1e-2, "action within 1e-2 of -0.450807");
    o.require(a < 0.0, "negative action");
    o.detail << "action=" << a << " oracle=" << oracle << " components=" << r["components"].size();
}

void zero_action_at_c0(Outcome& o) {
    const auto d = make_preset("torus-example");
    SearchOptions opts;
    const auto r = minimal_boundary_search(d, 0.5, opts);
    const auto pair = make_multicurve(d.surface, {latitude_loop(d.surface, 0.0, +1, 128, 1.0),
                                                  latitude_loop(d.surface, 0.5, -1, 128, 1.0)});
    const double h = hausdorff_distance(d.surface, r.best, pair);
    o.require(std::abs(r.action) <= 1e-3, "|action| <= 1e-3");
    o.require(h < 1e-2, "Hausdorff to the y in {0, 1/2} pair < 1e-2");
    o.detail << "action=" << r.action << " hausdorff=" << h;
}

void graph_theorem(Outcome& o) {
    const json r = cli({"graph-check", "--preset", "torus-example", "--energy", "0.3", "--runs", "10"})["result"];
    const int violations = r["verdicts"]["VIOLATION"];
    o.require(r["runs"].size() == 10, "10 runs");
    o.require(violations == 0, "zero VIOLATION verdicts");
    o.detail << "pairs=" << r["pairs"] << " identical=" << r["verdicts"]["identical"]
             << " disjoint=" << r["verdicts"]["disjoint"] << " violations=" << violations;
}

void waists_above_c0(Outcome& o) {
    const json r = cli({"continue-waists", "--preset", "torus-example", "--energy", "0.5", "--energy-grid",
                        "0.52,0.6,0.72"})["result"];
    const double expected = std::sqrt(1.2) - 1.0;
    for (const auto& st : r["steps"]) {
        o.require(st["success"].get<bool>(), "success at e=" + st["energy"].dump());
        if (st["energy"].get<double>() == 0.6) {
            for (const auto& a : st["actions"]) {
                o.require(std::abs(a.get<double>() - expected) < 1e-3, "per-circle action at 0.6");
                o.detail << "S(0.6)=" << a.get<double>() << " ";
            }
        }
    }
    o.require(r["steps"].size() == 3, "three levels");
    const bool has_cw = r["cw_estimate"].is_number();
    o.require(has_cw && r["cw_estimate"].get<double>() > 0.5, "cw estimate > 0.5");
    o.detail << "cw=" << r["cw_estimate"];
}

void minimax_multiplicity(Outcome& o) {
    const json r = cli({"minimax", "--preset", "sphere-magnetic", "--energy", "0.18", "--m-max", "3"})["result"];
    std::vector<double> s;
    for (const auto& lv : r["levels"]) s.push_back(lv["s_m"]);
    o.require(s.size() == 3, "three levels");
    if (s.size() == 3) {
        o.require(s[0] < s[1] && s[1] < s[2], "s1 < s2 < s3");
        o.require(s[1] > 2 * s[0], "s2 > 2 s1");
        o.require(s[2] > 3 * s[0], "s3 > 3 s1");
        o.detail << "s1=" << s[0] << " s2=" << s[1] << " s3=" << s[2];
    }
    const int distinct = r["distinct_orbits"];
    o.require(distinct >= 3, "at least 3 distinct orbits");
    o.detail << " distinct=" << distinct;
}

void randers_census(Outcome& o) {
    const auto sm = make_preset("sphere-magnetic");
    const auto lem = lemma52_criterion(sm);
    const auto c = compute_mane_c(sm);
    const auto census = randers_geodesic_census(sm, 0.6);
    const auto waist = make_multicurve(sm.surface, {census.waist});
    const bool simple = self_intersections(sm.surface, waist, 1e-4).empty();
    o.require(lem.satisfied && std::abs(lem.r0 - 0.5) <= 1e-3, "r0 = 0.5 +- 1e-3");
    o.require(std::abs(c.value - 0.125) <= 5e-3, "c = 0.125 +- 0.005");
    o.require(simple, "simple waist");
    o.require(std::abs(census.waist_F_length - 0.628319) <= 1e-3, "F-length 0.628319 +- 1e-3");
    o.detail << "r0=" << lem.r0 << " c=" << c.value << " F-length=" << census.waist_F_length
             << " geodesics=" << census.geodesics.size();
}

void lambda_and_probe(Outcome& o) {
    const auto d = make_preset("torus-example");
    const Vec2 q(0.0, 0.25);
    const double lam = lambda_eval(d, q);
    const auto p = small_loop_probe(d, q, 1.0);
    const double target = 2.0 - 2.0 * kPi;
    o.require(std::abs(lam + 2 * kPi) <= 1e-6, "lambda = -2 pi");
    o.require(std::abs(p.intercept - target) <= 0.1 * std::abs(target), "intercept within 10% of 2 - 2 pi");
    o.require(p.intercept < 0.0, "negative intercept certifies e0 < cu");
    o.detail << "lambda=" << lam << " intercept=" << p.intercept << " target=" << target;
}

// ---------------------------------------------------------------------------
// Random null-homologous multicurves

LoopPath line_loop(const Vec2& base, const Eigen::Vector2i& cls, int n) {
    LoopPath l;
    l.winding = cls;
    for (int k = 0; k < n; ++k) l.samples.push_back(base + (double(k) / n) * cls.cast<double>());
    return l;
}

bool far_from_all(const std::vector<std::pair<Vec2, double>>& circles, const Vec2& c, double r,
                  const SurfaceModel& s) {
    for (const auto& [c2, r2] : circles)
        if (s.periodic_delta(c, c2).norm() < r + r2 + 0.04) return false;
    return true;
}

std::vector<LoopPath> random_circles(std::mt19937_64& rng, const SurfaceModel& s, int count, double y_lo,
                                     double y_hi) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::pair<Vec2, double>> placed;
    std::vector<LoopPath> out;
    for (int tries = 0; tries < 200 && static_cast<int>(out.size()) < count; ++tries) {
        const double r = 0.04 + 0.08 * u(rng);
        if (y_hi - y_lo < 2 * r + 0.04) continue;
        const Vec2 c(u(rng), y_lo + r + 0.02 + (y_hi - y_lo - 2 * r - 0.04) * u(rng));
        if (!far_from_all(placed, c, r, s)) continue;
        placed.emplace_back(c, r);
        out.push_back(chart_circle(c, r, 64, u(rng) < 0.5, 1.0));
    }
    return out;
}

std::vector<LoopPath> random_null_homologous(std::mt19937_64& rng, const SurfaceModel& torus,
                                             const SurfaceModel& sphere, bool& on_sphere) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int kind = static_cast<int>(4 * u(rng));
    on_sphere = kind == 3;
    if (kind == 0) return random_circles(rng, torus, 1 + static_cast<int>(4 * u(rng)), 0.0, 1.0);
    if (kind == 1) {
        // Parallel lines of one primitive class with zero net class.
        static const std::vector<Eigen::Vector2i> classes{{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}, {1, 2}};
        const Eigen::Vector2i cls = classes[static_cast<std::size_t>(classes.size() * u(rng)) % classes.size()];
        const Vec2 normal = Vec2(-cls(1), cls(0)).normalized();
        const double spacing = 1.0 / cls.cast<double>().norm();
        const int count = u(rng) < 0.5 ? 2 : 4;
        std::vector<int> dirs(static_cast<std::size_t>(count / 2), 1);
        dirs.resize(static_cast<std::size_t>(count), -1);
        std::shuffle(dirs.begin(), dirs.end(), rng);
        const Vec2 origin(u(rng), u(rng));
        std::vector<LoopPath> out;
        for (int i = 0; i < count; ++i) {
            const double offset = spacing * (i + 0.3 * (u(rng) - 0.5)) / count;
            const auto dir = dirs[static_cast<std::size_t>(i)];
            out.push_back(line_loop(origin + offset * normal, dir * cls, 128));
        }
        return out;
    }
    if (kind == 2) {
        // Latitude pair with circles in the strips between them.
        const double y1 = 0.1 + 0.2 * u(rng), y2 = 0.6 + 0.2 * u(rng);
        std::vector<LoopPath> out{latitude_loop(torus, y1, u(rng) < 0.5 ? 1 : -1, 64, 1.0)};
        out.push_back(latitude_loop(torus, y2, -out[0].winding(0), 64, 1.0));
        auto a = random_circles(rng, torus, static_cast<int>(3 * u(rng)), y1, y2);
        out.insert(out.end(), a.begin(), a.end());
        return out;
    }
    const int count = 1 + static_cast<int>(3 * u(rng));
    std::vector<LoopPath> out;
    for (int i = 0; i < count; ++i) {
        const double z = -0.75 + 1.5 * (i + 0.5 + 0.3 * (u(rng) - 0.5)) / count;
        out.push_back(latitude_loop(sphere, z, u(rng) < 0.5 ? 1 : -1, 64, 1.0));
    }
    return out;
}

void homology_engine(Outcome& o) {
    const auto torus = SurfaceModel::flat_torus();
    const auto sphere = SurfaceModel::round_sphere();
    std::mt19937_64 rng(2024);
    int certified = 0, pieces_total = 0, irreducible = 0;
    for (int trial = 0; trial < 200; ++trial) {
        bool on_sphere = false;
        const auto comps = random_null_homologous(rng, torus, sphere, on_sphere);
        const SurfaceModel& s = on_sphere ? sphere : torus;
        const int genus = on_sphere ? 0 : 1;
        const auto mc = make_multicurve(s, comps);
        auto cert = solve_bounding_chain(s, mc);
        if (!cert || !verify_boundary(*cert)) {
            o.require(false, "certificate for trial " + std::to_string(trial));
            continue;
        }
        ++certified;
        const auto pieces = decompose_topological_boundaries(*cert);
        std::size_t covered = 0;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            covered += pieces[i].components.size();
            const auto pc = solve_bounding_chain(s, pieces[i]);
            o.require(pc && pc->topological() && verify_boundary(*pc),
                      "piece certificate in trial " + std::to_string(trial));
            if (!cert->piece_irreducible[i]) continue;
            ++irreducible;
            const auto rep = check_irreducible(s, pieces[i]);
            const int m = static_cast<int>(pieces[i].components.size());
            o.require(m <= genus + 1, "irreducible piece size in trial " + std::to_string(trial));
            if (m > 1) o.require(rep.classes_primitive_distinct, "primitive distinct classes");
        }
        pieces_total += static_cast<int>(pieces.size());
        o.require(covered == comps.size(), "pieces cover every component");
    }

    const auto four = make_multicurve(torus, {latitude_loop(torus, 0.0, 1, 64, 1.0),
                                              latitude_loop(torus, 0.25, -1, 64, 1.0),
                                              latitude_loop(torus, 0.5, 1, 64, 1.0),
                                              latitude_loop(torus, 0.75, -1, 64, 1.0)});
    auto fc = *solve_bounding_chain(torus, four);
    const auto fp = decompose_topological_boundaries(fc);
    o.require(fp.size() == 2, "four-circle fixture splits into two boundaries");
    o.detail << "certified=" << certified << "/200 pieces=" << pieces_total << " irreducible=" << irreducible
             << " four-circle pieces=" << fp.size();
}

// ---------------------------------------------------------------------------
// Numerical hygiene

LoopPath random_loop(const SurfaceModel& s, std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec2 c(u(rng), 0.5 * u(rng));
    if (s.is_sphere()) c = Vec2(kPi * u(rng), 0.5 * u(rng));
    const double r = 0.1 + 0.05 * u(rng);
    const Vec2 a2(0.03 * u(rng), 0.03 * u(rng)), b3(0.03 * u(rng), 0.03 * u(rng));
    LoopPath l;
    l.period = 0.5 + 0.25 * (u(rng) + 1.0);
    for (int k = 0; k < n; ++k) {
        const double t = 2.0 * kPi * k / n;
        l.samples.push_back(c + r * Vec2(std::cos(t), 0.7 * std::sin(t)) + a2 * std::cos(2 * t) +
                            b3 * std::sin(3 * t));
    }
    return l;
}

double max_rel_fd_error(const MagneticTonelliData& d, const LoopPath& l, double e) {
    const auto ev = action_gradient(d, l, e);
    const double h = 1e-6;
    double err = 0.0, scale = 0.0;
    for (int k = 0; k < l.size(); ++k) {
        for (int c = 0; c < 2; ++c) {
            LoopPath lp = l, lm = l;
            lp.samples[static_cast<std::size_t>(k)](c) += h;
            lm.samples[static_cast<std::size_t>(k)](c) -= h;
            const double fd = (action_free_period(d, lp, e) - action_free_period(d, lm, e)) / (2 * h);
            err = std::max(err, std::abs(fd - ev.gradient_samples[static_cast<std::size_t>(k)](c)));
            scale = std::max(scale, std::abs(ev.gradient_samples[static_cast<std::size_t>(k)](c)));
        }
    }
    LoopPath lp = l, lm = l;
    lp.period += h;
    lm.period -= h;
    const double fdp = (action_free_period(d, lp, e) - action_free_period(d, lm, e)) / (2 * h);
    err = std::max(err, std::abs(fdp - ev.gradient_period));
    scale = std::max(scale, std::abs(ev.gradient_period));
    return err / scale;
}

void numerical_hygiene(Outcome& o) {
    std::mt19937_64 rng(77);
    double worst_grad = 0.0, worst_affine = 0.0;
    for (const auto& name : preset_names()) {
        const auto d = make_preset(name);
        for (int i = 0; i < 100; ++i) {
            const auto l = random_loop(d.surface, rng, 32);
            worst_grad = std::max(worst_grad, max_rel_fd_error(d, l, 0.4));
            const double s1 = action_free_period(d, l, 0.7), s2 = action_free_period(d, l, 0.2);
            const double rel = std::abs((s1 - s2) - 0.5 * l.period) / std::max(1.0, std::abs(s1));
            worst_affine = std::max(worst_affine, rel);
        }
    }
    o.require(worst_grad < 1e-6, "gradient vs finite differences < 1e-6");
    o.require(worst_affine <= 1e-12, "affine-in-e law to 1e-12");

    // Golden orbits, one period each at h = 1e-3.
    struct Golden {
        const char* preset;
        Vec2 q, v;
        double period;
    };
    const std::vector<Golden> golden{
        {"torus-example", Vec2(0, 0), Vec2(1, 0), 1.0},
        {"flat-torus", Vec2(0.2, 0.3), Vec2(1, 0), 1.0},
        {"sphere-magnetic", Vec2(0, 0), Vec2(-0.6, 0), 2 * kPi / 0.6},
        {"round-sphere-free", Vec2(0, 0), Vec2(1, 0), 2 * kPi},
        {"pendulum-torus", Vec2(0, 0), Vec2(1, 0), 1.0},
    };
    double worst_drift = 0.0;
    for (const auto& g : golden) {
        const auto f = el_flow(make_preset(g.preset), g.q, g.v, g.period, 1e-3);
        worst_drift = std::max(worst_drift, f.energy_drift);
    }
    o.require(worst_drift < 1e-8, "energy drift < 1e-8");

    // The free round sphere has no waists: descents collapse to the period floor.
    const auto rs = make_preset("round-sphere-free");
    int floor_hits = 0;
    const std::vector<LoopPath> starts{chart_circle(Vec2(1.0, 0.2), 0.3, 64, true, 1.0),
                                       chart_circle(Vec2(-2.0, -0.3), 0.2, 64, false, 2.0),
                                       latitude_loop(rs.surface, 0.4, 1, 64, 1.0),
                                       latitude_loop(rs.surface, -0.6, -1, 64, 0.7),
                                       latitude_loop(rs.surface, 0.05, 1, 64, 1.3)};
    for (const auto& l : starts) {
        const auto r = descend_across_poles(rs, l, 0.5);
        if (r.hit_period_floor && !r.converged) ++floor_hits;
    }
    o.require(floor_hits == static_cast<int>(starts.size()), "round-sphere-free reports hit_period_floor");
    o.detail << "grad=" << worst_grad << " affine=" << worst_affine << " drift=" << worst_drift
             << " floor_hits=" << floor_hits << "/" << starts.size();
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"golden critical values", golden_critical_values},
        {"minimal boundary below c0", minimal_boundary_below_c0},
        {"zero action at the critical level", zero_action_at_c0},
        {"graph theorem", graph_theorem},
        {"waists above c0", waists_above_c0},
        {"minimax multiplicity", minimax_multiplicity},
        {"Randers census", randers_census},
        {"lambda criterion and probe", lambda_and_probe},
        {"homology engine", homology_engine},
        {"numerical hygiene", numerical_hygiene},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "[exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        char time_buf[32];
        std::snprintf(time_buf, sizeof(time_buf), "%.1fs", secs);
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
                  << o.detail.str() << " (" << time_buf << ")" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
