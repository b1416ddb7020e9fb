#include "magwaist/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "magwaist/action.hpp"
#include "magwaist/critical.hpp"
#include "magwaist/errors.hpp"
#include "magwaist/homology.hpp"
#include "magwaist/loops.hpp"
#include "magwaist/search.hpp"

namespace magwaist {

namespace {

using json = nlohmann::json;

std::string energy_tag(double e) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", e);
    return buf;
}

void add_curves(Artifacts& art, const SurfaceModel& s, const std::string& stem,
                const std::vector<LoopPath>& loops) {
    std::ostringstream csv;
    write_loops_csv(csv, s, loops);
    art.files.emplace_back("curves/" + stem + ".csv", csv.str());
    art.files.emplace_back("curves/" + stem + ".svg", render_svg(s, loops));
}

void add_ambient_curve(Artifacts& art, const std::string& stem, const AmbientLoop& l) {
    std::ostringstream csv;
    csv << "t,x,y,z\n" << std::setprecision(17);
    const std::size_t n = l.samples.size();
    for (std::size_t k = 0; k <= n; ++k) {
        const Vec3& x = l.samples[k % n];
        csv << l.period * static_cast<double>(k) / static_cast<double>(n) << "," << x(0) << "," << x(1)
            << "," << x(2) << "\n";
    }
    art.files.emplace_back("curves/" + stem + ".csv", csv.str());
}

json ambient_summary(const AmbientLoop& l, const std::string& file) {
    return {{"period", l.period}, {"samples", l.samples.size()}, {"file", file}};
}

double require_energy(const RunConfig& cfg) {
    if (!cfg.energy) throw ConfigError("this subcommand needs --energy");
    return *cfg.energy;
}

SearchOptions search_options(const RunConfig& cfg) {
    SearchOptions o;
    o.seeds = cfg.seeds;
    o.samples = cfg.samples;
    o.grad_tol = cfg.grad_tol;
    o.rng_seed = cfg.rng_seed;
    o.homology_grid = cfg.homology_grid;
    return o;
}

ManeOptions mane_options(const RunConfig& cfg) {
    ManeOptions o;
    o.grid = cfg.grid;
    return o;
}

json search_tolerances(const RunConfig& cfg) {
    return {{"grad_tol", cfg.grad_tol},
            {"homology_grid", cfg.homology_grid},
            {"mane_grid", cfg.grid},
            {"samples", cfg.samples}};
}

const json kSearchMethods = {
    {"action", "midpoint-rule free-period action, L-BFGS with H1 preconditioner"},
    {"boundary", "bounding chain on the homology raster, decomposed into topological boundaries"},
    {"c0", "Hamilton-Jacobi inf-sup over exact-plus-harmonic classes with test-loop lower bound"},
    {"seeds", "latitude pairs, blobs and random Fourier loops, rearranged and chamfered at crossings"}};

std::vector<LoopPath> components_of(const Multicurve& mc) { return mc.components; }

// ---------------------------------------------------------------------------
// Subcommands

json cmd_spectrum(const MagneticTonelliData& data, const RunConfig& cfg, Artifacts&) {
    const auto spec = compute_spectrum(data, mane_options(cfg));
    return {{"result", spectrum_to_json(spec)},
            {"tolerances", {{"mane_grid", cfg.grid}}},
            {"methods",
             {{"e0", "max of V on a 512 grid"},
              {"c", "Hamilton-Jacobi inf-sup by annealed soft-max, bracketed by test loops"},
              {"c0", "min of the inf-sup over harmonic shifts"},
              {"cu", "c0 on the torus, c on the sphere"}}}};
}

json cmd_minimal_boundary(const MagneticTonelliData& data, const RunConfig& cfg, Artifacts& art) {
    std::vector<double> energies;
    if (cfg.energy_grid) energies = *cfg.energy_grid;
    else energies.push_back(require_energy(cfg));
    SearchOptions opts = search_options(cfg);
    opts.c0 = compute_c0(data, mane_options(cfg));

    json reports = json::array();
    for (double e : energies) {
        const auto r = minimal_boundary_search(data, e, opts);
        json j = search_report_to_json(data, r);
        const std::string stem = "boundary_e" + energy_tag(e);
        add_curves(art, data.surface, stem, components_of(r.best));
        j["curves"] = stem;
        reports.push_back(std::move(j));
    }
    json result = energies.size() == 1 && !cfg.energy_grid ? reports[0] : json{{"reports", reports}};
    return {{"result", result}, {"tolerances", search_tolerances(cfg)}, {"methods", kSearchMethods}};
}

json cmd_graph_check(const MagneticTonelliData& data, const RunConfig& cfg, Artifacts& art) {
    const double e = require_energy(cfg);
    SearchOptions opts = search_options(cfg);
    opts.c0 = compute_c0(data, mane_options(cfg));
    std::vector<SearchReport> reports;
    json runs = json::array();
    for (int i = 0; i < cfg.runs; ++i) {
        opts.rng_seed = cfg.rng_seed + static_cast<std::uint64_t>(i);
        reports.push_back(minimal_boundary_search(data, e, opts));
        const auto& r = reports.back();
        runs.push_back({{"rng_seed", opts.rng_seed},
                        {"action", r.action},
                        {"components", r.best.components.size()},
                        {"best_seed", r.best_seed}});
        add_curves(art, data.surface, "run" + std::to_string(i), components_of(r.best));
    }
    const double threshold = 1e-3;
    const auto verdicts = graph_theorem_check(data, reports, threshold);
    std::map<std::string, int> counts{{"identical", 0}, {"disjoint", 0}, {"VIOLATION", 0}};
    json violations = json::array();
    for (const auto& v : verdicts) {
        ++counts[to_string(v.kind)];
        if (v.kind != PairKind::Violation) continue;
        violations.push_back({{"a", {v.report_a, v.component_a}},
                              {"b", {v.report_b, v.component_b}},
                              {"hausdorff", v.hausdorff},
                              {"aligned", v.aligned},
                              {"distance", v.distance},
                              {"witness_a", {v.witness_a(0), v.witness_a(1)}},
                              {"witness_b", {v.witness_b(0), v.witness_b(1)}}});
    }
    json result{{"energy", e}, {"runs", runs}, {"verdicts", counts}, {"violations", violations},
                {"pairs", verdicts.size()}, {"sample_set", "union of found components (G_e sample)"}};
    json tol = search_tolerances(cfg);
    tol["pair_threshold"] = threshold;
    json methods = kSearchMethods;
    methods["verdict"] =
        "IDENTICAL when time-shift-aligned distance is below threshold, DISJOINT when supports are "
        "apart, VIOLATION otherwise";
    return {{"result", result}, {"tolerances", tol}, {"methods", methods}};
}

json cmd_continue_waists(const MagneticTonelliData& data, const RunConfig& cfg, Artifacts& art) {
    if (!cfg.energy_grid) throw ConfigError("continue-waists needs --energy-grid for the levels above c0");
    SearchOptions opts = search_options(cfg);
    opts.c0 = compute_c0(data, mane_options(cfg));
    const double level = cfg.energy ? *cfg.energy : opts.c0->value;
    const auto base = minimal_boundary_search(data, level, opts);
    const auto cont = waist_continuation_above_c0(data, base, *cfg.energy_grid, cfg.homology_grid);
    json steps = json::array();
    for (const auto& st : cont.steps) {
        json j{{"energy", st.energy},
               {"success", st.success},
               {"actions", st.actions},
               {"center_distances", st.center_distances},
               {"topological", st.topological}};
        if (st.success) {
            const std::string stem = "waists_e" + energy_tag(st.energy);
            add_curves(art, data.surface, stem, components_of(st.curves));
            j["curves"] = stem;
        }
        steps.push_back(std::move(j));
    }
    json result{{"base_energy", level},
                {"base_action", base.action},
                {"steps", steps},
                {"cw_estimate", cont.cw_estimate ? json(*cont.cw_estimate) : json(nullptr)}};
    json tol = search_tolerances(cfg);
    tol["tube_radius"] = kTubeRadius;
    tol["tube_interior"] = kTubeInterior;
    json methods = kSearchMethods;
    methods["continuation"] = "tube-constrained descent from each boundary component, stepping up the grid";
    methods["cw_estimate"] = "largest grid level where every component stays interior to its tube";
    return {{"result", result}, {"tolerances", tol}, {"methods", methods}};
}

LoopPath minimax_waist(const MagneticTonelliData& data, const RunConfig& cfg, double e, json& note) {
    const SurfaceModel& s = data.surface;
    if (!cfg.input.empty()) {
        std::ifstream in(cfg.input);
        if (!in) throw ConfigError("cannot open input '" + cfg.input + "'");
        const auto loops = read_loops_csv(in, s);
        if (loops.empty()) throw ConfigError("input '" + cfg.input + "' has no curves");
        note = "first curve of " + cfg.input;
        return loops.front();
    }
    DescentOptions dopt;
    dopt.grad_tol = cfg.grad_tol;
    std::optional<DescentResult> best;
    bool floor_hit = false;
    for (int dir : {-1, +1}) {
        const auto r = descend_to_waist(data, latitude_loop(s, 0.0, dir, cfg.samples, std::sqrt(2.0 * e)), e,
                                        dopt);
        floor_hit = floor_hit || r.hit_period_floor;
        if (!r.converged || r.hit_period_floor) continue;
        if (!best || r.value < best->value) best = r;
    }
    if (!best) {
        throw NoWaistFound(floor_hit ? "equator descents hit the period floor (hit_period_floor)"
                                     : "equator descents did not converge");
    }
    try {
        check_local_minimum(data, best->loop, e, cfg.rng_seed);
    } catch (const NotAWaistError& ex) {
        throw NoWaistFound(std::string("equator descent ends at a saddle: ") + ex.what());
    }
    note = "descent from the equator in both directions, lower action kept";
    return best->loop;
}

json cmd_minimax(const MagneticTonelliData& data, const RunConfig& cfg, Artifacts& art) {
    const double e = require_energy(cfg);
    json note;
    const LoopPath waist = minimax_waist(data, cfg, e, note);
    MinimaxOptions mo;
    mo.rng_seed = cfg.rng_seed;
    const auto res = minimax_orbits(data, e, waist, cfg.m_max, mo);
    add_curves(art, data.surface, "waist", {waist});
    json levels = json::array();
    for (const auto& lv : res.levels) {
        const std::string stem = "critical_m" + std::to_string(lv.m);
        add_ambient_curve(art, stem, lv.critical_loop);
        levels.push_back({{"m", lv.m},
                          {"s_m", lv.s_m},
                          {"critical_gradient", lv.critical_gradient},
                          {"critical_loop", ambient_summary(lv.critical_loop, "curves/" + stem + ".csv")}});
    }
    json result{{"energy", e},
                {"waist_action", res.waist_action},
                {"waist_source", note},
                {"levels", levels},
                {"distinct_orbits", res.distinct_orbits}};
    return {{"result", result},
            {"tolerances",
             {{"nodes", mo.nodes}, {"sweeps", mo.sweeps}, {"samples_per_wind", mo.samples_per_wind},
              {"distinct_hausdorff", 1e-2}}},
            {"methods",
             {{"waist", "checked against 20 random perturbations before the minimax"},
              {"s_m", "max-node string over paths from the m-fold waist to the reversed m-fold waist in R3"},
              {"critical_loop", "max node of the relaxed string with its tangential gradient norm"}}}};
}

json cmd_probe_lambda(const MagneticTonelliData& data, const RunConfig& cfg, Artifacts&) {
    const auto scan = lambda_somewhere_negative(data, 2 * cfg.grid);
    const Vec2 q = cfg.point ? *cfg.point : scan.witness;
    const double lam = lambda_eval(data, q);
    json result{{"scan",
                 {{"negative_found", scan.negative_found},
                  {"witness", {scan.witness(0), scan.witness(1)}},
                  {"value", scan.value}}},
                {"point", {q(0), q(1)}},
                {"lambda", lam}};
    if (cfg.point || scan.negative_found) {
        const auto p = small_loop_probe(data, q, cfg.a);
        result["probe"] = {{"a", cfg.a},
                           {"intercept", p.intercept},
                           {"slope", p.slope},
                           {"predicted", p.predicted},
                           {"flipped", p.flipped},
                           {"b", p.b},
                           {"f", p.f},
                           {"radii", p.radii},
                           {"normalized_actions", p.normalized_actions},
                           {"certifies_e0_below_cu", p.intercept < 0.0}};
    }
    return {{"result", result},
            {"tolerances", {{"scan_grid", 2 * cfg.grid}}},
            {"methods",
             {{"lambda", "2|Hess V|^(1/2) - |f| with f the magnetic density"},
              {"probe", "small circles at energy e0 + a r^2 / 2, intercept of S/(pi r^2) by linear fit in r"}}}};
}

json cmd_randers_census(const MagneticTonelliData& data, const RunConfig& cfg, Artifacts& art) {
    const auto lem = lemma52_criterion(data);
    MinimaxOptions mo;
    mo.rng_seed = cfg.rng_seed;
    const auto c = randers_geodesic_census(data, cfg.r, mo);
    add_curves(art, data.surface, "randers_waist", {c.waist});
    json geos = json::array();
    for (std::size_t i = 0; i < c.geodesics.size(); ++i) {
        const std::string stem = "geodesic" + std::to_string(i);
        add_ambient_curve(art, stem, c.geodesics[i]);
        geos.push_back(ambient_summary(c.geodesics[i], "curves/" + stem + ".csv"));
    }
    json levels = json::array();
    for (const auto& lv : c.minimax.levels)
        levels.push_back({{"m", lv.m}, {"s_m", lv.s_m}, {"critical_gradient", lv.critical_gradient}});
    json result{{"r", c.r},
                {"r0", lem.r0},
                {"criterion_satisfied", lem.satisfied},
                {"theta_sup", lem.theta_sup},
                {"n_set_components", lem.n_components},
                {"waist_action", c.waist_action},
                {"waist_F_length", c.waist_F_length},
                {"waist_unit_F_length", c.waist_unit_F_length},
                {"minimax_levels", levels},
                {"geodesics", geos}};
    return {{"result", result},
            {"tolerances", {{"criterion_grid", 256}, {"samples_per_wind", mo.samples_per_wind}}},
            {"methods",
             {{"r0", "sup |theta| from the orbit criterion on the maximum set of |theta|"},
              {"geodesics", "waist and minimax critical loops of the magnetic system at energy r^2/2"},
              {"F_length", "integral of r|v| + theta(v), equal to the action"}}}};
}

json cmd_decompose(const MagneticTonelliData& data, const RunConfig& cfg, Artifacts& art) {
    if (cfg.input.empty()) throw ConfigError("decompose needs --input");
    const SurfaceModel& s = data.surface;
    std::ifstream in(cfg.input);
    if (!in) throw ConfigError("cannot open input '" + cfg.input + "'");
    const auto loops = read_loops_csv(in, s);
    if (loops.empty()) throw ConfigError("input '" + cfg.input + "' has no curves");
    const Multicurve mc = make_multicurve(s, loops);
    auto cert = solve_bounding_chain(s, mc, cfg.homology_grid);
    if (!cert) throw NotABoundaryError("input multicurve is not null-homologous");
    const bool verified = verify_boundary(*cert);
    const auto pieces = decompose_topological_boundaries(*cert);
    json pj = json::array();
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const auto ir = check_irreducible(s, pieces[i], cfg.homology_grid);
        json classes = json::array();
        for (const auto& v : ir.component_classes) classes.push_back(std::vector<int>(v.data(), v.data() + v.size()));
        pj.push_back({{"components", cert->decomposition[i]},
                      {"irreducible", ir.irreducible},
                      {"component_bound", ir.bound_ok},
                      {"classes_primitive_distinct", ir.classes_primitive_distinct},
                      {"classes", classes}});
        add_curves(art, s, "piece" + std::to_string(i), components_of(pieces[i]));
    }
    json result{{"components", loops.size()},
                {"verified", verified},
                {"topological", cert->topological()},
                {"certificate", certificate_to_json(*cert)},
                {"pieces", pj}};
    return {{"result", result},
            {"tolerances", {{"homology_grid", cfg.homology_grid}}},
            {"methods",
             {{"certificate", "integer chain on raster faces with exact discrete boundary check"},
              {"pieces", "left/right region iteration from the lowest remaining component"}}}};
}

using Handler = json (*)(const MagneticTonelliData&, const RunConfig&, Artifacts&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
    static const std::vector<std::pair<std::string, Handler>> h{
        {"spectrum", cmd_spectrum},           {"minimal-boundary", cmd_minimal_boundary},
        {"graph-check", cmd_graph_check},     {"continue-waists", cmd_continue_waists},
        {"minimax", cmd_minimax},             {"probe-lambda", cmd_probe_lambda},
        {"randers-census", cmd_randers_census}, {"decompose", cmd_decompose}};
    return h;
}

// ---------------------------------------------------------------------------
// Front end

struct FlagSpec {
    const char* flag;
    const char* key;
    const char* help;
};

const std::vector<FlagSpec> kCommonFlags{
    {"--preset", "preset", "named preset"},
    {"--surface", "surface", "torus or sphere, for inline fields"},
    {"--theta1", "theta1", "first component of theta"},
    {"--theta2", "theta2", "second component of theta"},
    {"--potential", "potential", "potential V"},
    {"--energy", "energy", "energy level"},
    {"--energy-grid", "energy_grid", "energy grid a:b:n or e1,e2,..."},
    {"--seeds", "seeds", "number of search seeds"},
    {"--samples", "samples", "samples per curve"},
    {"--grid", "grid", "Hamilton-Jacobi grid size"},
    {"--homology-grid", "homology_grid", "bounding-chain raster size"},
    {"--grad-tol", "grad_tol", "descent gradient tolerance"},
    {"--out", "out", "output directory"},
    {"--rng-seed", "rng_seed", "random seed"},
    {"--runs", "runs", "independent searches for graph-check"},
    {"--m-max", "m_max", "largest iterate for minimax"},
    {"--r", "r", "Randers scale r"},
    {"--a", "a", "probe curvature a"},
    {"--point", "point", "probe point u,v"},
    {"--input", "input", "curve CSV with header t,x,y"},
};

std::string subcommand_help(const std::string& name) {
    static const std::map<std::string, std::string> help{
        {"spectrum", "e0, c, c0 and cu"},
        {"minimal-boundary", "minimal boundary search at one energy or a grid"},
        {"graph-check", "repeated searches compared for coincidence or disjointness"},
        {"continue-waists", "waist continuation over an energy grid"},
        {"minimax", "waist, its iterates and the minimax levels s_m"},
        {"probe-lambda", "lambda criterion and quadratic probe"},
        {"randers-census", "Randers closed geodesics on the magnetic sphere"},
        {"decompose", "boundary decomposition of a curve CSV"},
    };
    const auto it = help.find(name);
    return it == help.end() ? std::string() : it->second;
}

json failure_json(const std::string& cmd, const std::string& kind, const std::string& msg) {
    return {{"command", cmd}, {"status", "failure"}, {"error", {{"kind", kind}, {"message", msg}}}};
}

void write_outputs(const std::string& dir, const json& report, const Artifacts& art) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "curves");
    std::ofstream(root / "report.json") << report.dump(2) << "\n";
    for (const auto& [rel, content] : art.files) std::ofstream(root / rel) << content;
}

}  // namespace

std::vector<std::string> subcommand_names() {
    std::vector<std::string> out;
    for (const auto& [n, h] : handlers()) out.push_back(n);
    return out;
}

json run_subcommand(const std::string& name, const RunConfig& cfg, Artifacts& artifacts) {
    for (const auto& [n, h] : handlers()) {
        if (n != name) continue;
        const MagneticTonelliData data = build_data(cfg);
        json j = h(data, cfg, artifacts);
        j["data"] = data.name;
        return j;
    }
    throw ConfigError("unknown subcommand '" + name + "'");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Magnetic waists and minimal boundaries on surfaces", "magwaist"};
    app.require_subcommand(1);
    std::map<std::string, std::string> raw;
    std::string config_path;
    bool json_only = false;
    std::vector<std::pair<CLI::App*, std::string>> subs;
    for (const auto& [name, h] : handlers()) {
        CLI::App* sub = app.add_subcommand(name, subcommand_help(name));
        sub->add_option("--config", config_path, "key = value config file");
        sub->add_flag("--json-only", json_only, "print JSON only and write no files");
        for (const auto& f : kCommonFlags) sub->add_option(f.flag, raw[f.key], f.help);
        subs.emplace_back(sub, name);
    }

    std::vector<const char*> argv{"magwaist"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::string cmd;
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        out << failure_json(cmd, "UsageError", e.what()).dump(2) << "\n";
        return kExitUsage;
    }
    for (const auto& [sub, name] : subs)
        if (sub->parsed()) cmd = name;

    RunConfig cfg;
    json report;
    Artifacts art;
    int status = kExitOk;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        if (json_only) cfg.json_only = true;
        for (const auto& f : kCommonFlags) {
            const auto* opt = app.get_subcommand(cmd)->get_option(f.flag);
            if (opt->count() == 0) continue;
            try {
                apply_config_value(cfg, f.key, raw[f.key]);
            } catch (const ConfigError& e) {
                throw ConfigError(std::string(f.flag) + ": " + e.what());
            }
        }
        report = run_subcommand(cmd, cfg, art);
        report["command"] = cmd;
        report["status"] = "ok";
    } catch (const SolverFailure& e) {
        report = failure_json(cmd, e.kind(), e.what());
        status = kExitSolver;
    } catch (const Error& e) {
        report = failure_json(cmd, e.kind(), e.what());
        status = kExitUsage;
    } catch (const std::exception& e) {
        report = failure_json(cmd, "InputError", e.what());
        status = kExitUsage;
    }
    if (json_only) cfg.json_only = true;
    report["config"] = cfg.to_json();

    out << report.dump(2) << "\n";
    if (!cfg.out.empty() && !cfg.json_only) {
        try {
            write_outputs(cfg.out, report, art);
        } catch (const std::exception& e) {
            err << "magwaist: cannot write to '" << cfg.out << "': " << e.what() << "\n";
            return kExitUsage;
        }
    }
    if (!cfg.json_only) {
        err << "magwaist " << cmd << ": " << report["status"].get<std::string>();
        if (!cfg.out.empty()) err << ", " << art.files.size() + 1 << " files in " << cfg.out;
        err << "\n";
    }
    return status;
}

}  // namespace magwaist
