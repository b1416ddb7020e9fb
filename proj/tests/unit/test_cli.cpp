#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "magwaist/cli.hpp"
#include "magwaist/errors.hpp"

using namespace magwaist;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out, err;
    nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.status = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("magwaist_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                             ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

}  // namespace

TEST(Cli, SubcommandList) {
    EXPECT_EQ(subcommand_names(),
              (std::vector<std::string>{"spectrum", "minimal-boundary", "graph-check", "continue-waists", "minimax",
                                        "probe-lambda", "randers-census", "decompose"}));
}

TEST(Cli, SpectrumTorusExample) {
    const auto r = run({"spectrum", "--preset", "torus-example", "--json-only"});
    ASSERT_EQ(r.status, kExitOk) << r.out;
    EXPECT_TRUE(r.err.empty());
    const auto j = r.json();
    EXPECT_EQ(j["status"], "ok");
    EXPECT_EQ(j["result"]["e0"], 0.0);
    for (const char* k : {"c", "c0", "cu"}) EXPECT_NEAR(j["result"][k]["value"].get<double>(), 0.5, 1e-2);
    EXPECT_EQ(j["config"]["preset"], "torus-example");
    EXPECT_TRUE(j.contains("tolerances"));
    EXPECT_TRUE(j["methods"].contains("c0"));
}

TEST(Cli, SpectrumRoundSphereFree) {
    const auto j = run({"spectrum", "--preset", "round-sphere-free", "--json-only"}).json();
    EXPECT_EQ(j["result"]["e0"], 0.0);
    for (const char* k : {"c", "c0", "cu"}) EXPECT_NEAR(j["result"][k]["value"].get<double>(), 0.0, 1e-9);
}

TEST(Cli, DeterministicJson) {
    const std::vector<std::string> args{"minimal-boundary", "--preset", "torus-example", "--energy", "0.3",
                                        "--seeds", "4", "--rng-seed", "11", "--json-only"};
    const auto a = run(args);
    const auto b = run(args);
    ASSERT_EQ(a.status, kExitOk) << a.out;
    EXPECT_EQ(std::hash<std::string>{}(a.out), std::hash<std::string>{}(b.out));
    EXPECT_NEAR(a.json()["result"]["action"].get<double>(), -0.450807, 1e-3);
}

TEST(Cli, WritesArtifactsOnce) {
    TempDir dir;
    const auto r = run({"minimal-boundary", "--preset", "torus-example", "--energy", "0.3", "--seeds", "3", "--out",
                        dir.path().string()});
    ASSERT_EQ(r.status, kExitOk) << r.out;
    EXPECT_EQ(slurp(dir.path() / "report.json"), r.out);
    const auto csv = slurp(dir.path() / "curves" / "boundary_e0.3.csv");
    EXPECT_EQ(csv.rfind("t,x,y\n", 0), 0u);
    const auto svg = slurp(dir.path() / "curves" / "boundary_e0.3.svg");
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(r.err.find("3 files"), std::string::npos);

    // The written curves decompose into one certified boundary.
    const auto d = run({"decompose", "--preset", "torus-example", "--input",
                        (dir.path() / "curves" / "boundary_e0.3.csv").string(), "--json-only"});
    ASSERT_EQ(d.status, kExitOk) << d.out;
    const auto dj = d.json()["result"];
    EXPECT_TRUE(dj["verified"].get<bool>());
    EXPECT_TRUE(dj["topological"].get<bool>());
    ASSERT_EQ(dj["pieces"].size(), 1u);
    EXPECT_TRUE(dj["pieces"][0]["irreducible"].get<bool>());
}

TEST(Cli, JsonOnlyWritesNothing) {
    TempDir dir;
    const auto r = run({"spectrum", "--preset", "flat-torus", "--out", (dir.path() / "x").string(), "--json-only"});
    ASSERT_EQ(r.status, kExitOk);
    EXPECT_FALSE(fs::exists(dir.path() / "x"));
}

TEST(Cli, ConfigFileWithOverrides) {
    TempDir dir;
    const auto cfg = dir.path() / "run.cfg";
    std::ofstream(cfg) << "# below c0\npreset = torus-example\nenergy = 0.7\nseeds = 3\n";
    const auto bad = run({"minimal-boundary", "--config", cfg.string(), "--json-only"});
    EXPECT_EQ(bad.status, kExitUsage);
    EXPECT_EQ(bad.json()["error"]["kind"], "EnergyRangeError");
    const auto good = run({"minimal-boundary", "--config", cfg.string(), "--energy", "0.3", "--json-only"});
    ASSERT_EQ(good.status, kExitOk) << good.out;
    EXPECT_EQ(good.json()["config"]["energy"], 0.3);
    EXPECT_EQ(good.json()["config"]["seeds"], 3);
}

TEST(Cli, ConfigErrorsExitOne) {
    TempDir dir;
    const auto cfg = dir.path() / "bad.cfg";
    std::ofstream(cfg) << "preset = torus-example\n\nseeds = many\n";
    const auto r = run({"spectrum", "--config", cfg.string(), "--json-only"});
    EXPECT_EQ(r.status, kExitUsage);
    const auto j = r.json();
    EXPECT_EQ(j["status"], "failure");
    EXPECT_EQ(j["error"]["kind"], "ConfigError");
    EXPECT_EQ(j["error"]["message"], "line 3, column 9: expected an integer, got 'many'");

    const auto e = run({"spectrum", "--surface", "torus", "--theta1", "cos(2*pi*y", "--json-only"});
    EXPECT_EQ(e.status, kExitUsage);
    EXPECT_EQ(e.json()["error"]["message"], "theta1: column 11: expected ')'");

    EXPECT_EQ(run({"spectrum", "--preset", "nowhere", "--json-only"}).status, kExitUsage);
    EXPECT_EQ(run({"minimal-boundary", "--preset", "torus-example", "--json-only"}).status, kExitUsage);
    EXPECT_EQ(run({"unknown-command"}).status, kExitUsage);
    EXPECT_EQ(run({"spectrum", "--no-such-flag", "1"}).status, kExitUsage);
    EXPECT_EQ(run({"decompose", "--preset", "flat-torus", "--json-only"}).status, kExitUsage);
}

TEST(Cli, SolverFailureExitsTwo) {
    // Great circles are saddles of the free round sphere.
    const auto r = run({"minimax", "--preset", "round-sphere-free", "--energy", "0.5", "--json-only"});
    EXPECT_EQ(r.status, kExitSolver);
    const auto j = r.json();
    EXPECT_EQ(j["status"], "failure");
    EXPECT_EQ(j["error"]["kind"], "NoWaistFound");
    EXPECT_EQ(j["config"]["preset"], "round-sphere-free");
}

TEST(Cli, InlineFieldsMatchPreset) {
    auto a = run({"spectrum", "--preset", "torus-example", "--json-only"}).json();
    auto b = run({"spectrum", "--surface", "torus", "--theta1", "-cos(2*pi*y)", "--json-only"}).json();
    for (const char* k : {"c", "c0"})
        EXPECT_NEAR(a["result"][k]["value"].get<double>(), b["result"][k]["value"].get<double>(), 1e-6);
    EXPECT_EQ(b["data"], "inline");
}

TEST(Cli, ProbeLambda) {
    const auto r = run({"probe-lambda", "--preset", "torus-example", "--point", "0,0.25", "--a", "1", "--json-only"});
    ASSERT_EQ(r.status, kExitOk) << r.out;
    const auto j = r.json()["result"];
    EXPECT_NEAR(j["lambda"].get<double>(), -6.283185307179586, 1e-9);
    EXPECT_TRUE(j["probe"]["certifies_e0_below_cu"].get<bool>());
}
