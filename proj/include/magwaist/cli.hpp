#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include "magwaist/config.hpp"

namespace magwaist {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitSolver = 2;

std::vector<std::string> subcommand_names();

// Files produced by a subcommand, relative to the output directory.
struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;
};

// Runs one subcommand. Library errors propagate; the caller maps them to
// exit codes.
nlohmann::json run_subcommand(const std::string& name, const RunConfig& cfg, Artifacts& artifacts);

// Full front end: argument parsing, config merge, dispatch, failure JSON on
// `out`, and the single write of report.json and curves/ under --out.
// Returns the exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace magwaist
