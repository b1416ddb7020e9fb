#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include "magwaist/lagrangian.hpp"

namespace magwaist {

// ---------------------------------------------------------------------------
// Field expressions
//
//   expr    := term (('+' | '-') term)*
//   term    := unary ('*' unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' integer)?
//   primary := number | variable | 'pi' | ('sin' | 'cos') '(' expr ')' | '(' expr ')'
//
// Variables are x, y on the torus and phi, z on the sphere.

class Expression {
public:
    struct Node;

    // Throws ConfigError with the column (1-based, offset by `column0`) of the
    // first offending character.
    static Expression parse(const std::string& text, const std::vector<std::string>& variables,
                            int line = 0, int column0 = 1);

    double operator()(const Vec2& q) const;
    const std::string& text() const { return text_; }
    bool is_zero() const;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    std::string preset;
    // Inline fields; used when no preset is named.
    std::string surface;  // torus | sphere
    std::string theta1, theta2, potential;

    std::optional<double> energy;
    std::optional<std::vector<double>> energy_grid;
    int seeds = 16;
    int samples = 128;
    int grid = 64;           // Hamilton-Jacobi grid K
    int homology_grid = 256; // bounding-chain raster
    double grad_tol = 1e-7;
    std::uint64_t rng_seed = 1;
    std::string out;
    bool json_only = false;

    // Subcommand extras.
    int runs = 10;        // graph-check
    int m_max = 3;        // minimax
    double r = 0.6;       // randers-census
    double a = 1.0;       // probe-lambda
    std::optional<Vec2> point;  // probe-lambda
    std::string input;    // decompose, minimax

    nlohmann::json to_json() const;
};

// Parses `key = value` lines; '#' starts a comment. Unknown keys and malformed
// values raise ConfigError with line and column.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Applies one key/value pair as if it appeared on `line` of a config file.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value, int line = 0,
                        int column = 1);

// "a:b:n" → n evenly spaced values from a to b inclusive; "e1,e2,..." → the list.
std::vector<double> parse_energy_grid(const std::string& text, int line = 0, int column = 1);

// Preset lookup or inline construction; expressions are validated here,
// before any numeric work.
MagneticTonelliData build_data(const RunConfig& cfg);

}  // namespace magwaist
