#pragma once

#include <functional>
#include <vector>

#include "magwaist/fields.hpp"
#include "magwaist/surface.hpp"

namespace magwaist::numerics {

// Compass search for a local maximum of f starting at x0. Trial points for
// which f throws or returns NaN are treated as -inf.
Vec2 pattern_search_maximize(const std::function<double(const Vec2&)>& f, Vec2 x0,
                             double step, double tol);

// Nelder–Mead minimization in two variables.
struct NelderMeadResult {
    Vec2 x;
    double value;
    int evaluations;
};
NelderMeadResult nelder_mead(const std::function<double(const Vec2&)>& f, const Vec2& x0,
                             double initial_step, double ftol, int max_evals);

// Node grid covering the admissible chart domain. On the torus the nodes are
// (i/K, j/K); on the sphere φ_i = 2πi/K and z_j = -1 + 2j/K for 0 < j < K,
// clamped to the admissible band.
struct ChartGrid {
    int nx = 0;
    int ny = 0;
    std::vector<Vec2> nodes;  // row-major, x fastest
    Vec2 spacing;
};
ChartGrid chart_node_grid(const SurfaceModel& surface, int k);

// Solves the periodic system (a_i x_{i-1} + b x_i + a x_{i+1}) = rhs_i with
// constant diagonal b and off-diagonal a, |b| > 2|a|.
std::vector<double> solve_cyclic_tridiagonal(double a, double b, const std::vector<double>& rhs);

// Least-squares line y = c0 + c1·x.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace magwaist::numerics
