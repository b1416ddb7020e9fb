#include "magwaist/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace magwaist::numerics {

namespace {

double safe_eval(const std::function<double(const Vec2&)>& f, const Vec2& x) {
    try {
        const double v = f(x);
        return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    } catch (const std::exception&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

Vec2 pattern_search_maximize(const std::function<double(const Vec2&)>& f, Vec2 x0, double step,
                             double tol) {
    double best = safe_eval(f, x0);
    static const std::array<Vec2, 8> dirs = {
        Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1),
        Vec2(1, 1) / std::sqrt(2.0), Vec2(-1, 1) / std::sqrt(2.0),
        Vec2(1, -1) / std::sqrt(2.0), Vec2(-1, -1) / std::sqrt(2.0)};
    while (step > tol) {
        bool improved = false;
        for (const Vec2& d : dirs) {
            const Vec2 trial = x0 + step * d;
            const double v = safe_eval(f, trial);
            if (v > best) {
                best = v;
                x0 = trial;
                improved = true;
            }
        }
        if (!improved) step *= 0.5;
    }
    return x0;
}

NelderMeadResult nelder_mead(const std::function<double(const Vec2&)>& f, const Vec2& x0,
                             double initial_step, double ftol, int max_evals) {
    auto eval = [&](const Vec2& x) {
        const double v = safe_eval([&](const Vec2& y) { return -f(y); }, x);
        return -v;
    };
    std::array<Vec2, 3> simplex = {x0, x0 + Vec2(initial_step, 0), x0 + Vec2(0, initial_step)};
    std::array<double, 3> vals{};
    int evals = 0;
    for (int i = 0; i < 3; ++i) {
        vals[i] = eval(simplex[i]);
        ++evals;
    }
    while (evals < max_evals) {
        std::array<int, 3> idx = {0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
        const int lo = idx[0], mid = idx[1], hi = idx[2];
        if (std::abs(vals[hi] - vals[lo]) <= ftol && (simplex[hi] - simplex[lo]).norm() < 1e-6)
            break;
        if (std::abs(vals[hi] - vals[lo]) <= ftol * 1e-3) break;
        const Vec2 centroid = 0.5 * (simplex[lo] + simplex[mid]);
        const Vec2 refl = centroid + (centroid - simplex[hi]);
        const double fr = eval(refl);
        ++evals;
        if (fr < vals[lo]) {
            const Vec2 expd = centroid + 2.0 * (centroid - simplex[hi]);
            const double fe = eval(expd);
            ++evals;
            if (fe < fr) {
                simplex[hi] = expd;
                vals[hi] = fe;
            } else {
                simplex[hi] = refl;
                vals[hi] = fr;
            }
        } else if (fr < vals[mid]) {
            simplex[hi] = refl;
            vals[hi] = fr;
        } else {
            const Vec2 contr = centroid + 0.5 * (simplex[hi] - centroid);
            const double fc = eval(contr);
            ++evals;
            if (fc < vals[hi]) {
                simplex[hi] = contr;
                vals[hi] = fc;
            } else {
                for (int i : {mid, hi}) {
                    simplex[i] = simplex[lo] + 0.5 * (simplex[i] - simplex[lo]);
                    vals[i] = eval(simplex[i]);
                    ++evals;
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (vals[i] < vals[best]) best = i;
    return {simplex[best], vals[best], evals};
}

ChartGrid chart_node_grid(const SurfaceModel& surface, int k) {
    ChartGrid g;
    if (surface.is_torus()) {
        g.nx = k;
        g.ny = k;
        g.spacing = Vec2(1.0 / k, 1.0 / k);
        g.nodes.reserve(static_cast<std::size_t>(k) * k);
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < k; ++i) g.nodes.emplace_back(double(i) / k, double(j) / k);
    } else {
        const double zmax = 1.0 - surface.pole_snap();
        g.nx = k;
        g.ny = k - 1;
        g.spacing = Vec2(2.0 * std::numbers::pi / k, 2.0 / k);
        g.nodes.reserve(static_cast<std::size_t>(k) * (k - 1));
        for (int j = 1; j < k; ++j) {
            const double z = std::clamp(-1.0 + 2.0 * j / k, -zmax, zmax);
            for (int i = 0; i < k; ++i) g.nodes.emplace_back(2.0 * std::numbers::pi * i / k, z);
        }
    }
    return g;
}

std::vector<double> solve_cyclic_tridiagonal(double a, double b, const std::vector<double>& rhs) {
    // Sherman–Morrison reduction of the cyclic system to two Thomas solves.
    const std::size_t n = rhs.size();
    if (n < 3) throw std::invalid_argument("cyclic tridiagonal system needs n >= 3");
    const double gamma = -b;
    std::vector<double> diag(n, b);
    diag[0] = b - gamma;
    diag[n - 1] = b - a * a / gamma;

    auto thomas = [&](std::vector<double> d) {
        std::vector<double> c(n), x(n);
        std::vector<double> bb = diag;
        c[0] = a / bb[0];
        d[0] = d[0] / bb[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double m = bb[i] - a * c[i - 1];
            c[i] = a / m;
            d[i] = (d[i] - a * d[i - 1]) / m;
        }
        x[n - 1] = d[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
        return x;
    };

    std::vector<double> x = thomas(rhs);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = a;
    std::vector<double> z = thomas(u);
    const double vx = x[0] + a / gamma * x[n - 1];
    const double vz = z[0] + a / gamma * z[n - 1];
    const double factor = vx / (1.0 + vz);
    for (std::size_t i = 0; i < n; ++i) x[i] -= factor * z[i];
    return x;
}

std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {(sy - slope * sx) / n, slope};
}

}  // namespace magwaist::numerics
