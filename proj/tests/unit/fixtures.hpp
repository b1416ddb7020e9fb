#pragma once

#include <cmath>
#include <numbers>

#include "magwaist/loops.hpp"

namespace fixtures {

using magwaist::LoopPath;
using magwaist::Vec2;

// Lemniscate-like curve (sin t, sin t cos t) with one double point at its center.
inline LoopPath figure_eight(const Vec2& center, double scale, int n, double period = 1.0) {
    LoopPath l;
    l.period = period;
    for (int k = 0; k < n; ++k) {
        const double t = 2.0 * std::numbers::pi * (k + 0.37) / n;
        l.samples.push_back(center + scale * Vec2(std::sin(t), std::sin(t) * std::cos(t)));
    }
    return l;
}

// Trefoil projection with three double points.
inline LoopPath trefoil(const Vec2& center, double scale, int n, double period = 1.0) {
    LoopPath l;
    l.period = period;
    for (int k = 0; k < n; ++k) {
        const double t = 2.0 * std::numbers::pi * (k + 0.21) / n;
        l.samples.push_back(center + scale * Vec2(std::sin(t) + 2.0 * std::sin(2.0 * t),
                                                  std::cos(t) - 2.0 * std::cos(2.0 * t)));
    }
    return l;
}

// Smooth wiggle y = height + amp·sin(2π·mode·x) on a +x latitude circle.
inline LoopPath wavy_latitude(double height, double amp, int mode, int n, double period) {
    LoopPath l;
    l.period = period;
    l.winding = Eigen::Vector2i(1, 0);
    for (int k = 0; k < n; ++k) {
        const double x = double(k) / n;
        l.samples.emplace_back(x, height + amp * std::sin(2.0 * std::numbers::pi * mode * x));
    }
    return l;
}

}  // namespace fixtures
