#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "magwaist/lagrangian.hpp"

namespace magwaist {

// Closed-form magnetic Lagrangians with known critical values.
//
//   torus-example      flat T², θ = −cos(2πy) dx, V = 0
//   pendulum-torus     flat T², θ = 0, V = cos(2πy)
//   flat-torus         flat T², θ = 0, V = 0
//   sphere-magnetic    round S², θ = ½(1 − z²) dφ, V = 0
//   round-sphere-free  round S², θ = 0, V = 0
MagneticTonelliData make_preset(std::string_view name);
std::vector<std::string> preset_names();

// Magnetic strength of the sphere-magnetic preset, θ = κ(1 − z²) dφ.
inline constexpr double kSphereKappa = 0.5;

}  // namespace magwaist
