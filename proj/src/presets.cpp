#include "magwaist/presets.hpp"

#include <cmath>
#include <numbers>

#include "magwaist/errors.hpp"

namespace magwaist {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

OneForm torus_example_theta() {
    OneForm t;
    t.value = [](const Vec2& q) { return Vec2(-std::cos(kTwoPi * q(1)), 0.0); };
    t.jacobian = [](const Vec2& q) {
        Mat2 j = Mat2::Zero();
        j(0, 1) = kTwoPi * std::sin(kTwoPi * q(1));
        return j;
    };
    return t;
}

ScalarField pendulum_potential() {
    ScalarField v;
    v.value = [](const Vec2& q) { return std::cos(kTwoPi * q(1)); };
    v.gradient = [](const Vec2& q) { return Vec2(0.0, -kTwoPi * std::sin(kTwoPi * q(1))); };
    v.hessian = [](const Vec2& q) {
        Mat2 h = Mat2::Zero();
        h(1, 1) = -kTwoPi * kTwoPi * std::cos(kTwoPi * q(1));
        return h;
    };
    return v;
}

OneForm sphere_magnetic_theta() {
    const double kappa = kSphereKappa;
    OneForm t;
    t.value = [kappa](const Vec2& q) { return Vec2(kappa * (1.0 - q(1) * q(1)), 0.0); };
    t.jacobian = [kappa](const Vec2& q) {
        Mat2 j = Mat2::Zero();
        j(0, 1) = -2.0 * kappa * q(1);
        return j;
    };
    // (1 − z²) dφ = x dy − y dx on the unit sphere.
    t.ambient_value = [kappa](const Vec3& x) { return Vec3(-kappa * x(1), kappa * x(0), 0.0); };
    t.ambient_jacobian = [kappa](const Vec3&) {
        Mat3 j = Mat3::Zero();
        j(0, 1) = -kappa;
        j(1, 0) = kappa;
        return j;
    };
    return t;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"torus-example", "pendulum-torus", "flat-torus", "sphere-magnetic",
            "round-sphere-free"};
}

MagneticTonelliData make_preset(std::string_view name) {
    MagneticTonelliData d;
    d.name = std::string(name);
    if (name == "torus-example") {
        d.surface = SurfaceModel::flat_torus();
        d.theta = torus_example_theta();
        d.potential = ScalarField::zero();
    } else if (name == "pendulum-torus") {
        d.surface = SurfaceModel::flat_torus();
        d.theta = OneForm::zero();
        d.potential = pendulum_potential();
    } else if (name == "flat-torus") {
        d.surface = SurfaceModel::flat_torus();
        d.theta = OneForm::zero();
        d.potential = ScalarField::zero();
    } else if (name == "sphere-magnetic") {
        d.surface = SurfaceModel::round_sphere();
        d.theta = sphere_magnetic_theta();
        d.potential = ScalarField::zero();
    } else if (name == "round-sphere-free") {
        d.surface = SurfaceModel::round_sphere();
        d.theta = OneForm::zero();
        d.potential = ScalarField::zero();
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    return d;
}

}  // namespace magwaist
