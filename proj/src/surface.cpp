#include "magwaist/surface.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "magwaist/errors.hpp"

namespace magwaist {

std::string to_string(SurfaceKind kind) {
    return kind == SurfaceKind::FlatTorus ? "flat-torus" : "round-sphere";
}

SurfaceModel SurfaceModel::flat_torus() {
    SurfaceModel s;
    s.kind_ = SurfaceKind::FlatTorus;
    s.periods_ = {1.0, 1.0};
    s.pole_snap_ = 0.0;
    return s;
}

SurfaceModel SurfaceModel::round_sphere(double pole_snap) {
    SurfaceModel s;
    s.kind_ = SurfaceKind::RoundSphere;
    s.periods_ = {2.0 * std::numbers::pi, 0.0};
    s.pole_snap_ = pole_snap;
    return s;
}

Vec2 SurfaceModel::domain_origin() const {
    return is_torus() ? Vec2(0.0, 0.0) : Vec2(0.0, -1.0);
}

Vec2 SurfaceModel::domain_extent() const {
    return is_torus() ? Vec2(1.0, 1.0) : Vec2(2.0 * std::numbers::pi, 2.0);
}

bool SurfaceModel::admissible(const Vec2& q) const {
    if (!std::isfinite(q(0)) || !std::isfinite(q(1))) return false;
    if (is_torus()) return true;
    return std::abs(q(1)) <= 1.0 - pole_snap_;
}

void SurfaceModel::require_admissible(const Vec2& q) const {
    if (admissible(q)) return;
    std::ostringstream os;
    os << "chart point (" << q(0) << ", " << q(1) << ") outside the admissible domain of the "
       << to_string(kind_) << " chart";
    throw ChartDomainError(os.str());
}

Vec2 SurfaceModel::reduce(const Vec2& q) const {
    Vec2 r = q;
    for (int i = 0; i < 2; ++i) {
        if (periods_(i) > 0.0) {
            r(i) -= periods_(i) * std::floor(r(i) / periods_(i));
            if (r(i) >= periods_(i)) r(i) -= periods_(i);
        }
    }
    return r;
}

Vec2 SurfaceModel::periodic_delta(const Vec2& a, const Vec2& b) const {
    Vec2 d = b - a;
    for (int i = 0; i < 2; ++i) {
        if (periods_(i) > 0.0) d(i) -= periods_(i) * std::round(d(i) / periods_(i));
    }
    return d;
}

Mat2 SurfaceModel::metric(const Vec2& q) const {
    if (is_torus()) return Mat2::Identity();
    const double w = 1.0 - q(1) * q(1);
    Mat2 g = Mat2::Zero();
    g(0, 0) = w;
    g(1, 1) = 1.0 / w;
    return g;
}

Mat2 SurfaceModel::metric_inverse(const Vec2& q) const {
    if (is_torus()) return Mat2::Identity();
    const double w = 1.0 - q(1) * q(1);
    Mat2 g = Mat2::Zero();
    g(0, 0) = 1.0 / w;
    g(1, 1) = w;
    return g;
}

std::array<Mat2, 2> SurfaceModel::metric_derivative(const Vec2& q) const {
    std::array<Mat2, 2> d{Mat2::Zero(), Mat2::Zero()};
    if (is_torus()) return d;
    const double z = q(1);
    const double w = 1.0 - z * z;
    d[1](0, 0) = -2.0 * z;
    d[1](1, 1) = 2.0 * z / (w * w);
    return d;
}

double SurfaceModel::area_density(const Vec2& /*q*/) const {
    // Both charts are area preserving: det g = 1.
    return 1.0;
}

Vec3 SurfaceModel::embed(const Vec2& q) const {
    if (is_torus()) return {q(0), q(1), 0.0};
    const double rho = std::sqrt(std::max(0.0, 1.0 - q(1) * q(1)));
    return {rho * std::cos(q(0)), rho * std::sin(q(0)), q(1)};
}

Vec2 SurfaceModel::chart_of(const Vec3& x) const {
    if (is_torus()) return {x(0), x(1)};
    double phi = std::atan2(x(1), x(0));
    if (phi < 0) phi += 2.0 * std::numbers::pi;
    return {phi, x(2) / x.norm()};
}

Mat2 metric_eval(const SurfaceModel& surface, const Vec2& q) {
    surface.require_admissible(q);
    return surface.metric(q);
}

double oneform_norm(const SurfaceModel& surface, const OneForm& theta, const Vec2& q) {
    surface.require_admissible(q);
    const Vec2 t = theta.at(q);
    return std::sqrt(std::max(0.0, t.dot(surface.metric_inverse(q) * t)));
}

double two_form_density(const SurfaceModel& surface, const OneForm& theta, const Vec2& q) {
    surface.require_admissible(q);
    const Mat2 j = theta.jac(q);
    return (j(1, 0) - j(0, 1)) / surface.area_density(q);
}

}  // namespace magwaist
