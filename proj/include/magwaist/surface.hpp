#pragma once

#include <array>
#include <string>

#include "magwaist/fields.hpp"

namespace magwaist {

enum class SurfaceKind { FlatTorus, RoundSphere };

std::string to_string(SurfaceKind kind);

// Chart model of a closed oriented surface.
//
// FlatTorus: chart (x, y) with the identity lattice; points are kept
// unreduced so that winding accumulates in the coordinates.
// RoundSphere: cylindrical chart (φ, z) of the unit sphere, periodic in φ,
// admissible for |z| <= 1 - pole_snap. Both charts are positively oriented.
class SurfaceModel {
public:
    static SurfaceModel flat_torus();
    static SurfaceModel round_sphere(double pole_snap = 1e-3);

    SurfaceKind kind() const { return kind_; }
    bool is_torus() const { return kind_ == SurfaceKind::FlatTorus; }
    bool is_sphere() const { return kind_ == SurfaceKind::RoundSphere; }
    int genus() const { return kind_ == SurfaceKind::FlatTorus ? 1 : 0; }
    int homology_rank() const { return 2 * genus(); }
    double pole_snap() const { return pole_snap_; }

    // Lattice periods of the chart; 0 marks a non-periodic direction.
    Vec2 periods() const { return periods_; }
    Vec2 lattice_shift(const Eigen::Vector2i& winding) const {
        return {winding(0) * periods_(0), winding(1) * periods_(1)};
    }

    // Lower-left corner and extent of the fundamental chart domain.
    Vec2 domain_origin() const;
    Vec2 domain_extent() const;

    bool admissible(const Vec2& q) const;
    void require_admissible(const Vec2& q) const;

    // Representative of q in the fundamental domain.
    Vec2 reduce(const Vec2& q) const;

    // Shortest chart displacement from a to b modulo the lattice.
    Vec2 periodic_delta(const Vec2& a, const Vec2& b) const;

    Mat2 metric(const Vec2& q) const;
    Mat2 metric_inverse(const Vec2& q) const;
    // d g / d q_j for j = 0, 1.
    std::array<Mat2, 2> metric_derivative(const Vec2& q) const;
    // √det g, the density of the Riemannian area form against dx¹∧dx².
    double area_density(const Vec2& q) const;

    // Embedding of the sphere chart into R³ and its inverse.
    Vec3 embed(const Vec2& q) const;
    Vec2 chart_of(const Vec3& x) const;

private:
    SurfaceKind kind_ = SurfaceKind::FlatTorus;
    Vec2 periods_{1.0, 1.0};
    double pole_snap_ = 0.0;
};

// g_q. Throws ChartDomainError outside the admissible domain.
Mat2 metric_eval(const SurfaceModel& surface, const Vec2& q);

// |θ_q| in the norm induced by g.
double oneform_norm(const SurfaceModel& surface, const OneForm& theta, const Vec2& q);

// f(q) with dθ_q = f(q)·μ_q, μ the Riemannian area form of the chart orientation.
double two_form_density(const SurfaceModel& surface, const OneForm& theta, const Vec2& q);

}  // namespace magwaist
