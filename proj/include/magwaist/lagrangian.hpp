#pragma once

#include <optional>
#include <string>

#include "magwaist/surface.hpp"

namespace magwaist {

// The magnetic Tonelli Lagrangian L(q,v) = ½ g_q(v,v) + θ_q(v) − V(q).
struct MagneticTonelliData {
    std::string name;
    SurfaceModel surface;
    OneForm theta;
    ScalarField potential;
    // Radius and duration bounds inside which free-time arcs are trusted to
    // be unique local minimizers.
    double rho_inj = 0.05;
    double tau_inj = 0.2;
};

double lagrangian_eval(const MagneticTonelliData& data, const Vec2& q, const Vec2& v);
double energy_eval(const MagneticTonelliData& data, const Vec2& q, const Vec2& v);
double hamiltonian_eval(const MagneticTonelliData& data, const Vec2& q, const Vec2& p);

// Fiber derivative ∂_v L = g v + θ.
Vec2 lagrangian_dv(const MagneticTonelliData& data, const Vec2& q, const Vec2& v);
// Base derivative ∂_q L = ½ vᵀ(∂g)v + (∂θ)ᵀv − ∇V.
Vec2 lagrangian_dq(const MagneticTonelliData& data, const Vec2& q, const Vec2& v);

// ‖θ‖_∞ over the surface: grid scan followed by local refinement.
double theta_sup_norm(const MagneticTonelliData& data, int grid = 256);

// Randers metric F(q,v) = |v| + r⁻¹θ_q(v), validated once at construction.
class RandersMetric {
public:
    RandersMetric(const MagneticTonelliData& data, double r,
                  std::optional<double> sup_norm = std::nullopt);
    double operator()(const Vec2& q, const Vec2& v) const;
    double r() const { return r_; }
    double sup_norm() const { return sup_norm_; }

private:
    const MagneticTonelliData* data_;
    double r_;
    double sup_norm_;
};

double randers_eval(const MagneticTonelliData& data, double r, const Vec2& q, const Vec2& v,
                    std::optional<double> sup_norm = std::nullopt);

}  // namespace magwaist
