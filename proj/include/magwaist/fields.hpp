#pragma once

#include <Eigen/Dense>
#include <functional>

namespace magwaist {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Step used when a field carries no analytic derivative.
inline constexpr double kFieldFdStep = 1e-5;

// A one-form in chart components, θ_q = θ₁ dx¹ + θ₂ dx².
// `jacobian(q)(i, j)` is ∂θ_i/∂q_j. Missing derivatives fall back to centered
// finite differences.
struct OneForm {
    std::function<Vec2(const Vec2&)> value;
    std::function<Mat2(const Vec2&)> jacobian;
    bool identically_zero = false;

    // Optional extension to the ambient R³ of the unit sphere, as a covector
    // field and its Jacobian. Only needed for loops that sweep over the poles.
    std::function<Vec3(const Vec3&)> ambient_value;
    std::function<Mat3(const Vec3&)> ambient_jacobian;

    Vec2 at(const Vec2& q) const { return identically_zero ? Vec2::Zero() : value(q); }

    Mat2 jac(const Vec2& q) const {
        if (identically_zero) return Mat2::Zero();
        if (jacobian) return jacobian(q);
        Mat2 out;
        for (int j = 0; j < 2; ++j) {
            Vec2 dq = Vec2::Zero();
            dq(j) = kFieldFdStep;
            out.col(j) = (value(q + dq) - value(q - dq)) / (2.0 * kFieldFdStep);
        }
        return out;
    }

    bool has_ambient() const { return identically_zero || static_cast<bool>(ambient_value); }

    static OneForm zero() {
        OneForm f;
        f.identically_zero = true;
        return f;
    }
};

struct ScalarField {
    std::function<double(const Vec2&)> value;
    std::function<Vec2(const Vec2&)> gradient;
    std::function<Mat2(const Vec2&)> hessian;
    bool identically_zero = false;

    double at(const Vec2& q) const { return identically_zero ? 0.0 : value(q); }

    Vec2 grad(const Vec2& q) const {
        if (identically_zero) return Vec2::Zero();
        if (gradient) return gradient(q);
        Vec2 out;
        for (int j = 0; j < 2; ++j) {
            Vec2 dq = Vec2::Zero();
            dq(j) = kFieldFdStep;
            out(j) = (value(q + dq) - value(q - dq)) / (2.0 * kFieldFdStep);
        }
        return out;
    }

    Mat2 hess(const Vec2& q) const {
        if (identically_zero) return Mat2::Zero();
        if (hessian) return hessian(q);
        Mat2 out;
        for (int j = 0; j < 2; ++j) {
            Vec2 dq = Vec2::Zero();
            dq(j) = kFieldFdStep;
            out.col(j) = (grad(q + dq) - grad(q - dq)) / (2.0 * kFieldFdStep);
        }
        return 0.5 * (out + out.transpose());
    }

    static ScalarField zero() {
        ScalarField f;
        f.identically_zero = true;
        return f;
    }
};

}  // namespace magwaist
