#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "magwaist/errors.hpp"
#include "magwaist/lagrangian.hpp"
#include "magwaist/presets.hpp"

using namespace magwaist;

TEST(Lagrangian, Examples) {
    const auto tex = make_preset("torus-example");
    EXPECT_EQ(lagrangian_eval(tex, Vec2(0, 0), Vec2(0, 0)), 0.0);
    EXPECT_NEAR(lagrangian_eval(tex, Vec2(0, 0), Vec2(1, 0)), -0.5, 1e-15);
    const auto sm = make_preset("sphere-magnetic");
    EXPECT_NEAR(lagrangian_eval(sm, Vec2(0, 0), Vec2(1, 0)), 1.0, 1e-15);
}

TEST(Lagrangian, EnergyExamples) {
    const auto tex = make_preset("torus-example");
    EXPECT_NEAR(energy_eval(tex, Vec2(0, 0), Vec2(1, 0)), 0.5, 1e-15);
    const auto pend = make_preset("pendulum-torus");
    EXPECT_NEAR(energy_eval(pend, Vec2(0, 0), Vec2(0, 0)), 1.0, 1e-15);
}

TEST(Lagrangian, HamiltonianExamples) {
    const auto tex = make_preset("torus-example");
    EXPECT_NEAR(hamiltonian_eval(tex, Vec2(0, 0), Vec2(0, 0)), 0.5, 1e-15);
    EXPECT_NEAR(hamiltonian_eval(tex, Vec2(0, 0.25), Vec2(0, 0)), 0.0, 1e-15);
    const auto sm = make_preset("sphere-magnetic");
    EXPECT_NEAR(hamiltonian_eval(sm, Vec2(0, 0), sm.theta.at(Vec2(0, 0))), 0.0, 1e-15);
}

TEST(Lagrangian, LegendreConsistency) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-6;
    for (const auto& name : preset_names()) {
        const auto d = make_preset(name);
        for (int i = 0; i < 1000; ++i) {
            const Vec2 q = d.surface.is_torus() ? Vec2(u(rng), u(rng)) : Vec2(3.0 * u(rng), 0.9 * u(rng));
            const Vec2 v(2.0 * u(rng), 2.0 * u(rng));
            // ∂_vL·v by a directional difference along v.
            const double dLv = (lagrangian_eval(d, q, (1 + h) * v) - lagrangian_eval(d, q, (1 - h) * v)) / (2 * h);
            const double legendre = dLv - lagrangian_eval(d, q, v);
            const double e = energy_eval(d, q, v);
            EXPECT_NEAR(legendre, e, 1e-6 * std::max(1.0, std::abs(e)));
            EXPECT_NEAR(hamiltonian_eval(d, q, lagrangian_dv(d, q, v)), e, 1e-10);
        }
    }
}

TEST(Lagrangian, BaseDerivativeMatchesFiniteDifferences) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-6;
    for (const auto& name : preset_names()) {
        const auto d = make_preset(name);
        for (int i = 0; i < 100; ++i) {
            const Vec2 q = d.surface.is_torus() ? Vec2(u(rng), u(rng)) : Vec2(3.0 * u(rng), 0.9 * u(rng));
            const Vec2 v(u(rng), u(rng));
            const Vec2 g = lagrangian_dq(d, q, v);
            for (int j = 0; j < 2; ++j) {
                Vec2 dq = Vec2::Zero();
                dq(j) = h;
                const double fd = (lagrangian_eval(d, q + dq, v) - lagrangian_eval(d, q - dq, v)) / (2 * h);
                EXPECT_NEAR(g(j), fd, 1e-6);
            }
        }
    }
}

TEST(Randers, Examples) {
    const auto sm = make_preset("sphere-magnetic");
    EXPECT_NEAR(randers_eval(sm, 0.6, Vec2(0, 0), Vec2(1, 0)), 1.0 + 0.5 / 0.6, 1e-12);
    EXPECT_NEAR(randers_eval(sm, 0.6, Vec2(0, 0), Vec2(-1, 0)), 1.0 - 0.5 / 0.6, 1e-12);
    EXPECT_EQ(randers_eval(sm, 0.6, Vec2(0, 0), Vec2(0, 0)), 0.0);
}

TEST(Randers, DomainErrors) {
    const auto sm = make_preset("sphere-magnetic");
    EXPECT_THROW(RandersMetric(sm, 0.4), RandersDomainError);
    EXPECT_THROW(RandersMetric(sm, 0.5), RandersDomainError);
    const auto pend = make_preset("pendulum-torus");
    EXPECT_THROW(RandersMetric(pend, 2.0), NonMagneticError);
}

TEST(Randers, PositiveHomogeneity) {
    const auto sm = make_preset("sphere-magnetic");
    const RandersMetric F(sm, 0.6);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Vec2 q(3 * u(rng), 0.9 * u(rng)), v(u(rng), u(rng));
        const double lam = 0.1 + std::abs(5 * u(rng));
        EXPECT_NEAR(F(q, lam * v), lam * F(q, v), 1e-14 * lam * (1 + v.norm()));
        EXPECT_GT(F(q, v), 0.0);
    }
}

TEST(Lagrangian, ThetaSupNorm) {
    EXPECT_NEAR(theta_sup_norm(make_preset("torus-example")), 1.0, 1e-12);
    EXPECT_NEAR(theta_sup_norm(make_preset("sphere-magnetic")), 0.5, 1e-10);
    EXPECT_EQ(theta_sup_norm(make_preset("flat-torus")), 0.0);
}

TEST(Presets, UnknownNameIsConfigError) {
    EXPECT_THROW(make_preset("nope"), ConfigError);
}
