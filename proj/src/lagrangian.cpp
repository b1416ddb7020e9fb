#include "magwaist/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "magwaist/errors.hpp"
#include "magwaist/numerics.hpp"

namespace magwaist {

double lagrangian_eval(const MagneticTonelliData& data, const Vec2& q, const Vec2& v) {
    const Mat2 g = metric_eval(data.surface, q);
    return 0.5 * v.dot(g * v) + data.theta.at(q).dot(v) - data.potential.at(q);
}

double energy_eval(const MagneticTonelliData& data, const Vec2& q, const Vec2& v) {
    const Mat2 g = metric_eval(data.surface, q);
    return 0.5 * v.dot(g * v) + data.potential.at(q);
}

double hamiltonian_eval(const MagneticTonelliData& data, const Vec2& q, const Vec2& p) {
    data.surface.require_admissible(q);
    const Vec2 w = p - data.theta.at(q);
    return 0.5 * w.dot(data.surface.metric_inverse(q) * w) + data.potential.at(q);
}

Vec2 lagrangian_dv(const MagneticTonelliData& data, const Vec2& q, const Vec2& v) {
    return metric_eval(data.surface, q) * v + data.theta.at(q);
}

Vec2 lagrangian_dq(const MagneticTonelliData& data, const Vec2& q, const Vec2& v) {
    data.surface.require_admissible(q);
    const auto dg = data.surface.metric_derivative(q);
    Vec2 out = data.theta.jac(q).transpose() * v - data.potential.grad(q);
    for (int k = 0; k < 2; ++k) out(k) += 0.5 * v.dot(dg[k] * v);
    return out;
}

double theta_sup_norm(const MagneticTonelliData& data, int grid) {
    if (data.theta.identically_zero) return 0.0;
    const auto g = numerics::chart_node_grid(data.surface, grid);
    std::vector<std::pair<double, Vec2>> scored;
    scored.reserve(g.nodes.size());
    for (const Vec2& q : g.nodes) scored.emplace_back(oneform_norm(data.surface, data.theta, q), q);
    const std::size_t keep = std::min<std::size_t>(8, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    double best = scored.front().first;
    auto norm_at = [&](const Vec2& q) { return oneform_norm(data.surface, data.theta, q); };
    for (std::size_t i = 0; i < keep; ++i) {
        const Vec2 x = numerics::pattern_search_maximize(norm_at, scored[i].second,
                                                         g.spacing.minCoeff(), 1e-10);
        best = std::max(best, norm_at(x));
    }
    return best;
}

RandersMetric::RandersMetric(const MagneticTonelliData& data, double r,
                             std::optional<double> sup_norm)
    : data_(&data), r_(r), sup_norm_(0.0) {
    if (!data.potential.identically_zero)
        throw NonMagneticError("the Randers correspondence needs V identically zero");
    sup_norm_ = sup_norm ? *sup_norm : theta_sup_norm(data);
    if (!(r > sup_norm_)) {
        std::ostringstream os;
        os << "Randers parameter r = " << r << " must exceed ||theta||_inf = " << sup_norm_;
        throw RandersDomainError(os.str());
    }
}

double RandersMetric::operator()(const Vec2& q, const Vec2& v) const {
    const Mat2 g = metric_eval(data_->surface, q);
    return std::sqrt(std::max(0.0, v.dot(g * v))) + data_->theta.at(q).dot(v) / r_;
}

double randers_eval(const MagneticTonelliData& data, double r, const Vec2& q, const Vec2& v,
                    std::optional<double> sup_norm) {
    return RandersMetric(data, r, sup_norm)(q, v);
}

}  // namespace magwaist
