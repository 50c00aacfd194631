#include "mmc/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "mmc/numerics.hpp"

namespace mmc {

namespace {

void add_panel(ZQuadrature& q, const GaussRule& rule,
               const LevyMeasureSpec& measure, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double z = mid + half * rule.nodes[i];
        q.nodes.push_back(z);
        q.weights.push_back(half * rule.weights[i] * levy_density(measure, z));
    }
}

}  // namespace

ZQuadrature ZQuadrature::build(const LevyMeasureSpec& measure,
                               int node_count) {
    ZQuadrature q;
    const double intensity = levy_total_intensity(measure);
    if (intensity <= 0.0) return q;

    std::vector<std::pair<double, double>> panels;
    const double bound = levy_support_bound(measure);
    if (bound > 1.0) {
        panels = {{-bound, -1.0}, {-1.0, 0.0}, {0.0, 1.0}, {1.0, bound}};
    } else {
        panels = {{-bound, 0.0}, {0.0, bound}};
    }
    const int per_panel =
        std::max(8, node_count / static_cast<int>(panels.size()));
    const GaussRule rule = gauss_legendre(per_panel);
    for (const auto& [a, b] : panels) add_panel(q, rule, measure, a, b);
    return q;
}

}  // namespace mmc
