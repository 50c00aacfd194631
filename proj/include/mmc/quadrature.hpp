#pragma once

#include <vector>

#include "mmc/model.hpp"

namespace mmc {

// Fixed rule for integrals of the form  integral g(z) density(z) dz  over the
// jump-size support.  Panels are split at z = 0 and at |z| = 1 so the |z| and
// min(1, z^2) kinks in the weight kernel never cross a panel.
struct ZQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;  // density factor included

    double total_intensity() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }

    template <typename F>
    double integrate(F&& g) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            s += weights[i] * g(nodes[i]);
        }
        return s;
    }

    static ZQuadrature build(const LevyMeasureSpec& measure,
                             int node_count = 64);
};

}  // namespace mmc
