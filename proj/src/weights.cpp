#include "mmc/weights.hpp"

#include <cmath>
#include <string>

#include "mmc/errors.hpp"
#include "mmc/numerics.hpp"

namespace mmc {

// Mark derivative of density * weight process, divided by the density:
// with g(z) = min(1, z^2),
//   (g / dz_amp) (grad_log - dzz/dz_amp) (1 + M)
//   + g M' / dz_amp + g'(z) (1 + M) / dz_amp,    g'(z) = 2 z 1{|z| <= 1}.
double malliavin_kernel(const JumpCoefficientSpec& jump,
                        const LevyMeasureSpec& measure, double t, double x,
                        double z, double m) {
    const JumpEval j = eval_jump(jump, t, x, z, m);
    const double g = std::min(1.0, z * z);
    const double dg = std::abs(z) <= 1.0 ? 2.0 * z : 0.0;
    const double grad_log = levy_grad_log(measure, z);
    return (g / j.dz) * (grad_log - j.dzz / j.dz) * (1.0 + j.dx) +
           g * j.dx_dz / j.dz + dg * (1.0 + j.dx) / j.dz;
}

WeightAccumulator accumulate_weights(const PathBundle& bundle,
                                     const ModelSpec& model,
                                     std::span<const LevyMeasureSpec> measures,
                                     std::span<const ZQuadrature> quads,
                                     int threads) {
    const int d = bundle.dimension;
    const int n = bundle.grid.n_steps;
    const int m_count = bundle.path_count;
    const double dt = bundle.grid.step();

    WeightAccumulator acc;
    acc.dimension = d;
    acc.running.assign(d, std::vector<double>(
                              static_cast<std::size_t>(m_count) * (n + 1)));
    acc.jump_sq.assign(d, std::vector<double>(
                              static_cast<std::size_t>(m_count) * (n + 1)));

    for (int a = 0; a < d; ++a) {
        const AssetDynamics& dyn = model.assets[a];
        const LevyMeasureSpec& measure = measures[a];
        const ZQuadrature& quad = quads[a];
        parallel_for(
            static_cast<std::size_t>(m_count), threads, [&](std::size_t mi) {
                const int m = static_cast<int>(mi);
                const auto& events = bundle.jumps[a][m];
                std::size_t next_event = 0;
                double u = 0.0;
                double sq = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double t0 = bundle.grid.knot(k);
                    const double t1 = bundle.grid.knot(k + 1);
                    const double x = bundle.state(a, m, k);
                    const double y = bundle.variation(a, m, k);
                    const double mean = bundle.mean_stats[a][k];

                    while (next_event < events.size() &&
                           events[next_event].time <= t1) {
                        const JumpEvent& ev = events[next_event];
                        u += ev.pre_variation *
                             malliavin_kernel(dyn.jump, measure, ev.time,
                                              ev.pre_state, ev.size, mean);
                        sq += std::min(1.0, ev.size * ev.size);
                        ++next_event;
                    }
                    double comp = 0.0;
                    for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
                        comp += quad.weights[q] *
                                malliavin_kernel(dyn.jump, measure, t0, x,
                                                 quad.nodes[q], mean);
                    }
                    u -= dt * y * comp;

                    acc.running[a][bundle.idx(m, k + 1)] = u;
                    acc.jump_sq[a][bundle.idx(m, k + 1)] = sq;
                }
            });
    }
    return acc;
}

WindowWeights weights_for_window(const PathBundle& bundle,
                                 const WeightAccumulator& acc, int asset,
                                 int k, double quadratic_mass) {
    const int n = bundle.grid.n_steps;
    if (k < 1 || k > n - 1) {
        throw ConfigError("conditioning step must lie strictly inside the grid");
    }
    const int m_count = bundle.path_count;
    WindowWeights out;
    out.k = k;
    out.s = bundle.grid.knot(k);
    out.t = bundle.grid.knot(k + 1);
    out.estimator_weight.resize(m_count);
    out.base_weight.resize(m_count);
    out.window_term.resize(m_count);
    out.deriv_weight.resize(m_count);

    // Zero jump activity: the divergence weights vanish and the estimator
    // degenerates to its localizer part.
    if (quadratic_mass <= 0.0) return out;

    const double window = out.t - out.s;
    for (int m = 0; m < m_count; ++m) {
        const double ys = bundle.variation(asset, m, k);
        if (std::abs(ys) < 1e-12) {
            throw DegenerateVariationError(
                "first-variation value below floor on path " +
                std::to_string(m) + " at t=" + std::to_string(out.s));
        }
        const double u_s = acc.running[asset][bundle.idx(m, k)];
        const double u_t = acc.running[asset][bundle.idx(m, k + 1)];
        const double base = u_s / ys;
        const double gterm = (u_t - u_s) / (window * quadratic_mass * ys);
        out.base_weight[m] = base;
        out.window_term[m] = gterm;
        out.estimator_weight[m] = base / (out.s * quadratic_mass) - gterm;
        out.deriv_weight[m] = bundle.variation(asset, m, k + 1) / ys *
                              acc.jump_sq[asset][bundle.idx(m, k)];
        const double aw = std::abs(out.estimator_weight[m]);
        out.mean_abs_weight += aw;
        out.max_abs_weight = std::max(out.max_abs_weight, aw);
    }
    out.mean_abs_weight /= m_count;
    return out;
}

}  // namespace mmc
