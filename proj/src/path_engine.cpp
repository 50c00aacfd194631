#include "mmc/path_engine.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "mmc/errors.hpp"
#include "mmc/numerics.hpp"

namespace mmc {

std::vector<double> PathBundle::terminal_state(int m) const {
    return state_vector(m, grid.n_steps);
}

std::vector<double> PathBundle::state_vector(int m, int k) const {
    std::vector<double> x(dimension);
    for (int a = 0; a < dimension; ++a) x[a] = state(a, m, k);
    return x;
}

namespace {

struct StepDraw {
    double dw = 0.0;
    std::vector<std::pair<double, double>> jumps;  // (time, size), sorted
};

// All randomness for one (path, asset, step), drawn in a fixed order.
StepDraw draw_step(CounterRng& rng, const LevyMeasureSpec& measure, double t0,
                   double dt) {
    StepDraw d;
    d.dw = std::sqrt(dt) * rng.normal();
    const double intensity = levy_total_intensity(measure);
    if (intensity > 0.0) {
        const int count = rng.poisson(intensity * dt);
        d.jumps.reserve(count);
        for (int j = 0; j < count; ++j) {
            const double tau = t0 + rng.uniform_pos() * dt;
            d.jumps.emplace_back(tau, sample_jump_size(measure, rng));
        }
        std::stable_sort(d.jumps.begin(), d.jumps.end(),
                         [](const auto& a, const auto& b) {
                             return a.first < b.first;
                         });
    }
    return d;
}

}  // namespace

PathBundle simulate_ensemble(const ModelSpec& model,
                             std::span<const LevyMeasureSpec> measures,
                             const TimeGrid& grid, int path_count,
                             std::uint64_t seed, const SimOptions& options) {
    model.validate();
    if (static_cast<int>(measures.size()) != model.dimension) {
        throw ConfigError("one jump-size law required per asset");
    }
    if (path_count < 2) throw ConfigError("need at least two paths");
    if (grid.n_steps < 1) throw ConfigError("need at least one time step");

    const int d = model.dimension;
    const int n = grid.n_steps;
    const int m_count = path_count;
    const double dt = grid.step();

    PathBundle bundle;
    bundle.dimension = d;
    bundle.path_count = m_count;
    bundle.grid = grid;
    bundle.seed = seed;
    bundle.states.assign(d, std::vector<double>(
                                static_cast<std::size_t>(m_count) * (n + 1)));
    bundle.variations.assign(
        d, std::vector<double>(static_cast<std::size_t>(m_count) * (n + 1)));
    bundle.jumps.assign(d, std::vector<std::vector<JumpEvent>>(m_count));
    bundle.mean_stats.assign(d, std::vector<double>(n + 1, 0.0));

    std::vector<ZQuadrature> quads;
    quads.reserve(d);
    for (int a = 0; a < d; ++a) {
        quads.push_back(ZQuadrature::build(measures[a], options.quad_nodes));
    }

    for (int a = 0; a < d; ++a) {
        for (int m = 0; m < m_count; ++m) {
            bundle.states[a][bundle.idx(m, 0)] = model.initial_state[a];
            bundle.variations[a][bundle.idx(m, 0)] = 1.0;
        }
    }

    // One stream per (path, asset); the stream position advances with the
    // path, so a truncated horizon replays the same draws.
    std::vector<CounterRng> streams;
    streams.reserve(static_cast<std::size_t>(m_count) * d);
    for (int m = 0; m < m_count; ++m) {
        for (int a = 0; a < d; ++a) {
            streams.emplace_back(seed, (static_cast<std::uint64_t>(a) << 40) |
                                           static_cast<std::uint64_t>(m));
        }
    }

    std::mutex failure_mutex;
    std::string failure;  // first degenerate-variation report

    for (int k = 0; k < n; ++k) {
        // Synchronize the mean statistic before any path advances.
        for (int a = 0; a < d; ++a) {
            double sum = 0.0;
            for (int m = 0; m < m_count; ++m) {
                sum += bundle.states[a][bundle.idx(m, k)];
            }
            bundle.mean_stats[a][k] = sum / m_count;
        }
        const double t0 = grid.knot(k);

        parallel_for(
            static_cast<std::size_t>(m_count), options.threads,
            [&](std::size_t mi) {
                const int m = static_cast<int>(mi);
                for (int a = 0; a < d; ++a) {
                    const double mean = bundle.mean_stats[a][k];
                    const double x0 = bundle.states[a][bundle.idx(m, k)];
                    const double y0 = bundle.variations[a][bundle.idx(m, k)];
                    const AssetDynamics& dyn = model.assets[a];

                    const CoefficientEval b = eval_coefficient_checked(
                        dyn.drift, "drift", t0, x0, mean);
                    const CoefficientEval s = eval_coefficient_checked(
                        dyn.diffusion, "diffusion", t0, x0, mean);

                    // Per-step compensators of the jump and variation terms.
                    double comp_jump = 0.0;
                    double comp_var = 0.0;
                    for (std::size_t q = 0; q < quads[a].nodes.size(); ++q) {
                        const JumpEval j = eval_jump(
                            dyn.jump, t0, x0, quads[a].nodes[q], mean);
                        comp_jump += quads[a].weights[q] * j.value;
                        comp_var += quads[a].weights[q] * j.dx;
                    }

                    StepDraw draw = draw_step(streams[mi * d + a], measures[a],
                                              t0, dt);

                    double x = x0 + b.value * dt + s.value * draw.dw -
                               comp_jump * dt;
                    double y = y0 * (1.0 + b.dx * dt + s.dx * draw.dw -
                                     comp_var * dt);

                    for (const auto& [tau, z] : draw.jumps) {
                        const JumpEval j =
                            eval_jump(dyn.jump, tau, x, z, mean);
                        const double factor = 1.0 + j.dx;
                        if (factor <= 1e-12) {
                            std::lock_guard<std::mutex> lock(failure_mutex);
                            if (failure.empty()) {
                                failure = "first-variation factor 1+M <= 0 on "
                                          "path " +
                                          std::to_string(m) + " at t=" +
                                          std::to_string(tau);
                            }
                            return;
                        }
                        bundle.jumps[a][m].push_back({tau, z, x, y});
                        x += j.value;
                        y *= factor;
                    }

                    bundle.states[a][bundle.idx(m, k + 1)] = x;
                    bundle.variations[a][bundle.idx(m, k + 1)] = y;
                }
            });
        if (!failure.empty()) throw DegenerateVariationError(failure);
    }

    for (int a = 0; a < d; ++a) {
        double sum = 0.0;
        for (int m = 0; m < m_count; ++m) {
            sum += bundle.states[a][bundle.idx(m, n)];
        }
        bundle.mean_stats[a][n] = sum / m_count;
    }
    return bundle;
}

double empirical_mean(const PathBundle& bundle, int asset, int k) {
    return bundle.mean_stats[asset][k];
}

}  // namespace mmc
