#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmc/model.hpp"
#include "mmc/quadrature.hpp"

namespace mmc {

struct TimeGrid {
    int n_steps = 1;
    double horizon = 1.0;

    double step() const { return horizon / n_steps; }
    double knot(int k) const {
        return k == n_steps ? horizon : horizon * static_cast<double>(k) /
                                            static_cast<double>(n_steps);
    }
};

struct JumpEvent {
    double time = 0.0;
    double size = 0.0;
    double pre_state = 0.0;      // state after the diffusion update and any
                                 // earlier jumps in the same step
    double pre_variation = 0.0;
};

struct SimOptions {
    int threads = 1;
    int quad_nodes = 64;
};

// Ensemble of states and first-variation values on the Euler grid, with the
// per-step empirical means and full jump records.  Immutable once simulated.
//
// Flat layout: index(m, k) = m * (n_steps + 1) + k, one plane per asset.
struct PathBundle {
    int dimension = 1;
    int path_count = 0;
    TimeGrid grid;
    std::uint64_t seed = 0;

    std::vector<std::vector<double>> states;        // [asset][m,k]
    std::vector<std::vector<double>> variations;    // [asset][m,k]
    std::vector<std::vector<std::vector<JumpEvent>>> jumps;  // [asset][m][j]
    std::vector<std::vector<double>> mean_stats;    // [asset][k]

    std::size_t idx(int m, int k) const {
        return static_cast<std::size_t>(m) * (grid.n_steps + 1) + k;
    }
    double state(int a, int m, int k) const { return states[a][idx(m, k)]; }
    double variation(int a, int m, int k) const {
        return variations[a][idx(m, k)];
    }
    // Terminal state of path m as a small vector view.
    std::vector<double> terminal_state(int m) const;
    std::vector<double> state_vector(int m, int k) const;
};

// Compensated Euler scheme for the mean-field jump SDE and its
// first-variation process.  The expectation in every coefficient is replaced
// by the same-ensemble empirical mean, recomputed once per step before any
// path advances.  Identical (inputs, seed) give a bit-identical bundle for
// any thread count.
PathBundle simulate_ensemble(const ModelSpec& model,
                             std::span<const LevyMeasureSpec> measures,
                             const TimeGrid& grid, int path_count,
                             std::uint64_t seed, const SimOptions& options);

double empirical_mean(const PathBundle& bundle, int asset, int k);

}  // namespace mmc
