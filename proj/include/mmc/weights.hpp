#pragma once

#include <vector>

#include "mmc/path_engine.hpp"
#include "mmc/quadrature.hpp"

namespace mmc {

// Integrand of the Skorohod-integral weights: combines the jump-size law's
// log-density gradient with the mark and state derivatives of the jump
// amplitude.  Division by the mark derivative makes it singular where that
// derivative vanishes.
double malliavin_kernel(const JumpCoefficientSpec& jump,
                        const LevyMeasureSpec& measure, double t, double x,
                        double z, double m);

// Forward accumulators per path and knot:
//   running[a][m,k]    compensated integral of Y * kernel over (0, t_k]
//   jump_sq[a][m,k]    sum of min(1, z^2) over jumps up to t_k
struct WeightAccumulator {
    int dimension = 1;
    std::vector<std::vector<double>> running;
    std::vector<std::vector<double>> jump_sq;
};

// Jump terms use the recorded pre-jump state and variation; the compensator
// uses the left knot (predictable integrand convention).
WeightAccumulator accumulate_weights(const PathBundle& bundle,
                                     const ModelSpec& model,
                                     std::span<const LevyMeasureSpec> measures,
                                     std::span<const ZQuadrature> quads,
                                     int threads = 1);

// Per-path weights for conditioning at the pair (s, t) = (t_k, t_{k+1}).
//
//   base_weight      accumulated integral over (0, s] divided by Y_s
//   window_term      increment over (s, t], scaled by 1/((t-s) * mass * Y_s)
//   estimator_weight base_weight / (s * mass) - window_term; this is the
//                    divergence weight the ratio estimator consumes
//   deriv_weight     (Y_t / Y_s) * jump_sq at s; used by the estimator
//                    variant that needs the derivative of the target
struct WindowWeights {
    int k = 0;
    double s = 0.0;
    double t = 0.0;
    std::vector<double> estimator_weight;
    std::vector<double> base_weight;
    std::vector<double> window_term;
    std::vector<double> deriv_weight;
    double mean_abs_weight = 0.0;
    double max_abs_weight = 0.0;
};

WindowWeights weights_for_window(const PathBundle& bundle,
                                 const WeightAccumulator& acc, int asset,
                                 int k, double quadratic_mass);

}  // namespace mmc
