#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmc/localization.hpp"

namespace mmc {

// Inputs of the localized ratio estimator of E[f(target) | conditioning = a]:
// per path a conditioning value, a target value and a divergence weight.
// The Heaviside factor is 1{x >= 0} + offset.
struct EstimatorInput {
    std::span<const double> conditioning;  // G
    std::span<const double> target;        // F
    std::span<const double> weight;        // divergence weight per path
    Localizer localizer;
    double heaviside_offset = 0.0;
    // Fallback when |denominator| < floor_scale * (mean psi + mean |weight|).
    double floor_scale = 1e-10;
};

struct RatioEstimate {
    double numerator = 0.0;    // sample mean
    double denominator = 0.0;  // sample mean
    double estimate = 0.0;
    bool fallback = false;
    // Localizer-only parts (nonnegative kernel, no divergence weights);
    // consumers use their ratio as a stable backstop when the full ratio
    // degenerates statistically.
    double psi_numerator = 0.0;
    double psi_denominator = 0.0;
};

// Direct double-loop evaluation at one conditioning point.
RatioEstimate estimate_naive(const EstimatorInput& input, double alpha);

struct EstimatorOutput {
    std::vector<double> estimate;
    std::vector<double> numerator;
    std::vector<double> denominator;
    std::vector<std::uint8_t> fallback;
    std::vector<double> psi_numerator;
    std::vector<double> psi_denominator;
};

// Evaluates the ratio at every path's own conditioning value in
// O(M log M): sort by conditioning value, then one-sided exponential
// suffix/prefix recursions.  Each recursion multiplies by
// exp(-rate * gap) <= 1 between neighbours, so no exponent ever overflows.
// Results are in the original path order and match estimate_naive to
// rounding error.
EstimatorOutput estimate_all_sorted(const EstimatorInput& input);

// Multi-asset variant: the per-path factor is the product over assets of the
// localized weight expression.  Quadratic cost; used for d = 2.
struct ProductEstimatorInput {
    std::span<const double> target;
    std::vector<std::span<const double>> conditioning;  // per asset
    std::vector<std::span<const double>> weight;        // per asset
    std::vector<Localizer> localizer;
    double heaviside_offset = 0.0;
    double floor_scale = 1e-10;
};

RatioEstimate estimate_naive_product(const ProductEstimatorInput& input,
                                     std::span<const double> alpha);

EstimatorOutput estimate_all_product(const ProductEstimatorInput& input,
                                     int threads = 1);

}  // namespace mmc
