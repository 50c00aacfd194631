#pragma once

#include <span>
#include <variant>
#include <vector>

namespace mmc {

// psi(x) = rate/2 * exp(-rate |x|); cumulative is the Laplace CDF.
struct LaplaceLocalizer {
    double rate = 1.0;
};

// psi(x) = rate * exp(-rate x) on x >= 0; cheaper one-sided variant.
struct OneSidedExpLocalizer {
    double rate = 1.0;
};

// psi = Psi = 0; recovers the plain ratio estimator.
struct NoLocalizer {};

using Localizer = std::variant<NoLocalizer, LaplaceLocalizer, OneSidedExpLocalizer>;

struct PsiPair {
    double psi = 0.0;
    double cumulative = 0.0;
};

PsiPair eval_localizer(const Localizer& loc, double x);

struct LambdaBounds {
    double min = 1e-6;
    double max = 1e6;
};

// Data-driven localizer rate: sqrt( sum v_m w_m^2 / sum v_m ), clamped.
// Values are the squared target evaluations, weights the per-path divergence
// weights.  Throws LocalizationDegenerateError when every value is zero.
double estimate_localizer_rate(std::span<const double> values,
                               std::span<const double> weights,
                               const LambdaBounds& bounds = {});

struct MultiRateResult {
    std::vector<double> rates;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;  // max relative defect of the fixed point
};

// Coupled per-asset rates: each squared rate is a weighted mean of that
// asset's squared weights, the weights of the mean being the products of
// (rate^2 + weight^2) over the other assets.  Solved by fixed-point
// iteration from the single-asset rates.
MultiRateResult solve_localizer_rates(
    std::span<const double> values,
    const std::vector<std::span<const double>>& weights_per_asset,
    const LambdaBounds& bounds = {}, int max_iterations = 200,
    double tol = 1e-8);

}  // namespace mmc
