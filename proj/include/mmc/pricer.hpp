#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmc/cond_expect.hpp"
#include "mmc/localization.hpp"
#include "mmc/model.hpp"
#include "mmc/path_engine.hpp"

namespace mmc {

enum class LocalizerKind { None, Laplace, OneSidedExp };

struct PricingConfig {
    ModelSpec model;
    std::vector<LevyMeasureSpec> measures;
    PayoffSpec payoff;
    MarketSpec market;

    int n_steps = 64;
    int path_count = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    int quad_nodes = 64;

    LocalizerKind localizer = LocalizerKind::OneSidedExp;
    double fixed_rate = 0.0;  // > 0 pins the localizer rate
    LambdaBounds rate_bounds;
    double heaviside_offset = 0.0;
    double floor_scale = 1e-10;

    // Abort a backward step when more paths than this fraction hit the
    // denominator fallback.
    double max_fallback_fraction = 0.5;

    bool record_continuation = false;
};

struct StepDiagnostics {
    int k = 0;
    std::vector<double> localizer_rate;  // per asset
    int fallback_count = 0;   // intrinsic substitutions
    int rejected_count = 0;   // signed-weight failures caught by the backstop
};

struct PricingResult {
    double price = 0.0;
    std::vector<StepDiagnostics> steps;    // backward order
    std::vector<std::vector<double>> continuation;  // optional snapshots
    std::int64_t wall_ms = 0;
    int fallback_total = 0;
    std::string defaulted_note;  // carried through to output records
};

// Backward dynamic programming on the simulated ensemble: terminal payoff,
// then per step the larger of intrinsic value and the discounted
// conditional-expectation estimate, and finally the plain average over the
// first step.
PricingResult price_american(const PricingConfig& cfg);

// Exercise at the horizon only: discounted average terminal payoff on the
// same ensemble.
PricingResult price_european(const PricingConfig& cfg);

}  // namespace mmc
