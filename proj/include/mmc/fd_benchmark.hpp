#pragma once

#include <vector>

#include "mmc/model.hpp"
#include "mmc/quadrature.hpp"

namespace mmc {

struct FdGrid {
    double x_min = 0.0;
    double x_max = 0.0;  // <= x_min means choose automatically
    int nodes = 1000;
    int time_steps = 2000;
};

// Mean of the state on a time grid, solved from the closed ODE of the
// affine drift (compensated jumps do not move the mean).
struct MomentCurve {
    double horizon = 1.0;
    std::vector<double> values;  // uniform grid including both endpoints

    double at(double t) const;
};

// Classical 4th-order one-step integration of dm/dt = (state+mean) m + const.
// Only affine drifts admit the closed mean equation.
MomentCurve solve_moment_ode(const CoefficientSpec& drift, double x0,
                             double horizon, int steps = 2000);

struct FdResult {
    std::vector<double> x;
    std::vector<double> value;  // t = 0 slice
    double price = 0.0;         // interpolated at x0
    int clamped_shifts = 0;     // quadrature shifts outside the grid
};

// Backward solve of the free-boundary valuation problem for one asset, the
// mean-field term frozen along the moment curve.  Local terms are treated
// with Crank-Nicolson (Rannacher start), the jump integral explicitly with
// linear interpolation of the value surface at the shifted points, and the
// early-exercise constraint by pointwise projection.  Set `american = false`
// to drop the projection.
FdResult solve_american_pide(const AssetDynamics& dynamics,
                             const LevyMeasureSpec& measure,
                             const PayoffSpec& payoff, const MarketSpec& market,
                             double x0, FdGrid grid, const MomentCurve& moments,
                             int quad_nodes = 64, bool american = true);

}  // namespace mmc
