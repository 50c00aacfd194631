#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mmc/rng.hpp"

namespace mmc {

// ---------------------------------------------------------------------------
// Coefficient families
// ---------------------------------------------------------------------------

// f(t, x, m) = state * x + mean * m + constant
struct AffineCoefficient {
    double state = 0.0;
    double mean = 0.0;
    double constant = 0.0;
};

// f(t, x, m) = piecewise-linear table in t, flat extrapolation at the ends.
struct TableCoefficient {
    std::vector<std::pair<double, double>> knots;
};

using CoefficientSpec = std::variant<AffineCoefficient, TableCoefficient>;

// Value and state derivative of a drift or diffusion coefficient.
struct CoefficientEval {
    double value = 0.0;
    double dx = 0.0;
};

CoefficientEval eval_coefficient(const CoefficientSpec& spec, double t,
                                 double x, double m);

// Throwing wrapper used by the path engine; `name` identifies the offending
// coefficient in the error message.
CoefficientEval eval_coefficient_checked(const CoefficientSpec& spec,
                                         const char* name, double t, double x,
                                         double m);

// ---------------------------------------------------------------------------
// Jump amplitude families
// ---------------------------------------------------------------------------

// amplitude(t, x, z, m) = c * z * (m + x)
struct LinearMeanFieldJump {
    double c = 0.0;
};

// amplitude(t, x, z, m) = |z|^2
struct PureAmplitudeJump {};

// amplitude(t, x, z, m) = base(t, m) * z + state_coef * x
struct AffineInZJump {
    CoefficientSpec base;   // evaluated at (t, x=0, m); must not depend on x
    double state_coef = 0.0;
};

using JumpCoefficientSpec =
    std::variant<LinearMeanFieldJump, PureAmplitudeJump, AffineInZJump>;

// amplitude, its first and second mark derivatives, the state derivative,
// and the mark derivative of the state derivative.
struct JumpEval {
    double value = 0.0;
    double dz = 0.0;
    double dzz = 0.0;
    double dx = 0.0;
    double dx_dz = 0.0;
};

// Throws SingularJumpCoefficientError when the mark derivative vanishes.
JumpEval eval_jump(const JumpCoefficientSpec& spec, double t, double x,
                   double z, double m);

// ---------------------------------------------------------------------------
// Jump-size laws (finite activity)
// ---------------------------------------------------------------------------

// density rate * 1{|z| < half_width}
struct UniformLevy {
    double half_width = 0.5;
    double rate = 1.0;
};

// density rate * (p eta1 e^{-eta1 z} 1{z>0} + (1-p) eta2 e^{-eta2 |z|} 1{z<0})
struct KouLevy {
    double rate = 1.0;
    double p = 0.6;
    double eta1 = 10.0;
    double eta2 = 5.0;
};

using LevyMeasureSpec = std::variant<UniformLevy, KouLevy>;

bool levy_in_support(const LevyMeasureSpec& measure, double z);
double levy_density(const LevyMeasureSpec& measure, double z);
// Defined only where the density is positive; throws ModelEvalError outside.
double levy_grad_log(const LevyMeasureSpec& measure, double z);
// Total mass of the density (the jump arrival intensity).
double levy_total_intensity(const LevyMeasureSpec& measure);
// Integral of min(1, z^2) against the density: closed form for the uniform
// law, adaptive quadrature (rel tol 1e-10) for Kou.
double levy_quadratic_mass(const LevyMeasureSpec& measure);
// Truncation radius that captures the density to ~e^-30.
double levy_support_bound(const LevyMeasureSpec& measure);

// One draw from the normalized density.
double sample_jump_size(const LevyMeasureSpec& measure, CounterRng& rng);

// Jump sizes for one interval of length dt; count is Poisson with the total
// intensity, sizes are i.i.d. from the normalized density.
std::vector<double> sample_jumps(const LevyMeasureSpec& measure, double dt,
                                 CounterRng& rng);

// ---------------------------------------------------------------------------
// Payoffs
// ---------------------------------------------------------------------------

struct PutPayoff {
    double strike = 0.0;
};

struct MaxPutPayoff {
    double strike = 0.0;
};

struct BasketPayoff;

using PayoffSpec = std::variant<PutPayoff, MaxPutPayoff, BasketPayoff>;

// Inner payoff applied to the weighted sum of the state components.
struct BasketPayoff {
    std::vector<double> weights;
    std::shared_ptr<const PayoffSpec> inner;
};

double eval_payoff(const PayoffSpec& payoff, std::span<const double> x);

// ---------------------------------------------------------------------------
// Model assembly
// ---------------------------------------------------------------------------

struct MarketSpec {
    double rate = 0.0;
    double horizon = 1.0;
};

struct AssetDynamics {
    CoefficientSpec drift;
    CoefficientSpec diffusion;
    JumpCoefficientSpec jump;
};

// Mean-field jump-diffusion model; the mean statistic fed to every
// coefficient is the expectation of the identity functional, approximated
// downstream by the ensemble average.
struct ModelSpec {
    int dimension = 1;
    std::vector<double> initial_state;
    std::vector<AssetDynamics> assets;

    void validate() const;  // throws ConfigError on shape mismatches
};

}  // namespace mmc
