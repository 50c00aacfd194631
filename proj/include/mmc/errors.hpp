#pragma once

#include <stdexcept>
#include <string>

namespace mmc {

// Evaluation of a model coefficient produced a non-finite value.
struct ModelEvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The jump amplitude has a vanishing mark derivative at an evaluated point;
// the weight kernel divides by it.
struct SingularJumpCoefficientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The first-variation process lost invertibility (a jump factor or a stored
// value fell below the floor).
struct DegenerateVariationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalIntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All localizer calibration inputs were zero; caller should fall back to the
// unlocalized estimator.
struct LocalizationDegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Conditional-expectation denominators collapsed on more than half the paths.
struct EstimatorBreakdownError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FdInstabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mmc
