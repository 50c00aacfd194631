#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace mmc {

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussRule gauss_legendre(int n);

// Adaptive Simpson with relative tolerance; throws NumericalIntegrationError
// when the recursion depth is exhausted before the tolerance is met.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double rel_tol);

// Static contiguous partition of [0, n) across up to `threads` workers.
// Results are independent of the worker count as long as iterations do not
// share mutable state.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body);

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;   // unbiased sample variance
    std::size_t n = 0;
    double std_error() const;
};

MeanVar mean_var(const std::vector<double>& xs);

}  // namespace mmc
