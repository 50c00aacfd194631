#include "mmc/localization.hpp"

#include <algorithm>
#include <cmath>

#include "mmc/errors.hpp"

namespace mmc {

PsiPair eval_localizer(const Localizer& loc, double x) {
    return std::visit(
        [&](const auto& l) -> PsiPair {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, NoLocalizer>) {
                return {0.0, 0.0};
            } else if constexpr (std::is_same_v<T, LaplaceLocalizer>) {
                const double e = std::exp(-l.rate * std::abs(x));
                const double psi = 0.5 * l.rate * e;
                const double cum = x < 0.0 ? 0.5 * e : 1.0 - 0.5 * e;
                return {psi, cum};
            } else {
                if (x < 0.0) return {0.0, 0.0};
                const double e = std::exp(-l.rate * x);
                return {l.rate * e, 1.0 - e};
            }
        },
        loc);
}

double estimate_localizer_rate(std::span<const double> values,
                               std::span<const double> weights,
                               const LambdaBounds& bounds) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        num += values[i] * weights[i] * weights[i];
        den += values[i];
    }
    if (den == 0.0) {
        throw LocalizationDegenerateError(
            "all localizer calibration values are zero");
    }
    return std::clamp(std::sqrt(num / den), bounds.min, bounds.max);
}

MultiRateResult solve_localizer_rates(
    std::span<const double> values,
    const std::vector<std::span<const double>>& weights_per_asset,
    const LambdaBounds& bounds, int max_iterations, double tol) {
    const std::size_t d = weights_per_asset.size();
    const std::size_t m = values.size();

    MultiRateResult out;
    out.rates.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        out.rates[j] = estimate_localizer_rate(values, weights_per_asset[j],
                                               bounds);
    }
    if (d == 1) {
        out.converged = true;
        return out;
    }

    auto next_rate_sq = [&](std::size_t j, const std::vector<double>& rates) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            double prod = 1.0;
            for (std::size_t i = 0; i < d; ++i) {
                if (i == j) continue;
                const double w = weights_per_asset[i][l];
                prod *= rates[i] * rates[i] + w * w;
            }
            const double wj = weights_per_asset[j][l];
            num += values[l] * wj * wj * prod;
            den += values[l] * prod;
        }
        if (den == 0.0) {
            throw LocalizationDegenerateError(
                "all localizer calibration values are zero");
        }
        return num / den;
    };

    for (int iter = 0; iter < max_iterations; ++iter) {
        std::vector<double> updated(d);
        double max_change = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double r =
                std::clamp(std::sqrt(next_rate_sq(j, out.rates)), bounds.min,
                           bounds.max);
            updated[j] = r;
            max_change = std::max(max_change,
                                  std::abs(r - out.rates[j]) /
                                      std::max(out.rates[j], bounds.min));
        }
        out.rates = std::move(updated);
        out.iterations = iter + 1;
        if (max_change < tol) {
            out.converged = true;
            break;
        }
    }

    out.residual = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double target = next_rate_sq(j, out.rates);
        const double actual = out.rates[j] * out.rates[j];
        // Clamped components cannot satisfy the raw equations; measure the
        // defect only against the clamped target.
        const double clamped = std::clamp(std::sqrt(target), bounds.min,
                                          bounds.max);
        out.residual = std::max(
            out.residual, std::abs(clamped * clamped - actual) /
                              std::max(actual, bounds.min * bounds.min));
    }
    return out;
}

}  // namespace mmc
