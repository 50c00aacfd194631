#include "mmc/cond_expect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmc/errors.hpp"
#include "mmc/numerics.hpp"

namespace mmc {

namespace {

double heaviside(double x, double offset) {
    return (x >= 0.0 ? 1.0 : 0.0) + offset;
}

struct Terms {
    double num = 0.0;
    double den = 0.0;
    double psi_num = 0.0;
    double psi_sum = 0.0;
    double abs_weight_sum = 0.0;
};

Terms naive_terms(const EstimatorInput& in, double alpha) {
    Terms t;
    const std::size_t m = in.conditioning.size();
    for (std::size_t l = 0; l < m; ++l) {
        const double x = in.conditioning[l] - alpha;
        const PsiPair p = eval_localizer(in.localizer, x);
        const double term =
            p.psi + in.weight[l] * (heaviside(x, in.heaviside_offset) -
                                    p.cumulative);
        t.num += in.target[l] * term;
        t.den += term;
        t.psi_num += in.target[l] * p.psi;
        t.psi_sum += p.psi;
        t.abs_weight_sum += std::abs(in.weight[l]);
    }
    return t;
}

RatioEstimate finish(const Terms& t, std::size_t m, double floor_scale) {
    RatioEstimate out;
    const double inv = 1.0 / static_cast<double>(m);
    out.numerator = t.num * inv;
    out.denominator = t.den * inv;
    out.psi_numerator = t.psi_num * inv;
    out.psi_denominator = t.psi_sum * inv;
    const double floor =
        floor_scale * (t.psi_sum + t.abs_weight_sum) * inv;
    if (std::abs(out.denominator) < floor) {
        out.fallback = true;
        out.estimate = 0.0;
    } else {
        out.estimate = out.numerator / out.denominator;
    }
    return out;
}

}  // namespace

RatioEstimate estimate_naive(const EstimatorInput& input, double alpha) {
    const std::size_t m = input.conditioning.size();
    if (m < 2) throw ConfigError("estimator needs at least two paths");
    return finish(naive_terms(input, alpha), m, input.floor_scale);
}

EstimatorOutput estimate_all_sorted(const EstimatorInput& input) {
    const std::size_t m = input.conditioning.size();
    if (m < 2) throw ConfigError("estimator needs at least two paths");

    // Sort by conditioning value; ties keep path order.
    std::vector<std::uint32_t> order(m);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                         return input.conditioning[a] < input.conditioning[b];
                     });

    std::vector<double> g(m), f(m), w(m);
    for (std::size_t i = 0; i < m; ++i) {
        g[i] = input.conditioning[order[i]];
        f[i] = input.target[order[i]];
        w[i] = input.weight[order[i]];
    }

    // First index of each tie group.
    std::vector<std::uint32_t> group(m);
    for (std::size_t i = 0; i < m; ++i) {
        group[i] = (i > 0 && g[i] == g[i - 1]) ? group[i - 1]
                                               : static_cast<std::uint32_t>(i);
    }

    // Plain suffix sums of F*w and w for the Heaviside part.
    std::vector<double> suf_fw(m + 1, 0.0), suf_w(m + 1, 0.0);
    for (std::size_t i = m; i-- > 0;) {
        suf_fw[i] = suf_fw[i + 1] + f[i] * w[i];
        suf_w[i] = suf_w[i + 1] + w[i];
    }
    double tot_fw = suf_fw[0];
    double tot_w = suf_w[0];
    double tot_abs_w = 0.0;
    for (std::size_t i = 0; i < m; ++i) tot_abs_w += std::abs(w[i]);

    const double c = input.heaviside_offset;
    const double inv = 1.0 / static_cast<double>(m);

    EstimatorOutput out;
    out.estimate.resize(m);
    out.numerator.resize(m);
    out.denominator.resize(m);
    out.fallback.resize(m);
    out.psi_numerator.resize(m);
    out.psi_denominator.resize(m);

    auto emit = [&](std::size_t i, double num, double den, double psi_f,
                    double psi_sum) {
        const std::uint32_t path = order[i];
        const double floor =
            input.floor_scale * (psi_sum + tot_abs_w) * inv;
        out.numerator[path] = num * inv;
        out.denominator[path] = den * inv;
        out.psi_numerator[path] = psi_f * inv;
        out.psi_denominator[path] = psi_sum * inv;
        const bool fb = std::abs(out.denominator[path]) < floor;
        out.fallback[path] = fb ? 1 : 0;
        out.estimate[path] = fb ? 0.0 : num / den;
    };

    if (std::holds_alternative<NoLocalizer>(input.localizer)) {
        for (std::size_t i = 0; i < m; ++i) {
            const std::uint32_t s = group[i];
            emit(i, suf_fw[s] + c * tot_fw, suf_w[s] + c * tot_w, 0.0, 0.0);
        }
        return out;
    }

    const bool laplace =
        std::holds_alternative<LaplaceLocalizer>(input.localizer);
    const double rate =
        laplace ? std::get<LaplaceLocalizer>(input.localizer).rate
                : std::get<OneSidedExpLocalizer>(input.localizer).rate;

    // Exponentially damped suffix sums relative to each position's own
    // conditioning value: S_x[i] = sum_{l >= i} x_l exp(-rate (g_l - g_i)).
    // The recursion only multiplies by exp(-rate * neighbour gap).
    std::vector<double> suf_ef(m + 1, 0.0), suf_e1(m + 1, 0.0),
        suf_efw(m + 1, 0.0), suf_ew(m + 1, 0.0);
    for (std::size_t i = m; i-- > 0;) {
        const double damp =
            (i + 1 < m) ? std::exp(-rate * (g[i + 1] - g[i])) : 0.0;
        suf_ef[i] = f[i] + damp * suf_ef[i + 1];
        suf_e1[i] = 1.0 + damp * suf_e1[i + 1];
        suf_efw[i] = f[i] * w[i] + damp * suf_efw[i + 1];
        suf_ew[i] = w[i] + damp * suf_ew[i + 1];
    }

    if (!laplace) {
        // One-sided exponential: only paths at or above the conditioning
        // value contribute, and H - Psi collapses to c + exp(-rate gap).
        for (std::size_t i = 0; i < m; ++i) {
            const std::uint32_t s = group[i];
            const double psi_f = rate * suf_ef[s];
            const double psi_1 = rate * suf_e1[s];
            const double num = psi_f + suf_efw[s] + c * tot_fw;
            const double den = psi_1 + suf_ew[s] + c * tot_w;
            emit(i, num, den, psi_f, psi_1);
        }
        return out;
    }

    // Laplace needs the mirrored prefix recursions as well:
    // pre_x[i] = sum_{l < i} x_l exp(-rate (g_i - g_l)).
    std::vector<double> pre_ef(m, 0.0), pre_e1(m, 0.0), pre_efw(m, 0.0),
        pre_ew(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) {
        const double step = std::exp(-rate * (g[i] - g[i - 1]));
        pre_ef[i] = (pre_ef[i - 1] + f[i - 1]) * step;
        pre_e1[i] = (pre_e1[i - 1] + 1.0) * step;
        pre_efw[i] = (pre_efw[i - 1] + f[i - 1] * w[i - 1]) * step;
        pre_ew[i] = (pre_ew[i - 1] + w[i - 1]) * step;
    }

    for (std::size_t i = 0; i < m; ++i) {
        const std::uint32_t s = group[i];
        const double psi_f = 0.5 * rate * (suf_ef[s] + pre_ef[s]);
        const double psi_1 = 0.5 * rate * (suf_e1[s] + pre_e1[s]);
        // H - Psi: c + exp(-rate gap)/2 at or above, c - exp(-rate gap)/2
        // strictly below.
        const double num = psi_f + c * tot_fw +
                           0.5 * (suf_efw[s] - pre_efw[s]);
        const double den = psi_1 + c * tot_w + 0.5 * (suf_ew[s] - pre_ew[s]);
        emit(i, num, den, psi_f, psi_1);
    }
    return out;
}

RatioEstimate estimate_naive_product(const ProductEstimatorInput& input,
                                     std::span<const double> alpha) {
    const std::size_t m = input.target.size();
    if (m < 2) throw ConfigError("estimator needs at least two paths");
    const std::size_t d = input.conditioning.size();
    double num = 0.0, den = 0.0, abs_sum = 0.0;
    double psi_num = 0.0, psi_den = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
        double factor = 1.0;
        double psi_factor = 1.0;
        for (std::size_t a = 0; a < d; ++a) {
            const double x = input.conditioning[a][l] - alpha[a];
            const PsiPair p = eval_localizer(input.localizer[a], x);
            factor *= p.psi + input.weight[a][l] *
                                  (heaviside(x, input.heaviside_offset) -
                                   p.cumulative);
            psi_factor *= p.psi;
        }
        num += input.target[l] * factor;
        den += factor;
        abs_sum += std::abs(factor);
        psi_num += input.target[l] * psi_factor;
        psi_den += psi_factor;
    }
    RatioEstimate out;
    const double inv = 1.0 / static_cast<double>(m);
    out.numerator = num * inv;
    out.denominator = den * inv;
    out.psi_numerator = psi_num * inv;
    out.psi_denominator = psi_den * inv;
    const double floor = input.floor_scale * abs_sum * inv;
    if (std::abs(out.denominator) < floor) {
        out.fallback = true;
    } else {
        out.estimate = out.numerator / out.denominator;
    }
    return out;
}

EstimatorOutput estimate_all_product(const ProductEstimatorInput& input,
                                     int threads) {
    const std::size_t m = input.target.size();
    if (m < 2) throw ConfigError("estimator needs at least two paths");
    const std::size_t d = input.conditioning.size();

    EstimatorOutput out;
    out.estimate.resize(m);
    out.numerator.resize(m);
    out.denominator.resize(m);
    out.fallback.resize(m);
    out.psi_numerator.resize(m);
    out.psi_denominator.resize(m);

    parallel_for(m, threads, [&](std::size_t i) {
        std::vector<double> alpha(d);
        for (std::size_t a = 0; a < d; ++a) {
            alpha[a] = input.conditioning[a][i];
        }
        const RatioEstimate r = estimate_naive_product(input, alpha);
        out.estimate[i] = r.estimate;
        out.numerator[i] = r.numerator;
        out.denominator[i] = r.denominator;
        out.fallback[i] = r.fallback ? 1 : 0;
        out.psi_numerator[i] = r.psi_numerator;
        out.psi_denominator[i] = r.psi_denominator;
    });
    return out;
}

}  // namespace mmc
