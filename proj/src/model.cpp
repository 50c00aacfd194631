#include "mmc/model.hpp"

#include <algorithm>
#include <cmath>

#include "mmc/errors.hpp"
#include "mmc/numerics.hpp"

namespace mmc {

namespace {

double table_value(const TableCoefficient& table, double t) {
    const auto& ks = table.knots;
    if (ks.empty()) throw ConfigError("empty coefficient table");
    if (t <= ks.front().first) return ks.front().second;
    if (t >= ks.back().first) return ks.back().second;
    for (std::size_t i = 1; i < ks.size(); ++i) {
        if (t <= ks[i].first) {
            const double t0 = ks[i - 1].first, v0 = ks[i - 1].second;
            const double t1 = ks[i].first, v1 = ks[i].second;
            const double w = (t - t0) / (t1 - t0);
            return v0 + w * (v1 - v0);
        }
    }
    return ks.back().second;
}

}  // namespace

CoefficientEval eval_coefficient(const CoefficientSpec& spec, double t,
                                 double x, double m) {
    return std::visit(
        [&](const auto& c) -> CoefficientEval {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, AffineCoefficient>) {
                return {c.state * x + c.mean * m + c.constant, c.state};
            } else {
                return {table_value(c, t), 0.0};
            }
        },
        spec);
}

CoefficientEval eval_coefficient_checked(const CoefficientSpec& spec,
                                         const char* name, double t, double x,
                                         double m) {
    const CoefficientEval out = eval_coefficient(spec, t, x, m);
    if (!std::isfinite(out.value) || !std::isfinite(out.dx)) {
        throw ModelEvalError(std::string("non-finite value from coefficient '") +
                             name + "'");
    }
    return out;
}

JumpEval eval_jump(const JumpCoefficientSpec& spec, double t, double x,
                   double z, double m) {
    JumpEval out = std::visit(
        [&](const auto& j) -> JumpEval {
            using T = std::decay_t<decltype(j)>;
            if constexpr (std::is_same_v<T, LinearMeanFieldJump>) {
                return {j.c * z * (m + x), j.c * (m + x), 0.0, j.c * z, j.c};
            } else if constexpr (std::is_same_v<T, PureAmplitudeJump>) {
                return {z * z, 2.0 * z, 2.0, 0.0, 0.0};
            } else {
                const double base = eval_coefficient(j.base, t, 0.0, m).value;
                return {base * z + j.state_coef * x, base, 0.0, j.state_coef,
                        0.0};
            }
        },
        spec);
    if (!std::isfinite(out.value) || !std::isfinite(out.dz)) {
        throw ModelEvalError("non-finite value from coefficient 'jump'");
    }
    if (out.dz == 0.0) {
        throw SingularJumpCoefficientError(
            "jump amplitude has zero mark derivative at z=" +
            std::to_string(z));
    }
    return out;
}

bool levy_in_support(const LevyMeasureSpec& measure, double z) {
    return std::visit(
        [&](const auto& d) -> bool {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformLevy>) {
                return d.rate > 0.0 && std::abs(z) < d.half_width && z != 0.0;
            } else {
                return d.rate > 0.0 && z != 0.0;
            }
        },
        measure);
}

double levy_density(const LevyMeasureSpec& measure, double z) {
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformLevy>) {
                return (std::abs(z) < d.half_width) ? d.rate : 0.0;
            } else {
                if (z > 0.0)
                    return d.rate * d.p * d.eta1 * std::exp(-d.eta1 * z);
                if (z < 0.0)
                    return d.rate * (1.0 - d.p) * d.eta2 *
                           std::exp(-d.eta2 * std::abs(z));
                return 0.0;
            }
        },
        measure);
}

double levy_grad_log(const LevyMeasureSpec& measure, double z) {
    if (!levy_in_support(measure, z)) {
        throw ModelEvalError("grad-log density requested outside the support");
    }
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformLevy>) {
                return 0.0;
            } else {
                return z > 0.0 ? -d.eta1 : d.eta2;
            }
        },
        measure);
}

double levy_total_intensity(const LevyMeasureSpec& measure) {
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformLevy>) {
                return d.rate * 2.0 * d.half_width;
            } else {
                return d.rate;
            }
        },
        measure);
}

double levy_quadratic_mass(const LevyMeasureSpec& measure) {
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformLevy>) {
                const double a = std::min(d.half_width, 1.0);
                const double tail = std::max(d.half_width - 1.0, 0.0);
                return d.rate * (2.0 * a * a * a / 3.0 + 2.0 * tail);
            } else {
                if (d.rate == 0.0) return 0.0;
                const LevyMeasureSpec& m = measure;
                auto f = [&m](double z) {
                    return std::min(1.0, z * z) * levy_density(m, z);
                };
                const double zmax = levy_support_bound(m);
                double total = 0.0;
                // Split at the kink of min(1, z^2).
                for (double side : {-1.0, 1.0}) {
                    const double inner = std::min(1.0, zmax);
                    total += adaptive_simpson(f, 0.0, side * inner, 1e-10) *
                             side;
                    if (zmax > 1.0) {
                        total += adaptive_simpson(f, side * 1.0, side * zmax,
                                                  1e-10) *
                                 side;
                    }
                }
                return total;
            }
        },
        measure);
}

double levy_support_bound(const LevyMeasureSpec& measure) {
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformLevy>) {
                return d.half_width;
            } else {
                return 30.0 / std::min(d.eta1, d.eta2);
            }
        },
        measure);
}

double sample_jump_size(const LevyMeasureSpec& measure, CounterRng& rng) {
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformLevy>) {
                return (2.0 * rng.uniform() - 1.0) * d.half_width;
            } else {
                const bool up = rng.uniform() < d.p;
                const double mag = rng.exponential(up ? d.eta1 : d.eta2);
                return up ? mag : -mag;
            }
        },
        measure);
}

std::vector<double> sample_jumps(const LevyMeasureSpec& measure, double dt,
                                 CounterRng& rng) {
    const double intensity = levy_total_intensity(measure);
    std::vector<double> sizes;
    if (intensity <= 0.0) return sizes;
    const int count = rng.poisson(intensity * dt);
    sizes.reserve(count);
    for (int i = 0; i < count; ++i) {
        sizes.push_back(sample_jump_size(measure, rng));
    }
    return sizes;
}

double eval_payoff(const PayoffSpec& payoff, std::span<const double> x) {
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PutPayoff>) {
                if (x.size() != 1) throw ConfigError("put payoff expects d=1");
                return std::max(p.strike - x[0], 0.0);
            } else if constexpr (std::is_same_v<T, MaxPutPayoff>) {
                if (x.empty()) throw ConfigError("empty state for max-put");
                double mx = x[0];
                for (double v : x) mx = std::max(mx, v);
                return std::max(p.strike - mx, 0.0);
            } else {
                if (p.weights.size() != x.size()) {
                    throw ConfigError("basket weight/state size mismatch");
                }
                double s = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i)
                    s += p.weights[i] * x[i];
                const double sv[1] = {s};
                return eval_payoff(*p.inner, std::span<const double>(sv, 1));
            }
        },
        payoff);
}

void ModelSpec::validate() const {
    if (dimension < 1 || dimension > 2) {
        throw ConfigError("model dimension must be 1 or 2");
    }
    if (static_cast<int>(initial_state.size()) != dimension ||
        static_cast<int>(assets.size()) != dimension) {
        throw ConfigError("model arrays do not match the dimension");
    }
}

}  // namespace mmc
