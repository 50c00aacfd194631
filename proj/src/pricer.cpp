#include "mmc/pricer.hpp"

#include <chrono>
#include <cmath>

#include "mmc/errors.hpp"
#include "mmc/numerics.hpp"
#include "mmc/weights.hpp"

namespace mmc {

namespace {

Localizer make_localizer(LocalizerKind kind, double rate) {
    switch (kind) {
        case LocalizerKind::Laplace:
            return LaplaceLocalizer{rate};
        case LocalizerKind::OneSidedExp:
            return OneSidedExpLocalizer{rate};
        default:
            return NoLocalizer{};
    }
}

std::vector<double> terminal_payoffs(const PricingConfig& cfg,
                                     const PathBundle& bundle) {
    std::vector<double> out(bundle.path_count);
    std::vector<double> x(bundle.dimension);
    for (int m = 0; m < bundle.path_count; ++m) {
        for (int a = 0; a < bundle.dimension; ++a) {
            x[a] = bundle.state(a, m, bundle.grid.n_steps);
        }
        out[m] = eval_payoff(cfg.payoff, x);
    }
    return out;
}

}  // namespace

PricingResult price_american(const PricingConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.model.validate();
    if (cfg.n_steps < 1 || cfg.path_count < 2) {
        throw ConfigError("pricing needs n_steps >= 1 and path_count >= 2");
    }

    const int d = cfg.model.dimension;
    const int n = cfg.n_steps;
    const int m_count = cfg.path_count;
    const TimeGrid grid{n, cfg.market.horizon};
    const double dt = grid.step();
    const double discount = std::exp(-cfg.market.rate * dt);

    const SimOptions sim_opts{cfg.threads, cfg.quad_nodes};
    const PathBundle bundle = simulate_ensemble(
        cfg.model, cfg.measures, grid, m_count, cfg.seed, sim_opts);

    std::vector<ZQuadrature> quads;
    std::vector<double> masses;
    for (int a = 0; a < d; ++a) {
        quads.push_back(ZQuadrature::build(cfg.measures[a], cfg.quad_nodes));
        masses.push_back(levy_quadratic_mass(cfg.measures[a]));
    }
    const WeightAccumulator acc = accumulate_weights(
        bundle, cfg.model, cfg.measures, quads, cfg.threads);

    PricingResult result;

    // Terminal condition.
    std::vector<double> value = terminal_payoffs(cfg, bundle);
    std::vector<double> intrinsic(m_count);
    std::vector<double> values_sq(m_count);

    for (int k = n - 1; k >= 1; --k) {
        for (int m = 0; m < m_count; ++m) {
            intrinsic[m] = eval_payoff(cfg.payoff, bundle.state_vector(m, k));
            values_sq[m] = value[m] * value[m];
        }

        std::vector<WindowWeights> windows;
        windows.reserve(d);
        for (int a = 0; a < d; ++a) {
            windows.push_back(
                weights_for_window(bundle, acc, a, k, masses[a]));
        }

        // Localizer rates for this step, one per asset.
        StepDiagnostics diag;
        diag.k = k;
        std::vector<Localizer> locs(d);
        if (cfg.localizer == LocalizerKind::None) {
            diag.localizer_rate.assign(d, 0.0);
        } else if (cfg.fixed_rate > 0.0) {
            diag.localizer_rate.assign(d, cfg.fixed_rate);
            for (int a = 0; a < d; ++a) {
                locs[a] = make_localizer(cfg.localizer, cfg.fixed_rate);
            }
        } else {
            try {
                if (d == 1) {
                    const double rate = estimate_localizer_rate(
                        values_sq, windows[0].estimator_weight,
                        cfg.rate_bounds);
                    diag.localizer_rate.assign(1, rate);
                    locs[0] = make_localizer(cfg.localizer, rate);
                } else {
                    std::vector<std::span<const double>> wspans;
                    for (int a = 0; a < d; ++a) {
                        wspans.emplace_back(windows[a].estimator_weight);
                    }
                    const MultiRateResult rates = solve_localizer_rates(
                        values_sq, wspans, cfg.rate_bounds);
                    diag.localizer_rate = rates.rates;
                    for (int a = 0; a < d; ++a) {
                        locs[a] = make_localizer(cfg.localizer,
                                                 rates.rates[a]);
                    }
                }
            } catch (const LocalizationDegenerateError&) {
                // All continuation values vanished; drop the localizer.
                diag.localizer_rate.assign(d, 0.0);
                for (int a = 0; a < d; ++a) locs[a] = NoLocalizer{};
            }
        }

        EstimatorOutput est;
        if (d == 1) {
            std::vector<double> g(m_count);
            for (int m = 0; m < m_count; ++m) g[m] = bundle.state(0, m, k);
            EstimatorInput in;
            in.conditioning = g;
            in.target = value;
            in.weight = windows[0].estimator_weight;
            in.localizer = locs[0];
            in.heaviside_offset = cfg.heaviside_offset;
            in.floor_scale = cfg.floor_scale;
            est = estimate_all_sorted(in);
        } else {
            ProductEstimatorInput in;
            in.target = value;
            std::vector<std::vector<double>> g(d,
                                               std::vector<double>(m_count));
            for (int a = 0; a < d; ++a) {
                for (int m = 0; m < m_count; ++m) {
                    g[a][m] = bundle.state(a, m, k);
                }
                in.conditioning.emplace_back(g[a]);
                in.weight.emplace_back(windows[a].estimator_weight);
            }
            in.localizer = locs;
            in.heaviside_offset = cfg.heaviside_offset;
            in.floor_scale = cfg.floor_scale;
            est = estimate_all_product(in, cfg.threads);
        }

        // The conditional mean of the next-step values must lie in their
        // convex hull, and its denominator estimates a nonnegative density.
        // Estimates violating either are statistical failures of the signed
        // weight part; for those the localizer-only ratio (a nonnegative
        // kernel smoother) is a stable backstop.  Flagged degenerate
        // denominators keep the intrinsic substitution.
        double value_lo = value[0], value_hi = value[0];
        for (int m = 1; m < m_count; ++m) {
            value_lo = std::min(value_lo, value[m]);
            value_hi = std::max(value_hi, value[m]);
        }
        int fallbacks = 0;
        int rejected_count = 0;
        for (int m = 0; m < m_count; ++m) {
            if (est.fallback[m]) {
                ++fallbacks;
                value[m] = intrinsic[m];
                continue;
            }
            double cont = est.estimate[m];
            const bool rejected = est.denominator[m] <= 0.0 ||
                                  cont < value_lo || cont > value_hi;
            if (rejected) {
                ++rejected_count;
                if (est.psi_denominator[m] > 0.0) {
                    cont = est.psi_numerator[m] / est.psi_denominator[m];
                } else {
                    ++fallbacks;
                    value[m] = intrinsic[m];
                    continue;
                }
            }
            value[m] = std::max(intrinsic[m], discount * cont);
        }
        diag.fallback_count = fallbacks;
        diag.rejected_count = rejected_count;
        result.fallback_total += fallbacks;
        if (fallbacks > cfg.max_fallback_fraction * m_count) {
            throw EstimatorBreakdownError(
                "denominator fallback on " + std::to_string(fallbacks) +
                " of " + std::to_string(m_count) + " paths at step " +
                std::to_string(k));
        }
        result.steps.push_back(std::move(diag));
        if (cfg.record_continuation) result.continuation.push_back(value);
    }

    double mean_first = 0.0;
    for (int m = 0; m < m_count; ++m) mean_first += value[m];
    mean_first /= m_count;
    const double intrinsic_now =
        eval_payoff(cfg.payoff, cfg.model.initial_state);
    result.price = std::max(intrinsic_now, discount * mean_first);

    result.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
    return result;
}

PricingResult price_european(const PricingConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.model.validate();
    const TimeGrid grid{cfg.n_steps, cfg.market.horizon};
    const SimOptions sim_opts{cfg.threads, cfg.quad_nodes};
    const PathBundle bundle = simulate_ensemble(
        cfg.model, cfg.measures, grid, cfg.path_count, cfg.seed, sim_opts);
    const std::vector<double> payoff = terminal_payoffs(cfg, bundle);
    double mean = 0.0;
    for (double p : payoff) mean += p;
    mean /= cfg.path_count;

    PricingResult result;
    result.price = std::exp(-cfg.market.rate * cfg.market.horizon) * mean;
    result.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
    return result;
}

}  // namespace mmc
