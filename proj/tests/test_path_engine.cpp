#include <doctest.h>

#include <cmath>

#include "mmc/errors.hpp"
#include "mmc/numerics.hpp"
#include "mmc/path_engine.hpp"
#include "test_support.hpp"

using namespace mmc;

namespace {

PathBundle simulate(const PricingConfig& cfg, int n, int m,
                    std::uint64_t seed, int threads = 1) {
    const TimeGrid grid{n, cfg.market.horizon};
    const SimOptions opts{threads, cfg.quad_nodes};
    return simulate_ensemble(cfg.model, cfg.measures, grid, m, seed, opts);
}

}  // namespace

TEST_CASE("zero coefficients freeze state and variation") {
    PricingConfig cfg = testkit::fixture_one();
    cfg.model.assets[0].drift = AffineCoefficient{};
    cfg.model.assets[0].diffusion = AffineCoefficient{};
    cfg.measures[0] = UniformLevy{0.5, 0.0};
    cfg.model.initial_state = {3.5};
    const PathBundle b = simulate(cfg, 8, 4, 11);
    for (int m = 0; m < 4; ++m) {
        for (int k = 0; k <= 8; ++k) {
            CHECK(b.state(0, m, k) == 3.5);
            CHECK(b.variation(0, m, k) == 1.0);
        }
    }
    for (int k = 0; k <= 8; ++k) CHECK(b.mean_stats[0][k] == 3.5);
}

TEST_CASE("noise-free mean-field drift follows the closed mean equation") {
    // Drift (mean + state), no diffusion, no jumps: every path solves the
    // self-consistent deterministic equation and the ensemble mean doubles
    // its growth rate.
    PricingConfig cfg = testkit::fixture_one();
    cfg.model.assets[0].diffusion = AffineCoefficient{};
    cfg.measures[0] = UniformLevy{0.5, 0.0};
    const int n = 4096;
    const PathBundle b = simulate(cfg, n, 16, 3);
    const double oracle = testkit::rk4_ode(
        [](double, double m) { return 2.0 * m; }, 1.0, 1.0, 4096);
    CHECK(oracle == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
    for (int m = 0; m < 16; ++m) {
        CHECK(b.state(0, m, n) == doctest::Approx(oracle).epsilon(2e-3));
        CHECK(b.state(0, m, n) == b.state(0, 0, n));
    }
}

TEST_CASE("first variation is a unit-mean martingale when A and M vanish") {
    const PricingConfig cfg = testkit::fixture_two();
    const int m_count = 10000;
    const PathBundle b = simulate(cfg, 64, m_count, 99);
    std::vector<double> y_t(m_count);
    for (int m = 0; m < m_count; ++m) y_t[m] = b.variation(0, m, 64);
    const MeanVar mv = mean_var(y_t);
    CHECK(std::abs(mv.mean - 1.0) <= 3.0 * mv.std_error());
}

TEST_CASE("identical seed gives bit-identical bundles across thread counts") {
    const PricingConfig cfg = testkit::fixture_one();
    const PathBundle ref = simulate(cfg, 16, 200, 7, 1);
    for (int threads : {3, 8}) {
        const PathBundle b = simulate(cfg, 16, 200, 7, threads);
        CHECK(b.states[0] == ref.states[0]);
        CHECK(b.variations[0] == ref.variations[0]);
        CHECK(b.mean_stats[0] == ref.mean_stats[0]);
        REQUIRE(b.jumps[0].size() == ref.jumps[0].size());
        for (std::size_t m = 0; m < ref.jumps[0].size(); ++m) {
            REQUIRE(b.jumps[0][m].size() == ref.jumps[0][m].size());
            for (std::size_t j = 0; j < ref.jumps[0][m].size(); ++j) {
                CHECK(b.jumps[0][m][j].time == ref.jumps[0][m][j].time);
                CHECK(b.jumps[0][m][j].size == ref.jumps[0][m][j].size);
                CHECK(b.jumps[0][m][j].pre_state ==
                      ref.jumps[0][m][j].pre_state);
            }
        }
    }
}

TEST_CASE("terminal error halves when the step halves") {
    // Plain linear growth plus small multiplicative noise, so the O(step)
    // drift bias dominates.  The exact solution conditioned on each path's
    // own Brownian total removes all sampling noise from the comparison.
    PricingConfig cfg = testkit::fixture_one();
    cfg.model.assets[0].drift = AffineCoefficient{1.0, 0.0, 0.0};
    cfg.model.assets[0].diffusion = AffineCoefficient{0.1, 0.0, 0.0};
    cfg.measures[0] = UniformLevy{0.5, 0.0};

    const double a = 1.0, vol = 0.1;
    auto rms_error = [&](int n) {
        const PathBundle b = simulate(cfg, n, 1000, 2718);
        const double dt = b.grid.step();
        double ss = 0.0;
        for (int m = 0; m < b.path_count; ++m) {
            double w_total = 0.0;
            for (int k = 0; k < n; ++k) {
                const double ratio = b.state(0, m, k + 1) / b.state(0, m, k);
                w_total += (ratio - 1.0 - a * dt) / vol;
            }
            const double exact =
                std::exp((a - 0.5 * vol * vol) * 1.0 + vol * w_total);
            const double err = b.state(0, m, n) - exact;
            ss += err * err;
        }
        return std::sqrt(ss / b.path_count);
    };

    const double coarse = rms_error(32);
    const double fine = rms_error(64);
    const double ratio = fine / coarse;
    CHECK(ratio > 0.35);
    CHECK(ratio < 0.65);
}

TEST_CASE("ensemble mean tracks the moment equation at every knot") {
    struct Case {
        PricingConfig cfg;
        double growth;
    };
    const Case cases[] = {{testkit::fixture_one(), 2.0},
                          {testkit::fixture_two(), -1.0}};
    for (const Case& c : cases) {
        const int m_count = 10000;
        // Fine enough that the O(step) Euler bias on the mean stays well
        // below the 3-SE noise gate.
        const int n = 256;
        const PathBundle b = simulate(c.cfg, n, m_count, 31415);
        const double x0 = c.cfg.model.initial_state[0];
        for (int k = 1; k <= n; ++k) {
            const double t = b.grid.knot(k);
            const double target = testkit::rk4_ode(
                [&](double, double m) { return c.growth * m; }, x0, t, 256);
            std::vector<double> xs(m_count);
            for (int m = 0; m < m_count; ++m) xs[m] = b.state(0, m, k);
            const MeanVar mv = mean_var(xs);
            CHECK(std::abs(mv.mean - target) <= 3.0 * mv.std_error());
        }
    }
}

TEST_CASE("truncated horizon replays the same prefix") {
    const PricingConfig cfg = testkit::fixture_one();
    PricingConfig half = cfg;
    half.market.horizon = 0.5;
    const PathBundle full = simulate(cfg, 8, 64, 5);
    const PathBundle prefix = simulate(half, 4, 64, 5);
    for (int m = 0; m < 64; ++m) {
        for (int k = 0; k <= 4; ++k) {
            CHECK(prefix.state(0, m, k) == full.state(0, m, k));
            CHECK(prefix.variation(0, m, k) == full.variation(0, m, k));
        }
    }
    for (int k = 0; k <= 4; ++k) {
        CHECK(prefix.mean_stats[0][k] == full.mean_stats[0][k]);
    }
}

TEST_CASE("shipped fixtures keep the variation factors positive") {
    for (const PricingConfig& cfg :
         {testkit::fixture_one(), testkit::fixture_two(),
          testkit::fixture_portfolio(0.5, 0.5)}) {
        CHECK_NOTHROW(simulate(cfg, 64, 500, 2));
    }
}

TEST_CASE("a jump factor at or below zero aborts the path set") {
    PricingConfig cfg = testkit::fixture_one();
    // State derivative of the amplitude is c*z; with c = 3 and |z| up to
    // 0.9 the factor 1 + c*z goes negative.
    cfg.model.assets[0].jump = LinearMeanFieldJump{3.0};
    cfg.measures[0] = UniformLevy{0.9, 50.0};
    CHECK_THROWS_AS(simulate(cfg, 4, 50, 123), DegenerateVariationError);
}

TEST_CASE("two-asset bundle keeps per-asset means and jumps separated") {
    const PricingConfig cfg = testkit::fixture_portfolio(0.5, 0.5);
    const PathBundle b = simulate(cfg, 16, 400, 77);
    CHECK(b.dimension == 2);
    CHECK(b.mean_stats[0][0] == doctest::Approx(1.0));
    CHECK(b.mean_stats[1][0] == doctest::Approx(10.0));
    for (int m = 0; m < b.path_count; ++m) {
        for (const auto& ev : b.jumps[0][m]) {
            CHECK(std::abs(ev.size) < 0.5);
        }
    }
}
