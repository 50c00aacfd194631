#include <doctest.h>

#include <cmath>

#include "mmc/errors.hpp"
#include "mmc/numerics.hpp"
#include "mmc/weights.hpp"
#include "test_support.hpp"

using namespace mmc;

namespace {

JumpCoefficientSpec affine_in_z_jump(double base, double state_coef) {
    AffineInZJump j;
    j.base = AffineCoefficient{0.0, 0.0, base};
    j.state_coef = state_coef;
    return j;
}

struct Prepared {
    PathBundle bundle;
    WeightAccumulator acc;
    std::vector<ZQuadrature> quads;
    std::vector<double> masses;
};

Prepared prepare(const PricingConfig& cfg, int n, int m, std::uint64_t seed) {
    Prepared p;
    const TimeGrid grid{n, cfg.market.horizon};
    const SimOptions opts{1, cfg.quad_nodes};
    p.bundle = simulate_ensemble(cfg.model, cfg.measures, grid, m, seed, opts);
    for (int a = 0; a < cfg.model.dimension; ++a) {
        p.quads.push_back(ZQuadrature::build(cfg.measures[a], cfg.quad_nodes));
        p.masses.push_back(levy_quadratic_mass(cfg.measures[a]));
    }
    p.acc = accumulate_weights(p.bundle, cfg.model, cfg.measures, p.quads);
    return p;
}

}  // namespace

TEST_CASE("kernel closed forms") {
    SUBCASE("constant mark derivative, flat density") {
        // Amplitude base*z + lam*x with base 1: only the derivative of
        // min(1, z^2) survives, so the kernel is 2 z (1 + lam) / base
        // inside |z| <= 1.  Odd in the mark.
        const JumpCoefficientSpec j = affine_in_z_jump(1.0, 0.0);
        const LevyMeasureSpec wide = UniformLevy{1.0, 1.0};
        CHECK(malliavin_kernel(j, wide, 0.1, 2.0, 0.5, 1.0) ==
              doctest::Approx(1.0).epsilon(1e-14));
        CHECK(malliavin_kernel(j, wide, 0.1, 2.0, -0.5, 1.0) ==
              doctest::Approx(-1.0).epsilon(1e-14));
        const LevyMeasureSpec narrow = UniformLevy{0.5, 1.0};
        CHECK(malliavin_kernel(j, narrow, 0.1, 2.0, 0.4, 1.0) ==
              doctest::Approx(0.8).epsilon(1e-13));
        // Nonzero state coefficient scales by (1 + lam).
        const JumpCoefficientSpec j2 = affine_in_z_jump(1.0, 0.1);
        CHECK(malliavin_kernel(j2, wide, 0.1, 2.0, 0.5, 1.0) ==
              doctest::Approx(1.1).epsilon(1e-13));
    }
    SUBCASE("squared-mark amplitude under the Kou law") {
        // Symbolic substitution for 0 < z <= 1: g = z^2, d/dz amp = 2z,
        // second derivative 2, so
        // kernel = (z/2)(grad_log - 1/z) + 1 = (z/2) grad_log + 1/2.
        const JumpCoefficientSpec j = PureAmplitudeJump{};
        const LevyMeasureSpec kou = KouLevy{1.0, 0.6, 10.0, 5.0};
        const double z = 0.2;
        const double grad_log = -10.0;
        const double expected = (z / 2.0) * grad_log + 0.5;
        CHECK(expected == doctest::Approx(-0.5).epsilon(1e-14));
        CHECK(malliavin_kernel(j, kou, 0.0, 1.0, z, 0.0) ==
              doctest::Approx(expected).epsilon(1e-13));
    }
    SUBCASE("singular mark derivative propagates") {
        const JumpCoefficientSpec j = LinearMeanFieldJump{1.0};
        const LevyMeasureSpec uni = UniformLevy{0.5, 1.0};
        CHECK_THROWS_AS(malliavin_kernel(j, uni, 0.0, -2.0, 0.2, 2.0),
                        SingularJumpCoefficientError);
    }
    SUBCASE("marks outside the support are a contract violation") {
        const JumpCoefficientSpec j = PureAmplitudeJump{};
        const LevyMeasureSpec uni = UniformLevy{0.5, 1.0};
        CHECK_THROWS_AS(malliavin_kernel(j, uni, 0.0, 1.0, 0.75, 0.0),
                        ModelEvalError);
    }
}

TEST_CASE("no jump activity leaves the accumulator at zero") {
    PricingConfig cfg = testkit::fixture_one();
    cfg.model.assets[0].jump = affine_in_z_jump(1.0, 0.0);
    cfg.measures[0] = UniformLevy{0.5, 0.0};
    const Prepared p = prepare(cfg, 8, 16, 4);
    for (double u : p.acc.running[0]) CHECK(u == 0.0);
    for (double s : p.acc.jump_sq[0]) CHECK(s == 0.0);
}

TEST_CASE("single injected jump with negligible compensator") {
    // Hand-built bundle: one jump on path 0 in the second step.  The rate is
    // tiny so the compensator term is far below the assertion tolerance.
    PathBundle b;
    b.dimension = 1;
    b.path_count = 2;
    b.grid = TimeGrid{2, 1.0};
    b.states = {{2.0, 2.0, 2.0, 2.0, 2.0, 2.0}};
    b.variations = {{1.0, 1.0, 1.0, 1.0, 1.0, 1.0}};
    b.mean_stats = {{2.0, 2.0, 2.0}};
    b.jumps.assign(1, std::vector<std::vector<JumpEvent>>(2));
    b.jumps[0][0].push_back({0.6, 0.25, 2.0, 1.5});

    ModelSpec model;
    model.dimension = 1;
    model.initial_state = {2.0};
    AssetDynamics dyn;
    dyn.drift = AffineCoefficient{};
    dyn.diffusion = AffineCoefficient{};
    dyn.jump = affine_in_z_jump(1.0, 0.0);
    model.assets = {dyn};

    const std::vector<LevyMeasureSpec> measures = {UniformLevy{0.5, 1e-300}};
    const std::vector<ZQuadrature> quads = {
        ZQuadrature::build(measures[0], 64)};
    const WeightAccumulator acc =
        accumulate_weights(b, model, measures, quads);

    const double kernel = 2.0 * 0.25;  // 2 z / base
    CHECK(acc.running[0][b.idx(0, 1)] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(acc.running[0][b.idx(0, 2)] ==
          doctest::Approx(1.5 * kernel).epsilon(1e-9));
    CHECK(acc.jump_sq[0][b.idx(0, 2)] == doctest::Approx(0.0625));
    CHECK(acc.running[0][b.idx(1, 2)] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("accumulated integral has zero mean") {
    for (double rate : {10.0, 20.0}) {
        PricingConfig cfg = testkit::fixture_one();
        cfg.measures[0] = UniformLevy{0.5, rate};
        const int m_count = 10000;
        const Prepared p = prepare(cfg, 32, m_count, 271828);
        std::vector<double> u_t(m_count);
        for (int m = 0; m < m_count; ++m) {
            u_t[m] = p.acc.running[0][p.bundle.idx(m, 32)];
        }
        const MeanVar mv = mean_var(u_t);
        CHECK(std::abs(mv.mean) <= 3.0 * mv.std_error());
    }
}

TEST_CASE("running accumulator telescopes to a direct evaluation") {
    const PricingConfig cfg = testkit::fixture_one();
    const Prepared p = prepare(cfg, 16, 64, 9);
    const double dt = p.bundle.grid.step();
    for (int m = 0; m < 64; ++m) {
        double direct = 0.0;
        for (const auto& ev : p.bundle.jumps[0][m]) {
            const int k = std::min(
                static_cast<int>(ev.time / dt), p.bundle.grid.n_steps - 1);
            direct += ev.pre_variation *
                      malliavin_kernel(cfg.model.assets[0].jump,
                                       cfg.measures[0], ev.time, ev.pre_state,
                                       ev.size, p.bundle.mean_stats[0][k]);
        }
        for (int k = 0; k < 16; ++k) {
            const double x = p.bundle.state(0, m, k);
            const double y = p.bundle.variation(0, m, k);
            const double mean = p.bundle.mean_stats[0][k];
            double comp = 0.0;
            for (std::size_t q = 0; q < p.quads[0].nodes.size(); ++q) {
                comp += p.quads[0].weights[q] *
                        malliavin_kernel(cfg.model.assets[0].jump,
                                         cfg.measures[0],
                                         p.bundle.grid.knot(k), x,
                                         p.quads[0].nodes[q], mean);
            }
            direct -= dt * y * comp;
        }
        const double incremental = p.acc.running[0][p.bundle.idx(m, 16)];
        CHECK(std::abs(incremental - direct) <=
              1e-12 * std::max(1.0, std::abs(direct)));
    }
}

TEST_CASE("generic pipeline matches a hand-specialized kernel") {
    // Amplitude base*z + lam*x with flat density: the kernel is the literal
    // constant-folded expression below, coded independently of the library.
    const double lam = 0.1;
    PricingConfig cfg = testkit::fixture_one();
    cfg.model.assets[0].jump = affine_in_z_jump(1.0, lam);
    cfg.measures[0] = UniformLevy{0.5, 10.0};
    const Prepared p = prepare(cfg, 16, 100, 55);

    auto special = [&](double z) {
        return 2.2 * z;  // 2 z (1 + lam) / base
    };
    const double dt = p.bundle.grid.step();
    for (int m = 0; m < 100; ++m) {
        double u = 0.0;
        std::size_t next = 0;
        const auto& events = p.bundle.jumps[0][m];
        for (int k = 0; k < 16; ++k) {
            const double t1 = p.bundle.grid.knot(k + 1);
            while (next < events.size() && events[next].time <= t1) {
                u += events[next].pre_variation * special(events[next].size);
                ++next;
            }
            double comp = 0.0;
            for (std::size_t q = 0; q < p.quads[0].nodes.size(); ++q) {
                comp += p.quads[0].weights[q] * special(p.quads[0].nodes[q]);
            }
            u -= dt * p.bundle.variation(0, m, k) * comp;
            const double pipeline = p.acc.running[0][p.bundle.idx(m, k + 1)];
            CHECK(std::abs(pipeline - u) <=
                  1e-8 * std::max(1.0, std::abs(u)));
        }
    }
}

TEST_CASE("window weights combine the accumulator and the variation") {
    const PricingConfig cfg = testkit::fixture_one();
    const Prepared p = prepare(cfg, 16, 128, 21);
    const int k = 8;
    const WindowWeights w =
        weights_for_window(p.bundle, p.acc, 0, k, p.masses[0]);
    CHECK(w.s == doctest::Approx(0.5));
    CHECK(w.t == doctest::Approx(0.5625));
    for (int m = 0; m < 128; ++m) {
        const double ys = p.bundle.variation(0, m, k);
        const double us = p.acc.running[0][p.bundle.idx(m, k)];
        const double ut = p.acc.running[0][p.bundle.idx(m, k + 1)];
        const double base = us / ys;
        const double window =
            (ut - us) / ((w.t - w.s) * p.masses[0] * ys);
        CHECK(w.base_weight[m] == doctest::Approx(base).epsilon(1e-14));
        CHECK(w.estimator_weight[m] ==
              doctest::Approx(base / (w.s * p.masses[0]) - window)
                  .epsilon(1e-12));
        const double expected_deriv =
            p.bundle.variation(0, m, k + 1) / ys *
            p.acc.jump_sq[0][p.bundle.idx(m, k)];
        CHECK(w.deriv_weight[m] ==
              doctest::Approx(expected_deriv).epsilon(1e-14));
    }
}

TEST_CASE("derivative-path weight vanishes without prior jumps") {
    PricingConfig cfg = testkit::fixture_one();
    cfg.measures[0] = UniformLevy{0.5, 0.0};
    cfg.model.assets[0].jump = affine_in_z_jump(1.0, 0.0);
    const Prepared p = prepare(cfg, 8, 32, 30);
    const WindowWeights w =
        weights_for_window(p.bundle, p.acc, 0, 4, 1.0 / 12.0);
    for (int m = 0; m < 32; ++m) {
        CHECK(w.deriv_weight[m] == 0.0);
        CHECK(w.estimator_weight[m] == 0.0);
        CHECK(w.base_weight[m] == 0.0);
    }
}

TEST_CASE("window weight preconditions") {
    const PricingConfig cfg = testkit::fixture_one();
    const Prepared p = prepare(cfg, 8, 16, 44);
    CHECK_THROWS_AS(weights_for_window(p.bundle, p.acc, 0, 0, 1.0),
                    ConfigError);
    CHECK_THROWS_AS(weights_for_window(p.bundle, p.acc, 0, 8, 1.0),
                    ConfigError);

    PathBundle broken = p.bundle;
    broken.variations[0][broken.idx(3, 4)] = 0.0;
    CHECK_THROWS_AS(weights_for_window(broken, p.acc, 0, 4, 1.0),
                    DegenerateVariationError);
}
