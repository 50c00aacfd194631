#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mmc/cond_expect.hpp"
#include "mmc/errors.hpp"
#include "mmc/path_engine.hpp"
#include "mmc/rng.hpp"
#include "test_support.hpp"

using namespace mmc;

namespace {

struct Fixture {
    std::vector<double> g, f, w;
};

Fixture random_fixture(CounterRng& rng, std::size_t m, bool with_ties) {
    Fixture fx;
    fx.g.resize(m);
    fx.f.resize(m);
    fx.w.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        fx.g[i] = 10.0 * (rng.uniform() - 0.5);
        fx.f[i] = 5.0 * rng.uniform();
        fx.w[i] = 4.0 * (rng.uniform() - 0.5);
    }
    if (with_ties && m >= 4) {
        fx.g[1] = fx.g[0];
        fx.g[m - 1] = fx.g[m - 2];
    }
    return fx;
}

Localizer random_localizer(CounterRng& rng, int kind) {
    const double rate = std::exp(-1.0 + 4.0 * rng.uniform());
    switch (kind) {
        case 0:
            return NoLocalizer{};
        case 1:
            return LaplaceLocalizer{rate};
        default:
            return OneSidedExpLocalizer{rate};
    }
}

}  // namespace

TEST_CASE("constant targets are returned exactly") {
    CounterRng rng(1001, 0);
    for (int rep = 0; rep < 100; ++rep) {
        Fixture fx = random_fixture(rng, 128, rep % 3 == 0);
        std::fill(fx.f.begin(), fx.f.end(), 7.0);
        EstimatorInput in;
        in.conditioning = fx.g;
        in.target = fx.f;
        in.weight = fx.w;
        in.localizer = random_localizer(rng, rep % 3);
        const double alpha = fx.g[rep % fx.g.size()];
        const RatioEstimate naive = estimate_naive(in, alpha);
        if (!naive.fallback) {
            CHECK(naive.estimate == doctest::Approx(7.0).epsilon(1e-12));
        }
        const EstimatorOutput all = estimate_all_sorted(in);
        for (std::size_t mpath = 0; mpath < fx.g.size(); ++mpath) {
            if (!all.fallback[mpath]) {
                CHECK(all.estimate[mpath] ==
                      doctest::Approx(7.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("no localizer with unit weights reduces to a cut average") {
    CounterRng rng(1002, 0);
    Fixture fx = random_fixture(rng, 64, false);
    std::fill(fx.w.begin(), fx.w.end(), 1.0);
    EstimatorInput in;
    in.conditioning = fx.g;
    in.target = fx.f;
    in.weight = fx.w;
    in.localizer = NoLocalizer{};
    const double alpha = testkit::median(fx.g);
    const RatioEstimate r = estimate_naive(in, alpha);
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < fx.g.size(); ++i) {
        if (fx.g[i] >= alpha) {
            sum += fx.f[i];
            ++count;
        }
    }
    REQUIRE(count > 0);
    CHECK(!r.fallback);
    CHECK(r.estimate == doctest::Approx(sum / count).epsilon(1e-14));
}

TEST_CASE("sorted evaluation matches the naive reference") {
    CounterRng rng(1003, 0);
    int fixtures = 0;
    for (std::size_t m : {8u, 64u, 512u}) {
        for (int rep = 0; rep < 17 && fixtures < 50; ++rep, ++fixtures) {
            const Fixture fx = random_fixture(rng, m, rep % 2 == 0);
            for (int kind = 0; kind < 3; ++kind) {
                EstimatorInput in;
                in.conditioning = fx.g;
                in.target = fx.f;
                in.weight = fx.w;
                in.localizer = random_localizer(rng, kind);
                const EstimatorOutput all = estimate_all_sorted(in);
                for (std::size_t i = 0; i < m; ++i) {
                    const RatioEstimate ref = estimate_naive(in, fx.g[i]);
                    CHECK(std::abs(all.numerator[i] - ref.numerator) <=
                          1e-10 * std::max(1.0, std::abs(ref.numerator)));
                    CHECK(std::abs(all.denominator[i] - ref.denominator) <=
                          1e-10 * std::max(1.0, std::abs(ref.denominator)));
                    CHECK(all.fallback[i] == (ref.fallback ? 1 : 0));
                    if (!ref.fallback) {
                        CHECK(std::abs(all.estimate[i] - ref.estimate) <=
                              1e-10 * std::max(1.0, std::abs(ref.estimate)));
                    }
                }
            }
        }
    }
}

TEST_CASE("identical conditioning values give one shared estimate") {
    const std::vector<double> g(16, 3.0);
    std::vector<double> f(16), w(16);
    CounterRng rng(1004, 0);
    for (int i = 0; i < 16; ++i) {
        f[i] = rng.uniform();
        w[i] = rng.uniform() - 0.5;
    }
    EstimatorInput in;
    in.conditioning = g;
    in.target = f;
    in.weight = w;
    in.localizer = LaplaceLocalizer{2.0};
    const EstimatorOutput all = estimate_all_sorted(in);
    for (int i = 1; i < 16; ++i) {
        CHECK(all.estimate[i] == doctest::Approx(all.estimate[0]));
    }
    const RatioEstimate ref = estimate_naive(in, 3.0);
    CHECK(all.estimate[0] == doctest::Approx(ref.estimate).epsilon(1e-12));
}

TEST_CASE("largest conditioning value sees only itself") {
    CounterRng rng(1005, 0);
    Fixture fx = random_fixture(rng, 32, false);
    std::fill(fx.w.begin(), fx.w.end(), 1.0);
    EstimatorInput in;
    in.conditioning = fx.g;
    in.target = fx.f;
    in.weight = fx.w;
    in.localizer = NoLocalizer{};
    const EstimatorOutput all = estimate_all_sorted(in);
    const std::size_t top = static_cast<std::size_t>(
        std::max_element(fx.g.begin(), fx.g.end()) - fx.g.begin());
    CHECK(all.estimate[top] ==
          doctest::Approx(fx.f[top]).epsilon(1e-14));
}

TEST_CASE("estimates are invariant under path permutation") {
    CounterRng rng(1006, 0);
    const Fixture fx = random_fixture(rng, 64, true);
    EstimatorInput in;
    in.conditioning = fx.g;
    in.target = fx.f;
    in.weight = fx.w;
    in.localizer = OneSidedExpLocalizer{1.3};
    const EstimatorOutput base = estimate_all_sorted(in);

    std::vector<std::size_t> perm(64);
    for (std::size_t i = 0; i < 64; ++i) perm[i] = (i * 29 + 13) % 64;
    Fixture shuffled;
    shuffled.g.resize(64);
    shuffled.f.resize(64);
    shuffled.w.resize(64);
    for (std::size_t i = 0; i < 64; ++i) {
        shuffled.g[i] = fx.g[perm[i]];
        shuffled.f[i] = fx.f[perm[i]];
        shuffled.w[i] = fx.w[perm[i]];
    }
    EstimatorInput in2;
    in2.conditioning = shuffled.g;
    in2.target = shuffled.f;
    in2.weight = shuffled.w;
    in2.localizer = in.localizer;
    const EstimatorOutput out = estimate_all_sorted(in2);
    for (std::size_t i = 0; i < 64; ++i) {
        CHECK(std::abs(out.estimate[i] - base.estimate[perm[i]]) <=
              1e-10 * std::max(1.0, std::abs(base.estimate[perm[i]])));
    }
}

TEST_CASE("raising the denominator floor never clears a fallback") {
    CounterRng rng(1007, 0);
    const Fixture fx = random_fixture(rng, 128, false);
    for (const double alpha : {fx.g[0], fx.g[5], 11.0}) {
        bool prev_fallback = false;
        for (const double floor : {1e-12, 1e-6, 1e-2, 1e2}) {
            EstimatorInput in;
            in.conditioning = fx.g;
            in.target = fx.f;
            in.weight = fx.w;
            in.localizer = LaplaceLocalizer{1.0};
            in.floor_scale = floor;
            const RatioEstimate r = estimate_naive(in, alpha);
            if (prev_fallback) CHECK(r.fallback);
            prev_fallback = r.fallback;
        }
    }
}

TEST_CASE("agrees with kernel regression on a lognormal fixture") {
    // Pure-diffusion reduction: no jumps, so the divergence weight vanishes
    // and the ratio estimator is an exponential-kernel regression.  The
    // localizer rate is pinned to match the Gaussian oracle's bandwidth.
    PricingConfig cfg = testkit::fixture_two();
    cfg.model.assets[0].drift = AffineCoefficient{};
    cfg.measures[0] = KouLevy{0.0, 0.6, 10.0, 5.0};
    const int n = 16, m_count = 4000, k = 8;
    const TimeGrid grid{n, 1.0};
    const PathBundle b = simulate_ensemble(cfg.model, cfg.measures, grid,
                                           m_count, 321, SimOptions{1, 64});

    std::vector<double> g(m_count), f(m_count);
    const double strike = 60.0;
    for (int m = 0; m < m_count; ++m) {
        g[m] = b.state(0, m, k);
        f[m] = std::max(strike - b.state(0, m, k + 1), 0.0);
    }
    const double alpha = testkit::median(g);
    const testkit::KernelFit fit = testkit::kernel_regression(g, f, alpha);

    EstimatorInput in;
    in.conditioning = g;
    in.target = f;
    const std::vector<double> zeros(m_count, 0.0);
    in.weight = zeros;
    in.localizer = LaplaceLocalizer{std::sqrt(2.0) / fit.bandwidth};
    const RatioEstimate r = estimate_naive(in, alpha);
    REQUIRE(!r.fallback);

    // Delta-method standard error of the ratio.
    double se_num = 0.0;
    for (int m = 0; m < m_count; ++m) {
        const PsiPair p = eval_localizer(in.localizer, g[m] - alpha);
        const double term = p.psi * (f[m] - r.estimate);
        se_num += term * term;
    }
    const double se_ratio =
        std::sqrt(se_num / m_count / m_count) / r.denominator;
    const double combined =
        std::sqrt(se_ratio * se_ratio + fit.std_error * fit.std_error);
    CHECK(std::abs(r.estimate - fit.value) <= 3.0 * combined);
}

TEST_CASE("product estimator matches a per-path direct evaluation") {
    CounterRng rng(1008, 0);
    const int m_count = 64;
    std::vector<double> f(m_count), g1(m_count), g2(m_count), w1(m_count),
        w2(m_count);
    for (int i = 0; i < m_count; ++i) {
        f[i] = rng.uniform() * 3.0;
        g1[i] = rng.normal();
        g2[i] = rng.normal() + 1.0;
        w1[i] = rng.normal();
        w2[i] = rng.normal();
    }
    ProductEstimatorInput in;
    in.target = f;
    in.conditioning = {g1, g2};
    in.weight = {w1, w2};
    in.localizer = {LaplaceLocalizer{1.0}, OneSidedExpLocalizer{2.0}};

    const EstimatorOutput out = estimate_all_product(in, 2);
    for (int i = 0; i < m_count; ++i) {
        double num = 0.0, den = 0.0;
        for (int l = 0; l < m_count; ++l) {
            double factor = 1.0;
            const double x1 = g1[l] - g1[i];
            const PsiPair p1 = eval_localizer(in.localizer[0], x1);
            factor *= p1.psi + w1[l] * ((x1 >= 0.0 ? 1.0 : 0.0) -
                                        p1.cumulative);
            const double x2 = g2[l] - g2[i];
            const PsiPair p2 = eval_localizer(in.localizer[1], x2);
            factor *= p2.psi + w2[l] * ((x2 >= 0.0 ? 1.0 : 0.0) -
                                        p2.cumulative);
            num += f[l] * factor;
            den += factor;
        }
        if (!out.fallback[i]) {
            CHECK(out.estimate[i] ==
                  doctest::Approx(num / den).epsilon(1e-12));
        }
        // Constant-target identity holds for the product form too.
        CHECK(out.numerator[i] ==
              doctest::Approx(num / m_count).epsilon(1e-12));
    }
}

TEST_CASE("too few paths are rejected") {
    const std::vector<double> one = {1.0};
    EstimatorInput in;
    in.conditioning = one;
    in.target = one;
    in.weight = one;
    in.localizer = NoLocalizer{};
    CHECK_THROWS_AS(estimate_naive(in, 0.5), ConfigError);
    CHECK_THROWS_AS(estimate_all_sorted(in), ConfigError);
}
