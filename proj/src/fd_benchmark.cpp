#include "mmc/fd_benchmark.hpp"

#include <algorithm>
#include <cmath>

#include "mmc/errors.hpp"

namespace mmc {

double MomentCurve::at(double t) const {
    if (values.empty()) throw ConfigError("empty moment curve");
    if (t <= 0.0) return values.front();
    if (t >= horizon) return values.back();
    const double pos = t / horizon * (values.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    return values[i] + w * (values[i + 1] - values[i]);
}

MomentCurve solve_moment_ode(const CoefficientSpec& drift, double x0,
                             double horizon, int steps) {
    const auto* affine = std::get_if<AffineCoefficient>(&drift);
    if (!affine) {
        throw UnsupportedModelError(
            "moment decoupling needs an affine drift");
    }
    const double growth = affine->state + affine->mean;
    const double shift = affine->constant;
    auto rhs = [&](double m) { return growth * m + shift; };

    MomentCurve curve;
    curve.horizon = horizon;
    curve.values.resize(steps + 1);
    curve.values[0] = x0;
    const double h = horizon / steps;
    double m = x0;
    for (int i = 0; i < steps; ++i) {
        const double k1 = rhs(m);
        const double k2 = rhs(m + 0.5 * h * k1);
        const double k3 = rhs(m + 0.5 * h * k2);
        const double k4 = rhs(m + h * k3);
        m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        curve.values[i + 1] = m;
    }
    return curve;
}

namespace {

// Thomas algorithm; `b` is overwritten.
void solve_tridiagonal(std::vector<double>& a, std::vector<double>& b,
                       std::vector<double>& c, std::vector<double>& rhs) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] = (rhs[i] - c[i] * rhs[i + 1]) / b[i];
    }
}

double interp_value(const std::vector<double>& x, const std::vector<double>& v,
                    double xq, int& clamped) {
    if (xq <= x.front()) {
        ++clamped;
        return v.front();
    }
    if (xq >= x.back()) {
        ++clamped;
        return v.back();
    }
    const double dx = x[1] - x[0];
    const std::size_t i = static_cast<std::size_t>((xq - x.front()) / dx);
    const std::size_t j = std::min(i, x.size() - 2);
    const double w = (xq - x[j]) / dx;
    return v[j] + w * (v[j + 1] - v[j]);
}

}  // namespace

FdResult solve_american_pide(const AssetDynamics& dynamics,
                             const LevyMeasureSpec& measure,
                             const PayoffSpec& payoff, const MarketSpec& market,
                             double x0, FdGrid grid, const MomentCurve& moments,
                             int quad_nodes, bool american) {
    if (grid.x_max <= grid.x_min) {
        double peak = std::max(x0, 1.0);
        for (double m : moments.values) peak = std::max(peak, std::abs(m));
        double strike = 0.0;
        if (const auto* put = std::get_if<PutPayoff>(&payoff)) {
            strike = put->strike;
        }
        grid.x_max = 4.0 * std::max(strike, peak);
    }
    const int j_count = grid.nodes;
    const int n_t = grid.time_steps;
    const double dx = (grid.x_max - grid.x_min) / j_count;
    const double dt = market.horizon / n_t;

    FdResult out;
    out.x.resize(j_count + 1);
    for (int j = 0; j <= j_count; ++j) out.x[j] = grid.x_min + j * dx;

    auto payoff_at = [&](double x) {
        const double xv[1] = {x};
        return eval_payoff(payoff, std::span<const double>(xv, 1));
    };

    std::vector<double> phi(j_count + 1);
    for (int j = 0; j <= j_count; ++j) phi[j] = payoff_at(out.x[j]);

    const ZQuadrature quad = ZQuadrature::build(measure, quad_nodes);
    const double intensity = quad.total_intensity();

    std::vector<double> v = phi;
    std::vector<double> vnew(j_count + 1);
    std::vector<double> lower(j_count - 1), diag(j_count - 1),
        upper(j_count - 1), rhs(j_count - 1);

    const double blowup = 10.0 * (std::abs(grid.x_max) +
                                  std::abs(grid.x_min) + phi[0] + 1.0);

    for (int step = n_t - 1; step >= 0; --step) {
        const double t_new = (step + 1) * dt;   // known layer
        const double t_mid = (step + 0.5) * dt;
        // Rannacher start: fully implicit on the first few layers after the
        // payoff kink.
        const double theta = (step >= n_t - 4) ? 1.0 : 0.5;
        const double m_mid = moments.at(t_mid);
        const double m_new = moments.at(t_new);

        // Explicit jump part from the known layer.
        std::vector<double> jump_term(j_count + 1, 0.0);
        if (!quad.nodes.empty()) {
            for (int j = 0; j <= j_count; ++j) {
                const double x = out.x[j];
                double acc = 0.0;
                for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
                    const double amp = eval_jump(dynamics.jump, t_new, x,
                                                 quad.nodes[q], m_new)
                                           .value;
                    acc += quad.weights[q] *
                           interp_value(out.x, v, x + amp, out.clamped_shifts);
                }
                jump_term[j] = acc;
            }
        }

        // Interior rows.
        for (int j = 1; j < j_count; ++j) {
            const double x = out.x[j];
            const double drift =
                eval_coefficient(dynamics.drift, t_mid, x, m_mid).value;
            const double sigma =
                eval_coefficient(dynamics.diffusion, t_mid, x, m_mid).value;
            double amp_mass = 0.0;
            for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
                amp_mass += quad.weights[q] *
                            eval_jump(dynamics.jump, t_mid, x, quad.nodes[q],
                                      m_mid)
                                .value;
            }
            const double conv = drift - amp_mass;  // compensator folded in
            const double diff = 0.5 * sigma * sigma;

            // Central difference unless convection dominates the cell.
            double cl, cc, cu;
            if (std::abs(conv) * dx > 2.0 * diff) {
                if (conv >= 0.0) {
                    cl = diff / (dx * dx);
                    cc = -2.0 * diff / (dx * dx) - conv / dx;
                    cu = diff / (dx * dx) + conv / dx;
                } else {
                    cl = diff / (dx * dx) - conv / dx;
                    cc = -2.0 * diff / (dx * dx) + conv / dx;
                    cu = diff / (dx * dx);
                }
            } else {
                cl = diff / (dx * dx) - 0.5 * conv / dx;
                cc = -2.0 * diff / (dx * dx);
                cu = diff / (dx * dx) + 0.5 * conv / dx;
            }
            cc -= market.rate + intensity;

            lower[j - 1] = -theta * dt * cl;
            diag[j - 1] = 1.0 - theta * dt * cc;
            upper[j - 1] = -theta * dt * cu;

            const double explicit_part =
                (1.0 - theta) * dt *
                (cl * v[j - 1] + cc * v[j] + cu * v[j + 1]);
            rhs[j - 1] = v[j] + explicit_part + dt * jump_term[j];
        }

        // Dirichlet boundaries: intrinsic deep in the money, zero far out.
        vnew[0] = phi[0];
        vnew[j_count] = phi[j_count];
        rhs[0] -= lower[0] * vnew[0];
        rhs[j_count - 2] -= upper[j_count - 2] * vnew[j_count];

        std::vector<double> a = lower, b = diag, c = upper, r = rhs;
        solve_tridiagonal(a, b, c, r);
        for (int j = 1; j < j_count; ++j) vnew[j] = r[j - 1];

        if (american) {
            for (int j = 0; j <= j_count; ++j) {
                vnew[j] = std::max(vnew[j], phi[j]);
            }
        }
        for (int j = 0; j <= j_count; ++j) {
            if (!std::isfinite(vnew[j]) || std::abs(vnew[j]) > blowup) {
                throw FdInstabilityError(
                    "value blow-up; refine the grid or shrink the time step");
            }
        }
        v.swap(vnew);
    }

    out.value = v;
    int clamp_unused = 0;
    out.price = interp_value(out.x, v, x0, clamp_unused);
    return out;
}

}  // namespace mmc
