#include "mmc/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

#include "mmc/numerics.hpp"
#include "mmc/version.hpp"

namespace mmc {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct RepOutcome {
    bool ok = false;
    double price = 0.0;
    std::string error;
};

// Flattened (cell, replication) tasks drained by a small worker pool; each
// task prices single-threaded so results do not depend on the pool size.
std::vector<RepOutcome> run_grid(const ExperimentPlan& plan,
                                 const std::vector<std::pair<int, int>>& cells) {
    const int reps = plan.replications;
    std::vector<RepOutcome> outcomes(cells.size() * reps);
    std::atomic<std::size_t> cursor{0};
    const int workers =
        std::max(1, std::min<int>(plan.threads,
                                  static_cast<int>(outcomes.size())));
    auto drain = [&] {
        for (;;) {
            const std::size_t task = cursor.fetch_add(1);
            if (task >= outcomes.size()) break;
            const std::size_t cell = task / reps;
            const int rep = static_cast<int>(task % reps);
            PricingConfig cfg = plan.config.pricing;
            cfg.n_steps = cells[cell].first;
            cfg.path_count = cells[cell].second;
            cfg.seed = plan.seed + static_cast<std::uint64_t>(rep);
            cfg.threads = 1;
            RepOutcome& out = outcomes[task];
            try {
                out.price = price_american(cfg).price;
                out.ok = true;
            } catch (const std::exception& e) {
                out.error = e.what();
            }
        }
    };
    if (workers == 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
        for (auto& t : pool) t.join();
    }
    return outcomes;
}

double fd_benchmark_price(const ExperimentPlan& plan) {
    const PricingConfig& pc = plan.config.pricing;
    const MomentCurve moments =
        solve_moment_ode(pc.model.assets[0].drift, pc.model.initial_state[0],
                         pc.market.horizon, plan.config.fd.time_steps);
    const FdResult fd = solve_american_pide(
        pc.model.assets[0], pc.measures[0], pc.payoff, pc.market,
        pc.model.initial_state[0], plan.config.fd, moments, pc.quad_nodes);
    return fd.price;
}

}  // namespace

TableResult run_table(const ExperimentPlan& plan) {
    TableResult table;
    if (plan.config.pricing.model.dimension == 1) {
        table.has_fd = true;
        table.fd_price = fd_benchmark_price(plan);
    }

    std::vector<std::pair<int, int>> cells;
    for (int n : plan.n_list) {
        for (int mc : plan.mc_list) cells.emplace_back(n, mc);
    }
    const std::vector<RepOutcome> outcomes = run_grid(plan, cells);

    for (std::size_t c = 0; c < cells.size(); ++c) {
        CellResult cell;
        cell.n = cells[c].first;
        cell.mc = cells[c].second;
        std::vector<double> prices;
        std::string first_error;
        for (int r = 0; r < plan.replications; ++r) {
            const RepOutcome& o = outcomes[c * plan.replications + r];
            if (o.ok) {
                prices.push_back(o.price);
            } else if (first_error.empty()) {
                first_error = o.error;
            }
        }
        if (prices.empty()) {
            cell.error = first_error.empty() ? "no replication succeeded"
                                             : first_error;
            table.all_ok = false;
        } else {
            cell.ok = true;
            const MeanVar mv = mean_var(prices);
            cell.price_mean = mv.mean;
            cell.price_se = prices.size() > 1 ? mv.std_error() : 0.0;
            if (table.has_fd) {
                cell.abs_error = std::abs(mv.mean - table.fd_price);
                std::vector<double> abs_errors;
                abs_errors.reserve(prices.size());
                for (double p : prices) {
                    abs_errors.push_back(std::abs(p - table.fd_price));
                }
                const MeanVar emv = mean_var(abs_errors);
                cell.mean_abs_error = emv.mean;
                cell.se_abs_error =
                    abs_errors.size() > 1 ? emv.std_error() : 0.0;
            }
            if (!first_error.empty()) {
                cell.error = "partial: " + first_error;
            }
        }
        table.cells.push_back(std::move(cell));
    }
    return table;
}

std::string csv_header(const ExperimentPlan& plan) {
    std::ostringstream s;
    s << "# mmc " << kVersion << "\n";
    s << "# seed = " << plan.seed
      << ", replications = " << plan.replications << "\n";
    s << plan.config.echo("# ");
    return s.str();
}

std::string table_csv(const ExperimentPlan& plan, const TableResult& table) {
    std::ostringstream s;
    s << csv_header(plan);
    s << "N,MC,price,std_error,fd_price,abs_error,status\n";
    for (const CellResult& c : table.cells) {
        s << c.n << "," << c.mc << ",";
        if (c.ok) {
            s << fmt(c.price_mean) << ",";
            if (c.price_se > 0.0) s << fmt(c.price_se);
            s << ",";
            if (table.has_fd) {
                s << fmt(table.fd_price) << "," << fmt(c.abs_error);
            } else {
                s << ",";
            }
            s << "," << (c.error.empty() ? "ok" : c.error);
        } else {
            s << ",,,,\"" << c.error << "\"";
        }
        s << "\n";
    }
    return s.str();
}

std::string error_curve_csv(const ExperimentPlan& plan,
                            const TableResult& table) {
    std::ostringstream s;
    s << csv_header(plan);
    s << "N,MC,mean_abs_error,se_abs_error,mean_price,se_price,fd_price,"
         "status\n";
    for (const CellResult& c : table.cells) {
        s << c.n << "," << c.mc << ",";
        if (c.ok) {
            s << fmt(c.mean_abs_error) << ",";
            if (c.se_abs_error > 0.0) s << fmt(c.se_abs_error);
            s << "," << fmt(c.price_mean) << ",";
            if (c.price_se > 0.0) s << fmt(c.price_se);
            s << ",";
            if (table.has_fd) s << fmt(table.fd_price);
            s << "," << (c.error.empty() ? "ok" : c.error);
        } else {
            s << ",,,,,,\"" << c.error << "\"";
        }
        s << "\n";
    }

    // Soft sanity: more sampling should not hurt, on average.
    for (int n : plan.n_list) {
        const CellResult* low = nullptr;
        const CellResult* high = nullptr;
        for (const CellResult& c : table.cells) {
            if (c.n != n || !c.ok) continue;
            if (c.mc == plan.mc_list.front()) low = &c;
            if (c.mc == plan.mc_list.back()) high = &c;
        }
        if (low && high && high->mean_abs_error > low->mean_abs_error) {
            std::cerr << "warning: mean abs error grew with MC at N=" << n
                      << " (" << low->mean_abs_error << " -> "
                      << high->mean_abs_error << ")\n";
        }
    }
    return s.str();
}

VarianceStudyResult run_variance_study(const ExperimentPlan& plan) {
    VarianceStudyResult result;
    const std::pair<LocalizerKind, std::string> kinds[] = {
        {LocalizerKind::None, "none"},
        {LocalizerKind::Laplace, "laplace"},
        {LocalizerKind::OneSidedExp, "onesided"},
    };
    for (const auto& [kind, name] : kinds) {
        VarianceRow row;
        row.localizer = name;
        row.replications = plan.replications;
        std::vector<double> prices;
        const auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < plan.replications; ++r) {
            PricingConfig cfg = plan.config.pricing;
            cfg.localizer = kind;
            cfg.seed = plan.seed + static_cast<std::uint64_t>(r);
            cfg.threads = plan.threads;
            try {
                prices.push_back(price_american(cfg).price);
            } catch (const std::exception& e) {
                if (row.error.empty()) row.error = e.what();
            }
        }
        row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        if (!prices.empty()) {
            const MeanVar mv = mean_var(prices);
            row.price_mean = mv.mean;
            row.price_variance = mv.var;
            row.ok = row.error.empty();
        }
        if (!row.ok) result.all_ok = false;
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string variance_study_csv(const ExperimentPlan& plan,
                               const VarianceStudyResult& result) {
    std::ostringstream s;
    s << csv_header(plan);
    s << "localizer,price_mean,price_variance,replications,wall_ms,status\n";
    for (const VarianceRow& r : result.rows) {
        s << r.localizer << ",";
        if (r.ok || r.price_mean != 0.0) {
            s << fmt(r.price_mean) << "," << fmt(r.price_variance);
        } else {
            s << ",";
        }
        s << "," << r.replications << "," << r.wall_ms << ","
          << (r.error.empty() ? "ok" : "\"" + r.error + "\"") << "\n";
    }
    return s.str();
}

}  // namespace mmc
