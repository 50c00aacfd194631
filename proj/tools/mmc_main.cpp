#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mmc/config.hpp"
#include "mmc/errors.hpp"
#include "mmc/experiments.hpp"
#include "mmc/fd_benchmark.hpp"
#include "mmc/path_engine.hpp"
#include "mmc/pricer.hpp"
#include "mmc/version.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string out_dir = ".";
    int replications = 0;
    std::string localizer;
    double lambda = -1.0;
    std::vector<int> n_list;
    std::vector<int> mc_list;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "configuration file")
        ->required();
    cmd->add_option("--seed", opts.seed, "master seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--threads", opts.threads, "worker threads");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--replications", opts.replications,
                    "replications per cell");
    cmd->add_option("--localizer", opts.localizer,
                    "none | laplace | onesided");
    cmd->add_option("--lambda", opts.lambda, "fixed localizer rate");
    cmd->add_option("--n-list", opts.n_list, "time-step grid");
    cmd->add_option("--mc-list", opts.mc_list, "path-count grid");
}

mmc::LoadedConfig load_with_overrides(const CommonOptions& opts) {
    mmc::LoadedConfig cfg = mmc::load_config(opts.config_path);
    if (opts.seed_set) cfg.pricing.seed = opts.seed;
    if (opts.threads > 0) cfg.pricing.threads = opts.threads;
    if (opts.lambda >= 0.0) cfg.pricing.fixed_rate = opts.lambda;
    if (!opts.localizer.empty()) {
        if (opts.localizer == "none") {
            cfg.pricing.localizer = mmc::LocalizerKind::None;
        } else if (opts.localizer == "laplace") {
            cfg.pricing.localizer = mmc::LocalizerKind::Laplace;
        } else if (opts.localizer == "onesided") {
            cfg.pricing.localizer = mmc::LocalizerKind::OneSidedExp;
        } else {
            throw mmc::ConfigError("unknown localizer '" + opts.localizer +
                                   "'");
        }
    }
    return cfg;
}

mmc::ExperimentPlan make_plan(const CommonOptions& opts) {
    mmc::ExperimentPlan plan;
    plan.config = load_with_overrides(opts);
    plan.seed = plan.config.pricing.seed;
    plan.threads =
        opts.threads > 0 ? opts.threads : plan.config.pricing.threads;
    if (opts.replications > 0) plan.replications = opts.replications;
    if (!opts.n_list.empty()) plan.n_list = opts.n_list;
    if (!opts.mc_list.empty()) plan.mc_list = opts.mc_list;
    return plan;
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& content) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    std::cout << "wrote " << path << "\n";
}

int cmd_price(const CommonOptions& opts) {
    const mmc::LoadedConfig cfg = load_with_overrides(opts);
    const mmc::PricingResult american = mmc::price_american(cfg.pricing);
    const mmc::PricingResult european = mmc::price_european(cfg.pricing);

    std::printf("mmc %s\n", mmc::kVersion);
    std::printf("price = %.10g\n", american.price);
    std::printf("european = %.10g\n", european.price);
    std::printf("fallback_total = %d\n", american.fallback_total);
    std::printf("wall_ms = %lld\n",
                static_cast<long long>(american.wall_ms));
    std::fputs(cfg.echo("config: ").c_str(), stdout);
    std::printf("per_step: k lambda_hat fallbacks\n");
    for (const auto& s : american.steps) {
        std::printf("  %d", s.k);
        for (double r : s.localizer_rate) std::printf(" %.6g", r);
        std::printf(" %d\n", s.fallback_count);
    }
    return 0;
}

int cmd_table(const CommonOptions& opts, bool error_curve) {
    const mmc::ExperimentPlan plan = make_plan(opts);
    const mmc::TableResult table = mmc::run_table(plan);
    if (error_curve) {
        write_file(opts.out_dir, "error_curve.csv",
                   mmc::error_curve_csv(plan, table));
    } else {
        write_file(opts.out_dir, "table.csv", mmc::table_csv(plan, table));
    }
    return table.all_ok ? 0 : 1;
}

int cmd_variance_study(const CommonOptions& opts) {
    mmc::ExperimentPlan plan = make_plan(opts);
    if (plan.replications <= 0) plan.replications = 20;
    const mmc::VarianceStudyResult result = mmc::run_variance_study(plan);
    write_file(opts.out_dir, "variance_study.csv",
               mmc::variance_study_csv(plan, result));
    return result.all_ok ? 0 : 1;
}

int cmd_fd(const CommonOptions& opts) {
    const mmc::LoadedConfig cfg = load_with_overrides(opts);
    const mmc::PricingConfig& pc = cfg.pricing;
    if (pc.model.dimension != 1) {
        throw mmc::UnsupportedModelError("fd benchmark supports one asset");
    }
    const mmc::MomentCurve moments = mmc::solve_moment_ode(
        pc.model.assets[0].drift, pc.model.initial_state[0],
        pc.market.horizon, cfg.fd.time_steps);
    const mmc::FdResult fd = mmc::solve_american_pide(
        pc.model.assets[0], pc.measures[0], pc.payoff, pc.market,
        pc.model.initial_state[0], cfg.fd, moments, pc.quad_nodes);

    std::ostringstream csv;
    csv << "# mmc " << mmc::kVersion << "\n" << cfg.echo("# ");
    csv << "x,value\n";
    for (std::size_t j = 0; j < fd.x.size(); ++j) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", fd.x[j],
                      fd.value[j]);
        csv << buf;
    }
    write_file(opts.out_dir, "fd_slice.csv", csv.str());
    std::printf("fd_price = %.10g\n", fd.price);
    std::printf("clamped_shifts = %d\n", fd.clamped_shifts);
    return 0;
}

int cmd_dump_paths(const CommonOptions& opts) {
    const mmc::LoadedConfig cfg = load_with_overrides(opts);
    const mmc::PricingConfig& pc = cfg.pricing;
    const mmc::TimeGrid grid{pc.n_steps, pc.market.horizon};
    const mmc::SimOptions sim{pc.threads, pc.quad_nodes};
    const mmc::PathBundle bundle = mmc::simulate_ensemble(
        pc.model, pc.measures, grid, pc.path_count, pc.seed, sim);

    std::ostringstream paths;
    paths << "path,step,t";
    for (int a = 0; a < bundle.dimension; ++a) {
        paths << ",x" << a + 1 << ",y" << a + 1;
    }
    paths << "\n";
    for (int m = 0; m < bundle.path_count; ++m) {
        for (int k = 0; k <= bundle.grid.n_steps; ++k) {
            paths << m << "," << k << "," << bundle.grid.knot(k);
            for (int a = 0; a < bundle.dimension; ++a) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), ",%.10g,%.10g",
                              bundle.state(a, m, k),
                              bundle.variation(a, m, k));
                paths << buf;
            }
            paths << "\n";
        }
    }
    write_file(opts.out_dir, "paths.csv", paths.str());

    std::ostringstream jumps;
    jumps << "path,asset,t,size,pre_state,pre_variation\n";
    for (int a = 0; a < bundle.dimension; ++a) {
        for (int m = 0; m < bundle.path_count; ++m) {
            for (const auto& ev : bundle.jumps[a][m]) {
                char buf[128];
                std::snprintf(buf, sizeof(buf),
                              "%d,%d,%.10g,%.10g,%.10g,%.10g\n", m, a + 1,
                              ev.time, ev.size, ev.pre_state,
                              ev.pre_variation);
                jumps << buf;
            }
        }
    }
    write_file(opts.out_dir, "jumps.csv", jumps.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo pricing engine for mean-field jump diffusions"};
    app.set_version_flag("--version", std::string(mmc::kVersion));
    app.require_subcommand(1);

    CommonOptions opts;
    CLI::App* price = app.add_subcommand("price", "price one config");
    CLI::App* table =
        app.add_subcommand("table", "price grid over (N, MC) with benchmark");
    CLI::App* curve = app.add_subcommand("error-curve",
                                         "benchmark error vs grid and paths");
    CLI::App* variance = app.add_subcommand(
        "variance-study", "compare localizer kinds at fixed (N, MC)");
    CLI::App* fd = app.add_subcommand("fd", "finite-difference benchmark only");
    CLI::App* dump =
        app.add_subcommand("dump-paths", "write simulated paths and jumps");
    for (CLI::App* cmd : {price, table, curve, variance, fd, dump}) {
        add_common(cmd, opts);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (price->parsed()) return cmd_price(opts);
        if (table->parsed()) return cmd_table(opts, false);
        if (curve->parsed()) return cmd_table(opts, true);
        if (variance->parsed()) return cmd_variance_study(opts);
        if (fd->parsed()) return cmd_fd(opts);
        if (dump->parsed()) return cmd_dump_paths(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
