#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmc/config.hpp"

namespace mmc {

struct ExperimentPlan {
    LoadedConfig config;
    std::vector<int> n_list{64, 128, 256, 512};
    std::vector<int> mc_list{200, 500, 1000, 2000};
    int replications = 20;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct CellResult {
    int n = 0;
    int mc = 0;
    bool ok = false;
    std::string error;
    double price_mean = 0.0;
    double price_se = 0.0;  // 0 when replications == 1
    double abs_error = 0.0;
    double mean_abs_error = 0.0;
    double se_abs_error = 0.0;
};

struct TableResult {
    std::vector<CellResult> cells;  // row-major over (n, mc)
    bool has_fd = false;
    double fd_price = 0.0;
    bool all_ok = true;
};

// Replication r of any cell uses seed + r, so runs with equal seeds pair up
// across cells and studies.
TableResult run_table(const ExperimentPlan& plan);

std::string table_csv(const ExperimentPlan& plan, const TableResult& table);
std::string error_curve_csv(const ExperimentPlan& plan,
                            const TableResult& table);

struct VarianceRow {
    std::string localizer;
    double price_mean = 0.0;
    double price_variance = 0.0;
    std::int64_t wall_ms = 0;
    int replications = 0;
    bool ok = false;
    std::string error;
};

struct VarianceStudyResult {
    std::vector<VarianceRow> rows;
    bool all_ok = true;
};

// Same seeds for every localizer kind; prices differ only through the
// estimator.
VarianceStudyResult run_variance_study(const ExperimentPlan& plan);

std::string variance_study_csv(const ExperimentPlan& plan,
                               const VarianceStudyResult& result);

// Shared CSV comment header: version plus the effective config echo.
std::string csv_header(const ExperimentPlan& plan);

}  // namespace mmc
