#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "permdet/eval/metrics.hpp"

namespace permdet::eval {

struct OutputUnwritable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One experiment-grid cell with full provenance.
struct ReportCell {
    std::string id;
    nlohmann::json config;  // model/train configs + cell parameters
    uint64_t seed = 0;
    std::string dataset_hash;
    double wall_time_s = 0.0;
    std::vector<EvalMetrics> folds;
    EvalMetrics mean;
    EvalMetrics stddev;
    ConfusionMatrix total_confusion;
    std::map<std::string, double> extra;
};

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;  // (x, y)
};

struct Report {
    std::string kind;  // ablation | threshold_sweep | timecv | single
    uint64_t master_seed = 0;
    std::vector<ReportCell> cells;
    std::vector<Series> series;
    std::optional<std::string> best_cell;
    std::string best_metric;  // the metric best_cell maximizes
    std::vector<std::string> skipped;  // cells skipped (e.g. empty buckets)

    const ReportCell* find_cell(const std::string& id) const;
};

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

struct EmitFormats {
    bool json = true;
    bool csv = false;
    bool plotdata = false;
};

// base_path without extension; writes base.json / base.csv / base_plot.csv.
// Field order is stable; plotdata rows are sorted by series then x.
std::vector<std::filesystem::path> emit_report(const Report& report,
                                               const std::filesystem::path& base_path,
                                               const EmitFormats& formats);

}  // namespace permdet::eval
