#include "permdet/eval/report.hpp"

#include <algorithm>
#include <fstream>

#include "permdet/util/csv.hpp"

namespace permdet::eval {

namespace {

using nlohmann::json;
// Ordered JSON keeps field order stable across runs.
using ojson = nlohmann::ordered_json;

ojson metrics_to_json(const EvalMetrics& m) {
    ojson j;
    auto f = flatten(m);
    const auto& names = metric_names();
    for (size_t i = 0; i < kMetricCount; ++i) j[names[i]] = f[i];
    return j;
}

EvalMetrics metrics_from_json(const json& j) {
    std::array<double, kMetricCount> f{};
    const auto& names = metric_names();
    for (size_t i = 0; i < kMetricCount; ++i) f[i] = j.at(names[i]).get<double>();
    return unflatten(f);
}

ojson cm_to_json(const ConfusionMatrix& cm) {
    return ojson{{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}};
}

ConfusionMatrix cm_from_json(const json& j) {
    ConfusionMatrix cm;
    cm.tp = j.at("tp").get<long long>();
    cm.tn = j.at("tn").get<long long>();
    cm.fp = j.at("fp").get<long long>();
    cm.fn = j.at("fn").get<long long>();
    return cm;
}

}  // namespace

const ReportCell* Report::find_cell(const std::string& id) const {
    for (const auto& c : cells)
        if (c.id == id) return &c;
    return nullptr;
}

nlohmann::json to_json(const Report& report) {
    ojson j;
    j["kind"] = report.kind;
    j["master_seed"] = report.master_seed;
    if (report.best_cell) j["best_cell"] = *report.best_cell;
    j["best_metric"] = report.best_metric;
    j["skipped"] = report.skipped;
    ojson cells = ojson::array();
    for (const auto& c : report.cells) {
        ojson jc;
        jc["id"] = c.id;
        jc["config"] = c.config;
        jc["seed"] = c.seed;
        jc["dataset_hash"] = c.dataset_hash;
        jc["wall_time_s"] = c.wall_time_s;
        ojson folds = ojson::array();
        for (const auto& f : c.folds) folds.push_back(metrics_to_json(f));
        jc["folds"] = std::move(folds);
        jc["mean"] = metrics_to_json(c.mean);
        jc["stddev"] = metrics_to_json(c.stddev);
        jc["confusion"] = cm_to_json(c.total_confusion);
        jc["extra"] = c.extra;
        cells.push_back(std::move(jc));
    }
    j["cells"] = std::move(cells);
    ojson series = ojson::array();
    for (const auto& s : report.series) {
        ojson js;
        js["name"] = s.name;
        ojson pts = ojson::array();
        for (const auto& [x, y] : s.points) pts.push_back(ojson::array({x, y}));
        js["points"] = std::move(pts);
        series.push_back(std::move(js));
    }
    j["series"] = std::move(series);
    return j;
}

Report report_from_json(const nlohmann::json& j) {
    Report report;
    report.kind = j.at("kind").get<std::string>();
    report.master_seed = j.at("master_seed").get<uint64_t>();
    if (j.contains("best_cell")) report.best_cell = j["best_cell"].get<std::string>();
    report.best_metric = j.value("best_metric", "");
    report.skipped = j.value("skipped", std::vector<std::string>{});
    for (const auto& jc : j.at("cells")) {
        ReportCell c;
        c.id = jc.at("id").get<std::string>();
        c.config = jc.at("config");
        c.seed = jc.at("seed").get<uint64_t>();
        c.dataset_hash = jc.at("dataset_hash").get<std::string>();
        c.wall_time_s = jc.at("wall_time_s").get<double>();
        for (const auto& jf : jc.at("folds")) c.folds.push_back(metrics_from_json(jf));
        c.mean = metrics_from_json(jc.at("mean"));
        c.stddev = metrics_from_json(jc.at("stddev"));
        c.total_confusion = cm_from_json(jc.at("confusion"));
        c.extra = jc.at("extra").get<std::map<std::string, double>>();
        report.cells.push_back(std::move(c));
    }
    for (const auto& js : j.at("series")) {
        Series s;
        s.name = js.at("name").get<std::string>();
        for (const auto& p : js.at("points"))
            s.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        report.series.push_back(std::move(s));
    }
    return report;
}

std::vector<std::filesystem::path> emit_report(const Report& report,
                                               const std::filesystem::path& base_path,
                                               const EmitFormats& formats) {
    std::vector<std::filesystem::path> written;
    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw OutputUnwritable("cannot write " + p.string());
        return out;
    };

    if (formats.json) {
        auto path = base_path;
        path += ".json";
        auto out = open(path);
        out << to_json(report).dump(2) << '\n';
        written.push_back(path);
    }
    if (formats.csv) {
        auto path = base_path;
        path += ".csv";
        auto out = open(path);
        std::vector<std::string> header = {"cell", "seed", "wall_time_s"};
        for (const char* name : metric_names()) header.emplace_back(name);
        for (const char* name : metric_names())
            header.emplace_back(std::string(name) + "_std");
        util::write_csv_row(out, header);
        for (const auto& c : report.cells) {
            std::vector<std::string> row = {c.id, std::to_string(c.seed),
                                            std::to_string(c.wall_time_s)};
            for (double v : flatten(c.mean)) row.push_back(std::to_string(v));
            for (double v : flatten(c.stddev)) row.push_back(std::to_string(v));
            util::write_csv_row(out, row);
        }
        written.push_back(path);
    }
    if (formats.plotdata) {
        auto path = base_path;
        path += "_plot.csv";
        auto out = open(path);
        util::write_csv_row(out, {"series", "x", "y"});
        auto series = report.series;
        std::sort(series.begin(), series.end(),
                  [](const Series& a, const Series& b) { return a.name < b.name; });
        for (auto& s : series) {
            std::sort(s.points.begin(), s.points.end());
            for (const auto& [x, y] : s.points)
                util::write_csv_row(out, {s.name, std::to_string(x), std::to_string(y)});
        }
        written.push_back(path);
    }
    return written;
}

}  // namespace permdet::eval
