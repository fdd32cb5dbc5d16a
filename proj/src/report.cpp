#include "rupnet/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace rupnet::eval {

using nlohmann::json;

namespace {

json metrics_json(const ImageMetrics& m) {
    return {{"dsc", m.dsc},           {"iou", m.iou},           {"recall", m.recall},
            {"precision", m.precision}, {"accuracy", m.accuracy}, {"f2", m.f2}};
}

ImageMetrics metrics_from_json(const json& j) {
    return {j.at("dsc").get<double>(),       j.at("iou").get<double>(),      j.at("recall").get<double>(),
            j.at("precision").get<double>(), j.at("accuracy").get<double>(), j.at("f2").get<double>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open report for writing: " + path.string());
    out << text;
    if (!out) throw IoError("failed writing report: " + path.string());
}

}  // namespace

std::vector<SpeedupRow> compute_speedups(double own_fps, const std::vector<BaselineRow>& baselines) {
    if (!(own_fps > 0.0)) throw InvalidArgument("compute_speedups: own fps must be > 0");
    std::vector<SpeedupRow> rows;
    for (const auto& b : baselines) {
        if (!(b.fps > 0.0)) throw InvalidArgument("compute_speedups: baseline '" + b.name + "' fps must be > 0");
        rows.push_back({b.name, b.fps, own_fps / b.fps});
    }
    return rows;
}

json report_to_json(const MetricsReport& r) {
    json j;
    j["config_fingerprint"] = r.config_fingerprint;
    j["checkpoint_hash"] = r.checkpoint_hash;
    j["hardware"] = r.hardware;
    j["threshold"] = r.threshold;
    j["metadata"] = {
        {"aggregation", "arithmetic mean of per-image metrics"},
        {"empty_convention", "0/0 ratios score 1 when ground truth and prediction are both empty, else 0"},
        {"threshold_rule", "pred >= threshold is positive"},
    };
    j["per_image"] = json::array();
    for (const auto& row : r.per_image) {
        auto m = metrics_json(row.metrics);
        m["id"] = row.id;
        j["per_image"].push_back(std::move(m));
    }
    j["means"] = metrics_json(r.means);
    if (r.fps) {
        j["fps"] = {{"value", r.fps->fps},
                    {"per_frame_ms_mean", r.fps->per_frame_ms_mean},
                    {"per_frame_ms_std", r.fps->per_frame_ms_std},
                    {"warmup", r.fps->warmup},
                    {"iters", r.fps->iters},
                    {"image_size", r.fps->image_size}};
    } else {
        j["fps"] = nullptr;
    }
    if (!r.speedup.empty()) {
        j["speedup"] = json::array();
        for (const auto& s : r.speedup) {
            j["speedup"].push_back({{"name", s.name}, {"baseline_fps", s.baseline_fps}, {"speedup", s.speedup}});
        }
    }
    return j;
}

MetricsReport report_from_json(const json& j) {
    MetricsReport r;
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.checkpoint_hash = j.at("checkpoint_hash").get<std::string>();
    r.hardware = j.at("hardware").get<std::string>();
    r.threshold = j.at("threshold").get<double>();
    for (const auto& row : j.at("per_image")) {
        r.per_image.push_back({row.at("id").get<std::string>(), metrics_from_json(row)});
    }
    r.means = metrics_from_json(j.at("means"));
    if (j.contains("fps") && !j.at("fps").is_null()) {
        const auto& f = j.at("fps");
        r.fps = FpsStats{f.at("value").get<double>(),          f.at("per_frame_ms_mean").get<double>(),
                         f.at("per_frame_ms_std").get<double>(), f.at("warmup").get<int>(),
                         f.at("iters").get<int>(),               f.at("image_size").get<int>()};
    }
    if (j.contains("speedup")) {
        for (const auto& s : j.at("speedup")) {
            r.speedup.push_back(
                {s.at("name").get<std::string>(), s.at("baseline_fps").get<double>(), s.at("speedup").get<double>()});
        }
    }
    return r;
}

std::string report_to_csv(const MetricsReport& report) {
    std::string out = std::string(kPerImageCsvHeader) + "\n";
    char buf[256];
    for (const auto& row : report.per_image) {
        const auto& m = row.metrics;
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.dsc, m.iou, m.recall, m.precision,
                      m.accuracy, m.f2);
        out += row.id;
        out += buf;
    }
    return out;
}

std::vector<MetricRow> rows_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != kPerImageCsvHeader) {
        throw InvalidArgument("rows_from_csv: unexpected header");
    }
    std::vector<MetricRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        MetricRow row;
        std::string cell;
        std::getline(fields, row.id, ',');
        double* targets[] = {&row.metrics.dsc,       &row.metrics.iou,      &row.metrics.recall,
                             &row.metrics.precision, &row.metrics.accuracy, &row.metrics.f2};
        for (double* t : targets) {
            if (!std::getline(fields, cell, ',')) throw InvalidArgument("rows_from_csv: short row: " + line);
            *t = std::stod(cell);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void emit_report(MetricsReport report, const std::vector<BaselineRow>& baselines, const std::filesystem::path& path,
                 ReportFormat format) {
    if (!baselines.empty() && report.fps) report.speedup = compute_speedups(report.fps->fps, baselines);
    if (format == ReportFormat::kJson) {
        write_text(path, report_to_json(report).dump(2) + "\n");
    } else {
        write_text(path, report_to_csv(report));
    }
}

void emit_report(const MetricsReport& report, const std::vector<BaselineRow>& baselines,
                 const std::filesystem::path& json_path) {
    emit_report(report, baselines, json_path, ReportFormat::kJson);
    auto csv_path = json_path;
    csv_path.replace_extension(".csv");
    emit_report(report, baselines, csv_path, ReportFormat::kCsv);
}

}  // namespace rupnet::eval
