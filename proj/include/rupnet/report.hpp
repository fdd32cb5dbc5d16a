#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"

#include "rupnet/metrics.hpp"

namespace rupnet::eval {

inline constexpr const char* kPerImageCsvHeader = "id,dsc,iou,recall,precision,accuracy,f2";

/// speedup = own_fps / baseline fps for every baseline. Throws InvalidArgument on non-positive fps.
std::vector<SpeedupRow> compute_speedups(double own_fps, const std::vector<BaselineRow>& baselines);

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

std::string report_to_csv(const MetricsReport& report);
/// Parses the per-image CSV back into rows.
std::vector<MetricRow> rows_from_csv(const std::string& csv);

enum class ReportFormat { kJson, kCsv };

/// Writes the aggregate JSON or the per-image CSV. When baselines are given and the report has
/// an FPS block, the speedup section is filled in first.
void emit_report(MetricsReport report, const std::vector<BaselineRow>& baselines, const std::filesystem::path& path,
                 ReportFormat format);

/// JSON to `json_path` plus the per-image CSV next to it (same stem, .csv extension).
void emit_report(const MetricsReport& report, const std::vector<BaselineRow>& baselines,
                 const std::filesystem::path& json_path);

}  // namespace rupnet::eval
