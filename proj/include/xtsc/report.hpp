#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xtsc/harness.hpp"

namespace xtsc {

/// Header: metric,dataset,model,explainer,instance,value,status,reason. The
/// value column is empty for records that are not Ok.
std::string records_csv(std::span<const MetricRecord> records);
std::vector<MetricRecord> parse_records_csv(std::string_view csv);

/// Header: group,mean,median,q1,q3,min,max,count,degenerate_count.
std::string stats_csv(std::span<const AggregateStats> stats);
nlohmann::json stats_json(std::span<const AggregateStats> stats);

/// Linear value-to-pixel mapping of a boxplot's y axis.
struct AxisMapping {
  double v_min = 0.0;
  double v_max = 1.0;
  double px_top = 40.0;
  double px_bottom = 340.0;

  double to_px(double v) const noexcept { return px_bottom - (v - v_min) / (v_max - v_min) * (px_bottom - px_top); }
};

/// Spans the min and max of every group; a zero-width range is widened by
/// 0.5 on each side.
AxisMapping boxplot_axis(std::span<const AggregateStats> stats);

/// One box per group of `metric`: Q1-Q3 rect (class "box"), solid median line
/// (class "median"), dashed mean line (class "mean"), min-max whisker.
std::string boxplot_svg(std::span<const AggregateStats> stats, std::string_view metric);

nlohmann::json to_json(const BenchmarkPlan& plan);
nlohmann::json to_json(std::span<const GateEntry> gate);

/// Writes records.csv, stats.csv, stats.json, boxplot_<metric>.svg for each
/// metric present in `stats`, and run_manifest.json. Throws IoError.
void emit_report(const std::string& dir, std::span<const MetricRecord> records, std::span<const AggregateStats> stats,
                 const nlohmann::json& manifest);

}  // namespace xtsc
