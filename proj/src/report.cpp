#include "xtsc/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "xtsc/error.hpp"
#include "xtsc/rng.hpp"
#include "xtsc/text.hpp"

namespace xtsc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Fields in this schema never contain commas or quotes except the reason,
/// which is quoted when needed.
std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        out.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

RecordStatus parse_status(std::string_view s) {
  if (s == "ok") return RecordStatus::Ok;
  if (s == "degenerate") return RecordStatus::Degenerate;
  if (s == "skipped") return RecordStatus::Skipped;
  fail(ErrorCode::FormatError, "unknown record status '" + std::string(s) + "'");
}

}  // namespace

std::string records_csv(std::span<const MetricRecord> records) {
  std::string out = "metric,dataset,model,explainer,instance,value,status,reason\n";
  for (const auto& r : records) {
    out += csv_field(r.metric) + ',' + csv_field(r.dataset) + ',' + csv_field(r.model) + ',' +
           csv_field(r.explainer) + ',' + std::to_string(r.instance) + ',' +
           (r.status == RecordStatus::Ok ? text::format_double(r.value) : std::string()) + ',' +
           std::string(to_string(r.status)) + ',' + csv_field(r.reason) + '\n';
  }
  return out;
}

std::vector<MetricRecord> parse_records_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "metric,dataset,model,explainer,instance,value,status,reason") {
    fail(ErrorCode::FormatError, "records.csv: unexpected header");
  }
  std::vector<MetricRecord> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (text::trim(line).empty()) continue;
    const auto f = parse_csv_line(line);
    const std::string where = "records.csv row " + std::to_string(row);
    if (f.size() != 8) fail(ErrorCode::FormatError, where + ": expected 8 fields");
    MetricRecord r{f[0], f[1], f[2], f[3], 0, 0.0, parse_status(f[6]), f[7]};
    const auto [end, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), r.instance);
    if (ec != std::errc() || end != f[4].data() + f[4].size()) fail(ErrorCode::FormatError, where + ": bad instance");
    if (r.status == RecordStatus::Ok) r.value = text::parse_double(f[5], where);
    out.push_back(std::move(r));
  }
  return out;
}

std::string stats_csv(std::span<const AggregateStats> stats) {
  std::string out = "group,mean,median,q1,q3,min,max,count,degenerate_count\n";
  for (const auto& s : stats) {
    out += csv_field(s.group());
    for (double v : {s.mean, s.median, s.q1, s.q3, s.min, s.max}) out += ',' + text::format_double(v);
    out += ',' + std::to_string(s.count) + ',' + std::to_string(s.degenerate_count) + '\n';
  }
  return out;
}

json stats_json(std::span<const AggregateStats> stats) {
  json arr = json::array();
  for (const auto& s : stats) {
    arr.push_back(json{{"group", s.group()},
                       {"explainer", s.explainer},
                       {"metric", s.metric},
                       {"facet", s.facet},
                       {"mean", s.mean},
                       {"median", s.median},
                       {"q1", s.q1},
                       {"q3", s.q3},
                       {"min", s.min},
                       {"max", s.max},
                       {"count", s.count},
                       {"degenerate_count", s.degenerate_count}});
  }
  return arr;
}

AxisMapping boxplot_axis(std::span<const AggregateStats> stats) {
  AxisMapping axis;
  if (stats.empty()) return axis;
  axis.v_min = stats.front().min;
  axis.v_max = stats.front().max;
  for (const auto& s : stats) {
    axis.v_min = std::min(axis.v_min, s.min);
    axis.v_max = std::max(axis.v_max, s.max);
  }
  if (!(axis.v_max > axis.v_min)) {
    axis.v_min -= 0.5;
    axis.v_max += 0.5;
  }
  return axis;
}

std::string boxplot_svg(std::span<const AggregateStats> stats, std::string_view metric) {
  std::vector<AggregateStats> groups;
  for (const auto& s : stats)
    if (s.metric == metric) groups.push_back(s);
  const AxisMapping axis = boxplot_axis(groups);
  constexpr double kLeft = 70.0;
  constexpr double kSlot = 90.0;
  constexpr double kBox = 50.0;
  const double width = kLeft + kSlot * static_cast<double>(std::max<std::size_t>(groups.size(), 1)) + 20.0;
  const double height = axis.px_bottom + 80.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width) << "\" height=\"" << px(height)
      << "\" data-metric=\"" << escape_xml(metric) << "\" data-v-min=\"" << text::format_double(axis.v_min)
      << "\" data-v-max=\"" << text::format_double(axis.v_max) << "\" data-px-top=\"" << px(axis.px_top)
      << "\" data-px-bottom=\"" << px(axis.px_bottom) << "\">\n";
  svg << "  <title>" << escape_xml(metric) << "</title>\n";
  svg << "  <line class=\"axis\" x1=\"" << px(kLeft) << "\" y1=\"" << px(axis.px_top) << "\" x2=\"" << px(kLeft)
      << "\" y2=\"" << px(axis.px_bottom) << "\" stroke=\"black\"/>\n";
  for (double v : {axis.v_min, axis.v_max}) {
    svg << "  <text class=\"tick\" x=\"" << px(kLeft - 6) << "\" y=\"" << px(axis.to_px(v) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << escape_xml(text::format_double(v)) << "</text>\n";
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& s = groups[g];
    const double x0 = kLeft + kSlot * static_cast<double>(g) + (kSlot - kBox) / 2.0;
    const double xc = x0 + kBox / 2.0;
    const std::string id = escape_xml(s.group());
    svg << "  <g data-group=\"" << id << "\">\n";
    svg << "    <line class=\"whisker\" x1=\"" << px(xc) << "\" y1=\"" << px(axis.to_px(s.max)) << "\" x2=\""
        << px(xc) << "\" y2=\"" << px(axis.to_px(s.min)) << "\" stroke=\"black\"/>\n";
    svg << "    <rect class=\"box\" x=\"" << px(x0) << "\" y=\"" << px(axis.to_px(s.q3)) << "\" width=\""
        << px(kBox) << "\" height=\"" << px(axis.to_px(s.q1) - axis.to_px(s.q3))
        << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    svg << "    <line class=\"median\" x1=\"" << px(x0) << "\" y1=\"" << px(axis.to_px(s.median)) << "\" x2=\""
        << px(x0 + kBox) << "\" y2=\"" << px(axis.to_px(s.median)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    svg << "    <line class=\"mean\" x1=\"" << px(x0) << "\" y1=\"" << px(axis.to_px(s.mean)) << "\" x2=\""
        << px(x0 + kBox) << "\" y2=\"" << px(axis.to_px(s.mean))
        << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
    svg << "    <text x=\"" << px(xc) << "\" y=\"" << px(axis.px_bottom + 18) << "\" text-anchor=\"middle\" "
        << "font-size=\"10\">" << escape_xml(s.explainer) << "</text>\n";
    svg << "  </g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

json to_json(const BenchmarkPlan& plan) {
  json metrics = json::array();
  for (MetricKind m : plan.metrics) metrics.push_back(std::string(to_string(m)));
  const auto& r = plan.params.robustness;
  const auto& f = plan.params.faithfulness;
  const auto& e = plan.explainer_settings;
  return json{
      {"types", plan.types},
      {"models", plan.models},
      {"explainers", plan.explainers},
      {"metrics", metrics},
      {"master_seed", plan.master_seed},
      {"max_instances", plan.max_instances ? json(*plan.max_instances) : json(nullptr)},
      {"accuracy_gate", plan.accuracy_gate},
      {"aggregation", plan.aggregation == AggregationMode::PooledInstances ? "pooled" : "dataset_means"},
      {"explainer_baseline", std::string(to_string(plan.explainer_baseline))},
      {"robustness",
       {{"radius", r.radius}, {"n_perturbations", r.n_perturbations}, {"norm", r.norm == Norm::L2 ? "L2" : "Linf"}}},
      {"faithfulness",
       {{"baseline", std::string(to_string(plan.params.faithfulness_baseline))},
        {"subset_fraction", f.subset_fraction},
        {"n_runs", f.n_runs},
        {"readout", f.readout == Readout::Probability ? "probability" : "logit"}}},
      {"explainer_settings",
       {{"smooth_samples", e.smooth_samples},
        {"smooth_sigma", e.smooth_sigma},
        {"integrated_steps", e.integrated_steps},
        {"shap_baselines", e.shap_baselines},
        {"occlusion_window", {e.occlusion_window.features, e.occlusion_window.steps}},
        {"lime_segment_len", e.lime.segment_len},
        {"lime_samples", e.lime.n_samples},
        {"tsr_alpha", e.tsr.alpha ? json(*e.tsr.alpha) : json("mean")}}},
  };
}

json to_json(std::span<const GateEntry> gate) {
  json arr = json::array();
  for (const auto& g : gate) {
    arr.push_back(json{{"dataset", g.dataset}, {"model", g.model}, {"accuracy", g.accuracy}, {"passed", g.passed}});
  }
  return arr;
}

void emit_report(const std::string& dir, std::span<const MetricRecord> records, std::span<const AggregateStats> stats,
                 const json& manifest) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorCode::IoError, "cannot create report directory " + dir);
  const fs::path root(dir);
  text::write_file((root / "records.csv").string(), records_csv(records));
  text::write_file((root / "stats.csv").string(), stats_csv(stats));
  text::write_file((root / "stats.json").string(), stats_json(stats).dump(2) + "\n");
  std::set<std::string> metrics;
  for (const auto& s : stats) metrics.insert(s.metric);
  for (const auto& m : metrics) text::write_file((root / ("boxplot_" + m + ".svg")).string(), boxplot_svg(stats, m));
  json full = manifest;
  full["rng"] = {{"name", std::string(Rng::kName)}, {"version", Rng::kVersion}};
  text::write_file((root / "run_manifest.json").string(), full.dump(2) + "\n");
}

}  // namespace xtsc
