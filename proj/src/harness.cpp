#include "xtsc/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <numeric>
#include <tuple>

#include <omp.h>

#include "xtsc/error.hpp"
#include "xtsc/rng.hpp"
#include "xtsc/text.hpp"

namespace xtsc {
namespace {

namespace fs = std::filesystem;

struct MetricName {
  MetricKind kind;
  std::string_view name;
};

constexpr MetricName kMetricNames[] = {
    {MetricKind::Complexity, "complexity"},     {MetricKind::RelevanceRank, "racc"},
    {MetricKind::RelevanceMass, "macc"},        {MetricKind::Faithfulness, "faithfulness"},
    {MetricKind::SensMax, "sens_max"},          {MetricKind::SensMean, "sens_mean"},
};

bool is_robustness(MetricKind k) { return k == MetricKind::SensMax || k == MetricKind::SensMean; }

/// One unit of work: an instance explained by one explainer (or a given
/// attribution) and scored on every requested metric.
struct Task {
  const Dataset* data = nullptr;
  const Classifier* model = nullptr;
  std::string model_name;
  const Explainer* explainer = nullptr;
  const Attribution* given = nullptr;
  std::string explainer_name;
  std::size_t instance = 0;
  const BaselineSource* faithfulness_baseline = nullptr;
};

struct Shared {
  const std::vector<MetricKind>* metrics;
  const MetricParams* params;
  std::uint64_t master;
};

std::vector<MetricRecord> score_task(const Task& task, const Shared& shared) {
  const LabeledInstance& inst = task.data->test[task.instance];
  const std::string& ds = task.data->id.name;
  const auto seed_for = [&](std::string_view what) {
    return record_seed(shared.master, ds, task.model_name, task.explainer_name, task.instance, what);
  };

  std::size_t target = 0;
  Attribution attribution;
  if (task.given) {
    attribution = *task.given;
    target = attribution.target_class;
  } else {
    target = task.model->predict(inst.series);
    attribution = task.explainer->explain(*task.model, inst.series, target, seed_for("attribution"));
  }
  require_shape(attribution.shape(), inst.series.shape(), "attribution");

  std::optional<SensitivityResult> sens;
  std::vector<MetricRecord> out;
  for (MetricKind kind : *shared.metrics) {
    MetricRecord rec{std::string(to_string(kind)), ds, task.model_name, task.explainer_name, task.instance, 0.0,
                     RecordStatus::Ok, {}};
    if (needs_mask(kind) && !task.data->has_masks) {
      rec.status = RecordStatus::Skipped;
      rec.reason = "NoGroundTruth";
      out.push_back(std::move(rec));
      continue;
    }
    try {
      switch (kind) {
        case MetricKind::Complexity:
          rec.value = complexity(attribution.scores);
          break;
        case MetricKind::RelevanceRank:
          rec.value = relevance_rank_acc(attribution.scores, inst.mask);
          break;
        case MetricKind::RelevanceMass:
          rec.value = relevance_mass_acc(attribution.scores, inst.mask);
          break;
        case MetricKind::Faithfulness: {
          FaithfulnessParams p = shared.params->faithfulness;
          p.seed = seed_for(rec.metric);
          rec.value = faithfulness_corr(*task.model, attribution.scores, inst.series, *task.faithfulness_baseline, p);
          break;
        }
        case MetricKind::SensMax:
        case MetricKind::SensMean: {
          if (!sens) {
            // Both robustness metrics share one sample set.
            RobustnessParams p = shared.params->robustness;
            p.seed = seed_for("sensitivity");
            sens = sensitivity(*task.explainer, *task.model, inst.series, target, p, seed_for("attribution"));
          }
          rec.value = kind == MetricKind::SensMax ? sens->max : sens->mean;
          if (!sens->prediction_stable) rec.reason = "UnstablePrediction";
          break;
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateCorrelation && e.code() != ErrorCode::DegenerateAttribution) throw;
      rec.status = RecordStatus::Degenerate;
      rec.value = 0.0;
      rec.reason = std::string(to_string(e.code()));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<MetricRecord> run_tasks(const std::vector<Task>& tasks, const Shared& shared, int workers) {
  std::vector<std::vector<MetricRecord>> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      results[static_cast<std::size_t>(k)] = score_task(tasks[static_cast<std::size_t>(k)], shared);
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  // Report the failure of the earliest task so the error does not depend on
  // scheduling.
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<MetricRecord> records;
  for (auto& part : results) std::move(part.begin(), part.end(), std::back_inserter(records));
  return records;
}

std::size_t instance_limit(const Dataset& data, const std::optional<std::size_t>& cap) {
  return cap ? std::min(*cap, data.test.size()) : data.test.size();
}

BaselinePtr training_range_baseline(const Dataset& data) {
  const auto& source = data.train.empty() ? data.test : data.train;
  if (source.empty()) fail(ErrorCode::EmptySelection, data.id.name + " has no instances");
  FeatureRange range{std::vector<double>(data.shape.n_features, INFINITY),
                     std::vector<double>(data.shape.n_features, -INFINITY)};
  for (const auto& inst : source) {
    for (std::size_t i = 0; i < data.shape.n_features; ++i) {
      for (double v : inst.series.row(i)) {
        range.min[i] = std::min(range.min[i], v);
        range.max[i] = std::max(range.max[i], v);
      }
    }
  }
  return uniform_baseline(data.shape, std::move(range));
}

}  // namespace

std::string_view to_string(MetricKind kind) {
  for (const auto& m : kMetricNames)
    if (m.kind == kind) return m.name;
  return "unknown";
}

MetricKind parse_metric_kind(std::string_view name) {
  const std::string n = text::lower(text::trim(name));
  for (const auto& m : kMetricNames)
    if (m.name == n) return m.kind;
  if (n == "relevance_rank_acc") return MetricKind::RelevanceRank;
  if (n == "relevance_mass_acc") return MetricKind::RelevanceMass;
  if (n == "faithfulness_corr") return MetricKind::Faithfulness;
  fail(ErrorCode::InvalidParameter, "unknown metric '" + std::string(name) + "'");
}

std::vector<MetricKind> all_metric_kinds() {
  std::vector<MetricKind> out;
  for (const auto& m : kMetricNames) out.push_back(m.kind);
  return out;
}

bool needs_model(MetricKind kind) { return kind == MetricKind::Faithfulness || is_robustness(kind); }
bool needs_mask(MetricKind kind) { return kind == MetricKind::RelevanceRank || kind == MetricKind::RelevanceMass; }

std::string_view to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::Ok: return "ok";
    case RecordStatus::Degenerate: return "degenerate";
    case RecordStatus::Skipped: return "skipped";
  }
  return "unknown";
}

void validate(const BenchmarkPlan& plan) {
  if (plan.models.empty()) fail(ErrorCode::InvalidParameter, "plan lists no models");
  if (plan.explainers.empty()) fail(ErrorCode::InvalidParameter, "plan lists no explainers");
  if (plan.metrics.empty()) fail(ErrorCode::InvalidParameter, "plan lists no metrics");
  if (!(plan.accuracy_gate >= 0.0 && plan.accuracy_gate <= 1.0)) {
    fail(ErrorCode::InvalidParameter, "accuracy gate must lie in [0, 1]");
  }
}

std::uint64_t record_seed(std::uint64_t master, std::string_view dataset, std::string_view model,
                          std::string_view explainer, std::size_t instance, std::string_view metric) {
  return derive_seed(master, {hash_name(dataset), hash_name(model), hash_name(explainer),
                              static_cast<std::uint64_t>(instance), hash_name(metric)});
}

EvaluationResult evaluate_synthetic(const BenchmarkPlan& plan, std::span<const Dataset> catalog,
                                    const ModelProvider& models) {
  validate(plan);
  std::vector<const Dataset*> selected;
  for (const auto& d : catalog)
    if (matches_types(d.id, plan.types)) selected.push_back(&d);
  if (selected.empty()) fail(ErrorCode::EmptySelection, "no dataset matches the type filter");

  EvaluationResult result;
  struct Passed {
    const Dataset* data;
    std::string model_name;
    std::shared_ptr<const Classifier> model;
  };
  std::vector<Passed> passed;
  for (const Dataset* d : selected) {
    for (const auto& name : plan.models) {
      auto provided = models(*d, name);
      if (!provided || !provided->model) {
        fail(ErrorCode::MissingCapability, "no trained " + name + " model for " + d->id.name);
      }
      const double acc = provided->test_accuracy ? *provided->test_accuracy : accuracy(*provided->model, d->test);
      const bool ok = acc > plan.accuracy_gate;
      result.gate.push_back({d->id.name, name, acc, ok});
      if (ok) passed.push_back({d, name, provided->model});
    }
  }
  if (passed.empty()) {
    std::string msg = "no model passes the accuracy gate:";
    for (const auto& g : result.gate) msg += " " + g.dataset + "/" + g.model + "=" + text::format_double(g.accuracy);
    fail(ErrorCode::EmptySelection, msg);
  }

  // Explainers and baselines are built once per dataset and shared read-only.
  std::map<const Dataset*, std::vector<ExplainerPtr>> explainers;
  std::map<const Dataset*, BaselinePtr> faith_baselines;
  for (const auto& p : passed) {
    if (explainers.contains(p.data)) continue;
    const BaselinePtr bl = make_baseline(plan.explainer_baseline, *p.data);
    auto& list = explainers[p.data];
    for (const auto& name : plan.explainers) list.push_back(make_explainer(name, bl, plan.explainer_settings));
    faith_baselines[p.data] = make_baseline(plan.params.faithfulness_baseline, *p.data);
  }

  std::vector<Task> tasks;
  for (const auto& p : passed) {
    const auto& list = explainers.at(p.data);
    for (std::size_t e = 0; e < list.size(); ++e) {
      for (std::size_t k = 0; k < instance_limit(*p.data, plan.max_instances); ++k) {
        tasks.push_back({p.data, p.model.get(), p.model_name, list[e].get(), nullptr, plan.explainers[e], k,
                         faith_baselines.at(p.data).get()});
      }
    }
  }
  const Shared shared{&plan.metrics, &plan.params, plan.master_seed};
  result.records = run_tasks(tasks, shared, plan.workers);
  return result;
}

EvaluationResult evaluate(const Dataset& data, const CustomEvaluation& setup) {
  if (setup.metrics.empty()) fail(ErrorCode::InvalidParameter, "no metrics requested");
  if (setup.explainers.empty() && setup.attributions.empty()) {
    fail(ErrorCode::InvalidParameter, "nothing to score: no explainers and no attributions");
  }
  const bool wants_model = std::any_of(setup.metrics.begin(), setup.metrics.end(), needs_model);
  if (!setup.model && (wants_model || !setup.explainers.empty())) {
    fail(ErrorCode::MissingCapability, "faithfulness, robustness and internal explainers need a model");
  }
  if (!setup.attributions.empty() && std::any_of(setup.metrics.begin(), setup.metrics.end(), is_robustness)) {
    fail(ErrorCode::MissingCapability, "robustness needs a live explainer, not attribution files");
  }
  if (setup.model) require_shape(setup.model->input_shape(), data.shape, "model input");

  const BaselinePtr baseline = setup.baseline ? setup.baseline : training_range_baseline(data);
  std::vector<ExplainerPtr> explainers;
  for (const auto& name : setup.explainers) explainers.push_back(make_explainer(name, baseline, setup.explainer_settings));

  const std::size_t limit = instance_limit(data, setup.max_instances);
  std::vector<Task> tasks;
  for (std::size_t e = 0; e < explainers.size(); ++e) {
    for (std::size_t k = 0; k < limit; ++k) {
      tasks.push_back(
          {&data, setup.model.get(), setup.model_name, explainers[e].get(), nullptr, setup.explainers[e], k,
           baseline.get()});
    }
  }
  for (const auto& a : setup.attributions) {
    if (a.instance >= data.test.size()) {
      fail(ErrorCode::InvalidParameter, "attribution for instance " + std::to_string(a.instance) + " but " +
                                            data.id.name + " has " + std::to_string(data.test.size()));
    }
    if (a.instance >= limit) continue;
    tasks.push_back({&data, setup.model.get(), setup.model_name, nullptr, &a.attribution, a.attribution.explainer,
                     a.instance, baseline.get()});
  }
  MetricParams params = setup.params;
  const Shared shared{&setup.metrics, &params, setup.master_seed};
  EvaluationResult result;
  result.records = run_tasks(tasks, shared, setup.workers);
  return result;
}

std::vector<ProvidedAttribution> load_attribution_dir(const std::string& dir, const Dataset& data) {
  const fs::path root = fs::path(dir) / data.id.name;
  if (!fs::is_directory(root)) fail(ErrorCode::IoError, "no attributions for " + data.id.name + " under " + dir);
  struct Entry {
    std::string explainer_dir;
    std::size_t instance;
    fs::path path;
  };
  std::vector<Entry> entries;
  for (const auto& sub : fs::directory_iterator(root)) {
    if (!sub.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(sub.path())) {
      const fs::path p = f.path();
      const std::string name = p.filename().string();
      if (!f.is_regular_file() || name.ends_with(".manifest.json")) continue;
      if (p.extension() != ".json" && p.extension() != ".csv") continue;
      const std::string stem = p.stem().string();
      std::size_t idx = 0;
      const auto [end, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), idx);
      if (ec != std::errc() || end != stem.data() + stem.size()) {
        fail(ErrorCode::FormatError, p.string() + ": file name must be the instance index");
      }
      entries.push_back({sub.path().filename().string(), idx, p});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.explainer_dir, a.instance) < std::tie(b.explainer_dir, b.instance);
  });
  std::vector<ProvidedAttribution> out;
  for (const auto& e : entries) {
    if (e.instance >= data.test.size()) {
      fail(ErrorCode::InvalidParameter, e.path.string() + ": instance index beyond the test split");
    }
    out.push_back({e.instance, ingest_explanation(e.path, data.test[e.instance].series)});
  }
  return out;
}

std::string AggregateStats::group() const {
  std::string g = explainer + "/" + metric;
  if (!facet.empty()) g += "/" + facet;
  return g;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(ErrorCode::EmptySelection, "quantile of an empty set");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<AggregateStats> aggregate(std::span<const MetricRecord> records, GroupFacet facet,
                                      AggregationMode mode) {
  if (records.empty()) fail(ErrorCode::EmptySelection, "no records to aggregate");
  using Key = std::tuple<std::string, std::string, std::string>;
  struct Bucket {
    std::vector<double> values;
    std::map<std::string, std::vector<double>> per_dataset;
    std::size_t degenerate = 0;
  };
  std::map<Key, Bucket> buckets;
  for (const auto& r : records) {
    if (r.status == RecordStatus::Skipped) continue;
    const std::string f = facet == GroupFacet::Dataset ? r.dataset : facet == GroupFacet::Model ? r.model : "";
    Bucket& b = buckets[{r.explainer, r.metric, f}];
    if (r.status == RecordStatus::Degenerate) {
      ++b.degenerate;
      continue;
    }
    b.values.push_back(r.value);
    b.per_dataset[r.dataset].push_back(r.value);
  }
  std::vector<AggregateStats> out;
  for (auto& [key, b] : buckets) {
    std::vector<double> v;
    if (mode == AggregationMode::DatasetMeans) {
      for (const auto& [ds, vals] : b.per_dataset) {
        v.push_back(std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size()));
      }
    } else {
      v = b.values;
    }
    if (v.empty()) continue;
    AggregateStats s;
    std::tie(s.explainer, s.metric, s.facet) = key;
    std::sort(v.begin(), v.end());
    s.count = v.size();
    s.degenerate_count = b.degenerate;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.median = quantile_sorted(v, 0.5);
    s.q1 = quantile_sorted(v, 0.25);
    s.q3 = quantile_sorted(v, 0.75);
    s.min = v.front();
    s.max = v.back();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace xtsc
