#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xtsc/baselines.hpp"
#include "xtsc/catalog.hpp"
#include "xtsc/classifier.hpp"
#include "xtsc/explainers.hpp"
#include "xtsc/metrics.hpp"

namespace xtsc {

enum class MetricKind { Complexity, RelevanceRank, RelevanceMass, Faithfulness, SensMax, SensMean };

/// Record names: complexity, racc, macc, faithfulness, sens_max, sens_mean.
std::string_view to_string(MetricKind kind);
MetricKind parse_metric_kind(std::string_view name);
std::vector<MetricKind> all_metric_kinds();
bool needs_model(MetricKind kind);
bool needs_mask(MetricKind kind);

struct MetricParams {
  RobustnessParams robustness;
  FaithfulnessParams faithfulness;
  /// Faithfulness reference for synthetic runs; custom runs default to Uniform.
  BaselineKind faithfulness_baseline = BaselineKind::GenerationProcess;
};

/// How stats pool records: every instance, or the mean of each dataset first.
enum class AggregationMode { PooledInstances, DatasetMeans };

struct BenchmarkPlan {
  /// Dataset type filter; empty selects every dataset.
  std::vector<std::string> types;
  std::vector<std::string> models;
  std::vector<std::string> explainers;
  std::vector<MetricKind> metrics;
  MetricParams params;
  ExplainerSettings explainer_settings;
  /// Masking and reference source for explainers on synthetic data.
  BaselineKind explainer_baseline = BaselineKind::GenerationProcess;
  std::uint64_t master_seed = 0;
  /// 0 selects the OpenMP default.
  int workers = 0;
  /// Caps the number of test instances per dataset.
  std::optional<std::size_t> max_instances;
  double accuracy_gate = 0.9;
  AggregationMode aggregation = AggregationMode::PooledInstances;
};

/// Throws InvalidParameter when a list is empty or the gate is outside [0, 1].
void validate(const BenchmarkPlan& plan);

enum class RecordStatus { Ok, Degenerate, Skipped };
std::string_view to_string(RecordStatus status);

struct MetricRecord {
  std::string metric;
  std::string dataset;
  std::string model;
  std::string explainer;
  std::size_t instance = 0;
  /// Meaningful only for Ok records.
  double value = 0.0;
  RecordStatus status = RecordStatus::Ok;
  /// Error code name for Degenerate records, capability gap for Skipped ones,
  /// UnstablePrediction for robustness values whose ball changed the argmax.
  std::string reason;

  bool operator==(const MetricRecord&) const = default;
};

struct GateEntry {
  std::string dataset;
  std::string model;
  double accuracy = 0.0;
  bool passed = false;
};

struct EvaluationResult {
  std::vector<MetricRecord> records;
  /// One entry per (dataset, model) pair considered, passed or not.
  std::vector<GateEntry> gate;
};

struct ProvidedModel {
  std::shared_ptr<const Classifier> model;
  /// Computed on the test split when absent.
  std::optional<double> test_accuracy;
};

/// Returns nullopt when no model of that name exists for the dataset.
using ModelProvider = std::function<std::optional<ProvidedModel>(const Dataset&, const std::string& model)>;

/// Seed for one record, a hash of every key.
std::uint64_t record_seed(std::uint64_t master, std::string_view dataset, std::string_view model,
                          std::string_view explainer, std::size_t instance, std::string_view metric);

/// Scores every (dataset, model, explainer, test instance, metric) selected by
/// the plan. Models at or below the accuracy gate are skipped and logged. The
/// result is independent of the worker count. Throws EmptySelection when no
/// dataset matches or no model passes the gate, MissingCapability when a
/// model is missing.
EvaluationResult evaluate_synthetic(const BenchmarkPlan& plan, std::span<const Dataset> catalog,
                                    const ModelProvider& models);

/// Precomputed attributions for custom evaluation.
struct ProvidedAttribution {
  std::size_t instance = 0;
  Attribution attribution;
};

struct CustomEvaluation {
  std::string model_name = "external";
  /// Needed for faithfulness and robustness and for internal explainers.
  std::shared_ptr<const Classifier> model;
  /// Internal explainers to run; requires a model.
  std::vector<std::string> explainers;
  /// External attributions scored as given.
  std::vector<ProvidedAttribution> attributions;
  std::vector<MetricKind> metrics;
  MetricParams params;
  ExplainerSettings explainer_settings;
  /// Defaults to a uniform draw over each feature's training range.
  BaselinePtr baseline;
  std::uint64_t master_seed = 0;
  int workers = 0;
  std::optional<std::size_t> max_instances;
};

/// Scores custom data against a live model and/or attribution files.
/// Reliability metrics yield Skipped records with reason NoGroundTruth when
/// the data carries no masks. Throws MissingCapability when a metric or
/// explainer needs a model that was not given, or when robustness is asked of
/// external attributions.
EvaluationResult evaluate(const Dataset& data, const CustomEvaluation& setup);

/// Collects attribution files laid out as <dir>/<dataset>/<explainer>/<instance>.{json,csv}.
/// Example files are converted against the matching test instance.
std::vector<ProvidedAttribution> load_attribution_dir(const std::string& dir, const Dataset& data);

struct AggregateStats {
  std::string explainer;
  std::string metric;
  /// Dataset or model name when grouped by that facet, else empty.
  std::string facet;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
  std::size_t degenerate_count = 0;

  std::string group() const;
};

enum class GroupFacet { None, Dataset, Model };

/// Linear-interpolation quantile of sorted values (type 7).
double quantile_sorted(std::span<const double> sorted, double p);

/// Stats per (explainer, metric[, facet]) over Ok records; Degenerate records
/// are only counted. Groups without Ok values are omitted. Throws
/// EmptySelection on empty input.
std::vector<AggregateStats> aggregate(std::span<const MetricRecord> records, GroupFacet facet = GroupFacet::None,
                                      AggregationMode mode = AggregationMode::PooledInstances);

}  // namespace xtsc
