#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xtsc/injection.hpp"
#include "xtsc/processes.hpp"

namespace xtsc {

enum class Arity { Univariate, Multivariate };

std::string_view to_string(Arity arity);
Arity parse_arity(std::string_view name);

/// Synthetic ids carry process and feature kind; custom datasets only a name.
struct DatasetId {
  std::string name;
  std::optional<ProcessKind> process;
  std::optional<FeatureKind> feature;
  Arity arity = Arity::Univariate;

  static DatasetId synthetic(ProcessKind process, FeatureKind feature, Arity arity);
  bool operator==(const DatasetId&) const = default;
};

inline constexpr std::string_view kDatasetFormatVersion = "1.1";

struct Dataset {
  DatasetId id;
  Shape shape;
  std::vector<LabeledInstance> train;
  std::vector<LabeledInstance> test;
  NormalizationParams normalization;
  /// Present for synthetic data; drives reference-baseline sampling.
  std::optional<GenerationSpec> generation;
  double injection_constant = 1.0;
  std::uint64_t master_seed = 0;
  std::uint64_t dataset_seed = 0;
  /// Custom data may come without ground truth.
  bool has_masks = true;

  bool operator==(const Dataset&) const = default;
};

using SyntheticDataset = Dataset;

struct CatalogConfig {
  std::size_t n_train = 100;
  std::size_t n_test = 50;
  std::uint64_t master_seed = 0;
  double injection_constant = 1.0;
  std::size_t t_steps = 50;
  std::size_t multivariate_features = 50;
  std::vector<Arity> arities = {Arity::Univariate, Arity::Multivariate};
  /// Substring filter applied before generation; empty keeps everything.
  std::vector<std::string> types;
  ProcessParams params;
  /// 0 selects the OpenMP default.
  int workers = 0;
};

/// All (process, feature kind, arity) ids the config selects, in catalog order.
std::vector<DatasetId> catalog_ids(const CatalogConfig& config);

Dataset build_dataset(const DatasetId& id, const CatalogConfig& config);

/// 6 x 10 datasets per arity (before type filtering). Parallel over ids and
/// independent of the worker count.
std::vector<Dataset> build_catalog(const CatalogConfig& config);

/// Case-insensitive substring match against the process or feature-kind name
/// (custom datasets: against the dataset name); a full dataset name also
/// matches. Empty `types` matches all.
bool matches_types(const DatasetId& id, const std::vector<std::string>& types);

/// Union filter. A filter that matches nothing yields an empty result and, if
/// `warnings` is given, an EmptySelection warning.
std::vector<Dataset> filter_catalog(const std::vector<Dataset>& catalog, const std::vector<std::string>& types,
                                    std::vector<std::string>* warnings = nullptr);

/// Directory layout: manifest.json, train.csv, test.csv and, when masks
/// exist, train_mask.csv / test_mask.csv.
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

void save_catalog(const std::vector<Dataset>& catalog, const CatalogConfig& config, const std::string& root);
/// Loads every dataset listed in root/catalog.json, optionally filtered.
std::vector<Dataset> load_catalog(const std::string& root, const std::vector<std::string>& types = {});

}  // namespace xtsc
