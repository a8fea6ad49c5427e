#include "xtsc/catalog.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <omp.h>

#include "xtsc/error.hpp"
#include "xtsc/rng.hpp"
#include "xtsc/text.hpp"

namespace xtsc {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kMaskStream = 0x6D61736Bull;

bool is_positional(FeatureKind kind) {
  return kind == FeatureKind::PositionalTime || kind == FeatureKind::PositionalFeature;
}

json params_to_json(const ProcessParams& p) {
  return {{"phi", p.phi},
          {"sigma", p.sigma},
          {"harmonic_frequency", p.harmonic_frequency},
          {"amplitude_mean", p.amplitude_mean},
          {"amplitude_sd", p.amplitude_sd},
          {"frequency_mean", p.frequency_mean},
          {"frequency_sd", p.frequency_sd},
          {"narma_order", p.narma_order},
          {"narma_input_high", p.narma_input_high},
          {"burn_in", p.burn_in}};
}

ProcessParams params_from_json(const json& j) {
  ProcessParams p;
  p.phi = j.value("phi", p.phi);
  p.sigma = j.value("sigma", p.sigma);
  p.harmonic_frequency = j.value("harmonic_frequency", p.harmonic_frequency);
  p.amplitude_mean = j.value("amplitude_mean", p.amplitude_mean);
  p.amplitude_sd = j.value("amplitude_sd", p.amplitude_sd);
  p.frequency_mean = j.value("frequency_mean", p.frequency_mean);
  p.frequency_sd = j.value("frequency_sd", p.frequency_sd);
  p.narma_order = j.value("narma_order", p.narma_order);
  p.narma_input_high = j.value("narma_input_high", p.narma_input_high);
  p.burn_in = j.value("burn_in", p.burn_in);
  return p;
}

std::string csv_header(Shape shape) {
  std::string h;
  for (std::size_t i = 0; i < shape.n_features; ++i) {
    for (std::size_t t = 0; t < shape.t_steps; ++t) {
      h += "f" + std::to_string(i) + "_t" + std::to_string(t) + ",";
    }
  }
  return h + "label\n";
}

std::string series_csv(const std::vector<LabeledInstance>& split, Shape shape) {
  std::string out = csv_header(shape);
  for (const auto& inst : split) {
    for (double v : inst.series.values()) {
      out += text::format_double(v);
      out += ',';
    }
    out += std::to_string(static_cast<int>(inst.label));
    out += '\n';
  }
  return out;
}

std::string mask_csv(const std::vector<LabeledInstance>& split, Shape shape) {
  std::string out = csv_header(shape);
  for (const auto& inst : split) {
    for (std::uint8_t c : inst.mask.cells()) {
      out += c ? '1' : '0';
      out += ',';
    }
    out += std::to_string(static_cast<int>(inst.label));
    out += '\n';
  }
  return out;
}

struct CsvRows {
  std::vector<std::vector<double>> cells;
  std::vector<Label> labels;
};

CsvRows read_csv_rows(const std::string& path, Shape shape) {
  std::istringstream in(text::read_file(path));
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::FormatError, path + ": missing header");
  const std::size_t expected_cols = shape.cells() + 1;
  if (text::split(line, ',').size() != expected_cols) {
    fail(ErrorCode::FormatError, path + ": header has " + std::to_string(text::split(line, ',').size()) +
                                     " columns, manifest shape " + to_string(shape) + " needs " +
                                     std::to_string(expected_cols));
  }
  CsvRows rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    const std::string where = path + " row " + std::to_string(row);
    if (fields.size() != expected_cols) {
      fail(ErrorCode::FormatError, where + ": " + std::to_string(fields.size()) + " columns, manifest shape " +
                                       to_string(shape) + " needs " + std::to_string(expected_cols));
    }
    std::vector<double> values(shape.cells());
    for (std::size_t c = 0; c < shape.cells(); ++c) {
      values[c] = text::parse_double(fields[c], where + " column " + std::to_string(c));
    }
    const double label = text::parse_double(fields.back(), where + " label");
    if (label != 0.0 && label != 1.0) fail(ErrorCode::FormatError, where + ": label must be 0 or 1");
    rows.cells.push_back(std::move(values));
    rows.labels.push_back(label == 1.0 ? Label::Positive : Label::Negative);
    ++row;
  }
  return rows;
}

std::vector<LabeledInstance> read_split(const fs::path& dir, const std::string& name, Shape shape,
                                        bool with_masks, std::size_t expected_count) {
  CsvRows data = read_csv_rows((dir / (name + ".csv")).string(), shape);
  if (data.cells.size() != expected_count) {
    fail(ErrorCode::FormatError, name + ".csv has " + std::to_string(data.cells.size()) +
                                     " rows, manifest counts " + std::to_string(expected_count));
  }
  std::optional<CsvRows> masks;
  if (with_masks) {
    masks = read_csv_rows((dir / (name + "_mask.csv")).string(), shape);
    if (masks->cells.size() != data.cells.size()) {
      fail(ErrorCode::FormatError, name + "_mask.csv row count differs from " + name + ".csv");
    }
  }
  std::vector<LabeledInstance> out;
  out.reserve(data.cells.size());
  for (std::size_t k = 0; k < data.cells.size(); ++k) {
    LabeledInstance inst;
    inst.series = TimeSeries(shape, std::move(data.cells[k]));
    inst.label = data.labels[k];
    if (masks) {
      std::vector<std::uint8_t> cells(shape.cells());
      for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = masks->cells[k][c] != 0.0 ? 1 : 0;
      inst.mask = GroundTruthMask(shape, std::move(cells));
    }
    out.push_back(std::move(inst));
  }
  return out;
}

template <typename T>
T required(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) fail(ErrorCode::FormatError, context + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, context + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

std::string_view to_string(Arity arity) {
  return arity == Arity::Univariate ? "Univariate" : "Multivariate";
}

Arity parse_arity(std::string_view name) {
  if (name == "Univariate") return Arity::Univariate;
  if (name == "Multivariate") return Arity::Multivariate;
  fail(ErrorCode::FormatError, "unknown arity '" + std::string(name) + "'");
}

DatasetId DatasetId::synthetic(ProcessKind process, FeatureKind feature, Arity arity) {
  DatasetId id;
  id.name = std::string(arity == Arity::Univariate ? "uni_" : "multi_") + std::string(to_string(process)) + "_" +
            std::string(to_string(feature));
  id.process = process;
  id.feature = feature;
  id.arity = arity;
  return id;
}

bool matches_types(const DatasetId& id, const std::vector<std::string>& types) {
  if (types.empty()) return true;
  std::vector<std::string> names;
  if (id.process) names.push_back(text::lower(to_string(*id.process)));
  if (id.feature) names.push_back(text::lower(to_string(*id.feature)));
  const std::string full = text::lower(id.name);
  if (names.empty()) names.push_back(full);
  for (const auto& type : types) {
    const std::string needle = text::lower(text::trim(type));
    if (needle.empty()) continue;
    if (needle == full) return true;
    for (const auto& n : names) {
      if (n.find(needle) != std::string::npos) return true;
    }
  }
  return false;
}

std::vector<DatasetId> catalog_ids(const CatalogConfig& config) {
  std::vector<DatasetId> ids;
  for (Arity arity : config.arities) {
    for (ProcessKind p : kAllProcesses) {
      for (FeatureKind f : kAllFeatureKinds) {
        DatasetId id = DatasetId::synthetic(p, f, arity);
        if (matches_types(id, config.types)) ids.push_back(std::move(id));
      }
    }
  }
  return ids;
}

Dataset build_dataset(const DatasetId& id, const CatalogConfig& config) {
  if (!id.process || !id.feature) fail(ErrorCode::InvalidParameter, "build_dataset needs a synthetic id");
  const Shape shape{id.arity == Arity::Univariate ? 1 : config.multivariate_features, config.t_steps};
  const std::uint64_t dataset_seed = derive_seed(config.master_seed, {hash_name(id.name)});

  GenerationSpec gen;
  gen.process = *id.process;
  gen.params = config.params;
  gen.seed = dataset_seed;
  gen.t_steps = shape.t_steps;
  gen.n_features = shape.n_features;
  validate(gen);

  const MaskSpec mask_spec = mask_spec_for(*id.feature, shape, derive_seed(dataset_seed, {kMaskStream}));
  const InjectionMode mode = is_positional(*id.feature) ? InjectionMode::AddForBoth : InjectionMode::SignedByClass;

  auto make_split = [&](std::uint64_t split, std::size_t count) {
    std::vector<LabeledInstance> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      const std::uint64_t instance_seed = derive_seed(dataset_seed, {split, k});
      // Alternating labels keep every split balanced.
      const Label label = k % 2 == 0 ? Label::Positive : Label::Negative;
      GenerationSpec s = gen;
      s.seed = instance_seed;
      GroundTruthMask mask = build_mask(mask_spec, shape, instance_seed, label);
      out.push_back(inject_label(generate_base(s), mask, label, config.injection_constant, mode));
    }
    return out;
  };

  NormalizedSplits splits = normalize(make_split(0, config.n_train), make_split(1, config.n_test));
  Dataset ds;
  ds.id = id;
  ds.shape = shape;
  ds.train = std::move(splits.train);
  ds.test = std::move(splits.test);
  ds.normalization = std::move(splits.params);
  ds.generation = gen;
  ds.injection_constant = config.injection_constant;
  ds.master_seed = config.master_seed;
  ds.dataset_seed = dataset_seed;
  ds.has_masks = true;
  return ds;
}

std::vector<Dataset> build_catalog(const CatalogConfig& config) {
  const std::vector<DatasetId> ids = catalog_ids(config);
  std::vector<Dataset> out(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());
  const int n = static_cast<int>(ids.size());
  const int threads = config.workers > 0 ? config.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int k = 0; k < n; ++k) {
    try {
      out[k] = build_dataset(ids[k], config);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<Dataset> filter_catalog(const std::vector<Dataset>& catalog, const std::vector<std::string>& types,
                                    std::vector<std::string>* warnings) {
  std::vector<Dataset> out;
  for (const auto& ds : catalog) {
    if (matches_types(ds.id, types)) out.push_back(ds);
  }
  if (out.empty() && !catalog.empty() && warnings) {
    std::string joined;
    for (const auto& t : types) joined += (joined.empty() ? "" : ",") + t;
    warnings->push_back(std::string(to_string(ErrorCode::EmptySelection)) + ": types [" + joined +
                        "] match no dataset");
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());

  json manifest;
  manifest["format_version"] = kDatasetFormatVersion;
  manifest["id"] = {{"name", ds.id.name},
                    {"process", ds.id.process ? json(to_string(*ds.id.process)) : json(nullptr)},
                    {"feature_kind", ds.id.feature ? json(to_string(*ds.id.feature)) : json(nullptr)},
                    {"arity", to_string(ds.id.arity)}};
  manifest["shape"] = {{"n_features", ds.shape.n_features}, {"t_steps", ds.shape.t_steps}};
  manifest["seeds"] = {{"master_seed", ds.master_seed}, {"dataset_seed", ds.dataset_seed}};
  manifest["counts"] = {{"train", ds.train.size()}, {"test", ds.test.size()}};
  manifest["normalization"] = {{"min", ds.normalization.min}, {"max", ds.normalization.max}};
  manifest["injection_constant"] = ds.injection_constant;
  manifest["has_masks"] = ds.has_masks;
  if (ds.generation) {
    manifest["generation"] = {{"process", to_string(ds.generation->process)},
                              {"seed", ds.generation->seed},
                              {"params", params_to_json(ds.generation->params)}};
  } else {
    manifest["generation"] = nullptr;
  }

  const fs::path root(dir);
  text::write_file((root / "manifest.json").string(), manifest.dump(2) + "\n");
  text::write_file((root / "train.csv").string(), series_csv(ds.train, ds.shape));
  text::write_file((root / "test.csv").string(), series_csv(ds.test, ds.shape));
  if (ds.has_masks) {
    text::write_file((root / "train_mask.csv").string(), mask_csv(ds.train, ds.shape));
    text::write_file((root / "test_mask.csv").string(), mask_csv(ds.test, ds.shape));
  }
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  const std::string manifest_path = (root / "manifest.json").string();
  json m;
  try {
    m = json::parse(text::read_file(manifest_path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::FormatError, manifest_path + ": " + e.what());
  }
  const std::string ctx = manifest_path;
  const auto version = required<std::string>(m, "format_version", ctx);
  if (version.rfind("1.", 0) != 0) {
    fail(ErrorCode::FormatError, ctx + ": unsupported format_version '" + version + "'");
  }

  Dataset ds;
  const json& id = m.contains("id") ? m.at("id") : json::object();
  ds.id.name = required<std::string>(id, "name", ctx + " id");
  if (id.contains("process") && !id.at("process").is_null()) {
    ds.id.process = parse_process_kind(id.at("process").get<std::string>());
  }
  if (id.contains("feature_kind") && !id.at("feature_kind").is_null()) {
    ds.id.feature = parse_feature_kind(id.at("feature_kind").get<std::string>());
  }
  ds.id.arity = parse_arity(required<std::string>(id, "arity", ctx + " id"));

  const json& shape = m.contains("shape") ? m.at("shape") : json::object();
  ds.shape.n_features = required<std::size_t>(shape, "n_features", ctx + " shape");
  ds.shape.t_steps = required<std::size_t>(shape, "t_steps", ctx + " shape");
  if (ds.shape.cells() == 0) fail(ErrorCode::FormatError, ctx + ": shape must be positive");

  if (m.contains("seeds")) {
    ds.master_seed = m.at("seeds").value("master_seed", std::uint64_t{0});
    ds.dataset_seed = m.at("seeds").value("dataset_seed", std::uint64_t{0});
  }
  const json& counts = m.contains("counts") ? m.at("counts") : json::object();
  const auto n_train = required<std::size_t>(counts, "train", ctx + " counts");
  const auto n_test = required<std::size_t>(counts, "test", ctx + " counts");

  if (m.contains("normalization") && !m.at("normalization").is_null()) {
    const json& norm = m.at("normalization");
    ds.normalization.min = required<std::vector<double>>(norm, "min", ctx + " normalization");
    ds.normalization.max = required<std::vector<double>>(norm, "max", ctx + " normalization");
    if (ds.normalization.min.size() != ds.shape.n_features || ds.normalization.max.size() != ds.shape.n_features) {
      fail(ErrorCode::FormatError, ctx + ": normalization length does not match n_features");
    }
  }
  // Format 1.0 predates these fields.
  ds.injection_constant = m.value("injection_constant", 1.0);
  ds.has_masks = m.contains("has_masks") ? m.at("has_masks").get<bool>()
                                         : fs::exists(root / "train_mask.csv") && fs::exists(root / "test_mask.csv");

  if (m.contains("generation") && !m.at("generation").is_null()) {
    const json& g = m.at("generation");
    GenerationSpec gen;
    gen.process = parse_process_kind(required<std::string>(g, "process", ctx + " generation"));
    gen.seed = required<std::uint64_t>(g, "seed", ctx + " generation");
    if (g.contains("params")) gen.params = params_from_json(g.at("params"));
    gen.t_steps = ds.shape.t_steps;
    gen.n_features = ds.shape.n_features;
    ds.generation = gen;
  }

  ds.train = read_split(root, "train", ds.shape, ds.has_masks, n_train);
  ds.test = read_split(root, "test", ds.shape, ds.has_masks, n_test);
  return ds;
}

void save_catalog(const std::vector<Dataset>& catalog, const CatalogConfig& config, const std::string& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + root + ": " + ec.message());
  json names = json::array();
  for (const auto& ds : catalog) {
    save_dataset(ds, (fs::path(root) / ds.id.name).string());
    names.push_back(ds.id.name);
  }
  json types = config.types;
  json manifest = {{"format_version", kDatasetFormatVersion},
                   {"master_seed", config.master_seed},
                   {"n_train", config.n_train},
                   {"n_test", config.n_test},
                   {"t_steps", config.t_steps},
                   {"multivariate_features", config.multivariate_features},
                   {"injection_constant", config.injection_constant},
                   {"types", types},
                   {"rng", std::string(Rng::kName) + "/v" + std::to_string(Rng::kVersion)},
                   {"datasets", names}};
  text::write_file((fs::path(root) / "catalog.json").string(), manifest.dump(2) + "\n");
}

std::vector<Dataset> load_catalog(const std::string& root, const std::vector<std::string>& types) {
  const std::string path = (fs::path(root) / "catalog.json").string();
  if (!fs::exists(path)) fail(ErrorCode::IoError, "no catalog at " + root + " (missing catalog.json)");
  json m;
  try {
    m = json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::FormatError, path + ": " + e.what());
  }
  const auto names = required<std::vector<std::string>>(m, "datasets", path);
  std::vector<Dataset> out;
  for (const auto& name : names) {
    Dataset ds = load_dataset((fs::path(root) / name).string());
    if (matches_types(ds.id, types)) out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace xtsc
