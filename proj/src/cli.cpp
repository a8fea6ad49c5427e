#include "xtsc/cli.hpp"

#include <cstdlib>
#include <exception>
#include <filesystem>

#include <omp.h>

#include <CLI11.hpp>

#include "xtsc/models.hpp"
#include "xtsc/report.hpp"
#include "xtsc/rng.hpp"
#include "xtsc/text.hpp"

namespace xtsc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kDefaultExplainers = {"saliency", "smoothgrad", "gradient_shap", "occlusion",
                                                     "leftist"};

std::string_view to_string(GroupFacet f) {
  switch (f) {
    case GroupFacet::None: return "none";
    case GroupFacet::Dataset: return "dataset";
    case GroupFacet::Model: return "model";
  }
  return "none";
}

GroupFacet parse_facet(std::string_view s) {
  const std::string n = text::lower(s);
  if (n == "none") return GroupFacet::None;
  if (n == "dataset") return GroupFacet::Dataset;
  if (n == "model") return GroupFacet::Model;
  fail(ErrorCode::InvalidParameter, "group_by must be none, dataset or model");
}

AggregationMode parse_aggregation(std::string_view s) {
  const std::string n = text::lower(s);
  if (n == "pooled") return AggregationMode::PooledInstances;
  if (n == "dataset_means") return AggregationMode::DatasetMeans;
  fail(ErrorCode::InvalidParameter, "aggregation must be pooled or dataset_means");
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  for (const auto& part : text::split(csv, ',')) {
    const std::string t = text::trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <typename T>
void take(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) fail(ErrorCode::InvalidParameter, where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      fail(ErrorCode::InvalidParameter, "unknown config key '" + where + k + "'");
    }
  }
}

std::vector<std::string> canonical_models(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) out.emplace_back(nn::to_string(nn::parse_architecture(n)));
  return out;
}

fs::path checkpoint_dir(const RunConfig& cfg, const std::string& dataset, const std::string& model) {
  return fs::path(cfg.models_dir) / dataset / model;
}

struct TrainingRow {
  std::string dataset;
  std::string architecture;
  double train_acc = 0.0;
  double test_acc = 0.0;
  int epochs_run = 0;
};

std::optional<TrainingRow> read_training_summary(const fs::path& dir) {
  const fs::path p = dir / "training.json";
  if (!fs::exists(p)) return std::nullopt;
  const json doc = json::parse(text::read_file(p.string()), nullptr, false);
  if (doc.is_discarded()) fail(ErrorCode::FormatError, p.string() + ": invalid JSON");
  try {
    return TrainingRow{doc.at("dataset").get<std::string>(), doc.at("architecture").get<std::string>(),
                       doc.at("train_acc").get<double>(), doc.at("test_acc").get<double>(),
                       doc.at("epochs_run").get<int>()};
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, p.string() + ": " + e.what());
  }
}

void write_training_summary(const fs::path& dir, const TrainingRow& row) {
  text::write_file((dir / "training.json").string(), json{{"dataset", row.dataset},
                                                          {"architecture", row.architecture},
                                                          {"train_acc", row.train_acc},
                                                          {"test_acc", row.test_acc},
                                                          {"epochs_run", row.epochs_run}}
                                                         .dump(2) +
                                                         "\n");
}

json manifest_for(const std::string& command, const RunConfig& cfg) {
  return json{{"command", command}, {"config", to_json(cfg)}};
}

void require_seed(const RunConfig& cfg, const std::string& command) {
  if (!cfg.seed) fail(ErrorCode::InvalidParameter, command + " needs a master seed (--seed or config 'seed')");
}

// ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::string root = cfg.out.value_or(cfg.data_root);
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!cfg.force) fail(ErrorCode::IoError, root + " is not empty; pass --force to replace it");
    std::error_code ec;
    fs::remove_all(root, ec);
    if (ec) fail(ErrorCode::IoError, "cannot clear " + root + ": " + ec.message());
  }
  std::vector<std::string> warnings;
  const auto ids = catalog_ids(cfg.catalog);
  if (ids.empty()) fail(ErrorCode::EmptySelection, "type filter selects no dataset");
  const auto catalog = build_catalog(cfg.catalog);
  save_catalog(catalog, cfg.catalog, root);
  text::write_file((fs::path(root) / "run_manifest.json").string(), manifest_for("generate", cfg).dump(2) + "\n");
  err << "generated " << catalog.size() << " datasets in " << root << "\n";
  out << catalog.size() << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto catalog = load_catalog(cfg.data_root, cfg.plan.types);
  if (catalog.empty()) fail(ErrorCode::EmptySelection, "type filter selects no dataset");
  const std::uint64_t seed = cfg.seed.value_or(0);
  struct Job {
    const Dataset* data;
    std::string arch;
  };
  std::vector<Job> jobs;
  for (const auto& d : catalog)
    for (const auto& m : cfg.plan.models) jobs.push_back({&d, m});

  std::vector<TrainingRow> rows(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const int threads = cfg.plan.workers > 0 ? cfg.plan.workers : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const Job& job = jobs[static_cast<std::size_t>(k)];
    try {
      const fs::path dir = checkpoint_dir(cfg, job.data->id.name, job.arch);
      if (nn::checkpoint_exists(dir.string())) {
        if (auto row = read_training_summary(dir)) {
          rows[static_cast<std::size_t>(k)] = *row;
          continue;
        }
        const nn::NeuralClassifier model = nn::load_checkpoint(dir.string());
        TrainingRow row{job.data->id.name, job.arch, accuracy(model, job.data->train),
                        accuracy(model, job.data->test), 0};
        write_training_summary(dir, row);
        rows[static_cast<std::size_t>(k)] = row;
        continue;
      }
      const std::uint64_t job_seed = derive_seed(seed, {hash_name(job.data->id.name), hash_name(job.arch)});
      nn::NeuralClassifier model(nn::parse_architecture(job.arch), job.data->shape, job_seed);
      nn::TrainConfig tc = cfg.training;
      tc.seed = job_seed;
      const auto history = nn::train(model, job.data->train, tc);
      TrainingRow row{job.data->id.name, job.arch, accuracy(model, job.data->train), accuracy(model, job.data->test),
                      static_cast<int>(history.epochs.size())};
      fs::create_directories(dir);
      // The summary goes last so that a partial write is retrained on resume.
      nn::save_checkpoint(model, dir.string());
      write_training_summary(dir, row);
      rows[static_cast<std::size_t>(k)] = row;
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::string csv = "dataset,architecture,train_acc,test_acc,epochs_run\n";
  for (const auto& r : rows) {
    csv += r.dataset + ',' + r.architecture + ',' + text::format_double(r.train_acc) + ',' +
           text::format_double(r.test_acc) + ',' + std::to_string(r.epochs_run) + '\n';
    if (!(r.test_acc > cfg.plan.accuracy_gate)) {
      err << "below gate: " << r.dataset << " " << r.architecture << " test_acc=" << text::format_double(r.test_acc)
          << "\n";
    }
  }
  fs::create_directories(cfg.models_dir);
  text::write_file((fs::path(cfg.models_dir) / "accuracy.csv").string(), csv);
  text::write_file((fs::path(cfg.models_dir) / "run_manifest.json").string(),
                   manifest_for("train", cfg).dump(2) + "\n");
  out << csv;
  return kExitOk;
}

std::shared_ptr<const Classifier> load_model(const RunConfig& cfg, const Dataset& d, const std::string& name,
                                             std::optional<double>* test_acc) {
  const fs::path dir = checkpoint_dir(cfg, d.id.name, name);
  if (!nn::checkpoint_exists(dir.string())) return nullptr;
  auto model = std::make_shared<nn::NeuralClassifier>(nn::load_checkpoint(dir.string()));
  if (test_acc) {
    if (auto row = read_training_summary(dir)) *test_acc = row->test_acc;
  }
  return model;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::string report_dir = cfg.out.value_or((fs::path(cfg.data_root) / "report").string());
  const auto catalog = load_catalog(cfg.data_root, cfg.plan.types);
  if (catalog.empty()) fail(ErrorCode::EmptySelection, "type filter selects no dataset");

  EvaluationResult result;
  if (cfg.attributions) {
    for (const auto& d : catalog) {
      if (!fs::is_directory(fs::path(*cfg.attributions) / d.id.name)) continue;
      CustomEvaluation setup;
      setup.attributions = load_attribution_dir(*cfg.attributions, d);
      setup.metrics = cfg.plan.metrics;
      setup.params = cfg.plan.params;
      setup.master_seed = *cfg.seed;
      setup.workers = cfg.plan.workers;
      setup.max_instances = cfg.plan.max_instances;
      if (std::any_of(setup.metrics.begin(), setup.metrics.end(), needs_model)) {
        setup.model_name = cfg.plan.models.front();
        setup.model = load_model(cfg, d, setup.model_name, nullptr);
        if (!setup.model) fail(ErrorCode::MissingCapability, "no trained " + setup.model_name + " for " + d.id.name);
      }
      setup.baseline = d.generation ? make_baseline(cfg.plan.params.faithfulness_baseline, d) : nullptr;
      auto part = evaluate(d, setup);
      std::move(part.records.begin(), part.records.end(), std::back_inserter(result.records));
    }
    if (result.records.empty()) fail(ErrorCode::EmptySelection, "no attribution files match the selected datasets");
  } else {
    const ModelProvider provider = [&](const Dataset& d, const std::string& name) -> std::optional<ProvidedModel> {
      ProvidedModel pm;
      pm.model = load_model(cfg, d, name, &pm.test_accuracy);
      if (!pm.model) return std::nullopt;
      return pm;
    };
    result = evaluate_synthetic(cfg.plan, catalog, provider);
    for (const auto& g : result.gate) {
      if (!g.passed) {
        err << "gate-skip: " << g.dataset << " " << g.model << " accuracy=" << text::format_double(g.accuracy) << "\n";
      }
    }
  }
  const auto stats = aggregate(result.records, cfg.group_by, cfg.plan.aggregation);
  json manifest = manifest_for("evaluate", cfg);
  manifest["gate"] = to_json(result.gate);
  manifest["record_count"] = result.records.size();
  emit_report(report_dir, result.records, stats, manifest);
  err << "wrote " << result.records.size() << " records to " << report_dir << "\n";
  out << report_dir << "\n";
  return kExitOk;
}

int cmd_report(const RunConfig& cfg, const std::string& in_dir, std::ostream& out, std::ostream&) {
  const fs::path records_path = fs::path(in_dir) / "records.csv";
  if (!fs::exists(records_path)) fail(ErrorCode::IoError, "no records.csv in " + in_dir);
  const auto records = parse_records_csv(text::read_file(records_path.string()));
  const auto stats = aggregate(records, cfg.group_by, cfg.plan.aggregation);
  json manifest = json::object();
  const fs::path previous = fs::path(in_dir) / "run_manifest.json";
  if (fs::exists(previous)) {
    manifest = json::parse(text::read_file(previous.string()), nullptr, false);
    if (manifest.is_discarded()) manifest = json::object();
  }
  manifest["report"] = {{"input", in_dir},
                        {"group_by", std::string(to_string(cfg.group_by))},
                        {"aggregation",
                         cfg.plan.aggregation == AggregationMode::PooledInstances ? "pooled" : "dataset_means"}};
  const std::string dir = cfg.out.value_or(in_dir);
  emit_report(dir, records, stats, manifest);
  out << dir << "\n";
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySelection:
      return kExitEmptySelection;
    case ErrorCode::IoError:
    case ErrorCode::FormatError:
    case ErrorCode::InvalidShape:
      return kExitIo;
    case ErrorCode::InvalidParameter:
    case ErrorCode::NonStationaryParameter:
    case ErrorCode::MaskInfeasible:
    case ErrorCode::DegenerateSeparation:
    case ErrorCode::MissingCapability:
      return kExitConfig;
    default:
      return kExitInternal;
  }
}

RunConfig default_config() {
  RunConfig cfg;
  const char* home = std::getenv("XTSC_BENCH_HOME");
  cfg.data_root = home && *home ? home : "xtsc-data";
  cfg.plan.models = {"TemporalConv", "GatedRecurrent"};
  cfg.plan.explainers = kDefaultExplainers;
  cfg.plan.metrics = all_metric_kinds();
  return cfg;
}

void apply_config(RunConfig& cfg, const json& doc) {
  try {
    check_keys(doc,
               {"data_root", "out", "seed", "force", "attributions", "models_dir", "types", "models", "explainers",
                "metrics", "workers", "max_instances", "accuracy_gate", "aggregation", "group_by",
                "explainer_baseline", "catalog", "training", "robustness", "faithfulness", "explainer_settings"},
               "");
    take(doc, "data_root", cfg.data_root);
    if (doc.contains("out") && !doc.at("out").is_null()) cfg.out = doc.at("out").get<std::string>();
    if (doc.contains("seed") && !doc.at("seed").is_null()) cfg.seed = doc.at("seed").get<std::uint64_t>();
    take(doc, "force", cfg.force);
    if (doc.contains("attributions") && !doc.at("attributions").is_null()) cfg.attributions = doc.at("attributions").get<std::string>();
    take(doc, "models_dir", cfg.models_dir);
    take(doc, "types", cfg.plan.types);
    take(doc, "models", cfg.plan.models);
    take(doc, "explainers", cfg.plan.explainers);
    if (doc.contains("metrics")) {
      cfg.plan.metrics.clear();
      for (const auto& m : doc.at("metrics")) cfg.plan.metrics.push_back(parse_metric_kind(m.get<std::string>()));
    }
    take(doc, "workers", cfg.plan.workers);
    if (doc.contains("max_instances")) {
      const auto& v = doc.at("max_instances");
      cfg.plan.max_instances = v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>());
    }
    take(doc, "accuracy_gate", cfg.plan.accuracy_gate);
    if (doc.contains("aggregation")) cfg.plan.aggregation = parse_aggregation(doc.at("aggregation").get<std::string>());
    if (doc.contains("group_by")) cfg.group_by = parse_facet(doc.at("group_by").get<std::string>());
    if (doc.contains("explainer_baseline")) {
      cfg.plan.explainer_baseline = parse_baseline_kind(doc.at("explainer_baseline").get<std::string>());
    }
    if (doc.contains("catalog")) {
      const json& c = doc.at("catalog");
      check_keys(c, {"n_train", "n_test", "t_steps", "multivariate_features", "injection_constant", "arities"},
                 "catalog.");
      take(c, "n_train", cfg.catalog.n_train);
      take(c, "n_test", cfg.catalog.n_test);
      take(c, "t_steps", cfg.catalog.t_steps);
      take(c, "multivariate_features", cfg.catalog.multivariate_features);
      take(c, "injection_constant", cfg.catalog.injection_constant);
      if (c.contains("arities")) {
        cfg.catalog.arities.clear();
        for (const auto& a : c.at("arities")) cfg.catalog.arities.push_back(parse_arity(a.get<std::string>()));
      }
    }
    if (doc.contains("training")) {
      const json& t = doc.at("training");
      check_keys(t, {"max_epochs", "patience", "learning_rate", "batch_size", "validation_fraction"}, "training.");
      take(t, "max_epochs", cfg.training.max_epochs);
      take(t, "patience", cfg.training.patience);
      take(t, "learning_rate", cfg.training.learning_rate);
      take(t, "batch_size", cfg.training.batch_size);
      take(t, "validation_fraction", cfg.training.validation_fraction);
    }
    if (doc.contains("robustness")) {
      const json& r = doc.at("robustness");
      check_keys(r, {"radius", "n_perturbations", "norm"}, "robustness.");
      take(r, "radius", cfg.plan.params.robustness.radius);
      take(r, "n_perturbations", cfg.plan.params.robustness.n_perturbations);
      if (r.contains("norm")) {
        const std::string n = text::lower(r.at("norm").get<std::string>());
        if (n != "l2" && n != "linf") fail(ErrorCode::InvalidParameter, "robustness.norm must be L2 or Linf");
        cfg.plan.params.robustness.norm = n == "l2" ? Norm::L2 : Norm::Linf;
      }
    }
    if (doc.contains("faithfulness")) {
      const json& f = doc.at("faithfulness");
      check_keys(f, {"baseline", "subset_fraction", "n_runs", "readout"}, "faithfulness.");
      if (f.contains("baseline")) {
        cfg.plan.params.faithfulness_baseline = parse_baseline_kind(f.at("baseline").get<std::string>());
      }
      take(f, "subset_fraction", cfg.plan.params.faithfulness.subset_fraction);
      take(f, "n_runs", cfg.plan.params.faithfulness.n_runs);
      if (f.contains("readout")) {
        const std::string r = text::lower(f.at("readout").get<std::string>());
        if (r != "probability" && r != "logit") fail(ErrorCode::InvalidParameter, "readout must be probability or logit");
        cfg.plan.params.faithfulness.readout = r == "logit" ? Readout::Logit : Readout::Probability;
      }
    }
    if (doc.contains("explainer_settings")) {
      const json& e = doc.at("explainer_settings");
      auto& s = cfg.plan.explainer_settings;
      check_keys(e,
                 {"smooth_samples", "smooth_sigma", "integrated_steps", "shap_baselines", "occlusion_window",
                  "lime_segment_len", "lime_samples", "tsr_alpha"},
                 "explainer_settings.");
      take(e, "smooth_samples", s.smooth_samples);
      take(e, "smooth_sigma", s.smooth_sigma);
      take(e, "integrated_steps", s.integrated_steps);
      take(e, "shap_baselines", s.shap_baselines);
      if (e.contains("occlusion_window")) {
        const auto w = e.at("occlusion_window").get<std::vector<std::size_t>>();
        if (w.size() != 2) fail(ErrorCode::InvalidParameter, "occlusion_window must be [features, steps]");
        s.occlusion_window = {w[0], w[1]};
      }
      take(e, "lime_segment_len", s.lime.segment_len);
      take(e, "lime_samples", s.lime.n_samples);
      if (e.contains("tsr_alpha")) {
        const auto& a = e.at("tsr_alpha");
        s.tsr.alpha = a.is_number() ? std::optional<double>(a.get<double>()) : std::nullopt;
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidParameter, std::string("config: ") + e.what());
  }
}

json to_json(const RunConfig& cfg) {
  json arities = json::array();
  for (Arity a : cfg.catalog.arities) arities.push_back(std::string(xtsc::to_string(a)));
  json metrics = json::array();
  for (MetricKind m : cfg.plan.metrics) metrics.push_back(std::string(xtsc::to_string(m)));
  const auto& plan = cfg.plan;
  const auto& settings = plan.explainer_settings;
  const auto& rob = plan.params.robustness;
  const auto& faith = plan.params.faithfulness;
  // Same schema as a --config file, so a manifest can be replayed.
  return json{
      {"data_root", cfg.data_root},
      {"out", cfg.out ? json(*cfg.out) : json(nullptr)},
      {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)},
      {"force", cfg.force},
      {"attributions", cfg.attributions ? json(*cfg.attributions) : json(nullptr)},
      {"models_dir", cfg.models_dir},
      {"types", plan.types},
      {"models", plan.models},
      {"explainers", plan.explainers},
      {"metrics", metrics},
      {"workers", plan.workers},
      {"max_instances", plan.max_instances ? json(*plan.max_instances) : json(nullptr)},
      {"accuracy_gate", plan.accuracy_gate},
      {"aggregation", plan.aggregation == AggregationMode::PooledInstances ? "pooled" : "dataset_means"},
      {"group_by", std::string(to_string(cfg.group_by))},
      {"explainer_baseline", std::string(xtsc::to_string(plan.explainer_baseline))},
      {"catalog",
       {{"n_train", cfg.catalog.n_train},
        {"n_test", cfg.catalog.n_test},
        {"t_steps", cfg.catalog.t_steps},
        {"multivariate_features", cfg.catalog.multivariate_features},
        {"injection_constant", cfg.catalog.injection_constant},
        {"arities", arities}}},
      {"training",
       {{"max_epochs", cfg.training.max_epochs},
        {"patience", cfg.training.patience},
        {"learning_rate", cfg.training.learning_rate},
        {"batch_size", cfg.training.batch_size},
        {"validation_fraction", cfg.training.validation_fraction}}},
      {"robustness",
       {{"radius", rob.radius}, {"n_perturbations", rob.n_perturbations}, {"norm", rob.norm == Norm::L2 ? "L2" : "Linf"}}},
      {"faithfulness",
       {{"baseline", std::string(xtsc::to_string(plan.params.faithfulness_baseline))},
        {"subset_fraction", faith.subset_fraction},
        {"n_runs", faith.n_runs},
        {"readout", faith.readout == Readout::Logit ? "logit" : "probability"}}},
      {"explainer_settings",
       {{"smooth_samples", settings.smooth_samples},
        {"smooth_sigma", settings.smooth_sigma},
        {"integrated_steps", settings.integrated_steps},
        {"shap_baselines", settings.shap_baselines},
        {"occlusion_window", {settings.occlusion_window.features, settings.occlusion_window.steps}},
        {"lime_segment_len", settings.lime.segment_len},
        {"lime_samples", settings.lime.n_samples},
        {"tsr_alpha", settings.tsr.alpha ? json(*settings.tsr.alpha) : json(nullptr)}}},
  };
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Benchmark for time-series classifier explanations"};
  app.require_subcommand(1);

  std::optional<std::string> config_path, out_dir, types, models, explainers, metrics, attributions, in_dir, data;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, max_epochs;
  std::optional<std::size_t> max_instances;
  bool force = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--types", types, "Comma-separated dataset type filter");
    sub->add_option("--models", models, "Comma-separated architectures");
    sub->add_option("--explainers", explainers, "Comma-separated explainer names");
    sub->add_option("--metrics", metrics, "Comma-separated metric names");
    sub->add_option("--workers", workers, "Parallel workers (default: all cores)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--data", data, "Data root (default: $XTSC_BENCH_HOME or ./xtsc-data)");
    sub->add_flag("--force", force, "Replace a non-empty output directory");
    sub->add_option("--max-instances", max_instances, "Test instances per dataset");
  };
  CLI::App* gen = app.add_subcommand("generate", "Build the synthetic catalog");
  CLI::App* trn = app.add_subcommand("train", "Train classifiers for every selected dataset");
  CLI::App* evl = app.add_subcommand("evaluate", "Score explainers and write a report");
  CLI::App* rep = app.add_subcommand("report", "Re-aggregate an existing records.csv");
  for (CLI::App* sub : {gen, trn, evl, rep}) add_common(sub);
  trn->add_option("--max-epochs", max_epochs, "Training epoch cap");
  evl->add_option("--attributions", attributions, "Directory of external attribution files");
  rep->add_option("--in", in_dir, "Report directory containing records.csv")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    RunConfig cfg = default_config();
    if (config_path) {
      const json doc = json::parse(text::read_file(*config_path), nullptr, false);
      if (doc.is_discarded()) fail(ErrorCode::InvalidParameter, *config_path + ": invalid JSON");
      apply_config(cfg, doc);
    }
    if (data) cfg.data_root = *data;
    if (out_dir) cfg.out = *out_dir;
    if (seed) cfg.seed = *seed;
    if (force) cfg.force = true;
    if (attributions) cfg.attributions = *attributions;
    if (types) cfg.plan.types = split_list(*types);
    if (models) cfg.plan.models = split_list(*models);
    if (explainers) cfg.plan.explainers = split_list(*explainers);
    if (metrics) {
      cfg.plan.metrics.clear();
      for (const auto& m : split_list(*metrics)) cfg.plan.metrics.push_back(parse_metric_kind(m));
    }
    if (workers) cfg.plan.workers = *workers;
    if (max_instances) cfg.plan.max_instances = *max_instances;
    if (max_epochs) cfg.training.max_epochs = *max_epochs;
    if (cfg.training.patience >= cfg.training.max_epochs) {
      cfg.training.patience = std::max(1, cfg.training.max_epochs - 1);
    }
    if (cfg.models_dir.empty()) cfg.models_dir = (fs::path(cfg.data_root) / "models").string();
    cfg.plan.models = canonical_models(cfg.plan.models);
    for (const auto& e : cfg.plan.explainers) {
      const auto names = explainer_names();
      if (std::find(names.begin(), names.end(), e) == names.end()) {
        fail(ErrorCode::InvalidParameter, "unknown explainer '" + e + "'");
      }
    }
    cfg.catalog.types = cfg.plan.types;
    cfg.catalog.workers = cfg.plan.workers;
    cfg.catalog.master_seed = cfg.seed.value_or(0);
    cfg.plan.master_seed = cfg.seed.value_or(0);

    if (gen->parsed()) return cmd_generate(cfg, out, err);
    if (trn->parsed()) return cmd_train(cfg, out, err);
    if (evl->parsed()) {
      require_seed(cfg, "evaluate");
      return cmd_evaluate(cfg, out, err);
    }
    return cmd_report(cfg, *in_dir, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace xtsc::cli
