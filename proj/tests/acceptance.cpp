// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "xtsc/baselines.hpp"
#include "xtsc/catalog.hpp"
#include "xtsc/cli.hpp"
#include "xtsc/explainers.hpp"
#include "xtsc/harness.hpp"
#include "xtsc/metrics.hpp"
#include "xtsc/models.hpp"
#include "xtsc/processes.hpp"
#include "xtsc/text.hpp"
#include "xtsc/train.hpp"

using namespace xtsc;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 2024;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix random_matrix(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed, 7);
  Matrix m(shape);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e;
  return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double e : v) s += (e - m) * (e - m);
  return s / static_cast<double>(v.size() - 1);
}

// ---------------------------------------------------------------------------

Verdict catalog_cardinality() {
  const auto start = std::chrono::steady_clock::now();
  CatalogConfig c;
  c.master_seed = kSeed;
  const auto catalog = build_catalog(c);
  const double elapsed = seconds_since(start);
  std::size_t uni = 0, multi = 0;
  bool shapes = true;
  std::map<std::pair<int, int>, int> grid;
  for (const auto& d : catalog) {
    const bool is_uni = d.id.arity == Arity::Univariate;
    (is_uni ? uni : multi)++;
    shapes = shapes && d.shape == (is_uni ? Shape{1, 50} : Shape{50, 50});
    for (const auto& inst : d.test) shapes = shapes && inst.series.shape() == d.shape;
    grid[{static_cast<int>(*d.id.process), static_cast<int>(*d.id.feature)}]++;
  }
  const bool full_grid = grid.size() == 60 && std::all_of(grid.begin(), grid.end(), [](auto& g) { return g.second == 2; });
  return {uni == 60 && multi == 60 && shapes && full_grid && elapsed < 120.0,
          fmt("%zu univariate (1x50), %zu multivariate (50x50), 6x10 grid per arity: %s, %.1f s", uni, multi,
              full_grid ? "yes" : "no", elapsed)};
}

Verdict generator_statistics() {
  GenerationSpec g;
  g.process = ProcessKind::Gaussian;
  g.t_steps = 100000;
  g.seed = kSeed;
  const TimeSeries gx = generate_base(g);
  const std::vector<double> gv(gx.values().begin(), gx.values().end());
  const double gmean = mean_of(gv), gvar = sample_variance(gv);

  GenerationSpec a = g;
  a.process = ProcessKind::Autoregressive;
  const TimeSeries ax = generate_base(a);
  const std::vector<double> av(ax.values().begin(), ax.values().end());
  const double am = mean_of(av), avar = sample_variance(av);
  double lag = 0.0;
  for (std::size_t k = 1; k < av.size(); ++k) lag += (av[k] - am) * (av[k - 1] - am);
  const double rho = lag / (static_cast<double>(av.size() - 1) * avar);
  const double target = 1.0 / (1.0 - 0.81);
  const bool pass = std::abs(gmean) <= 0.02 && std::abs(gvar - 1.0) <= 0.02 &&
                    std::abs(avar - target) <= 0.05 * target && std::abs(rho - 0.9) <= 0.02;
  return {pass, fmt("Gaussian mean %.4f var %.4f; AR(0.9) var %.3f (target %.3f) lag-1 %.4f", gmean, gvar, avar,
                    target, rho)};
}

Verdict training_gate() {
  const auto start = std::chrono::steady_clock::now();
  CatalogConfig c;
  c.master_seed = kSeed;
  const Dataset d =
      build_dataset(DatasetId::synthetic(ProcessKind::Gaussian, FeatureKind::Middle, Arity::Univariate), c);
  const std::uint64_t seed = derive_seed(kSeed, {hash_name(d.id.name), hash_name("TemporalConv")});
  nn::NeuralClassifier model(nn::Architecture::TemporalConv, d.shape, seed);
  nn::TrainConfig cfg;
  cfg.seed = seed;
  const auto history = nn::train(model, d.train, cfg);
  const double acc = accuracy(model, d.test);
  const double elapsed = seconds_since(start);
  return {acc > 0.9 && history.epochs.size() <= 500 && elapsed < 300.0,
          fmt("test accuracy %.3f after %zu epochs (best %d), %.1f s", acc, history.epochs.size(), history.best_epoch,
              elapsed)};
}

double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, scale = 1e-8;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - n[k]));
    scale = std::max(scale, std::abs(n[k]));
  }
  return diff / scale;
}

Verdict autodiff() {
  constexpr double h = 1e-5;
  double worst_input = 0.0, worst_param = 0.0;
  for (nn::Architecture arch : {nn::Architecture::TemporalConv, nn::Architecture::GatedRecurrent}) {
    for (std::uint64_t c = 0; c < 20; ++c) {
      Rng rng(kSeed + c, static_cast<std::uint64_t>(arch));
      const Shape shape{1 + rng.below(3), 4 + rng.below(12)};
      nn::NeuralClassifier model(arch, shape, kSeed + c);
      auto flat = model.flat_parameters();
      for (double& p : flat) p *= rng.uniform(0.5, 2.0);
      model.set_flat_parameters(flat);
      const TimeSeries x = random_matrix(shape, c, -2, 2);
      const std::size_t target = rng.below(2);
      const Matrix g = model.logit_gradient(x, target);
      std::vector<double> an(g.values().begin(), g.values().end()), num;
      for (std::size_t k = 0; k < x.size(); ++k) {
        TimeSeries up = x, dn = x;
        up[k] += h;
        dn[k] -= h;
        num.push_back((model.logits(up)[target] - model.logits(dn)[target]) / (2 * h));
      }
      worst_input = std::max(worst_input, relative_error(an, num));

      const auto pg = model.parameter_gradient(x, target);
      std::vector<double> pa, pn;
      for (int s = 0; s < 60; ++s) {
        const std::size_t k = rng.below(flat.size());
        auto up = flat, dn = flat;
        up[k] += h;
        dn[k] -= h;
        model.set_flat_parameters(up);
        const double fu = model.logits(x)[target];
        model.set_flat_parameters(dn);
        const double fd = model.logits(x)[target];
        pa.push_back(pg[k]);
        pn.push_back((fu - fd) / (2 * h));
      }
      model.set_flat_parameters(flat);
      worst_param = std::max(worst_param, relative_error(pa, pn));
    }
  }
  return {worst_input < 1e-4 && worst_param < 1e-4,
          fmt("max relative error: inputs %.2e, parameters %.2e (20 configs x 2 architectures)", worst_input,
              worst_param)};
}

Verdict metric_oracles() {
  Rng rng(kSeed);
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const Shape s{1 + rng.below(8), 1 + rng.below(50)};
    Matrix a(s);
    for (double& v : a.values()) v = rng.uniform() < 0.1 ? 0.0 : rng.normal();
    a[0] = 1.0 + std::abs(a[0]);
    GroundTruthMask m(s);
    for (std::size_t k = 0; k < s.cells(); ++k) m.set_flat(k, rng.uniform() < 0.3);
    m.set_flat(rng.below(s.cells()));

    double total = 0.0, inside = 0.0, h = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      total += std::abs(a[k]);
      if (m[k]) inside += std::abs(a[k]);
    }
    for (double v : a.values())
      if (v != 0.0) h -= std::abs(v) / total * std::log(std::abs(v) / total);
    // Top-K by repeated selection of the first maximum.
    std::vector<bool> used(a.size(), false);
    std::size_t hits = 0;
    for (std::size_t pick = 0; pick < m.count(); ++pick) {
      std::size_t best = a.size();
      for (std::size_t k = 0; k < a.size(); ++k)
        if (!used[k] && (best == a.size() || std::abs(a[k]) > std::abs(a[best]))) best = k;
      used[best] = true;
      hits += m[best];
    }
    worst = std::max({worst, std::abs(complexity(a) - h),
                      std::abs(relevance_rank_acc(a, m) - static_cast<double>(hits) / static_cast<double>(m.count())),
                      std::abs(relevance_mass_acc(a, m) - inside / total)});
  }
  const double uniform_err = std::abs(complexity(Matrix({1, 50}, 0.2)) - std::log(50.0));
  Matrix one_hot({1, 50});
  one_hot[17] = 3.0;
  const double spike = complexity(one_hot);
  return {worst <= 1e-12 && uniform_err <= 1e-12 && spike == 0.0,
          fmt("max deviation %.1e over 1000 cases; |uniform - ln 50| = %.1e; one-hot = %g", worst, uniform_err,
              spike)};
}

Verdict faithfulness_calibration() {
  const Shape s{3, 50};
  const Matrix w = random_matrix(s, 1);
  const LinearScorer model(w, 100.0);
  const TimeSeries x = random_matrix(s, 2, 0, 1), ref = random_matrix(s, 3, 0, 1);
  Matrix exact(s);
  for (std::size_t k = 0; k < exact.size(); ++k) exact[k] = w[k] * (x[k] - ref[k]);
  const double corr =
      faithfulness_corr(model, exact, x, *fixed_baseline(ref), {0.1, 20, kSeed, Readout::Logit});

  auto null_level = [](Shape shape) {
    const LinearScorer m(random_matrix(shape, 10, -0.3, 0.3));
    const TimeSeries xi = random_matrix(shape, 11, 0, 1);
    std::vector<double> abs_corr;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const FaithfulnessParams p{0.1, 200, seed, Readout::Probability};
      abs_corr.push_back(std::abs(faithfulness_corr(m, random_matrix(shape, 500 + seed), xi, *uniform_baseline(shape), p)));
    }
    return mean_of(abs_corr);
  };
  const double null_multi = null_level({50, 50});
  const double null_uni = null_level({1, 50});
  return {corr > 0.95 && null_multi < 0.1,
          fmt("exact linear attribution corr %.12f; random attributions mean |corr| %.3f on 50x50 (%.3f on 1x50, "
              "n_runs 200)",
              corr, null_multi, null_uni)};
}

Verdict robustness_calibration() {
  const ExplainerPtr constant = std::make_shared<FunctionExplainer>(
      "constant", [](const Classifier&, const TimeSeries& x, std::size_t, std::uint64_t) { return Matrix(x.shape(), 1.0); });
  const ExplainerPtr identity = std::make_shared<FunctionExplainer>(
      "identity", [](const Classifier&, const TimeSeries& x, std::size_t, std::uint64_t) { return x; });
  const Shape s{2, 20};
  const nn::NeuralClassifier net(nn::Architecture::TemporalConv, s, kSeed);
  const TimeSeries x = random_matrix(s, 4, 0, 1);
  const RobustnessParams p{0.1, 10, kSeed, Norm::L2};
  const auto c = sensitivity(*constant, net, x, 0, p);
  const bool constant_zero = c.max == 0.0 && c.mean == 0.0;

  bool ordered = true;
  std::size_t cases = 0;
  for (std::uint64_t k = 0; k < 40; ++k) {
    const nn::NeuralClassifier m(k % 2 ? nn::Architecture::TemporalConv : nn::Architecture::GatedRecurrent, s, k);
    for (const char* name : {"saliency", "gradient_x_input", "smoothgrad"}) {
      ExplainerSettings settings;
      settings.smooth_samples = 5;
      const auto r = sensitivity(*make_explainer(name, uniform_baseline(s), settings), m, random_matrix(s, k, 0, 1),
                                 k % 2, {0.1, 5, k, Norm::L2}, k);
      ordered = ordered && r.mean <= r.max;
      ++cases;
    }
  }

  double worst = 0.0;
  for (Norm n : {Norm::L2, Norm::Linf}) {
    const RobustnessParams q{0.2, 20, kSeed + 1, n};
    const auto r = sensitivity(*identity, net, x, 0, q);
    double mx = 0.0, sum = 0.0;
    for (const auto& xs : perturbation_samples(x, q)) {
      std::vector<double> eps(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) eps[k] = xs[k] - x[k];
      mx = std::max(mx, norm(eps, n));
      sum += norm(eps, n);
    }
    worst = std::max({worst, std::abs(r.max - mx), std::abs(r.mean - sum / 20.0)});
  }
  return {constant_zero && ordered && worst <= 1e-12,
          fmt("constant explainer max %g mean %g; mean <= max on %zu/%zu cases; identity oracle deviation %.1e", c.max,
              c.mean, ordered ? cases : 0, cases, worst)};
}

Verdict reliability_calibration() {
  CatalogConfig c;
  c.master_seed = kSeed;
  c.n_train = 2;
  c.n_test = 10;
  const auto catalog = build_catalog(c);
  std::size_t checked = 0, perfect = 0;
  for (const auto& d : catalog) {
    for (const auto& inst : d.test) {
      Matrix a(d.shape);
      for (std::size_t k = 0; k < a.size(); ++k) a[k] = inst.mask[k] ? 1.0 : 0.0;
      ++checked;
      perfect += relevance_rank_acc(a, inst.mask) == 1.0 && relevance_mass_acc(a, inst.mask) == 1.0;
    }
  }

  const Dataset& d = catalog.front();
  const GroundTruthMask& mask = d.test.front().mask;
  const double expected = static_cast<double>(mask.count()) / static_cast<double>(d.shape.cells());
  Rng rng(kSeed, 0x72616e64);
  std::vector<double> racc;
  for (int k = 0; k < 10000; ++k) {
    Matrix a(d.shape);
    for (double& v : a.values()) v = rng.uniform();
    racc.push_back(relevance_rank_acc(a, mask));
  }
  const double se = std::sqrt(sample_variance(racc) / static_cast<double>(racc.size()));
  const double gap = std::abs(mean_of(racc) - expected);
  return {perfect == checked && gap <= 3.0 * se,
          fmt("oracle attribution RACC = MACC = 1 on %zu/%zu instances of %zu datasets; random RACC %.4f vs K/(NT) "
              "%.4f (%.2f SE)",
              perfect, checked, catalog.size(), mean_of(racc), expected, gap / se)};
}

Verdict tsr_property() {
  // s = sum_i a_i b_t x_it^2 with b_2 = 0: step 2 never matters.
  class Quadratic final : public Classifier {
   public:
    Shape input_shape() const override { return {3, 6}; }
    std::vector<double> logits(const TimeSeries& x) const override {
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 0; t < 6; ++t) s += a[i] * b[t] * x(i, t) * x(i, t);
      return {-s, s};
    }
    Matrix logit_gradient(const TimeSeries& x, std::size_t target) const override {
      Matrix g(x.shape());
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 0; t < 6; ++t) g(i, t) = (target ? 2.0 : -2.0) * a[i] * b[t] * x(i, t);
      return g;
    }
    double a[3] = {1.0, -0.5, 2.0};
    double b[6] = {0.3, 1.0, 0.0, -1.5, 0.7, 2.0};
  } model;
  const TimeSeries x = random_matrix({3, 6}, 1), ref = random_matrix({3, 6}, 2);
  const auto base = fixed_baseline(ref);
  bool zero_column = true;
  for (std::optional<double> alpha : {std::optional<double>{}, std::optional<double>{0.0}}) {
    for (const char* name : {"saliency", "gradient_x_input", "occlusion"}) {
      const auto r = tsr_wrap(*make_explainer(name, base), model, x, 1, {alpha}, *base, kSeed);
      for (std::size_t i = 0; i < 3; ++i) zero_column = zero_column && r.attribution.scores(i, 2) == 0.0;
    }
  }

  const Shape us{1, 50};
  const nn::NeuralClassifier net(nn::Architecture::TemporalConv, us, kSeed);
  const TimeSeries ux = random_matrix(us, 3, 0, 1);
  const auto ubase = uniform_baseline(us);
  double worst = 0.0;
  for (std::optional<double> alpha : {std::optional<double>{}, std::optional<double>{0.0}}) {
    const auto r = tsr_wrap(*make_explainer("saliency", ubase), net, ux, 1, {alpha}, *ubase, kSeed);
    for (std::size_t t = 0; t < 50; ++t) {
      const double expected = r.time_relevance[t] > r.alpha ? r.time_relevance[t] : 0.0;
      worst = std::max(worst, std::abs(r.attribution.scores(0, t) - expected));
    }
  }
  return {zero_column && worst == 0.0,
          fmt("ignored step column all zero: %s; univariate map vs time relevance max deviation %g",
              zero_column ? "yes" : "no", worst)};
}

struct Workspace {
  fs::path root;
  fs::path config;
  std::string data() const { return (root / "data").string(); }
};

int cli_run(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

/// Generates and trains the models shared by the last two criteria.
const Workspace& workspace() {
  static const Workspace ws = [] {
    Workspace w{fs::temp_directory_path() / "xtsc_acceptance", {}};
    fs::remove_all(w.root);
    fs::create_directories(w.root);
    w.config = w.root / "config.json";
    text::write_file(w.config.string(), R"({
      "catalog": {"arities": ["Univariate"]},
      "types": ["uni_Gaussian_Middle", "uni_Gaussian_MovingMiddle", "uni_Harmonic_Middle",
                "uni_Harmonic_MovingMiddle", "uni_Autoregressive_Middle", "uni_PseudoPeriodic_Middle"],
      "models": ["TemporalConv"]
    })");
    const std::string seed = std::to_string(kSeed);
    if (cli_run({"generate", "--config", w.config.string(), "--data", w.data(), "--seed", seed}) != 0 ||
        cli_run({"train", "--config", w.config.string(), "--data", w.data(), "--seed", seed}) != 0) {
      throw std::runtime_error("workspace setup failed");
    }
    return w;
  }();
  return ws;
}

Verdict determinism() {
  const Workspace& ws = workspace();
  const std::vector<std::string> common{"evaluate",      "--config",   ws.config.string(),
                                        "--data",        ws.data(),    "--seed",
                                        std::to_string(kSeed),         "--types",
                                        "uni_Gaussian_Middle,uni_Gaussian_MovingMiddle,uni_Harmonic_Middle,uni_Harmonic_MovingMiddle",
                                        "--explainers",  "saliency,occlusion,integrated_gradients",
                                        "--metrics",     "complexity,racc,macc,faithfulness",
                                        "--max-instances", "10"};
  std::vector<std::string> texts;
  double slowest = 0.0;
  int failures = 0;
  std::string log;
  for (auto [tag, workers] : std::vector<std::pair<const char*, const char*>>{{"a", "1"}, {"b", "1"}, {"c", "8"}}) {
    auto args = common;
    const fs::path out = ws.root / (std::string("report_") + tag);
    args.insert(args.end(), {"--workers", workers, "--out", out.string()});
    const auto start = std::chrono::steady_clock::now();
    failures += cli_run(args, &log) != 0;
    slowest = std::max(slowest, seconds_since(start));
    texts.push_back(fs::exists(out / "records.csv") ? text::read_file((out / "records.csv").string()) : "");
  }
  const auto rows = texts[0].empty() ? 0 : std::count(texts[0].begin(), texts[0].end(), '\n') - 1;
  const bool same = !texts[0].empty() && texts[0] == texts[1] && texts[0] == texts[2];
  const long expected = 4 * 1 * 3 * 10 * 4;
  return {failures == 0 && same && rows == expected && slowest < 600.0,
          fmt("records.csv byte-identical across 2 runs and workers 1/8: %s; %ld records (expected %ld); slowest run "
              "%.1f s",
              same ? "yes" : "no", static_cast<long>(rows), expected, slowest)};
}

Verdict baseline_direction() {
  const Workspace& ws = workspace();
  const auto catalog = load_catalog(ws.data());
  std::size_t positive = 0;
  std::string per_dataset;
  for (const auto& d : catalog) {
    const auto model = nn::load_checkpoint((fs::path(ws.data()) / "models" / d.id.name / "TemporalConv").string());
    const auto uniform = make_baseline(BaselineKind::Uniform, d);
    const auto process = make_baseline(BaselineKind::GenerationProcess, d);
    const auto saliency = make_explainer("saliency", process);
    std::vector<double> fu, fg;
    for (std::size_t k = 0; k < d.test.size(); ++k) {
      const auto& x = d.test[k].series;
      const std::size_t target = model.predict(x);
      const Matrix a = saliency->explain(model, x, target, 0).scores;
      FaithfulnessParams p;
      p.seed = record_seed(kSeed, d.id.name, "TemporalConv", "saliency", k, "faithfulness");
      try {
        const double u = faithfulness_corr(model, a, x, *uniform, p);
        const double g = faithfulness_corr(model, a, x, *process, p);
        fu.push_back(u);
        fg.push_back(g);
      } catch (const Error&) {
        // Degenerate instances are left out of the comparison.
      }
    }
    const double rho = spearman(fu, fg);
    positive += rho > 0.0;
    per_dataset += fmt(" %s=%.2f", d.id.name.c_str() + 4, rho);
  }
  return {positive >= 5, fmt("positive Spearman on %zu/%zu datasets:%s", positive, catalog.size(), per_dataset.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"catalog cardinality", catalog_cardinality},
      {"generator statistics", generator_statistics},
      {"training gate", training_gate},
      {"autodiff correctness", autodiff},
      {"metric oracle equivalence", metric_oracles},
      {"faithfulness calibration", faithfulness_calibration},
      {"robustness calibration", robustness_calibration},
      {"reliability calibration", reliability_calibration},
      {"TSR property", tsr_property},
      {"determinism", determinism},
      {"baseline direction", baseline_direction},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s criterion %zu (%s): %s\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, v.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(fs::temp_directory_path() / "xtsc_acceptance");
  return failed == 0 ? 0 : 1;
}
