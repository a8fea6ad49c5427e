#include "xtsc/explainers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "xtsc/error.hpp"
#include "xtsc/rng.hpp"

namespace xtsc {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_input(const Classifier& model, const TimeSeries& x, std::size_t target) {
  require_shape(x.shape(), model.input_shape(), "explained instance");
  if (target >= kNumClasses) fail(ErrorCode::InvalidParameter, "target class out of range");
}

Matrix integrated_scores(const Classifier& model, const TimeSeries& x, std::size_t target, const TimeSeries& ref,
                         int steps) {
  require_shape(ref.shape(), x.shape(), "integrated-gradient baseline");
  Matrix mean_grad(x.shape());
  TimeSeries point(x.shape());
  for (int k = 0; k < steps; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(steps - 1);
    for (std::size_t c = 0; c < x.size(); ++c) point[c] = ref[c] + alpha * (x[c] - ref[c]);
    const Matrix g = model.logit_gradient(point, target);
    for (std::size_t c = 0; c < x.size(); ++c) mean_grad[c] += g[c];
  }
  for (std::size_t c = 0; c < x.size(); ++c) mean_grad[c] = (x[c] - ref[c]) * mean_grad[c] / steps;
  return mean_grad;
}

/// L1 distance between two maps of equal shape.
double l1_change(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += std::abs(a[c] - b[c]);
  return s;
}

}  // namespace

Attribution gradient_attribution(const Classifier& model, const TimeSeries& x, std::size_t target,
                                 const GradientVariant& variant, std::uint64_t seed) {
  check_input(model, x, target);
  Attribution out{Matrix(x.shape()), target, {}};
  std::visit(
      Overloaded{
          [&](const gradient::Plain&) {
            out.explainer = "saliency";
            out.scores = model.logit_gradient(x, target);
            for (double& v : out.scores.values()) v = std::abs(v);
          },
          [&](const gradient::TimesInput&) {
            out.explainer = "gradient_x_input";
            out.scores = model.logit_gradient(x, target);
            for (std::size_t c = 0; c < x.size(); ++c) out.scores[c] *= x[c];
          },
          [&](const gradient::Smooth& s) {
            if (s.n_samples < 1) fail(ErrorCode::InvalidParameter, "smoothgrad needs at least one sample");
            if (!(s.sigma >= 0.0)) fail(ErrorCode::InvalidParameter, "smoothgrad sigma must be nonnegative");
            out.explainer = "smoothgrad";
            Rng rng(seed, 0x736D6F6F7468ull);
            TimeSeries noisy(x.shape());
            for (int k = 0; k < s.n_samples; ++k) {
              for (std::size_t c = 0; c < x.size(); ++c) noisy[c] = x[c] + s.sigma * rng.normal();
              const Matrix g = model.logit_gradient(noisy, target);
              for (std::size_t c = 0; c < x.size(); ++c) out.scores[c] += std::abs(g[c]);
            }
            for (double& v : out.scores.values()) v /= s.n_samples;
          },
          [&](const gradient::Integrated& ig) {
            if (ig.steps < 2) fail(ErrorCode::InvalidParameter, "integrated gradients need at least two path points");
            out.explainer = "integrated_gradients";
            out.scores = integrated_scores(model, x, target, ig.baseline, ig.steps);
          },
      },
      variant);
  return out;
}

Attribution gradient_shap(const Classifier& model, const TimeSeries& x, std::size_t target,
                          const BaselineSource& baselines, int n_baselines, int steps, std::uint64_t seed) {
  check_input(model, x, target);
  if (n_baselines < 1) fail(ErrorCode::InvalidParameter, "gradient shap needs at least one baseline");
  if (steps < 2) fail(ErrorCode::InvalidParameter, "gradient shap needs at least two path points");
  Attribution out{Matrix(x.shape()), target, "gradient_shap"};
  for (int k = 0; k < n_baselines; ++k) {
    const TimeSeries ref = baselines.sample(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
    const Matrix part = integrated_scores(model, x, target, ref, steps);
    for (std::size_t c = 0; c < x.size(); ++c) out.scores[c] += part[c];
  }
  for (double& v : out.scores.values()) v /= n_baselines;
  return out;
}

Attribution occlusion(const Classifier& model, const TimeSeries& x, std::size_t target, Window window,
                      const BaselineSource& baseline, std::uint64_t seed, Readout readout) {
  check_input(model, x, target);
  const Shape s = x.shape();
  if (window.features < 1 || window.steps < 1 || window.features > s.n_features || window.steps > s.t_steps) {
    fail(ErrorCode::InvalidParameter, "occlusion window must fit within " + to_string(s));
  }
  const TimeSeries ref = baseline.sample(seed);
  require_shape(ref.shape(), s, "occlusion baseline");
  const double original = model.readout(x, target, readout);

  Matrix total(s);
  Matrix covered(s);
  TimeSeries masked = x;
  for (std::size_t f0 = 0; f0 + window.features <= s.n_features; ++f0) {
    for (std::size_t t0 = 0; t0 + window.steps <= s.t_steps; ++t0) {
      for (std::size_t i = f0; i < f0 + window.features; ++i)
        for (std::size_t t = t0; t < t0 + window.steps; ++t) masked(i, t) = ref(i, t);
      const double drop = original - model.readout(masked, target, readout);
      for (std::size_t i = f0; i < f0 + window.features; ++i) {
        for (std::size_t t = t0; t < t0 + window.steps; ++t) {
          masked(i, t) = x(i, t);
          total(i, t) += drop;
          covered(i, t) += 1.0;
        }
      }
    }
  }
  for (std::size_t c = 0; c < total.size(); ++c) total[c] /= covered[c];
  return {std::move(total), target, "occlusion"};
}

std::size_t segment_count(std::size_t t_steps, std::size_t segment_len) {
  if (segment_len == 0) fail(ErrorCode::InvalidParameter, "segment length must be positive");
  return std::max<std::size_t>(1, t_steps / segment_len);
}

LimeResult lime_surrogate(const Classifier& model, const TimeSeries& x, std::size_t target, const LimeConfig& config,
                          const BaselineSource& background, std::uint64_t seed) {
  check_input(model, x, target);
  const Shape s = x.shape();
  const std::size_t per_feature = segment_count(s.t_steps, config.segment_len);
  const std::size_t n_segments = per_feature * s.n_features;
  if (config.n_samples < n_segments) {
    fail(ErrorCode::IllPosedSurrogate, "surrogate needs at least " + std::to_string(n_segments) + " samples, got " +
                                           std::to_string(config.n_samples));
  }
  const auto segment_of = [&](std::size_t i, std::size_t t) {
    return i * per_feature + std::min(t / config.segment_len, per_feature - 1);
  };

  const auto n = static_cast<Eigen::Index>(config.n_samples);
  const auto p = static_cast<Eigen::Index>(n_segments + 1);
  Eigen::MatrixXd design = Eigen::MatrixXd::Ones(n, p);
  Eigen::VectorXd response(n);
  Eigen::VectorXd weight(n);
  const double width_sq = static_cast<double>(n_segments);

  Rng rng(seed, 0x6C696D65ull);
  std::vector<std::uint8_t> on(n_segments);
  TimeSeries perturbed(s);
  for (std::size_t k = 0; k < config.n_samples; ++k) {
    std::size_t off = 0;
    for (std::size_t g = 0; g < n_segments; ++g) {
      on[g] = k == 0 ? 1 : static_cast<std::uint8_t>(rng() >> 63);
      off += on[g] == 0;
      design(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(g + 1)) = on[g];
    }
    if (off == 0) {
      perturbed = x;
    } else {
      const TimeSeries bg = background.sample(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
      require_shape(bg.shape(), s, "surrogate background");
      for (std::size_t i = 0; i < s.n_features; ++i)
        for (std::size_t t = 0; t < s.t_steps; ++t) perturbed(i, t) = on[segment_of(i, t)] ? x(i, t) : bg(i, t);
    }
    response(static_cast<Eigen::Index>(k)) = model.readout(perturbed, target, config.readout);
    const double d = static_cast<double>(off);
    weight(static_cast<Eigen::Index>(k)) = std::exp(-d * d / width_sq);
  }

  // Normal equations with a tiny ridge on the slopes keep the solve defined
  // when a segment never switches off.
  Eigen::MatrixXd gram = design.transpose() * weight.asDiagonal() * design;
  for (Eigen::Index j = 1; j < p; ++j) gram(j, j) += 1e-10;
  const Eigen::VectorXd rhs = design.transpose() * weight.asDiagonal() * response;
  const Eigen::VectorXd beta = gram.ldlt().solve(rhs);

  LimeResult out;
  out.intercept = beta(0);
  out.segments_per_feature = per_feature;
  out.coefficients.resize(n_segments);
  for (std::size_t g = 0; g < n_segments; ++g) out.coefficients[g] = beta(static_cast<Eigen::Index>(g + 1));
  out.surrogate_at_original = beta.sum();
  out.attribution = {Matrix(s), target, "leftist"};
  for (std::size_t i = 0; i < s.n_features; ++i)
    for (std::size_t t = 0; t < s.t_steps; ++t) out.attribution.scores(i, t) = out.coefficients[segment_of(i, t)];
  return out;
}

Attribution FunctionExplainer::explain(const Classifier& model, const TimeSeries& x, std::size_t target,
                                       std::uint64_t seed) const {
  Matrix scores = fn_(model, x, target, seed);
  require_shape(scores.shape(), x.shape(), "explainer output");
  return {std::move(scores), target, name_};
}

TsrResult tsr_wrap(const Explainer& base, const Classifier& model, const TimeSeries& x, std::size_t target,
                   const TsrConfig& config, const BaselineSource& baseline, std::uint64_t seed) {
  check_input(model, x, target);
  const Shape s = x.shape();
  const TimeSeries ref = baseline.sample(derive_seed(seed, {0x747372ull}));
  require_shape(ref.shape(), s, "TSR baseline");
  const Matrix original = base.explain(model, x, target, seed).scores;

  TsrResult out;
  out.time_relevance.assign(s.t_steps, 0.0);
  TimeSeries masked = x;
  for (std::size_t t = 0; t < s.t_steps; ++t) {
    for (std::size_t i = 0; i < s.n_features; ++i) masked(i, t) = ref(i, t);
    out.time_relevance[t] = l1_change(original, base.explain(model, masked, target, seed).scores);
    for (std::size_t i = 0; i < s.n_features; ++i) masked(i, t) = x(i, t);
  }
  out.alpha = config.alpha.value_or(
      std::accumulate(out.time_relevance.begin(), out.time_relevance.end(), 0.0) / static_cast<double>(s.t_steps));

  out.feature_relevance = Matrix(s);
  Matrix scores(s);
  for (std::size_t t = 0; t < s.t_steps; ++t) {
    if (!(out.time_relevance[t] > out.alpha)) continue;
    for (std::size_t i = 0; i < s.n_features; ++i) {
      double rel = 1.0;
      if (s.n_features > 1) {
        masked(i, t) = ref(i, t);
        rel = l1_change(original, base.explain(model, masked, target, seed).scores);
        masked(i, t) = x(i, t);
      }
      out.feature_relevance(i, t) = rel;
      scores(i, t) = out.time_relevance[t] * rel;
    }
  }
  out.attribution = {std::move(scores), target, "tsr_" + base.name()};
  return out;
}

Attribution TsrExplainer::explain(const Classifier& model, const TimeSeries& x, std::size_t target,
                                  std::uint64_t seed) const {
  return tsr_wrap(*base_, model, x, target, config_, *baseline_, seed).attribution;
}

namespace {

class GradientExplainer final : public Explainer {
 public:
  GradientExplainer(std::string name, std::function<GradientVariant(const TimeSeries&, std::uint64_t)> variant)
      : name_(std::move(name)), variant_(std::move(variant)) {}
  std::string name() const override { return name_; }
  bool needs_gradient() const override { return true; }
  Attribution explain(const Classifier& model, const TimeSeries& x, std::size_t target,
                      std::uint64_t seed) const override {
    Attribution a = gradient_attribution(model, x, target, variant_(x, seed), seed);
    a.explainer = name_;
    return a;
  }

 private:
  std::string name_;
  std::function<GradientVariant(const TimeSeries&, std::uint64_t)> variant_;
};

const std::vector<std::string> kBaseNames = {
    "saliency", "gradient_x_input", "smoothgrad", "integrated_gradients", "gradient_shap", "occlusion", "leftist",
};

}  // namespace

std::vector<std::string> explainer_names() {
  std::vector<std::string> names = kBaseNames;
  for (const auto& n : kBaseNames) names.push_back("tsr_" + n);
  return names;
}

ExplainerPtr make_explainer(std::string_view name, BaselinePtr baseline, const ExplainerSettings& settings) {
  if (!baseline) fail(ErrorCode::InvalidParameter, "explainers need a baseline source");
  if (name.starts_with("tsr_")) {
    return std::make_shared<TsrExplainer>(make_explainer(name.substr(4), baseline, settings), baseline, settings.tsr);
  }
  const std::string n(name);
  if (n == "saliency") {
    return std::make_shared<GradientExplainer>(n, [](const TimeSeries&, std::uint64_t) { return gradient::Plain{}; });
  }
  if (n == "gradient_x_input") {
    return std::make_shared<GradientExplainer>(n,
                                               [](const TimeSeries&, std::uint64_t) { return gradient::TimesInput{}; });
  }
  if (n == "smoothgrad") {
    const gradient::Smooth v{settings.smooth_samples, settings.smooth_sigma};
    return std::make_shared<GradientExplainer>(n, [v](const TimeSeries&, std::uint64_t) { return v; });
  }
  if (n == "integrated_gradients") {
    const int steps = settings.integrated_steps;
    return std::make_shared<GradientExplainer>(n, [steps, baseline](const TimeSeries&, std::uint64_t seed) {
      return gradient::Integrated{steps, baseline->sample(seed)};
    });
  }
  if (n == "gradient_shap") {
    const int draws = settings.shap_baselines;
    const int steps = settings.integrated_steps;
    auto fn = [=](const Classifier& m, const TimeSeries& x, std::size_t target, std::uint64_t seed) {
      return gradient_shap(m, x, target, *baseline, draws, steps, seed).scores;
    };
    return std::make_shared<FunctionExplainer>(n, fn, true);
  }
  if (n == "occlusion") {
    const Window w = settings.occlusion_window;
    return std::make_shared<FunctionExplainer>(
        n, [w, baseline](const Classifier& m, const TimeSeries& x, std::size_t target, std::uint64_t seed) {
          const Window fitted{std::min(w.features, x.n_features()), std::min(w.steps, x.t_steps())};
          return occlusion(m, x, target, fitted, *baseline, seed).scores;
        });
  }
  if (n == "leftist") {
    const LimeConfig cfg = settings.lime;
    return std::make_shared<FunctionExplainer>(
        n, [cfg, baseline](const Classifier& m, const TimeSeries& x, std::size_t target, std::uint64_t seed) {
          LimeConfig local = cfg;
          local.n_samples =
              std::max(local.n_samples, segment_count(x.t_steps(), local.segment_len) * x.n_features() + 1);
          return lime_surrogate(m, x, target, local, *baseline, seed).attribution.scores;
        });
  }
  fail(ErrorCode::InvalidParameter, "unknown explainer '" + n + "'");
}

Attribution example_to_attribution(const TimeSeries& x, const ExampleExplanation& example,
                                   const std::optional<FeatureRange>& feature_range) {
  require_shape(example.values.shape(), x.shape(), "example explanation");
  Attribution out{Matrix(x.shape()), example.target_class, example.explainer};
  for (std::size_t i = 0; i < x.n_features(); ++i) {
    double lo = 0.0;
    double span = 1.0;
    if (feature_range) {
      if (feature_range->min.size() != x.n_features() || feature_range->max.size() != x.n_features()) {
        fail(ErrorCode::InvalidShape, "feature range must have one entry per feature");
      }
      lo = feature_range->min[i];
      span = feature_range->max[i] - lo;
      if (!(span > 0.0)) span = 1.0;
    }
    for (std::size_t t = 0; t < x.t_steps(); ++t) {
      const double xv = (x(i, t) - lo) / span;
      const double ev = (example.values(i, t) - lo) / span;
      out.scores(i, t) = (xv - ev) / std::max(std::abs(xv), kDeltaGuard);
    }
  }
  return out;
}

}  // namespace xtsc
