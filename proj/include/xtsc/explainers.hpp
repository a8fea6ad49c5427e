#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xtsc/baselines.hpp"
#include "xtsc/classifier.hpp"
#include "xtsc/series.hpp"

namespace xtsc {

struct Attribution {
  Matrix scores;
  std::size_t target_class = 0;
  std::string explainer;

  Shape shape() const noexcept { return scores.shape(); }
  bool operator==(const Attribution&) const = default;
};

/// A counterexample x' returned by an example-based explainer.
struct ExampleExplanation {
  TimeSeries values;
  std::size_t target_class = 0;
  std::string explainer;
};

// ---------------------------------------------------------------------------
// Gradient family

namespace gradient {
struct Plain {};
struct TimesInput {};
struct Smooth {
  int n_samples = 50;
  double sigma = 0.1;
};
struct Integrated {
  int steps = 50;
  TimeSeries baseline;
};
}  // namespace gradient

using GradientVariant = std::variant<gradient::Plain, gradient::TimesInput, gradient::Smooth, gradient::Integrated>;

/// Plain: |d logit_target / dx|. TimesInput: gradient * x. Smooth: mean of
/// Plain over noisy copies x + N(0, sigma^2). Integrated: (x - x~) times the
/// mean gradient over the path x~ + k/(m-1) (x - x~), k = 0..m-1.
Attribution gradient_attribution(const Classifier& model, const TimeSeries& x, std::size_t target,
                                 const GradientVariant& variant, std::uint64_t seed = 0);

/// Expected-gradients style Gradient Shap: Integrated averaged over
/// `n_baselines` draws from the baseline source.
Attribution gradient_shap(const Classifier& model, const TimeSeries& x, std::size_t target,
                          const BaselineSource& baselines, int n_baselines, int steps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Perturbation family

struct Window {
  std::size_t features = 1;
  std::size_t steps = 1;
};

/// Sliding-window occlusion with stride 1. A cell scores the mean drop of the
/// readout over all windows covering it. The baseline is drawn once per call.
Attribution occlusion(const Classifier& model, const TimeSeries& x, std::size_t target, Window window,
                      const BaselineSource& baseline, std::uint64_t seed = 0,
                      Readout readout = Readout::Probability);

struct LimeConfig {
  std::size_t segment_len = 10;
  std::size_t n_samples = 200;
  Readout readout = Readout::Probability;
};

struct LimeResult {
  Attribution attribution;
  /// One coefficient per segment, feature-major then by segment start.
  std::vector<double> coefficients;
  double intercept = 0.0;
  std::size_t segments_per_feature = 0;
  /// Surrogate evaluated on the all-on mask.
  double surrogate_at_original = 0.0;
};

/// Segments of `segment_len` consecutive steps per feature; the last segment of
/// a feature absorbs the remainder. Sample 0 keeps every segment on; the others
/// switch each segment on with probability 1/2 and take off-segments from a
/// fresh background draw. Weighted least squares with kernel
/// exp(-d^2 / S) on the Hamming distance d, S = number of segments.
LimeResult lime_surrogate(const Classifier& model, const TimeSeries& x, std::size_t target, const LimeConfig& config,
                          const BaselineSource& background, std::uint64_t seed);

/// Number of segments per feature for a series of `t_steps` steps.
std::size_t segment_count(std::size_t t_steps, std::size_t segment_len);

// ---------------------------------------------------------------------------
// Explainer interface

class Explainer {
 public:
  virtual ~Explainer() = default;
  virtual std::string name() const = 0;
  virtual Attribution explain(const Classifier& model, const TimeSeries& x, std::size_t target,
                              std::uint64_t seed) const = 0;
  /// True when the explainer needs a differentiable model.
  virtual bool needs_gradient() const { return false; }
};

using ExplainerPtr = std::shared_ptr<const Explainer>;

/// Wraps a callable; used for test explainers and ad-hoc methods.
class FunctionExplainer final : public Explainer {
 public:
  using Fn = std::function<Matrix(const Classifier&, const TimeSeries&, std::size_t, std::uint64_t)>;
  FunctionExplainer(std::string name, Fn fn, bool needs_gradient = false)
      : name_(std::move(name)), fn_(std::move(fn)), needs_gradient_(needs_gradient) {}
  std::string name() const override { return name_; }
  bool needs_gradient() const override { return needs_gradient_; }
  Attribution explain(const Classifier& model, const TimeSeries& x, std::size_t target,
                      std::uint64_t seed) const override;

 private:
  std::string name_;
  Fn fn_;
  bool needs_gradient_;
};

// ---------------------------------------------------------------------------
// TSR

struct TsrConfig {
  /// Unset: alpha is the mean of the time-relevance vector.
  std::optional<double> alpha;
};

struct TsrResult {
  Attribution attribution;
  std::vector<double> time_relevance;
  /// Per-cell feature relevance; zero on below-threshold steps. Constant one on
  /// above-threshold steps for univariate input.
  Matrix feature_relevance;
  double alpha = 0.0;
};

/// Time relevance of step t is the L1 change of the base map when every
/// feature at t is replaced by the baseline; steps above alpha get per-cell
/// feature relevance computed the same way. The base explainer is called with
/// the same seed throughout and the baseline is drawn once.
TsrResult tsr_wrap(const Explainer& base, const Classifier& model, const TimeSeries& x, std::size_t target,
                   const TsrConfig& config, const BaselineSource& baseline, std::uint64_t seed);

class TsrExplainer final : public Explainer {
 public:
  TsrExplainer(ExplainerPtr base, BaselinePtr baseline, TsrConfig config = {})
      : base_(std::move(base)), baseline_(std::move(baseline)), config_(config) {}
  std::string name() const override { return "tsr_" + base_->name(); }
  Attribution explain(const Classifier& model, const TimeSeries& x, std::size_t target,
                      std::uint64_t seed) const override;
  bool needs_gradient() const override { return base_->needs_gradient(); }

 private:
  ExplainerPtr base_;
  BaselinePtr baseline_;
  TsrConfig config_;
};

// ---------------------------------------------------------------------------
// Registry

struct ExplainerSettings {
  int smooth_samples = 50;
  double smooth_sigma = 0.1;
  int integrated_steps = 50;
  int shap_baselines = 10;
  Window occlusion_window{1, 5};
  LimeConfig lime;
  TsrConfig tsr;
};

/// Names accepted by make_explainer. Any base name also works with a "tsr_"
/// prefix.
std::vector<std::string> explainer_names();

/// Builds an explainer by name. `baseline` serves occlusion, TSR masking, the
/// Integrated reference, Gradient Shap and the LIME background. Unknown names
/// raise InvalidParameter.
ExplainerPtr make_explainer(std::string_view name, BaselinePtr baseline, const ExplainerSettings& settings = {});

// ---------------------------------------------------------------------------
// Example-based explanations and exchange files

inline constexpr double kDeltaGuard = 1e-6;

/// Fraction of change (x - x') / max(|x|, 1e-6) per cell. With a feature range
/// both series are first mapped to [0, 1] per feature.
Attribution example_to_attribution(const TimeSeries& x, const ExampleExplanation& example,
                                   const std::optional<FeatureRange>& feature_range = std::nullopt);

/// Writes attr.json: {explainer, target_class, n_features, t_steps, scores}.
void save_attribution(const Attribution& attribution, const std::filesystem::path& path);
/// Writes an N x T CSV plus `<stem>.manifest.json` beside it.
void save_attribution_csv(const Attribution& attribution, const std::filesystem::path& path);
/// Writes an example file: {kind: "example", explainer, target_class,
/// n_features, t_steps, values}.
void save_example(const ExampleExplanation& example, const std::filesystem::path& path);

/// Reads a .json exchange file or a .csv with its sidecar manifest. Non-finite
/// or null entries raise FormatError naming the cell; a declared or actual
/// shape different from `expected` raises InvalidShape.
Attribution load_external_attribution(const std::filesystem::path& path, Shape expected);
ExampleExplanation load_example(const std::filesystem::path& path, Shape expected);

/// True when the file declares kind "example".
bool is_example_file(const std::filesystem::path& path);

/// Loads either kind of file; examples are converted against x.
Attribution ingest_explanation(const std::filesystem::path& path, const TimeSeries& x,
                               const std::optional<FeatureRange>& feature_range = std::nullopt);

}  // namespace xtsc
