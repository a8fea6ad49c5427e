#include "xtsc/baselines.hpp"

#include "xtsc/error.hpp"
#include "xtsc/processes.hpp"
#include "xtsc/rng.hpp"
#include "xtsc/text.hpp"

namespace xtsc {
namespace {

class GenerationProcessBaseline final : public BaselineSource {
 public:
  GenerationProcessBaseline(GenerationSpec spec, NormalizationParams norm)
      : spec_(std::move(spec)), norm_(std::move(norm)) {}
  Shape shape() const override { return spec_.shape(); }
  std::string name() const override { return "GenerationProcess"; }
  TimeSeries sample(std::uint64_t seed) const override {
    return norm_.apply(sample_reference(spec_, spec_.shape(), seed));
  }

 private:
  GenerationSpec spec_;
  NormalizationParams norm_;
};

class UniformBaseline final : public BaselineSource {
 public:
  UniformBaseline(Shape shape, FeatureRange range) : shape_(shape), range_(std::move(range)) {
    if (range_.min.size() != shape.n_features || range_.max.size() != shape.n_features) {
      fail(ErrorCode::InvalidShape, "uniform baseline range must have one entry per feature");
    }
  }
  Shape shape() const override { return shape_; }
  std::string name() const override { return "Uniform"; }
  TimeSeries sample(std::uint64_t seed) const override {
    Rng rng(seed, 0x756E69ull);
    TimeSeries out(shape_);
    for (std::size_t i = 0; i < shape_.n_features; ++i) {
      for (double& v : out.row(i)) v = rng.uniform(range_.min[i], range_.max[i]);
    }
    return out;
  }

 private:
  Shape shape_;
  FeatureRange range_;
};

class FixedBaseline final : public BaselineSource {
 public:
  FixedBaseline(TimeSeries series, std::string name) : series_(std::move(series)), name_(std::move(name)) {}
  Shape shape() const override { return series_.shape(); }
  std::string name() const override { return name_; }
  TimeSeries sample(std::uint64_t) const override { return series_; }

 private:
  TimeSeries series_;
  std::string name_;
};

}  // namespace

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::GenerationProcess: return "GenerationProcess";
    case BaselineKind::Uniform: return "Uniform";
    case BaselineKind::TrainMean: return "TrainMean";
  }
  return "Unknown";
}

BaselineKind parse_baseline_kind(std::string_view name) {
  const std::string n = text::lower(name);
  if (n == "generationprocess" || n == "generation") return BaselineKind::GenerationProcess;
  if (n == "uniform") return BaselineKind::Uniform;
  if (n == "trainmean" || n == "mean") return BaselineKind::TrainMean;
  fail(ErrorCode::InvalidParameter, "unknown baseline '" + std::string(name) + "'");
}

BaselinePtr generation_process_baseline(const GenerationSpec& spec, const NormalizationParams& normalization) {
  validate(spec);
  return std::make_shared<GenerationProcessBaseline>(spec, normalization);
}

BaselinePtr uniform_baseline(Shape shape, FeatureRange range) {
  return std::make_shared<UniformBaseline>(shape, std::move(range));
}

BaselinePtr uniform_baseline(Shape shape) {
  return uniform_baseline(shape, FeatureRange{std::vector<double>(shape.n_features, 0.0),
                                              std::vector<double>(shape.n_features, 1.0)});
}

BaselinePtr train_mean_baseline(std::span<const LabeledInstance> train) {
  if (train.empty()) fail(ErrorCode::EmptySelection, "train-mean baseline needs training data");
  TimeSeries mean(train.front().series.shape());
  for (const auto& inst : train) {
    require_shape(inst.series.shape(), mean.shape(), "train-mean instance");
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += inst.series[c];
  }
  for (double& v : mean.values()) v /= static_cast<double>(train.size());
  return std::make_shared<FixedBaseline>(std::move(mean), "TrainMean");
}

BaselinePtr fixed_baseline(TimeSeries series) {
  return std::make_shared<FixedBaseline>(std::move(series), "Fixed");
}

BaselinePtr make_baseline(BaselineKind kind, const Dataset& dataset) {
  switch (kind) {
    case BaselineKind::GenerationProcess:
      if (!dataset.generation) {
        fail(ErrorCode::MissingCapability, dataset.id.name + " has no generation process to sample baselines from");
      }
      return generation_process_baseline(*dataset.generation, dataset.normalization);
    case BaselineKind::Uniform:
      return uniform_baseline(dataset.shape);
    case BaselineKind::TrainMean:
      return train_mean_baseline(dataset.train);
  }
  fail(ErrorCode::InvalidParameter, "unknown baseline kind");
}

}  // namespace xtsc
