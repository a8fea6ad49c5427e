#include "xtsc/injection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xtsc/error.hpp"
#include "xtsc/rng.hpp"

namespace xtsc {
namespace {

// Largest integer strictly below x.
std::size_t strictly_below(double x) {
  const double c = std::ceil(x) - 1.0;
  return c < 0 ? 0 : static_cast<std::size_t>(c);
}

std::size_t normal_extent(std::size_t dim) {
  return std::min(dim, static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(dim))) + 1);
}

void require_extent(std::size_t extent, const char* axis, SizeClass size, Shape shape) {
  if (extent < 1) {
    fail(ErrorCode::MaskInfeasible, std::string("size class ") + std::to_string(static_cast<int>(size)) +
                                        " leaves no informative " + axis + " for shape " + to_string(shape));
  }
}

std::size_t centered(std::size_t dim, std::size_t extent) { return (dim - extent) / 2; }

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Middle: return "Middle";
    case FeatureKind::SmallMiddle: return "SmallMiddle";
    case FeatureKind::MovingMiddle: return "MovingMiddle";
    case FeatureKind::MovingSmall: return "MovingSmall";
    case FeatureKind::RareTime: return "RareTime";
    case FeatureKind::RareFeature: return "RareFeature";
    case FeatureKind::MovingRareTime: return "MovingRareTime";
    case FeatureKind::MovingRareFeature: return "MovingRareFeature";
    case FeatureKind::PositionalTime: return "PositionalTime";
    case FeatureKind::PositionalFeature: return "PositionalFeature";
  }
  return "Unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  for (FeatureKind k : kAllFeatureKinds) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorCode::FormatError, "unknown feature kind '" + std::string(name) + "'");
}

MaskSpec mask_spec_for(FeatureKind kind, Shape shape, std::uint64_t seed) {
  const bool univariate = shape.n_features <= 1;
  MaskSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  switch (kind) {
    case FeatureKind::Middle: break;
    case FeatureKind::SmallMiddle: spec.size = SizeClass::Small; break;
    case FeatureKind::MovingMiddle: spec.location = LocationMode::Moving; break;
    case FeatureKind::MovingSmall:
      spec.location = LocationMode::Moving;
      spec.size = SizeClass::Small;
      break;
    case FeatureKind::RareTime: spec.size = SizeClass::RareTime; break;
    case FeatureKind::RareFeature: spec.size = univariate ? SizeClass::RareTime : SizeClass::RareFeature; break;
    case FeatureKind::MovingRareTime:
      spec.location = LocationMode::Moving;
      spec.size = SizeClass::RareTime;
      break;
    case FeatureKind::MovingRareFeature:
      spec.location = LocationMode::Moving;
      spec.size = univariate ? SizeClass::RareTime : SizeClass::RareFeature;
      break;
    case FeatureKind::PositionalTime:
      spec.location = LocationMode::Positional;
      spec.positional_axis = Axis::Time;
      break;
    case FeatureKind::PositionalFeature:
      spec.location = LocationMode::Positional;
      spec.positional_axis = univariate ? Axis::Time : Axis::Feature;
      break;
  }
  return spec;
}

Box box_extent(SizeClass size, Shape shape) {
  if (shape.n_features < 1 || shape.t_steps < 1) {
    fail(ErrorCode::InvalidShape, "mask shape must be positive, got " + to_string(shape));
  }
  const double N = static_cast<double>(shape.n_features);
  const double T = static_cast<double>(shape.t_steps);
  Box box;
  switch (size) {
    case SizeClass::Normal:
      box.n_features = normal_extent(shape.n_features);
      box.n_steps = normal_extent(shape.t_steps);
      break;
    case SizeClass::Small:
      if (shape.n_features == 1) {
        box.n_features = 1;
        box.n_steps = strictly_below(0.1 * T);
      } else {
        box.n_features = strictly_below(std::sqrt(0.1) * N);
        box.n_steps = strictly_below(std::sqrt(0.1) * T);
      }
      require_extent(box.n_features, "feature", size, shape);
      require_extent(box.n_steps, "time step", size, shape);
      if (!(static_cast<double>(box.n_features * box.n_steps) < 0.1 * N * T)) {
        fail(ErrorCode::MaskInfeasible, "small box cannot stay under 10% of cells for " + to_string(shape));
      }
      break;
    case SizeClass::RareTime:
      box.n_features = normal_extent(shape.n_features);
      box.n_steps = strictly_below(0.05 * T);
      require_extent(box.n_steps, "time step", size, shape);
      break;
    case SizeClass::RareFeature:
      box.n_features = strictly_below(0.05 * N);
      box.n_steps = normal_extent(shape.t_steps);
      require_extent(box.n_features, "feature", size, shape);
      break;
  }
  return box;
}

GroundTruthMask build_mask(const MaskSpec& spec, Shape shape, std::uint64_t instance_seed,
                           std::optional<Label> label) {
  Box box = box_extent(spec.size, shape);
  switch (spec.location) {
    case LocationMode::Fixed:
      box.feature_begin = centered(shape.n_features, box.n_features);
      box.time_begin = centered(shape.t_steps, box.n_steps);
      break;
    case LocationMode::Moving: {
      Rng rng(derive_seed(spec.seed, {instance_seed}));
      box.feature_begin = static_cast<std::size_t>(rng.below(shape.n_features - box.n_features + 1));
      box.time_begin = static_cast<std::size_t>(rng.below(shape.t_steps - box.n_steps + 1));
      break;
    }
    case LocationMode::Positional: {
      if (!label) fail(ErrorCode::InvalidParameter, "positional masks require the instance label");
      const bool on_time = spec.positional_axis == Axis::Time;
      const std::size_t dim = on_time ? shape.t_steps : shape.n_features;
      const std::size_t extent = on_time ? box.n_steps : box.n_features;
      const std::size_t half = dim / 2;
      if (extent > half || dim - half < extent) {
        fail(ErrorCode::MaskInfeasible, "positional box does not fit in half of the axis for " + to_string(shape));
      }
      const std::size_t begin =
          *label == Label::Positive ? centered(half, extent) : half + centered(dim - half, extent);
      if (on_time) {
        box.time_begin = begin;
        box.feature_begin = centered(shape.n_features, box.n_features);
      } else {
        box.feature_begin = begin;
        box.time_begin = centered(shape.t_steps, box.n_steps);
      }
      break;
    }
  }
  GroundTruthMask mask(shape);
  for (std::size_t i = box.feature_begin; i < box.feature_begin + box.n_features; ++i) {
    for (std::size_t t = box.time_begin; t < box.time_begin + box.n_steps; ++t) mask.set(i, t);
  }
  return mask;
}

LabeledInstance inject_label(TimeSeries series, const GroundTruthMask& mask, Label label, double constant,
                             InjectionMode mode) {
  if (!(constant > 0.0)) {
    fail(ErrorCode::DegenerateSeparation, "injection constant must be positive, got " + std::to_string(constant));
  }
  require_shape(mask.shape(), series.shape(), "inject_label mask");
  if (mask.empty()) fail(ErrorCode::MaskInfeasible, "cannot inject into an empty mask");
  const double shift =
      (mode == InjectionMode::AddForBoth || label == Label::Positive) ? constant : -constant;
  for (std::size_t c = 0; c < series.size(); ++c) {
    if (mask[c]) series[c] += shift;
  }
  return {std::move(series), label, mask};
}

TimeSeries NormalizationParams::apply(const TimeSeries& x) const {
  if (min.size() != x.n_features() || max.size() != x.n_features()) {
    fail(ErrorCode::InvalidShape, "normalization has " + std::to_string(min.size()) + " features, series has " +
                                      std::to_string(x.n_features()));
  }
  TimeSeries out = x;
  for (std::size_t i = 0; i < x.n_features(); ++i) {
    const double range = max[i] - min[i];
    for (double& v : out.row(i)) v = range > 0 ? (v - min[i]) / range : 0.5;
  }
  return out;
}

TimeSeries NormalizationParams::invert(const TimeSeries& x) const {
  if (min.size() != x.n_features() || max.size() != x.n_features()) {
    fail(ErrorCode::InvalidShape, "normalization feature count mismatch");
  }
  TimeSeries out = x;
  for (std::size_t i = 0; i < x.n_features(); ++i) {
    const double range = max[i] - min[i];
    for (double& v : out.row(i)) v = range > 0 ? min[i] + v * range : min[i];
  }
  return out;
}

NormalizedSplits normalize(std::vector<LabeledInstance> train, std::vector<LabeledInstance> test) {
  if (train.empty()) fail(ErrorCode::EmptySelection, "normalize needs a nonempty training split");
  const Shape shape = train.front().series.shape();
  NormalizationParams params;
  params.min.assign(shape.n_features, std::numeric_limits<double>::infinity());
  params.max.assign(shape.n_features, -std::numeric_limits<double>::infinity());
  for (const auto& inst : train) {
    require_shape(inst.series.shape(), shape, "normalize train instance");
    for (std::size_t i = 0; i < shape.n_features; ++i) {
      for (double v : inst.series.row(i)) {
        params.min[i] = std::min(params.min[i], v);
        params.max[i] = std::max(params.max[i], v);
      }
    }
  }
  for (auto& inst : train) inst.series = params.apply(inst.series);
  for (auto& inst : test) {
    require_shape(inst.series.shape(), shape, "normalize test instance");
    inst.series = params.apply(inst.series);
  }
  return {std::move(train), std::move(test), std::move(params)};
}

}  // namespace xtsc
