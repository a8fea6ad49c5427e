#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "xtsc/series.hpp"

namespace xtsc {

enum class FeatureKind {
  Middle,
  SmallMiddle,
  MovingMiddle,
  MovingSmall,
  RareTime,
  RareFeature,
  MovingRareTime,
  MovingRareFeature,
  PositionalTime,
  PositionalFeature,
};

inline constexpr std::array<FeatureKind, 10> kAllFeatureKinds = {
    FeatureKind::Middle,         FeatureKind::SmallMiddle,       FeatureKind::MovingMiddle,
    FeatureKind::MovingSmall,    FeatureKind::RareTime,          FeatureKind::RareFeature,
    FeatureKind::MovingRareTime, FeatureKind::MovingRareFeature, FeatureKind::PositionalTime,
    FeatureKind::PositionalFeature,
};

enum class LocationMode { Fixed, Moving, Positional };
enum class SizeClass { Normal, Small, RareTime, RareFeature };
enum class Axis { Feature, Time };
enum class Label : int { Negative = 0, Positive = 1 };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

struct MaskSpec {
  FeatureKind kind = FeatureKind::Middle;
  LocationMode location = LocationMode::Fixed;
  SizeClass size = SizeClass::Normal;
  /// Axis that encodes the class for Positional masks.
  Axis positional_axis = Axis::Time;
  std::uint64_t seed = 0;
};

/// Location, size class and positional axis implied by a catalog kind. With a
/// single feature, feature-based kinds use their time-axis counterparts.
MaskSpec mask_spec_for(FeatureKind kind, Shape shape, std::uint64_t seed = 0);

/// Axis-aligned box of informative cells.
struct Box {
  std::size_t feature_begin = 0;
  std::size_t n_features = 0;
  std::size_t time_begin = 0;
  std::size_t n_steps = 0;
};

/// Box extents for a size class; throws MaskInfeasible when the shape cannot
/// host a nonempty box within the class bounds.
Box box_extent(SizeClass size, Shape shape);

/// Positional masks need the label; other location modes ignore it.
GroundTruthMask build_mask(const MaskSpec& spec, Shape shape, std::uint64_t instance_seed,
                           std::optional<Label> label = std::nullopt);

struct LabeledInstance {
  TimeSeries series;
  Label label = Label::Negative;
  GroundTruthMask mask;

  bool operator==(const LabeledInstance&) const = default;
};

enum class InjectionMode {
  /// +c for the positive class, -c for the negative class.
  SignedByClass,
  /// +c for both classes; the label lives in the mask position.
  AddForBoth,
};

LabeledInstance inject_label(TimeSeries series, const GroundTruthMask& mask, Label label, double constant,
                             InjectionMode mode = InjectionMode::SignedByClass);

/// Per-feature min-max parameters fitted on a training split.
struct NormalizationParams {
  std::vector<double> min;
  std::vector<double> max;

  TimeSeries apply(const TimeSeries& x) const;
  TimeSeries invert(const TimeSeries& x) const;
  bool operator==(const NormalizationParams&) const = default;
};

struct NormalizedSplits {
  std::vector<LabeledInstance> train;
  std::vector<LabeledInstance> test;
  NormalizationParams params;
};

/// Fits on train only. Test values may leave [0, 1] and are not clipped. A
/// feature that is constant on train maps to 0.5.
NormalizedSplits normalize(std::vector<LabeledInstance> train, std::vector<LabeledInstance> test);

}  // namespace xtsc
