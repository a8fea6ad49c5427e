#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xtsc/catalog.hpp"
#include "xtsc/series.hpp"

namespace xtsc {

/// Supplies uninformative reference series x~ for masking, occlusion and
/// faithfulness. Draws are a pure function of the seed.
class BaselineSource {
 public:
  virtual ~BaselineSource() = default;
  virtual Shape shape() const = 0;
  virtual std::string name() const = 0;
  virtual TimeSeries sample(std::uint64_t seed) const = 0;
};

using BaselinePtr = std::shared_ptr<const BaselineSource>;

enum class BaselineKind { GenerationProcess, Uniform, TrainMean };

std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(std::string_view name);

/// Per-feature value range, used for uniform baselines and for mapping raw
/// custom data onto the unit scale.
struct FeatureRange {
  std::vector<double> min;
  std::vector<double> max;
};

/// Fresh draws from the generating process, normalized with the dataset's
/// training parameters.
BaselinePtr generation_process_baseline(const GenerationSpec& spec, const NormalizationParams& normalization);
/// Independent U(min_i, max_i) per cell.
BaselinePtr uniform_baseline(Shape shape, FeatureRange range);
/// U(0, 1) per cell, the normalized synthetic scale.
BaselinePtr uniform_baseline(Shape shape);
/// Cell-wise mean of the training split (deterministic).
BaselinePtr train_mean_baseline(std::span<const LabeledInstance> train);
/// Always the same series.
BaselinePtr fixed_baseline(TimeSeries series);

/// Baseline of the requested kind for a dataset. GenerationProcess needs the
/// dataset's generation spec (MissingCapability otherwise). Uniform draws
/// within the dataset's normalized range.
BaselinePtr make_baseline(BaselineKind kind, const Dataset& dataset);

}  // namespace xtsc
