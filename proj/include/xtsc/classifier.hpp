#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xtsc/injection.hpp"
#include "xtsc/series.hpp"

namespace xtsc {

inline constexpr std::size_t kNumClasses = 2;

/// What a metric or explainer reads from a model: a class probability or the
/// raw logit.
enum class Readout { Probability, Logit };

/// A trained binary classifier over N x T inputs. Implementations must be safe
/// for concurrent const use.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual Shape input_shape() const = 0;
  virtual std::vector<double> logits(const TimeSeries& x) const = 0;
  /// Gradient of logit[target] with respect to every input cell.
  virtual Matrix logit_gradient(const TimeSeries& x, std::size_t target) const = 0;

  /// Softmax of the logits; entries are nonnegative and sum to one.
  std::vector<double> probabilities(const TimeSeries& x) const;
  std::size_t predict(const TimeSeries& x) const;
  double readout(const TimeSeries& x, std::size_t cls, Readout mode) const;
};

std::vector<double> softmax(std::span<const double> logits);

/// Logit of the positive class is w.x + b, of the negative class -(w.x + b).
class LinearScorer final : public Classifier {
 public:
  LinearScorer(Matrix weights, double bias = 0.0) : weights_(std::move(weights)), bias_(bias) {}

  Shape input_shape() const override { return weights_.shape(); }
  std::vector<double> logits(const TimeSeries& x) const override;
  Matrix logit_gradient(const TimeSeries& x, std::size_t target) const override;

  const Matrix& weights() const noexcept { return weights_; }
  double score(const TimeSeries& x) const;

 private:
  Matrix weights_;
  double bias_;
};

/// Fraction of instances whose argmax matches the label. Throws EmptySelection
/// on an empty split.
double accuracy(const Classifier& model, std::span<const LabeledInstance> split);

}  // namespace xtsc
