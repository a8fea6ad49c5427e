#include "xtsc/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "xtsc/error.hpp"

namespace xtsc {

std::vector<double> softmax(std::span<const double> logits) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - zmax);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> Classifier::probabilities(const TimeSeries& x) const { return softmax(logits(x)); }

std::size_t Classifier::predict(const TimeSeries& x) const {
  const auto z = logits(x);
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

double Classifier::readout(const TimeSeries& x, std::size_t cls, Readout mode) const {
  if (cls >= kNumClasses) fail(ErrorCode::InvalidParameter, "class index out of range");
  return mode == Readout::Logit ? logits(x)[cls] : probabilities(x)[cls];
}

double LinearScorer::score(const TimeSeries& x) const {
  require_shape(x.shape(), weights_.shape(), "LinearScorer input");
  double s = bias_;
  for (std::size_t c = 0; c < x.size(); ++c) s += weights_[c] * x[c];
  return s;
}

std::vector<double> LinearScorer::logits(const TimeSeries& x) const {
  const double s = score(x);
  return {-s, s};
}

Matrix LinearScorer::logit_gradient(const TimeSeries& x, std::size_t target) const {
  require_shape(x.shape(), weights_.shape(), "LinearScorer input");
  if (target >= kNumClasses) fail(ErrorCode::InvalidParameter, "target class out of range");
  Matrix g = weights_;
  if (target == 0) {
    for (double& v : g.values()) v = -v;
  }
  return g;
}

double accuracy(const Classifier& model, std::span<const LabeledInstance> split) {
  if (split.empty()) fail(ErrorCode::EmptySelection, "accuracy of an empty split");
  std::size_t correct = 0;
  for (const auto& inst : split) {
    if (model.predict(inst.series) == static_cast<std::size_t>(inst.label)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

}  // namespace xtsc
