#include "xtsc/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xtsc/error.hpp"
#include "xtsc/rng.hpp"

namespace xtsc::nn {
namespace {

struct Split {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> validation;
};

Split stratified_split(std::span<const LabeledInstance> data, double fraction, std::uint64_t seed) {
  Split split;
  Rng rng(seed, 0x76616C);
  for (Label cls : {Label::Negative, Label::Positive}) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (data[k].label == cls) idx.push_back(k);
    }
    rng.shuffle(std::span<std::size_t>(idx));
    std::size_t n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    if (fraction > 0 && n_val == 0 && idx.size() > 1) n_val = 1;
    if (n_val >= idx.size()) n_val = idx.size() - 1;
    split.validation.insert(split.validation.end(), idx.begin(), idx.begin() + static_cast<long>(n_val));
    split.fit.insert(split.fit.end(), idx.begin() + static_cast<long>(n_val), idx.end());
  }
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.fit.begin(), split.fit.end());
  return split;
}

double instance_loss(const NeuralClassifier& model, const LabeledInstance& inst) {
  Tape tape;
  const Var in = tape.constant(inst.series.data(), inst.series.n_features(), inst.series.t_steps());
  const Var loss = tape.softmax_cross_entropy(model.network().forward(tape, in), static_cast<std::size_t>(inst.label));
  return tape.value(loss)[0];
}

class Adam {
 public:
  Adam(const std::vector<Parameter>& params, const TrainConfig& cfg) : cfg_(cfg) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }

  void step(std::vector<Parameter>& params, const std::vector<std::vector<double>>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& value = params[k].value;
      for (std::size_t j = 0; j < value.size(); ++j) {
        const double g = grads[k][j];
        m_[k][j] = cfg_.beta1 * m_[k][j] + (1.0 - cfg_.beta1) * g;
        v_[k][j] = cfg_.beta2 * v_[k][j] + (1.0 - cfg_.beta2) * g * g;
        const double m_hat = m_[k][j] / c1;
        const double v_hat = v_[k][j] / c2;
        value[j] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
      }
    }
  }

 private:
  const TrainConfig& cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  int t_ = 0;
};

}  // namespace

double mean_loss(const NeuralClassifier& model, std::span<const LabeledInstance> split) {
  if (split.empty()) fail(ErrorCode::EmptySelection, "loss of an empty split");
  double total = 0.0;
  for (const auto& inst : split) total += instance_loss(model, inst);
  return total / static_cast<double>(split.size());
}

TrainingHistory train(NeuralClassifier& model, std::span<const LabeledInstance> data, const TrainConfig& cfg) {
  if (cfg.max_epochs < 1 || cfg.patience < 1 || cfg.patience >= cfg.max_epochs) {
    fail(ErrorCode::InvalidParameter, "need 1 <= patience < max_epochs");
  }
  if (cfg.learning_rate < 0 || cfg.batch_size == 0 || cfg.validation_fraction < 0 || cfg.validation_fraction >= 1) {
    fail(ErrorCode::InvalidParameter, "learning_rate >= 0, batch_size > 0 and validation_fraction in [0,1) required");
  }
  bool has_pos = false;
  bool has_neg = false;
  for (const auto& inst : data) {
    require_shape(inst.series.shape(), model.input_shape(), "training instance");
    (inst.label == Label::Positive ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) fail(ErrorCode::DegenerateLabels, "training split must contain both classes");

  const Split split = stratified_split(data, cfg.validation_fraction, cfg.seed);
  std::vector<LabeledInstance> validation;
  for (std::size_t k : split.validation) validation.push_back(data[k]);
  std::vector<std::size_t> order = split.fit;
  const std::vector<LabeledInstance> monitored =
      validation.empty() ? std::vector<LabeledInstance>(data.begin(), data.end()) : validation;

  auto& params = model.network().parameters();
  std::vector<std::vector<double>> grads;
  for (const auto& p : params) grads.emplace_back(p.size(), 0.0);
  Adam adam(params, cfg);
  Rng rng(cfg.seed, 0x7368756666ull);

  TrainingHistory history;
  history.best_validation_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best = model.flat_parameters();
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const LabeledInstance& inst = data[order[b]];
        Tape tape;
        const Var in = tape.constant(inst.series.data(), inst.series.n_features(), inst.series.t_steps());
        const Var loss =
            tape.softmax_cross_entropy(model.network().forward(tape, in), static_cast<std::size_t>(inst.label));
        loss_sum += tape.value(loss)[0];
        const double seed = scale;
        tape.backward(loss, std::span<const double>(&seed, 1));
        for (const auto& leaf : tape.parameter_leaves()) {
          const auto& g = tape.grad(leaf.var);
          auto& acc = grads[leaf.slot];
          for (std::size_t j = 0; j < g.size(); ++j) acc[j] += g[j];
        }
      }
      adam.step(params, grads);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.validation_loss = mean_loss(model, monitored);
    stats.validation_accuracy = accuracy(model, monitored);
    history.epochs.push_back(stats);

    if (stats.validation_loss < history.best_validation_loss) {
      history.best_validation_loss = stats.validation_loss;
      history.best_epoch = epoch;
      best = model.flat_parameters();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      history.early_stopped = true;
      break;
    }
  }
  model.set_flat_parameters(best);
  return history;
}

}  // namespace xtsc::nn
