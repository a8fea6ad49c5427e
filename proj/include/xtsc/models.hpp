#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xtsc/autodiff.hpp"
#include "xtsc/classifier.hpp"

namespace xtsc::nn {

enum class Architecture { TemporalConv, GatedRecurrent };

std::string_view to_string(Architecture arch);
/// Accepts the canonical names and the aliases "cnn" / "lstm".
Architecture parse_architecture(std::string_view name);

/// Layer stack that maps an N x T input node to a kNumClasses x 1 logit node.
class Network {
 public:
  virtual ~Network() = default;
  virtual Architecture architecture() const = 0;
  virtual Var forward(Tape& tape, Var input) const = 0;
  virtual std::unique_ptr<Network> clone() const = 0;

  Shape input_shape() const noexcept { return input_shape_; }
  std::vector<Parameter>& parameters() noexcept { return params_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept;

  /// Zeroes the final linear layer so every input maps to uniform probabilities.
  void zero_head();

 protected:
  explicit Network(Shape input_shape) : input_shape_(input_shape) {}
  std::size_t add_parameter(std::string name, std::vector<std::size_t> shape);
  Var bind(Tape& tape, std::size_t slot, std::size_t rows, std::size_t cols) const;

  Shape input_shape_;
  std::vector<Parameter> params_;
  std::size_t head_weight_ = 0;
  std::size_t head_bias_ = 0;
};

/// Residual blocks of (conv width 7, 32 channels, GELU) with a 1x1 projection
/// shortcut where the channel count changes, then global average pooling and
/// a linear head.
class TemporalConvNet final : public Network {
 public:
  static constexpr std::size_t kBlocks = 3;
  static constexpr std::size_t kChannels = 32;
  static constexpr std::size_t kWidth = 7;

  explicit TemporalConvNet(Shape input_shape);
  Architecture architecture() const override { return Architecture::TemporalConv; }
  Var forward(Tape& tape, Var input) const override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<TemporalConvNet>(*this); }

 private:
  struct Block {
    std::size_t in_channels;
    std::size_t conv_weight;
    std::size_t conv_bias;
    std::optional<std::size_t> shortcut;
  };
  std::vector<Block> blocks_;
};

/// One LSTM layer (hidden size 10) read out from the last hidden state.
class GatedRecurrentNet final : public Network {
 public:
  static constexpr std::size_t kHidden = 10;

  explicit GatedRecurrentNet(Shape input_shape);
  Architecture architecture() const override { return Architecture::GatedRecurrent; }
  Var forward(Tape& tape, Var input) const override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<GatedRecurrentNet>(*this); }

 private:
  std::size_t input_weight_;
  std::size_t hidden_weight_;
  std::size_t bias_;
};

std::unique_ptr<Network> make_network(Architecture arch, Shape input_shape);

/// Fan-in scaled uniform initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// LSTM forget-gate bias 1.
void initialize(Network& net, std::uint64_t seed);

class NeuralClassifier final : public Classifier {
 public:
  NeuralClassifier(Architecture arch, Shape input_shape, std::uint64_t seed);
  explicit NeuralClassifier(std::unique_ptr<Network> net, std::uint64_t seed = 0);
  NeuralClassifier(const NeuralClassifier& other);
  NeuralClassifier& operator=(const NeuralClassifier& other);
  NeuralClassifier(NeuralClassifier&&) noexcept = default;
  NeuralClassifier& operator=(NeuralClassifier&&) noexcept = default;

  Shape input_shape() const override { return net_->input_shape(); }
  std::vector<double> logits(const TimeSeries& x) const override;
  Matrix logit_gradient(const TimeSeries& x, std::size_t target) const override;

  /// Gradient of logit[target] with respect to all parameters, flattened in
  /// declaration order.
  std::vector<double> parameter_gradient(const TimeSeries& x, std::size_t target) const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);

  Architecture architecture() const { return net_->architecture(); }
  std::uint64_t seed() const noexcept { return seed_; }
  Network& network() noexcept { return *net_; }
  const Network& network() const noexcept { return *net_; }

 private:
  void check_input(const TimeSeries& x) const;

  std::unique_ptr<Network> net_;
  std::uint64_t seed_;
};

inline constexpr std::string_view kCheckpointFormatVersion = "1.0";

/// Writes dir/model.json and dir/params.bin (little-endian float64, parameters
/// concatenated in the order listed in the manifest).
void save_checkpoint(const NeuralClassifier& model, const std::string& dir);
NeuralClassifier load_checkpoint(const std::string& dir);
bool checkpoint_exists(const std::string& dir);

}  // namespace xtsc::nn
