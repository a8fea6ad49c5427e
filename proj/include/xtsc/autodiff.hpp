#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Minimal tensor-level reverse-mode differentiation. A Tape records every
// operation of one forward pass; backward() replays them in reverse creation
// order, which is a valid topological order because nodes only reference
// earlier nodes.
namespace xtsc::nn {

struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;

  std::size_t size() const noexcept { return value.size(); }
};

/// Handle to a tape node. Values are rows x cols, row-major.
struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  Var constant(std::vector<double> value, std::size_t rows, std::size_t cols);
  /// Leaf whose gradient is read back after backward().
  Var variable(std::vector<double> value, std::size_t rows, std::size_t cols);
  /// Copy of a parameter; `slot` identifies it in parameter_leaves().
  Var parameter(const Parameter& p, std::size_t slot, std::size_t rows, std::size_t cols);

  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var gelu(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  /// W (r x c) times column vector x (c x 1).
  Var matvec(Var w, Var x);
  /// x: in_channels x steps; weight: out_channels x (in_channels * width).
  Var conv1d(Var x, Var weight, std::optional<Var> bias, std::size_t width);
  /// Row means: r x c -> r x 1.
  Var mean_cols(Var x);
  /// Column t of x as an r x 1 vector.
  Var column(Var x, std::size_t t);
  /// Rows [begin, begin + count) of a column vector.
  Var slice(Var x, std::size_t begin, std::size_t count);
  /// Softmax cross-entropy of a logit column vector; 1 x 1.
  Var softmax_cross_entropy(Var logits, std::size_t label);

  /// Seeds d(out) = out_grad and propagates to every node.
  void backward(Var out, std::span<const double> out_grad);

  const std::vector<double>& value(Var v) const { return nodes_[v.id].value; }
  const std::vector<double>& grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t rows(Var v) const { return nodes_[v.id].rows; }
  std::size_t cols(Var v) const { return nodes_[v.id].cols; }
  std::size_t size() const noexcept { return nodes_.size(); }

  struct ParameterLeaf {
    std::size_t slot;
    Var var;
  };
  const std::vector<ParameterLeaf>& parameter_leaves() const noexcept { return parameter_leaves_; }

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::function<void(Tape&)> backward;
  };

  Var push(std::vector<double> value, std::size_t rows, std::size_t cols, std::function<void(Tape&)> backward);
  Node& node(Var v) { return nodes_[v.id]; }

  std::vector<Node> nodes_;
  std::vector<ParameterLeaf> parameter_leaves_;
};

}  // namespace xtsc::nn
