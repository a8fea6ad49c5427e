#include "xtsc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xtsc/error.hpp"
#include "xtsc/kernels.hpp"

namespace xtsc::nn {
namespace {

void require_same(const std::vector<double>& a, const std::vector<double>& b, const char* op) {
  if (a.size() != b.size()) {
    fail(ErrorCode::InvalidShape, std::string(op) + ": operand sizes " + std::to_string(a.size()) + " and " +
                                      std::to_string(b.size()) + " differ");
  }
}

// tanh-approximated GELU and its derivative.
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

inline double gelu_grad(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double th = std::tanh(u);
  const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
}

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::push(std::vector<double> value, std::size_t rows, std::size_t cols, std::function<void(Tape&)> backward) {
  nodes_.push_back(Node{std::move(value), {}, rows, cols, std::move(backward)});
  return Var{nodes_.size() - 1};
}

Var Tape::constant(std::vector<double> value, std::size_t rows, std::size_t cols) {
  if (value.size() != rows * cols) fail(ErrorCode::InvalidShape, "constant: size does not match rows x cols");
  return push(std::move(value), rows, cols, nullptr);
}

Var Tape::variable(std::vector<double> value, std::size_t rows, std::size_t cols) {
  return constant(std::move(value), rows, cols);
}

Var Tape::parameter(const Parameter& p, std::size_t slot, std::size_t rows, std::size_t cols) {
  Var v = constant(p.value, rows, cols);
  parameter_leaves_.push_back({slot, v});
  return v;
}

Var Tape::add(Var a, Var b) {
  require_same(value(a), value(b), "add");
  std::vector<double> out = value(a);
  const auto& vb = value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += vb[k];
  Var self{nodes_.size()};
  return push(std::move(out), rows(a), cols(a), [a, b, self](Tape& t) {
    const auto& g = t.node(self).grad;
    auto& ga = t.node(a).grad;
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    auto& gb = t.node(b).grad;
    for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k];
  });
}

Var Tape::mul(Var a, Var b) {
  require_same(value(a), value(b), "mul");
  std::vector<double> out = value(a);
  const auto& vb = value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= vb[k];
  Var self{nodes_.size()};
  return push(std::move(out), rows(a), cols(a), [a, b, self](Tape& t) {
    const auto& g = t.node(self).grad;
    const auto& va = t.node(a).value;
    const auto& vb = t.node(b).value;
    auto& ga = t.node(a).grad;
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * vb[k];
    auto& gb = t.node(b).grad;
    for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * va[k];
  });
}

Var Tape::gelu(Var a) {
  std::vector<double> out = value(a);
  for (double& v : out) v = xtsc::nn::gelu(v);
  Var self{nodes_.size()};
  return push(std::move(out), rows(a), cols(a), [a, self](Tape& t) {
    const auto& g = t.node(self).grad;
    const auto& x = t.node(a).value;
    auto& ga = t.node(a).grad;
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * gelu_grad(x[k]);
  });
}

Var Tape::sigmoid(Var a) {
  std::vector<double> out = value(a);
  for (double& v : out) v = logistic(v);
  Var self{nodes_.size()};
  return push(std::move(out), rows(a), cols(a), [a, self](Tape& t) {
    const auto& g = t.node(self).grad;
    const auto& y = t.node(self).value;
    auto& ga = t.node(a).grad;
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * y[k] * (1.0 - y[k]);
  });
}

Var Tape::tanh(Var a) {
  std::vector<double> out = value(a);
  for (double& v : out) v = std::tanh(v);
  Var self{nodes_.size()};
  return push(std::move(out), rows(a), cols(a), [a, self](Tape& t) {
    const auto& g = t.node(self).grad;
    const auto& y = t.node(self).value;
    auto& ga = t.node(a).grad;
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * (1.0 - y[k] * y[k]);
  });
}

Var Tape::matvec(Var w, Var x) {
  const std::size_t r = rows(w);
  const std::size_t c = cols(w);
  if (value(x).size() != c) fail(ErrorCode::InvalidShape, "matvec: vector length does not match matrix columns");
  std::vector<double> out(r);
  kernels::matvec(r, c, value(w), value(x), out);
  Var self{nodes_.size()};
  return push(std::move(out), r, 1, [w, x, r, c, self](Tape& t) {
    const auto& g = t.node(self).grad;
    const auto& vw = t.node(w).value;
    const auto& vx = t.node(x).value;
    auto& gw = t.node(w).grad;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < r; ++i) {
      const double gi = g[i];
      for (std::size_t j = 0; j < c; ++j) {
        gw[i * c + j] += gi * vx[j];
        gx[j] += gi * vw[i * c + j];
      }
    }
  });
}

Var Tape::conv1d(Var x, Var weight, std::optional<Var> bias, std::size_t width) {
  kernels::ConvShape s;
  s.in_channels = rows(x);
  s.steps = cols(x);
  s.out_channels = rows(weight);
  s.width = width;
  if (width == 0 || cols(weight) != s.in_channels * width) {
    fail(ErrorCode::InvalidShape, "conv1d: weight shape does not match input channels x width");
  }
  if (bias && value(*bias).size() != s.out_channels) fail(ErrorCode::InvalidShape, "conv1d: bias length");
  std::vector<double> out(s.out_channels * s.steps);
  const std::vector<double> no_bias;
  kernels::conv1d_forward(s, value(x), value(weight), bias ? value(*bias) : no_bias, out);
  Var self{nodes_.size()};
  return push(std::move(out), s.out_channels, s.steps, [x, weight, bias, s, self](Tape& t) {
    kernels::conv1d_backward(s, t.node(x).value, t.node(weight).value, t.node(self).grad, t.node(x).grad,
                             t.node(weight).grad, bias ? std::span<double>(t.node(*bias).grad) : std::span<double>());
  });
}

Var Tape::mean_cols(Var x) {
  const std::size_t r = rows(x);
  const std::size_t c = cols(x);
  std::vector<double> out(r, 0.0);
  const auto& v = value(x);
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += v[i * c + j];
    out[i] = acc / static_cast<double>(c);
  }
  Var self{nodes_.size()};
  return push(std::move(out), r, 1, [x, r, c, self](Tape& t) {
    const auto& g = t.node(self).grad;
    auto& gx = t.node(x).grad;
    const double scale = 1.0 / static_cast<double>(c);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i] * scale;
    }
  });
}

Var Tape::column(Var x, std::size_t col) {
  const std::size_t r = rows(x);
  const std::size_t c = cols(x);
  if (col >= c) fail(ErrorCode::InvalidShape, "column index out of range");
  std::vector<double> out(r);
  const auto& v = value(x);
  for (std::size_t i = 0; i < r; ++i) out[i] = v[i * c + col];
  Var self{nodes_.size()};
  return push(std::move(out), r, 1, [x, r, c, col, self](Tape& t) {
    const auto& g = t.node(self).grad;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < r; ++i) gx[i * c + col] += g[i];
  });
}

Var Tape::slice(Var x, std::size_t begin, std::size_t count) {
  if (cols(x) != 1 || begin + count > rows(x)) fail(ErrorCode::InvalidShape, "slice out of range");
  const auto& v = value(x);
  std::vector<double> out(v.begin() + static_cast<long>(begin), v.begin() + static_cast<long>(begin + count));
  Var self{nodes_.size()};
  return push(std::move(out), count, 1, [x, begin, count, self](Tape& t) {
    const auto& g = t.node(self).grad;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < count; ++i) gx[begin + i] += g[i];
  });
}

Var Tape::softmax_cross_entropy(Var logits, std::size_t label) {
  const auto& z = value(logits);
  if (label >= z.size()) fail(ErrorCode::InvalidParameter, "label out of range");
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  const double log_sum = zmax + std::log(sum);
  std::vector<double> probs(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) probs[k] = std::exp(z[k] - log_sum);
  Var self{nodes_.size()};
  return push({log_sum - z[label]}, 1, 1, [logits, label, probs, self](Tape& t) {
    const double g = t.node(self).grad[0];
    auto& gz = t.node(logits).grad;
    for (std::size_t k = 0; k < probs.size(); ++k) gz[k] += g * (probs[k] - (k == label ? 1.0 : 0.0));
  });
}

void Tape::backward(Var out, std::span<const double> out_grad) {
  if (out_grad.size() != value(out).size()) fail(ErrorCode::InvalidShape, "backward: seed gradient size");
  for (std::size_t k = 0; k <= out.id; ++k) nodes_[k].grad.assign(nodes_[k].value.size(), 0.0);
  std::copy(out_grad.begin(), out_grad.end(), nodes_[out.id].grad.begin());
  for (std::size_t k = out.id + 1; k-- > 0;) {
    if (nodes_[k].backward) nodes_[k].backward(*this);
  }
}

}  // namespace xtsc::nn
