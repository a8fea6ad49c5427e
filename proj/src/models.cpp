#include "xtsc/models.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>

#include <json.hpp>

#include "xtsc/error.hpp"
#include "xtsc/rng.hpp"
#include "xtsc/text.hpp"

namespace xtsc::nn {
namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Architecture arch) {
  return arch == Architecture::TemporalConv ? "TemporalConv" : "GatedRecurrent";
}

Architecture parse_architecture(std::string_view name) {
  const std::string n = text::lower(name);
  if (n == "temporalconv" || n == "cnn") return Architecture::TemporalConv;
  if (n == "gatedrecurrent" || n == "lstm") return Architecture::GatedRecurrent;
  fail(ErrorCode::InvalidParameter, "unknown architecture '" + std::string(name) + "'");
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

void Network::zero_head() {
  std::fill(params_[head_weight_].value.begin(), params_[head_weight_].value.end(), 0.0);
  std::fill(params_[head_bias_].value.begin(), params_[head_bias_].value.end(), 0.0);
}

std::size_t Network::add_parameter(std::string name, std::vector<std::size_t> shape) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  params_.push_back(Parameter{std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
  return params_.size() - 1;
}

Var Network::bind(Tape& tape, std::size_t slot, std::size_t rows, std::size_t cols) const {
  return tape.parameter(params_[slot], slot, rows, cols);
}

TemporalConvNet::TemporalConvNet(Shape input_shape) : Network(input_shape) {
  std::size_t in = input_shape.n_features;
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const std::string prefix = "block" + std::to_string(b) + ".";
    Block block{in, add_parameter(prefix + "conv.weight", {kChannels, in, kWidth}),
                add_parameter(prefix + "conv.bias", {kChannels}), std::nullopt};
    if (in != kChannels) block.shortcut = add_parameter(prefix + "shortcut.weight", {kChannels, in, 1});
    blocks_.push_back(block);
    in = kChannels;
  }
  head_weight_ = add_parameter("head.weight", {kNumClasses, kChannels});
  head_bias_ = add_parameter("head.bias", {kNumClasses});
}

Var TemporalConvNet::forward(Tape& tape, Var input) const {
  Var h = input;
  for (const Block& b : blocks_) {
    const Var w = bind(tape, b.conv_weight, kChannels, b.in_channels * kWidth);
    const Var bias = bind(tape, b.conv_bias, kChannels, 1);
    const Var conv = tape.conv1d(h, w, bias, kWidth);
    Var skip = h;
    if (b.shortcut) skip = tape.conv1d(h, bind(tape, *b.shortcut, kChannels, b.in_channels), std::nullopt, 1);
    h = tape.gelu(tape.add(conv, skip));
  }
  const Var pooled = tape.mean_cols(h);
  return tape.add(tape.matvec(bind(tape, head_weight_, kNumClasses, kChannels), pooled),
                  bind(tape, head_bias_, kNumClasses, 1));
}

GatedRecurrentNet::GatedRecurrentNet(Shape input_shape) : Network(input_shape) {
  input_weight_ = add_parameter("lstm.input_weight", {4 * kHidden, input_shape.n_features});
  hidden_weight_ = add_parameter("lstm.hidden_weight", {4 * kHidden, kHidden});
  bias_ = add_parameter("lstm.bias", {4 * kHidden});
  head_weight_ = add_parameter("head.weight", {kNumClasses, kHidden});
  head_bias_ = add_parameter("head.bias", {kNumClasses});
}

Var GatedRecurrentNet::forward(Tape& tape, Var input) const {
  constexpr std::size_t H = kHidden;
  const std::size_t n = input_shape_.n_features;
  const Var wx = bind(tape, input_weight_, 4 * H, n);
  const Var wh = bind(tape, hidden_weight_, 4 * H, H);
  const Var b = bind(tape, bias_, 4 * H, 1);
  Var h = tape.constant(std::vector<double>(H, 0.0), H, 1);
  Var c = tape.constant(std::vector<double>(H, 0.0), H, 1);
  for (std::size_t t = 0; t < input_shape_.t_steps; ++t) {
    const Var z = tape.add(tape.add(tape.matvec(wx, tape.column(input, t)), tape.matvec(wh, h)), b);
    // Gate order: input, forget, cell candidate, output.
    const Var i = tape.sigmoid(tape.slice(z, 0, H));
    const Var f = tape.sigmoid(tape.slice(z, H, H));
    const Var g = tape.tanh(tape.slice(z, 2 * H, H));
    const Var o = tape.sigmoid(tape.slice(z, 3 * H, H));
    c = tape.add(tape.mul(f, c), tape.mul(i, g));
    h = tape.mul(o, tape.tanh(c));
  }
  return tape.add(tape.matvec(bind(tape, head_weight_, kNumClasses, H), h), bind(tape, head_bias_, kNumClasses, 1));
}

std::unique_ptr<Network> make_network(Architecture arch, Shape input_shape) {
  if (input_shape.cells() == 0) fail(ErrorCode::InvalidShape, "network input shape must be positive");
  if (arch == Architecture::TemporalConv) return std::make_unique<TemporalConvNet>(input_shape);
  return std::make_unique<GatedRecurrentNet>(input_shape);
}

void initialize(Network& net, std::uint64_t seed) {
  auto& params = net.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = params[k];
    Rng rng(seed, k);
    // Biases share the fan-in of their layer's weight, which precedes them.
    const Parameter& ref = p.shape.size() == 1 && k > 0 ? params[k - 1] : p;
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < ref.shape.size(); ++d) fan_in *= ref.shape[d];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : p.value) v = rng.uniform(-bound, bound);
    if (net.architecture() == Architecture::GatedRecurrent && p.name == "lstm.bias") {
      constexpr std::size_t H = GatedRecurrentNet::kHidden;
      for (std::size_t j = H; j < 2 * H; ++j) p.value[j] = 1.0;
    }
  }
}

NeuralClassifier::NeuralClassifier(Architecture arch, Shape input_shape, std::uint64_t seed)
    : net_(make_network(arch, input_shape)), seed_(seed) {
  initialize(*net_, seed);
}

NeuralClassifier::NeuralClassifier(std::unique_ptr<Network> net, std::uint64_t seed)
    : net_(std::move(net)), seed_(seed) {}

NeuralClassifier::NeuralClassifier(const NeuralClassifier& other) : net_(other.net_->clone()), seed_(other.seed_) {}

NeuralClassifier& NeuralClassifier::operator=(const NeuralClassifier& other) {
  if (this != &other) {
    net_ = other.net_->clone();
    seed_ = other.seed_;
  }
  return *this;
}

void NeuralClassifier::check_input(const TimeSeries& x) const {
  require_shape(x.shape(), net_->input_shape(), "classifier input");
}

std::vector<double> NeuralClassifier::logits(const TimeSeries& x) const {
  check_input(x);
  Tape tape;
  const Var in = tape.constant(x.data(), x.n_features(), x.t_steps());
  return tape.value(net_->forward(tape, in));
}

Matrix NeuralClassifier::logit_gradient(const TimeSeries& x, std::size_t target) const {
  check_input(x);
  if (target >= kNumClasses) fail(ErrorCode::InvalidParameter, "target class out of range");
  Tape tape;
  const Var in = tape.variable(x.data(), x.n_features(), x.t_steps());
  const Var out = net_->forward(tape, in);
  std::vector<double> seed(kNumClasses, 0.0);
  seed[target] = 1.0;
  tape.backward(out, seed);
  return Matrix(x.shape(), tape.grad(in));
}

std::vector<double> NeuralClassifier::parameter_gradient(const TimeSeries& x, std::size_t target) const {
  check_input(x);
  if (target >= kNumClasses) fail(ErrorCode::InvalidParameter, "target class out of range");
  Tape tape;
  const Var in = tape.constant(x.data(), x.n_features(), x.t_steps());
  const Var out = net_->forward(tape, in);
  std::vector<double> seed(kNumClasses, 0.0);
  seed[target] = 1.0;
  tape.backward(out, seed);
  const auto& params = net_->parameters();
  std::vector<std::size_t> offsets(params.size() + 1, 0);
  for (std::size_t k = 0; k < params.size(); ++k) offsets[k + 1] = offsets[k] + params[k].size();
  std::vector<double> flat(offsets.back(), 0.0);
  for (const auto& leaf : tape.parameter_leaves()) {
    const auto& g = tape.grad(leaf.var);
    for (std::size_t j = 0; j < g.size(); ++j) flat[offsets[leaf.slot] + j] += g[j];
  }
  return flat;
}

std::vector<double> NeuralClassifier::flat_parameters() const {
  std::vector<double> flat;
  flat.reserve(net_->parameter_count());
  for (const auto& p : net_->parameters()) flat.insert(flat.end(), p.value.begin(), p.value.end());
  return flat;
}

void NeuralClassifier::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != net_->parameter_count()) {
    fail(ErrorCode::InvalidShape, "expected " + std::to_string(net_->parameter_count()) + " parameters, got " +
                                      std::to_string(flat.size()));
  }
  std::size_t offset = 0;
  for (auto& p : net_->parameters()) {
    std::copy(flat.begin() + static_cast<long>(offset), flat.begin() + static_cast<long>(offset + p.size()),
              p.value.begin());
    offset += p.size();
  }
}

void save_checkpoint(const NeuralClassifier& model, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());

  json params = json::array();
  std::size_t offset = 0;
  for (const auto& p : model.network().parameters()) {
    params.push_back({{"name", p.name}, {"shape", p.shape}, {"offset", offset}, {"count", p.size()}});
    offset += p.size();
  }
  const Shape shape = model.input_shape();
  json manifest = {{"format_version", kCheckpointFormatVersion},
                   {"architecture", to_string(model.architecture())},
                   {"input_shape", {{"n_features", shape.n_features}, {"t_steps", shape.t_steps}}},
                   {"n_classes", kNumClasses},
                   {"seed", model.seed()},
                   {"blob", "params.bin"},
                   {"dtype", "float64"},
                   {"byte_order", "little"},
                   {"parameters", params}};

  const std::vector<double> flat = model.flat_parameters();
  std::string blob(flat.size() * sizeof(double), '\0');
  for (std::size_t k = 0; k < flat.size(); ++k) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(flat[k]);
    for (std::size_t b = 0; b < 8; ++b) blob[k * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  text::write_file((fs::path(dir) / "params.bin").string(), blob);
  // Manifest last: its presence marks a complete checkpoint.
  text::write_file((fs::path(dir) / "model.json").string(), manifest.dump(2) + "\n");
}

bool checkpoint_exists(const std::string& dir) {
  return fs::exists(fs::path(dir) / "model.json") && fs::exists(fs::path(dir) / "params.bin");
}

NeuralClassifier load_checkpoint(const std::string& dir) {
  const std::string path = (fs::path(dir) / "model.json").string();
  json m;
  try {
    m = json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::FormatError, path + ": " + e.what());
  }
  try {
    if (m.at("format_version").get<std::string>().rfind("1.", 0) != 0) {
      fail(ErrorCode::FormatError, path + ": unsupported format_version");
    }
    const Architecture arch = parse_architecture(m.at("architecture").get<std::string>());
    const Shape shape{m.at("input_shape").at("n_features").get<std::size_t>(),
                      m.at("input_shape").at("t_steps").get<std::size_t>()};
    NeuralClassifier model(make_network(arch, shape), m.value("seed", std::uint64_t{0}));
    const auto& params = model.network().parameters();
    const auto& declared = m.at("parameters");
    if (declared.size() != params.size()) fail(ErrorCode::FormatError, path + ": parameter count mismatch");
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (declared[k].at("name").get<std::string>() != params[k].name ||
          declared[k].at("shape").get<std::vector<std::size_t>>() != params[k].shape) {
        fail(ErrorCode::FormatError, path + ": parameter " + std::to_string(k) + " does not match architecture");
      }
    }
    const std::string blob = text::read_file((fs::path(dir) / m.value("blob", "params.bin")).string());
    if (blob.size() != model.network().parameter_count() * sizeof(double)) {
      fail(ErrorCode::FormatError, path + ": parameter blob has " + std::to_string(blob.size()) + " bytes");
    }
    std::vector<double> flat(blob.size() / 8);
    for (std::size_t k = 0; k < flat.size(); ++k) {
      std::uint64_t bits = 0;
      for (std::size_t b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[k * 8 + b])) << (8 * b);
      flat[k] = std::bit_cast<double>(bits);
    }
    model.set_flat_parameters(flat);
    return model;
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, path + ": " + e.what());
  }
}

}  // namespace xtsc::nn
