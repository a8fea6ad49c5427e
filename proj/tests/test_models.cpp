#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_support.hpp"

#include <filesystem>

#include "xtsc/classifier.hpp"
#include "xtsc/models.hpp"

using namespace xtsc;
using namespace xtsc::nn;
using namespace xtsc::testing;
namespace fs = std::filesystem;

namespace {

constexpr double kStep = 1e-5;
constexpr double kTolerance = 1e-4;

double logit(const NeuralClassifier& m, const TimeSeries& x, std::size_t target) { return m.logits(x)[target]; }

/// max |a - n| / max(max |n|, 1e-8) over the checked entries.
double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, scale = 1e-8;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    diff = std::max(diff, std::abs(analytic[k] - numeric[k]));
    scale = std::max(scale, std::abs(numeric[k]));
  }
  return diff / scale;
}

void gradient_check(Architecture arch, std::uint64_t config) {
  Rng rng(config, 0x6663);
  const Shape shape{1 + rng.below(3), 4 + rng.below(10)};
  NeuralClassifier model(arch, shape, config);
  // Spread the parameters beyond the initial range so nonlinearities are exercised.
  auto flat = model.flat_parameters();
  for (double& p : flat) p *= rng.uniform(0.5, 2.0);
  model.set_flat_parameters(flat);
  const TimeSeries x = random_matrix(shape, config, -2.0, 2.0);
  const std::size_t target = rng.below(2);

  const Matrix g = model.logit_gradient(x, target);
  std::vector<double> analytic(g.values().begin(), g.values().end()), numeric;
  for (std::size_t k = 0; k < x.size(); ++k) {
    TimeSeries up = x, down = x;
    up[k] += kStep;
    down[k] -= kStep;
    numeric.push_back((logit(model, up, target) - logit(model, down, target)) / (2 * kStep));
  }
  CHECK(relative_error(analytic, numeric) < kTolerance);

  // Parameters: a random subset of 60 entries keeps the check cheap.
  const auto pg = model.parameter_gradient(x, target);
  REQUIRE(pg.size() == flat.size());
  std::vector<double> pa, pn;
  for (int s = 0; s < 60; ++s) {
    const std::size_t k = rng.below(flat.size());
    auto up = flat, down = flat;
    up[k] += kStep;
    down[k] -= kStep;
    model.set_flat_parameters(up);
    const double fu = logit(model, x, target);
    model.set_flat_parameters(down);
    const double fd = logit(model, x, target);
    pa.push_back(pg[k]);
    pn.push_back((fu - fd) / (2 * kStep));
  }
  model.set_flat_parameters(flat);
  CHECK(relative_error(pa, pn) < kTolerance);
}

std::vector<LabeledInstance> random_split(Shape shape, std::size_t n, std::uint64_t seed) {
  Rng rng(seed, 3);
  std::vector<LabeledInstance> out;
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back({random_matrix(shape, seed * 1000 + k), rng.below(2) ? Label::Positive : Label::Negative, {}});
  }
  return out;
}

}  // namespace

TEST_CASE("finite-difference gradient check, convolutional") {
  for (std::uint64_t c = 0; c < 20; ++c) {
    CAPTURE(c);
    gradient_check(Architecture::TemporalConv, c);
  }
}

TEST_CASE("finite-difference gradient check, recurrent") {
  for (std::uint64_t c = 100; c < 120; ++c) {
    CAPTURE(c);
    gradient_check(Architecture::GatedRecurrent, c);
  }
}

TEST_CASE("probabilities form a distribution; zeroed head gives uniform output") {
  for (Architecture arch : {Architecture::TemporalConv, Architecture::GatedRecurrent}) {
    const Shape shape{3, 20};
    NeuralClassifier model(arch, shape, 4);
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto p = model.probabilities(random_matrix(shape, s, -5, 5));
      REQUIRE(p.size() == kNumClasses);
      CHECK(p[0] >= 0.0);
      CHECK(p[1] >= 0.0);
      CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-9);
    }
    model.network().zero_head();
    const auto p = model.probabilities(random_matrix(shape, 1));
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
  }
}

TEST_CASE("shape mismatch raises InvalidShape") {
  NeuralClassifier model(Architecture::TemporalConv, {2, 10}, 1);
  CHECK_THROWS_CODE(model.probabilities(TimeSeries({2, 11})), ErrorCode::InvalidShape);
  CHECK_THROWS_CODE(model.logit_gradient(TimeSeries({1, 10}), 0), ErrorCode::InvalidShape);
  CHECK_THROWS_CODE(model.logit_gradient(TimeSeries({2, 10}), 2), ErrorCode::InvalidParameter);
  CHECK(parse_architecture("cnn") == Architecture::TemporalConv);
  CHECK(parse_architecture("lstm") == Architecture::GatedRecurrent);
  CHECK_THROWS_CODE(parse_architecture("transformer"), ErrorCode::InvalidParameter);
}

TEST_CASE("dead input path has zero gradient") {
  const Shape shape{3, 12};
  NeuralClassifier model(Architecture::GatedRecurrent, shape, 8);
  for (auto& p : model.network().parameters()) {
    if (p.name != "lstm.input_weight") continue;
    for (std::size_t r = 0; r < p.shape[0]; ++r) p.value[r * shape.n_features + 1] = 0.0;
  }
  const Matrix g = model.logit_gradient(random_matrix(shape, 2), 1);
  for (std::size_t t = 0; t < shape.t_steps; ++t) {
    CHECK(g(1, t) == 0.0);
    CHECK(g(0, t) != 0.0);
  }
}

TEST_CASE("linear scorer gradient equals its weights") {
  const Matrix w = random_matrix({4, 7}, 3);
  const LinearScorer scorer(w, 0.3);
  const TimeSeries x = random_matrix({4, 7}, 4);
  CHECK(scorer.logit_gradient(x, 1) == w);
  const Matrix neg = scorer.logit_gradient(x, 0);
  for (std::size_t k = 0; k < w.size(); ++k) CHECK(neg[k] == -w[k]);
  double s = 0.3;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * x[k];
  CHECK(scorer.logits(x)[1] == doctest::Approx(s).epsilon(1e-14));
}

TEST_CASE("accuracy matches a confusion-count oracle") {
  const Shape shape{2, 5};
  for (std::uint64_t c = 0; c < 100; ++c) {
    const LinearScorer scorer(random_matrix(shape, c + 500), 0.1);
    const auto split = random_split(shape, 1 + c % 17, c);
    std::size_t tp = 0, tn = 0;
    for (const auto& inst : split) {
      const bool positive = scorer.score(inst.series) > 0;
      tp += positive && inst.label == Label::Positive;
      tn += !positive && inst.label == Label::Negative;
    }
    CHECK(accuracy(scorer, split) == static_cast<double>(tp + tn) / static_cast<double>(split.size()));
  }

  // Constant output on a balanced split.
  std::vector<LabeledInstance> balanced;
  for (int k = 0; k < 10; ++k) balanced.push_back({random_matrix(shape, k), k % 2 ? Label::Positive : Label::Negative, {}});
  CHECK(accuracy(LinearScorer(Matrix(shape), 1.0), balanced) == 0.5);

  // All-correct toy split.
  std::vector<LabeledInstance> toy{{TimeSeries(shape, 1.0), Label::Positive, {}},
                                   {TimeSeries(shape, -1.0), Label::Negative, {}}};
  CHECK(accuracy(LinearScorer(Matrix(shape, 1.0)), toy) == 1.0);
  CHECK_THROWS_CODE(accuracy(LinearScorer(Matrix(shape, 1.0)), std::span<const LabeledInstance>{}),
                    ErrorCode::EmptySelection);
}

TEST_CASE("checkpoint round-trip") {
  const fs::path dir = fs::temp_directory_path() / "xtsc_test_checkpoint";
  fs::remove_all(dir);
  for (Architecture arch : {Architecture::TemporalConv, Architecture::GatedRecurrent}) {
    const NeuralClassifier model(arch, {2, 15}, 42);
    CHECK_FALSE(checkpoint_exists(dir.string()));
    save_checkpoint(model, dir.string());
    CHECK(checkpoint_exists(dir.string()));
    const NeuralClassifier loaded = load_checkpoint(dir.string());
    CHECK(loaded.architecture() == arch);
    CHECK(loaded.input_shape() == model.input_shape());
    CHECK(loaded.seed() == 42);
    CHECK(loaded.flat_parameters() == model.flat_parameters());
    const TimeSeries x = random_matrix({2, 15}, 6);
    CHECK(loaded.logits(x) == model.logits(x));

    // A truncated parameter blob is rejected.
    const fs::path blob = dir / "params.bin";
    fs::resize_file(blob, fs::file_size(blob) - 8);
    CHECK_THROWS_CODE(load_checkpoint(dir.string()), ErrorCode::FormatError);
    fs::remove_all(dir);
  }
}

TEST_CASE("initialization is deterministic per seed") {
  const NeuralClassifier a(Architecture::TemporalConv, {3, 10}, 5), b(Architecture::TemporalConv, {3, 10}, 5),
      c(Architecture::TemporalConv, {3, 10}, 6);
  CHECK(a.flat_parameters() == b.flat_parameters());
  CHECK(a.flat_parameters() != c.flat_parameters());
  const NeuralClassifier copy = a;
  CHECK(copy.flat_parameters() == a.flat_parameters());
}
