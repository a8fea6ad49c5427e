#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_support.hpp"

#include <omp.h>

#include "xtsc/catalog.hpp"
#include "xtsc/train.hpp"

using namespace xtsc;
using namespace xtsc::nn;

namespace {

Dataset middle_task(std::size_t n_train, std::uint64_t seed = 3) {
  CatalogConfig c;
  c.master_seed = seed;
  c.n_train = n_train;
  c.n_test = 20;
  return build_dataset(DatasetId::synthetic(ProcessKind::Gaussian, FeatureKind::Middle, Arity::Univariate), c);
}

TrainConfig short_config(int epochs, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.max_epochs = epochs;
  cfg.patience = epochs - 1;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("mean training loss decreases over the first epochs on the separable task") {
  const Dataset d = middle_task(60);
  int monotone = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    NeuralClassifier model(Architecture::TemporalConv, d.shape, seed);
    const auto history = train(model, d.train, short_config(5, seed));
    REQUIRE(history.epochs.size() == 5);
    bool ok = true;
    for (std::size_t e = 1; e < 5; ++e) ok = ok && history.epochs[e].train_loss <= history.epochs[e - 1].train_loss;
    monotone += ok;
  }
  CHECK(monotone >= 18);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const Dataset d = middle_task(20);
  NeuralClassifier model(Architecture::GatedRecurrent, d.shape, 1);
  const auto before = model.flat_parameters();
  TrainConfig cfg = short_config(4, 1);
  cfg.learning_rate = 0.0;
  cfg.patience = 2;
  const auto history = train(model, d.train, cfg);
  CHECK(model.flat_parameters() == before);
  // The validation loss never improves, so patience fires at epoch 2.
  CHECK(history.early_stopped);
  CHECK(history.best_epoch == 0);
  CHECK(history.epochs.size() == 3);
}

TEST_CASE("early stopping bookkeeping and best snapshot") {
  const Dataset d = middle_task(30);
  NeuralClassifier model(Architecture::GatedRecurrent, d.shape, 2);
  TrainConfig cfg;
  cfg.max_epochs = 80;
  cfg.patience = 3;
  cfg.learning_rate = 0.05;
  cfg.seed = 2;
  const auto history = train(model, d.train, cfg);
  const int e = static_cast<int>(history.epochs.size()) - 1;
  if (history.early_stopped) {
    CHECK(e == history.best_epoch + cfg.patience);
  } else {
    CHECK(e + 1 == cfg.max_epochs);
  }
  CHECK(e + 1 <= cfg.max_epochs);
  for (const auto& s : history.epochs) CHECK(s.validation_loss >= history.best_validation_loss);
  CHECK(history.epochs[history.best_epoch].validation_loss == history.best_validation_loss);
}

TEST_CASE("training is bit-reproducible across runs and thread counts") {
  const Dataset d = middle_task(24);
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    NeuralClassifier model(Architecture::TemporalConv, d.shape, 9);
    const auto history = train(model, d.train, short_config(3, 9));
    std::vector<double> out = model.flat_parameters();
    for (const auto& s : history.epochs) out.push_back(s.train_loss);
    return out;
  };
  const auto first = run(1);
  CHECK(run(1) == first);
  CHECK(run(4) == first);
}

TEST_CASE("invalid training setups") {
  Dataset d = middle_task(10);
  NeuralClassifier model(Architecture::GatedRecurrent, d.shape, 1);
  for (auto& inst : d.train) inst.label = Label::Positive;
  CHECK_THROWS_CODE(train(model, d.train, short_config(3, 1)), ErrorCode::DegenerateLabels);

  const Dataset ok = middle_task(10);
  TrainConfig cfg = short_config(3, 1);
  cfg.patience = 3;
  CHECK_THROWS_CODE(train(model, ok.train, cfg), ErrorCode::InvalidParameter);
  cfg = short_config(3, 1);
  cfg.learning_rate = -1.0;
  CHECK_THROWS_CODE(train(model, ok.train, cfg), ErrorCode::InvalidParameter);

  NeuralClassifier wrong(Architecture::GatedRecurrent, {2, 50}, 1);
  CHECK_THROWS_CODE(train(wrong, ok.train, short_config(3, 1)), ErrorCode::InvalidShape);
}
