#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "ffd/core/hash.hpp"
#include "ffd/train/trainer.hpp"
#include "support.hpp"

using namespace ffd;
using namespace ffd::train;

namespace {

using Labels = std::array<ClassLabel, kSubsequencesPerBatch>;
constexpr Labels kMixed = {ClassLabel::alcohol, ClassLabel::control, ClassLabel::drug, ClassLabel::sleep,
                           ClassLabel::sleep,   ClassLabel::drug,    ClassLabel::control, ClassLabel::alcohol};
constexpr Labels kMixed2 = {ClassLabel::control, ClassLabel::control, ClassLabel::sleep, ClassLabel::alcohol,
                            ClassLabel::drug,    ClassLabel::alcohol, ClassLabel::sleep, ClassLabel::drug};

InMemoryBatches toy_set(std::uint64_t seed, std::size_t n = 2) {
  std::mt19937_64 rng(seed);
  std::vector<PreformedBatch> batches;
  for (std::size_t i = 0; i < n; ++i) batches.push_back(test::class_level_batch(rng, i % 2 ? kMixed2 : kMixed));
  return InMemoryBatches(std::move(batches));
}

TrainConfig toy_train_config() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.batch_size = 8;
  c.max_epochs = 2;
  c.seed = 4;
  return c;
}

std::string digest(std::span<const std::uint8_t> bytes) { return Fnv1a().update(bytes.data(), bytes.size()).hex(); }

}  // namespace

TEST(CrossEntropy, UniformPredictionsGiveLnFour) {
  std::vector<eval::ProbabilityVector> p(10, {0.25, 0.25, 0.25, 0.25});
  std::vector<ClassLabel> y(10, ClassLabel::drug);
  EXPECT_NEAR(cross_entropy_loss(p, y), std::log(4.0), 1e-9);
}

TEST(CrossEntropy, OneHotCorrectGivesZero) {
  std::vector<eval::ProbabilityVector> p;
  std::vector<ClassLabel> y;
  for (auto l : kAllLabels) {
    eval::ProbabilityVector v{};
    v[code(l)] = 1.0;
    p.push_back(v);
    y.push_back(l);
  }
  EXPECT_EQ(cross_entropy_loss(p, y), 0.0);
}

TEST(CrossEntropy, HalfOnTruthGivesLnTwo) {
  std::vector<eval::ProbabilityVector> p = {{0.5, 0.5, 0, 0}, {0.1, 0.2, 0.2, 0.5}};
  std::vector<ClassLabel> y = {ClassLabel::alcohol, ClassLabel::sleep};
  EXPECT_NEAR(cross_entropy_loss(p, y), std::numbers::ln2, 1e-12);
}

TEST(CrossEntropy, ZeroProbabilityIsFloored) {
  std::vector<eval::ProbabilityVector> p = {{1, 0, 0, 0}};
  const double loss = cross_entropy_loss(p, {ClassLabel::sleep});
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, -std::log(kProbabilityFloor), 1e-9);
}

TEST(CrossEntropy, MismatchedOrEmptyInputsRaise) {
  std::vector<eval::ProbabilityVector> p(2, {0.25, 0.25, 0.25, 0.25});
  EXPECT_THROW(cross_entropy_loss(p, {ClassLabel::drug}), InvalidArgument);
  EXPECT_THROW(cross_entropy_loss({}, {}), InvalidArgument);
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 2.0);
  Tensor<double> z({5, 4});
  for (auto& v : z.values()) v = n(rng);
  const std::vector<ClassLabel> y = {ClassLabel::alcohol, ClassLabel::sleep, ClassLabel::drug, ClassLabel::control,
                                     ClassLabel::sleep};
  const auto lg = softmax_cross_entropy(z, y);
  // Mean loss reported, so the oracle divides the sum by the batch.
  auto loss = [&](const Tensor<double>& t) {
    double s = 0;
    for (std::size_t r = 0; r < 5; ++r) {
      double den = 0;
      for (std::size_t k = 0; k < 4; ++k) den += std::exp(t[r * 4 + k]);
      s -= std::log(std::exp(t[r * 4 + code(y[r])]) / den);
    }
    return s / 5;
  };
  EXPECT_NEAR(lg.loss, loss(z), 1e-12);
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto up = z, down = z;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    EXPECT_NEAR(lg.dlogits[i], (loss(up) - loss(down)) / 2e-6, 1e-8);
  }
}

TEST(SoftmaxCrossEntropy, ZeroLogitsGiveLnFour) {
  Tensor<float> z({3, 4});
  const auto lg = softmax_cross_entropy(z, {ClassLabel::drug, ClassLabel::drug, ClassLabel::alcohol});
  EXPECT_NEAR(lg.loss, std::log(4.0), 1e-6);
  EXPECT_NEAR(lg.dlogits[2], (0.25 - 1.0) / 3, 1e-7);
  EXPECT_NEAR(lg.dlogits[0], 0.25 / 3, 1e-7);
}

TEST(AdamOptimizer, MatchesReferenceRecurrence) {
  AdamConfig cfg{1e-3, 0.9, 0.999, 1e-7};
  Adam<double> adam(cfg);
  model::Parameter<double> p("w", {3});
  p.value.values() = {0.5, -1.0, 2.0};
  const std::vector<std::vector<double>> grads = {{0.1, -0.2, 3.0}, {0.05, 0.4, -1.0}, {-0.3, 0.0, 0.5}};
  std::vector<double> w(p.value.values().begin(), p.value.values().end()), m(3, 0), v(3, 0);
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    p.grad.values().assign(grads[t - 1].begin(), grads[t - 1].end());
    adam.step({&p});
    const double lr_t = cfg.learning_rate * std::sqrt(1 - std::pow(cfg.beta2, t)) / (1 - std::pow(cfg.beta1, t));
    for (std::size_t j = 0; j < 3; ++j) {
      const double g = grads[t - 1][j];
      m[j] = cfg.beta1 * m[j] + (1 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1 - cfg.beta2) * g * g;
      w[j] -= lr_t * m[j] / (std::sqrt(v[j]) + cfg.epsilon);
      EXPECT_NEAR(p.value[j], w[j], 1e-15) << "step " << t << " index " << j;
    }
  }
  EXPECT_EQ(adam.steps(), 3u);
}

TEST(AdamOptimizer, FirstStepMovesByLearningRate) {
  Adam<double> adam({1e-6, 0.9, 0.999, 1e-7});
  model::Parameter<double> p("w", {1});
  p.grad[0] = 0.37;
  adam.step({&p});
  EXPECT_NEAR(p.value[0], -1e-6, 1e-9);
}

TEST(AdamOptimizer, SkipsNonTrainable) {
  Adam<double> adam({});
  model::Parameter<double> frozen("moving_mean", {2}, false);
  frozen.value.fill(3.0);
  adam.step({&frozen});
  EXPECT_EQ(frozen.value[0], 3.0);
}

TEST(TrainConfig, RejectsBadValues) {
  TrainConfig c;
  c.batch_size = 12;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.augmentation = true;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.batches_per_step(), 3u);
  EXPECT_EQ(c.learning_rate, 1e-6);
}

TEST(BestEpoch, ArgminOfValidationLoss) {
  const std::vector<double> v = {2.0, 1.5, 1.8};
  EXPECT_EQ(best_epoch_index(v) + 1, 2u);
}

TEST(BestEpoch, TiesGoToEarliest) {
  const std::vector<double> v = {1.0, 0.5, 0.7, 0.5};
  EXPECT_EQ(best_epoch_index(v), 1u);
  EXPECT_THROW(best_epoch_index(std::span<const double>{}), InvalidArgument);
}

TEST(EpochOrder, SeededPermutationPerEpoch) {
  const auto a = epoch_order(30, 5, 1), b = epoch_order(30, 5, 1), c = epoch_order(30, 5, 2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(TrainStep, OneStepLowersTheLossOnThatBatch) {
  Model net(test::tiny_config(), 3);
  Adam<float> adam({1e-4});
  std::mt19937_64 data(1);
  const std::vector<PreformedBatch> batch = {test::class_level_batch(data, kMixed)};
  std::mt19937_64 r1(7), r2(7);
  const double before = train_step(net, adam, batch, r1);
  const double after = train_step(net, adam, batch, r2);
  EXPECT_LT(after, before);
}

TEST(EvaluateSplit, RecordCountIsEightPerBatch) {
  Model net(test::tiny_config(), 3);
  const auto set = toy_set(2, 3);
  const auto r = evaluate_split(net, set);
  ASSERT_EQ(r.records.size(), 24u);
  EXPECT_EQ(r.records[9].subject_id, "b1s1");
  EXPECT_EQ(r.records[9].true_label, kMixed2[1]);
  for (const auto& rec : r.records) EXPECT_TRUE(eval::on_simplex(rec.probabilities));
}

TEST(EvaluateSplit, EmptySplitRaises) {
  Model net(test::tiny_config(), 3);
  EXPECT_THROW(evaluate_split(net, InMemoryBatches({})), InvalidArgument);
}

TEST(Train, SameSeedSameHistory) {
  const auto set = toy_set(3);
  Model a(test::tiny_config(), 11), b(test::tiny_config(), 11);
  const auto ha = train::train(a, toy_train_config(), set, set).history;
  const auto hb = train::train(b, toy_train_config(), set, set).history;
  ASSERT_EQ(ha.size(), 2u);
  EXPECT_EQ(history_csv(ha), history_csv(hb));
  for (std::size_t i = 0; i < ha.size(); ++i) {
    EXPECT_EQ(ha[i].train_loss, hb[i].train_loss);
    EXPECT_EQ(ha[i].val_loss, hb[i].val_loss);
  }
}

TEST(Train, BestCheckpointIsMinimumValidationEpoch) {
  const auto set = toy_set(3);
  Model net(test::tiny_config(), 11);
  auto cfg = toy_train_config();
  cfg.max_epochs = 4;
  const auto r = train::train(net, cfg, set, set);
  std::vector<double> losses;
  for (const auto& h : r.history) losses.push_back(h.val_loss);
  EXPECT_EQ(r.best.epoch, best_epoch_index(losses) + 1);
  EXPECT_EQ(r.best.val_loss, losses[best_epoch_index(losses)]);
  // The stored weights reproduce the stored validation loss.
  const auto again = evaluate_split(r.best, net.config(), 11, set);
  EXPECT_NEAR(again.loss, r.best.val_loss, 1e-12);
}

TEST(Train, PatienceStopsEarly) {
  const auto set = toy_set(3);
  Model net(test::tiny_config(), 11);
  auto cfg = toy_train_config();
  cfg.learning_rate = 1e-12;  // validation loss cannot keep improving
  cfg.max_epochs = 20;
  cfg.patience = 1;
  const auto r = train::train(net, cfg, set, set);
  EXPECT_LT(r.history.size(), 20u);
}

TEST(Train, NetworkConsumesExactlyTheStoredPixels) {
  const auto set = toy_set(5, 3);
  std::vector<std::string> stored;
  for (std::size_t i = 0; i < set.size(); ++i) stored.push_back(digest(set.load(i).data.values()));
  Model net(test::tiny_config(), 2);
  std::size_t calls = 0;
  TrainHooks hooks;
  hooks.on_consume = [&](std::size_t index, const PreformedBatch& loaded, std::span<const float> consumed) {
    ++calls;
    EXPECT_EQ(digest(loaded.data.values()), stored.at(index));
    ASSERT_EQ(consumed.size(), loaded.data.size());
    for (std::size_t i = 0; i < consumed.size(); ++i)
      if (consumed[i] != static_cast<float>(loaded.data[i]) / 255.0f) {
        ADD_FAILURE() << "pixel " << i << " of batch " << index << " was altered";
        return;
      }
  };
  auto cfg = toy_train_config();
  cfg.batch_size = 16;
  train::train(net, cfg, set, set, hooks);
  EXPECT_EQ(calls, 3u * 2);
}

TEST(Train, NonFiniteLossStopsWithLocation) {
  const auto set = toy_set(3);
  Model net(test::tiny_config(), 2);
  for (auto* p : net.parameters())
    if (p->name == "head.10.bias") p->value.fill(std::numeric_limits<float>::quiet_NaN());
  try {
    train::train(net, toy_train_config(), set, set);
    FAIL() << "expected NonFiniteLossError";
  } catch (const NonFiniteLossError& e) {
    EXPECT_EQ(e.epoch, 1u);
    EXPECT_LT(e.batch_index, set.size());
  }
}

TEST(Train, MemorizesTwoBatchToySet) {
  // Dropout off: with eight units per dense layer it hides the signal.
  const auto set = toy_set(8);
  Model net(test::tiny_config(0.9, 0.0), 6);
  auto cfg = toy_train_config();
  cfg.max_epochs = 40;
  cfg.learning_rate = 1e-2;
  const auto r = train::train(net, cfg, set, set);
  const auto fit = evaluate_split(r.best, net.config(), 6, set);
  EXPECT_EQ(fit.accuracy, 1.0) << "best epoch " << r.best.epoch << " loss " << r.best.val_loss;
}

TEST(Checkpoint, WeightsRoundTripThroughFile) {
  Model net(test::tiny_config(), 9);
  const auto dir = test::temp_dir("weights");
  const auto snap = model::snapshot(net);
  model::write_weights(snap, dir / "w.bin");
  const auto back = model::read_weights(dir / "w.bin");
  EXPECT_TRUE(back == snap);
  Model other(test::tiny_config(), 10);
  model::restore(other, back);
  const auto set = toy_set(1, 1);
  EXPECT_EQ(evaluate_split(other, set).loss, evaluate_split(net, set).loss);
}

TEST(Checkpoint, MissingOrCorruptFilesRaise) {
  const auto dir = test::temp_dir("weights_bad");
  try {
    model::read_weights(dir / "nope.bin");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("nope.bin"), std::string::npos);
  }
  std::ofstream(dir / "junk.bin") << "JUNKJUNK";
  EXPECT_THROW(model::read_weights(dir / "junk.bin"), DataError);
  Model net(test::tiny_config(), 9);
  model::write_weights(model::snapshot(net), dir / "w.bin");
  std::filesystem::resize_file(dir / "w.bin", 100);
  EXPECT_THROW(model::read_weights(dir / "w.bin"), DataError);
}

TEST(Checkpoint, RestoreRejectsOtherArchitecture) {
  Model tiny(test::tiny_config(), 1);
  model::ArchitectureParams p;
  p.block1 = 2, p.block2 = 2, p.block3 = 2, p.block4 = 2;
  p.lstm_units = 8, p.dense1 = 17, p.dense2 = 8, p.dense3 = 8;
  Model other(model::make_model_config(p), 1);
  EXPECT_THROW(model::restore(other, model::snapshot(tiny)), ShapeError);
}
