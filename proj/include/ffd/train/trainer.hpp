#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/dataset/batch_io.hpp"
#include "ffd/dataset/batching.hpp"
#include "ffd/eval/scores.hpp"
#include "ffd/model/checkpoint.hpp"
#include "ffd/model/cnn_lstm.hpp"
#include "ffd/train/adam.hpp"
#include "ffd/train/loss.hpp"

namespace ffd::train {

using Model = model::CnnLstm<float>;

struct TrainConfig {
  double learning_rate = 1e-6;
  std::size_t batch_size = 24;  // sub-sequences per optimiser step
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::size_t max_epochs = 30;
  std::uint64_t seed = 1;
  bool augmentation = false;   // must stay false; there is no augmentation path
  std::size_t patience = 0;    // 0 disables early stopping
  std::size_t inference_chunk = 2;

  std::size_t batches_per_step() const { return batch_size / kSubsequencesPerBatch; }

  void validate() const {
    if (!(learning_rate > 0) || !std::isfinite(learning_rate))
      throw InvalidArgument("learning_rate must be positive");
    if (batch_size == 0 || batch_size % kSubsequencesPerBatch != 0)
      throw InvalidArgument("batch_size must be a positive multiple of 8, got " + std::to_string(batch_size));
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(epsilon > 0))
      throw InvalidArgument("invalid Adam moment coefficients");
    if (max_epochs == 0) throw InvalidArgument("max_epochs must be at least 1");
    if (augmentation) throw InvalidArgument("data augmentation is not supported");
  }

  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double val_loss = 0;
  double val_accuracy = 0;
};

struct Checkpoint {
  model::WeightSnapshot weights;
  std::size_t epoch = 0;
  double val_loss = std::numeric_limits<double>::infinity();
  TrainConfig config;
};

class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(std::size_t epoch, std::size_t batch_index, double loss)
      : Error("non-finite training loss " + std::to_string(loss) + " at epoch " + std::to_string(epoch) +
              ", batch " + std::to_string(batch_index)),
        epoch(epoch),
        batch_index(batch_index) {}
  std::size_t epoch;
  std::size_t batch_index;
};

// Random access to preformed batches plus the subject behind every slot.
class BatchSource {
 public:
  using SubjectSlots = std::array<std::string, kSubsequencesPerBatch>;
  virtual ~BatchSource() = default;
  virtual std::size_t size() const = 0;
  virtual PreformedBatch load(std::size_t index) const = 0;
  virtual SubjectSlots subjects(std::size_t index) const = 0;
};

class InMemoryBatches final : public BatchSource {
 public:
  explicit InMemoryBatches(std::vector<PreformedBatch> batches, std::vector<SubjectSlots> subjects = {})
      : batches_(std::move(batches)), subjects_(std::move(subjects)) {
    if (!subjects_.empty() && subjects_.size() != batches_.size())
      throw InvalidArgument("subject table does not match batch count");
  }
  std::size_t size() const override { return batches_.size(); }
  PreformedBatch load(std::size_t i) const override { return batches_.at(i); }
  SubjectSlots subjects(std::size_t i) const override {
    if (!subjects_.empty()) return subjects_.at(i);
    SubjectSlots s;
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = "b" + std::to_string(i) + "s" + std::to_string(k);
    return s;
  }

 private:
  std::vector<PreformedBatch> batches_;
  std::vector<SubjectSlots> subjects_;
};

// Batch files of one split, listed by index.csv (file,slot,subject,label).
class BatchDirectory final : public BatchSource {
 public:
  explicit BatchDirectory(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::ifstream is(dir_ / "index.csv");
    if (!is) throw DataError("missing batch index " + (dir_ / "index.csv").string());
    std::string line;
    std::getline(is, line);
    std::map<std::string, std::size_t> position;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string file, slot, subject;
      std::getline(row, file, ',');
      std::getline(row, slot, ',');
      std::getline(row, subject, ',');
      auto [it, inserted] = position.try_emplace(file, files_.size());
      if (inserted) {
        files_.push_back(file);
        subjects_.emplace_back();
      }
      subjects_[it->second].at(std::stoul(slot)) = subject;
    }
  }
  std::size_t size() const override { return files_.size(); }
  PreformedBatch load(std::size_t i) const override { return read_batch_file(dir_ / files_.at(i)); }
  SubjectSlots subjects(std::size_t i) const override { return subjects_.at(i); }
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
  std::vector<SubjectSlots> subjects_;
};

// Index of the minimum validation loss; ties go to the earliest epoch.
inline std::size_t best_epoch_index(std::span<const double> val_losses) {
  if (val_losses.empty()) throw InvalidArgument("no validation losses");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_losses.size(); ++i)
    if (val_losses[i] < val_losses[best]) best = i;
  return best;
}

// Stacks batches into one (8k, T, H, W, C) input in [0, 1].
inline Tensor<float> stack_batches(const std::vector<PreformedBatch>& batches) {
  Shape shape = kBatchShape;
  shape[0] = kSubsequencesPerBatch * batches.size();
  Tensor<float> out(shape);
  float* dst = out.data();
  for (const auto& b : batches) {
    check_batch(b);
    for (auto px : b.data.values()) *dst++ = static_cast<float>(px) / 255.0f;
  }
  return out;
}

// One optimiser step on the given batches. Returns the pre-step loss.
inline double train_step(Model& model, Adam<float>& adam, const std::vector<PreformedBatch>& batches,
                         std::mt19937_64& dropout_rng, Tensor<float>* consumed = nullptr) {
  auto input = stack_batches(batches);
  std::vector<ClassLabel> labels;
  for (const auto& b : batches) labels.insert(labels.end(), b.labels.begin(), b.labels.end());
  model.zero_grad();
  const auto& logits = model.forward_train(input, dropout_rng);
  auto lg = softmax_cross_entropy(logits, labels);
  if (std::isfinite(lg.loss)) {
    model.backward(lg.dlogits);
    adam.step(model.parameters());
  }
  model.release_activations();
  if (consumed) *consumed = std::move(input);
  return lg.loss;
}

struct SplitEvaluation {
  double loss = 0;
  double accuracy = 0;
  std::vector<eval::ScoreRecord> records;
};

// Inference-mode pass over a split. Records come out in batch order.
inline SplitEvaluation evaluate_split(Model& model, const BatchSource& source, std::size_t chunk = 2) {
  if (source.size() == 0) throw InvalidArgument("evaluate_split: empty batch list");
  SplitEvaluation out;
  std::vector<eval::ProbabilityVector> probs;
  std::vector<ClassLabel> labels;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const auto batch = source.load(i);
    const auto subjects = source.subjects(i);
    const auto p = model.predict(Model::scale_batch(batch), chunk);
    if (p.dim(1) != kNumClasses) throw ShapeError("model emits " + std::to_string(p.dim(1)) + " classes");
    for (std::size_t s = 0; s < kSubsequencesPerBatch; ++s) {
      eval::ScoreRecord r;
      r.subject_id = subjects[s];
      r.true_label = batch.labels[s];
      for (std::size_t k = 0; k < kNumClasses; ++k) r.probabilities[k] = p[s * kNumClasses + k];
      correct += eval::predicted_class(r.probabilities) == r.true_label;
      probs.push_back(r.probabilities);
      labels.push_back(r.true_label);
      out.records.push_back(std::move(r));
    }
  }
  out.loss = cross_entropy_loss(probs, labels);
  out.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  return out;
}

inline SplitEvaluation evaluate_split(const Checkpoint& checkpoint, const model::ModelConfig& config,
                                      std::uint64_t model_seed, const BatchSource& source,
                                      std::size_t chunk = 2) {
  Model m(config, model_seed);
  model::restore(m, checkpoint.weights);
  return evaluate_split(m, source, chunk);
}

struct TrainHooks {
  // Sees every batch exactly as loaded and the float slice the network consumed.
  std::function<void(std::size_t batch_index, const PreformedBatch& loaded, std::span<const float> consumed)>
      on_consume;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochStats> history;
  Checkpoint best;
};

// Shuffle order of the training batches for one epoch.
inline std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

inline TrainResult train(Model& model, const TrainConfig& config, const BatchSource& train_set,
                         const BatchSource& validation_set, const TrainHooks& hooks = {}) {
  config.validate();
  if (train_set.size() == 0 || validation_set.size() == 0)
    throw InvalidArgument("train: training and validation splits must be non-empty");
  Adam<float> adam(config.adam());
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t per_step = config.batches_per_step();
  TrainResult result;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto order = epoch_order(train_set.size(), config.seed, epoch);
    double loss_sum = 0;
    std::size_t items = 0;
    for (std::size_t start = 0; start < order.size(); start += per_step) {
      const std::size_t end = std::min(order.size(), start + per_step);
      std::vector<PreformedBatch> group;
      for (std::size_t j = start; j < end; ++j) group.push_back(train_set.load(order[j]));
      Tensor<float> consumed;
      const double loss = train_step(model, adam, group, dropout_rng, &consumed);
      if (!std::isfinite(loss)) throw NonFiniteLossError(epoch, order[start], loss);
      if (hooks.on_consume)
        for (std::size_t j = 0; j < group.size(); ++j)
          hooks.on_consume(order[start + j], group[j],
                           std::span<const float>(consumed.data() + j * kBatchTensorBytes, kBatchTensorBytes));
      loss_sum += loss * static_cast<double>(group.size());
      items += group.size();
    }
    const auto val = evaluate_split(model, validation_set, config.inference_chunk);
    EpochStats stats{epoch, loss_sum / static_cast<double>(items), val.loss, val.accuracy};
    result.history.push_back(stats);
    if (hooks.on_epoch) hooks.on_epoch(stats);

    if (val.loss < result.best.val_loss) {
      result.best = {model::snapshot(model), epoch, val.loss, config};
      since_best = 0;
    } else if (config.patience && ++since_best >= config.patience) {
      break;
    }
  }
  if (result.best.weights.entries.empty())  // every validation loss was NaN
    result.best = {model::snapshot(model), result.history.back().epoch, result.history.back().val_loss, config};
  return result;
}

inline std::string history_csv(const std::vector<EpochStats>& history) {
  std::ostringstream os;
  os << std::setprecision(10) << "epoch,train_loss,val_loss,val_acc\n";
  for (const auto& h : history)
    os << h.epoch << ',' << h.train_loss << ',' << h.val_loss << ',' << h.val_accuracy << '\n';
  return os.str();
}

}  // namespace ffd::train
