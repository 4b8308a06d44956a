#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/core/tensor.hpp"
#include "ffd/dataset/batching.hpp"
#include "ffd/model/layer_spec.hpp"
#include "ffd/model/layers.hpp"

namespace ffd::model {

// Time-distributed CNN feeding an LSTM head.
//
// Input is (B, T, H, W, C) with pixels in [0, 1]. The CNN stack sees the
// B*T frames as independent images; Flatten regroups them into (B, T, F) for
// the recurrent head. The final Dense row produces logits; probabilities are
// the softmax of those.
template <class S>
class CnnLstm {
 public:
  CnnLstm(ModelConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
    audit_ = audit_config(config_);
    build();
    std::mt19937_64 rng(seed_);
    for (auto& layer : layers_) layer->initialize(rng);
  }

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  // Per-row audit: (table, row, kind, shapes, parameter count).
  const std::vector<LayerAudit>& layer_audit() const { return audit_; }

  Shape input_shape() const {
    auto s = config_.input_shape();
    s.insert(s.begin(), config_.frames_per_subsequence);
    return s;
  }

  std::vector<Parameter<S>*> parameters() {
    std::vector<Parameter<S>*> out;
    for (auto& layer : layers_)
      for (auto* p : layer->parameters()) out.push_back(p);
    return out;
  }

  std::vector<const Parameter<S>*> parameters() const {
    std::vector<const Parameter<S>*> out;
    for (auto& layer : layers_)
      for (auto* p : layer->parameters()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters())
      if (p->trainable) p->grad.fill(S{0});
  }

  // Training-mode pass; keeps every activation for backward(). Returns logits.
  const Tensor<S>& forward_train(const Tensor<S>& input, std::mt19937_64& rng) {
    check_input(input);
    ForwardContext ctx{Mode::training, &rng};
    acts_.resize(layers_.size() + 1);
    acts_[0] = input;
    acts_[0].reshape(frames_shape(input));
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->forward(acts_[i], acts_[i + 1], ctx);
    return acts_.back();
  }

  // Accumulates parameter gradients given d(loss)/d(logits).
  void backward(const Tensor<S>& dlogits) {
    if (acts_.empty()) throw InvalidArgument("backward() without a training forward pass");
    Tensor<S> grad = dlogits, next;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      layers_[i]->backward(acts_[i], acts_[i + 1], grad, next, i > 0);
      std::swap(grad, next);
    }
  }

  void release_activations() { acts_.clear(); }

  // Input and per-layer outputs kept by the last forward_train (layers in
  // config order, input rows excluded).
  const std::vector<Tensor<S>>& activations() const { return acts_; }

  // Per-frame CNN features, inference mode: (N, H, W, C) -> (N, F).
  Tensor<S> frame_features(const Tensor<S>& frames) {
    ForwardContext ctx{Mode::inference, nullptr};
    Tensor<S> cur = frames, next;
    for (std::size_t i = 0; i < cnn_layers_; ++i) {
      layers_[i]->forward(cur, next, ctx);
      std::swap(cur, next);
    }
    const std::size_t n = cur.dim(0);
    cur.reshape({n, cur.size() / n});
    return cur;
  }

  // Inference-mode logits. Frames go through the CNN `chunk` sub-sequences at
  // a time to bound memory.
  Tensor<S> logits(const Tensor<S>& input, std::size_t chunk = 1) {
    check_input(input);
    const std::size_t b = input.dim(0), t = config_.frames_per_subsequence;
    const std::size_t per_seq = element_count(input_shape());
    chunk = std::max<std::size_t>(chunk, 1);

    Tensor<S> features;
    std::size_t feat_dim = 0;
    for (std::size_t start = 0; start < b; start += chunk) {
      const std::size_t count = std::min(chunk, b - start);
      Shape shape = config_.input_shape();
      shape.insert(shape.begin(), count * t);
      Tensor<S> frames(shape, AlignedVector<S>(input.data() + start * per_seq,
                                             input.data() + (start + count) * per_seq));
      auto f = frame_features(frames);
      if (start == 0) {
        feat_dim = f.dim(1);
        features.resize({b, t, feat_dim});
      }
      std::copy(f.values().begin(), f.values().end(), features.data() + start * t * feat_dim);
    }

    ForwardContext ctx{Mode::inference, nullptr};
    Tensor<S> cur = std::move(features), next;
    for (std::size_t i = cnn_layers_ + 1; i < layers_.size(); ++i) {
      layers_[i]->forward(cur, next, ctx);
      std::swap(cur, next);
    }
    return cur;
  }

  Tensor<S> predict(const Tensor<S>& input, std::size_t chunk = 1) {
    return softmax(logits(input, chunk));
  }

  // Converts a preformed batch into the network's input scale.
  static Tensor<S> scale_batch(const PreformedBatch& batch) {
    check_batch(batch);
    Tensor<S> out(batch.data.shape());
    const auto* src = batch.data.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<S>(src[i]) / S{255};
    return out;
  }

  static Tensor<S> softmax(const Tensor<S>& logits) {
    Tensor<S> p = logits;
    const std::size_t k = logits.dim(1);
    for (std::size_t r = 0; r < logits.dim(0); ++r) {
      S* row = p.data() + r * k;
      const S m = *std::max_element(row, row + k);
      S sum = 0;
      for (std::size_t j = 0; j < k; ++j) sum += (row[j] = std::exp(row[j] - m));
      for (std::size_t j = 0; j < k; ++j) row[j] /= sum;
    }
    return p;
  }

 private:
  void build() {
    Shape shape;
    std::size_t row = 0;
    auto add = [&](const std::string& table, const LayerSpec& spec) {
      ++row;
      const std::string prefix = table + "." + std::to_string(row);
      switch (spec.kind) {
        case LayerKind::input:
          break;
        case LayerKind::conv:
          layers_.push_back(std::make_unique<Conv2D<S>>(prefix, spec.kernel_h, spec.kernel_w,
                                                        shape.at(2), spec.units,
                                                        spec.activation == Activation::relu));
          break;
        case LayerKind::batchnorm:
          layers_.push_back(std::make_unique<BatchNorm<S>>(prefix, shape.back(), config_.batchnorm_momentum));
          break;
        case LayerKind::maxpool:
          layers_.push_back(std::make_unique<MaxPool<S>>(spec.pool));
          break;
        case LayerKind::flatten:
          layers_.push_back(std::make_unique<Flatten<S>>(config_.frames_per_subsequence));
          break;
        case LayerKind::lstm:
          layers_.push_back(std::make_unique<Lstm<S>>(prefix, shape.at(0), spec.units,
                                                      spec.return_sequences));
          break;
        case LayerKind::dense:
          layers_.push_back(std::make_unique<Dense<S>>(prefix, shape.at(0), spec.units,
                                                       spec.activation == Activation::relu));
          break;
        case LayerKind::dropout:
          layers_.push_back(std::make_unique<Dropout<S>>(spec.dropout_rate));
          break;
      }
      shape = infer_output_shape(spec, shape);
    };
    for (const auto& spec : config_.cnn) add("cnn", spec);
    cnn_layers_ = layers_.size() - 1;  // everything before Flatten
    row = 0;
    for (const auto& spec : config_.head) add("head", spec);
  }

  Shape frames_shape(const Tensor<S>& input) const {
    Shape s = config_.input_shape();
    s.insert(s.begin(), input.dim(0) * config_.frames_per_subsequence);
    return s;
  }

  void check_input(const Tensor<S>& input) const {
    const auto expected = input_shape();
    if (input.rank() != expected.size() + 1 || input.dim(0) == 0 ||
        !std::equal(expected.begin(), expected.end(), input.shape().begin() + 1)) {
      Shape full = expected;
      full.insert(full.begin(), kSubsequencesPerBatch);
      throw ShapeError("model input must be " + to_string(full) + " (B sub-sequences first), got " +
                       to_string(input.shape()));
    }
  }

  ModelConfig config_;
  std::uint64_t seed_;
  std::vector<LayerAudit> audit_;
  std::vector<std::unique_ptr<Layer<S>>> layers_;
  std::size_t cnn_layers_ = 0;
  std::vector<Tensor<S>> acts_;
};

struct ParameterCount {
  std::string table;
  std::size_t row = 0;
  LayerKind kind = LayerKind::input;
  std::size_t parameters = 0;
};

struct ParameterSummary {
  std::vector<ParameterCount> rows;
  std::size_t cnn_total = 0;
  std::size_t head_total = 0;
  std::size_t total = 0;
};

// Row-by-row parameter table, checked against the allocated tensors.
template <class S>
ParameterSummary count_parameters(const CnnLstm<S>& model) {
  ParameterSummary s;
  for (const auto& a : model.layer_audit()) {
    s.rows.push_back({a.table, a.row, a.kind, a.parameters});
    (a.table == "cnn" ? s.cnn_total : s.head_total) += a.parameters;
  }
  s.total = s.cnn_total + s.head_total;
  std::size_t allocated = 0;
  for (const auto* p : model.parameters()) allocated += p->value.size();
  if (allocated != s.total)
    throw Error("allocated " + std::to_string(allocated) + " parameters but the table says " +
                std::to_string(s.total));
  return s;
}

}  // namespace ffd::model
