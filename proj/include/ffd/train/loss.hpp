#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/core/labels.hpp"
#include "ffd/core/tensor.hpp"
#include "ffd/eval/scores.hpp"

namespace ffd::train {

// Probabilities are clamped here before the log.
inline constexpr double kProbabilityFloor = 1e-12;

// Mean categorical cross-entropy.
inline double cross_entropy_loss(const std::vector<eval::ProbabilityVector>& probabilities,
                                 const std::vector<ClassLabel>& labels) {
  if (probabilities.size() != labels.size())
    throw InvalidArgument("cross_entropy_loss: " + std::to_string(probabilities.size()) +
                          " predictions but " + std::to_string(labels.size()) + " labels");
  if (probabilities.empty()) throw InvalidArgument("cross_entropy_loss: no predictions");
  double sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    sum -= std::log(std::max(probabilities[i][code(labels[i])], kProbabilityFloor));
  return sum / static_cast<double>(labels.size());
}

template <class S>
struct LossAndGradient {
  double loss = 0;
  Tensor<S> dlogits;
};

// Cross-entropy of softmax(logits) with its gradient w.r.t. the logits. The
// gradient is (p - y) / B except where the floor clamps p(true), which is
// flat in p(true).
template <class S>
LossAndGradient<S> softmax_cross_entropy(const Tensor<S>& logits, const std::vector<ClassLabel>& labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size())
    throw ShapeError("logits " + to_string(logits.shape()) + " do not match " +
                     std::to_string(labels.size()) + " labels");
  const std::size_t b = logits.dim(0), k = logits.dim(1);
  LossAndGradient<S> out;
  out.dlogits = Tensor<S>(logits.shape());
  for (std::size_t r = 0; r < b; ++r) {
    const S* z = logits.data() + r * k;
    S* g = out.dlogits.data() + r * k;
    const double m = static_cast<double>(*std::max_element(z, z + k));
    double sum = 0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(z[j]) - m);
    const std::size_t t = code(labels[r]);
    const double pt = std::exp(static_cast<double>(z[t]) - m) / sum;
    const bool clamped = pt < kProbabilityFloor;
    out.loss -= std::log(std::max(pt, kProbabilityFloor));
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(z[j]) - m) / sum;
      g[j] = clamped ? S{0} : static_cast<S>((p - (j == t ? 1.0 : 0.0)) / static_cast<double>(b));
    }
  }
  out.loss /= static_cast<double>(b);
  return out;
}

}  // namespace ffd::train
