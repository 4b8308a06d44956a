#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ffd/core/tensor.hpp"
#include "ffd/model/layers.hpp"

namespace ffd::train {

struct AdamConfig {
  double learning_rate = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

// Adam with the bias correction folded into the step size:
//   a_t = lr * sqrt(1 - b2^t) / (1 - b1^t),  w -= a_t * m / (sqrt(v) + eps)
template <class S>
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }

  void step(const std::vector<model::Parameter<S>*>& params) {
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
      }
    }
    ++t_;
    const double td = static_cast<double>(t_);
    const double alpha = config_.learning_rate * std::sqrt(1 - std::pow(config_.beta2, td)) /
                         (1 - std::pow(config_.beta1, td));
    const S b1 = static_cast<S>(config_.beta1), b2 = static_cast<S>(config_.beta2);
    const S a = static_cast<S>(alpha), eps = static_cast<S>(config_.epsilon);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto* p = params[i];
      if (!p->trainable) continue;
      S* w = p->value.data();
      const S* g = p->grad.data();
      S* m = m_[i].data();
      S* v = v_[i].data();
      for (std::size_t j = 0; j < p->value.size(); ++j) {
        m[j] = b1 * m[j] + (1 - b1) * g[j];
        v[j] = b2 * v[j] + (1 - b2) * g[j] * g[j];
        w[j] -= a * m[j] / (std::sqrt(v[j]) + eps);
      }
    }
  }

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Tensor<S>> m_, v_;
};

}  // namespace ffd::train
