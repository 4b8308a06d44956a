#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/core/tensor.hpp"
#include "ffd/model/layer_spec.hpp"

namespace ffd::model {

enum class Mode { inference, training };

struct ForwardContext {
  Mode mode = Mode::inference;
  std::mt19937_64* rng = nullptr;  // dropout masks; required in training mode
};

template <class S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
  bool trainable = true;

  Parameter(std::string n, Shape shape, bool train = true)
      : name(std::move(n)), value(shape), grad(train ? shape : Shape{0}), trainable(train) {}
};

template <class S>
using RowMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MatrixMap = Eigen::Map<RowMatrix<S>>;
template <class S>
using ConstMatrixMap = Eigen::Map<const RowMatrix<S>>;
template <class S>
using VectorMap = Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>;
template <class S>
using ConstVectorMap = Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>;

template <class S>
MatrixMap<S> as_matrix(Tensor<S>& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  return MatrixMap<S>(t.data() + offset, static_cast<Eigen::Index>(rows),
                      static_cast<Eigen::Index>(cols));
}
template <class S>
ConstMatrixMap<S> as_matrix(const Tensor<S>& t, std::size_t rows, std::size_t cols,
                            std::size_t offset = 0) {
  return ConstMatrixMap<S>(t.data() + offset, static_cast<Eigen::Index>(rows),
                           static_cast<Eigen::Index>(cols));
}

template <class S>
void glorot_uniform(Tensor<S>& w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : w.values()) v = static_cast<S>(dist(rng));
}

// Rows of the returned (rows x cols) matrix are orthonormal when rows <= cols.
template <class S>
void orthogonal(Tensor<S>& w, std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(rows));
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  // Fix signs so the decomposition is unique.
  Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  auto out = as_matrix(w, rows, cols);
  out = q.transpose().template cast<S>();
}

template <class S>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual void forward(const Tensor<S>& in, Tensor<S>& out, const ForwardContext& ctx) = 0;
  // `in` and `out` are the tensors of the latest training-mode forward call.
  virtual void backward(const Tensor<S>& in, const Tensor<S>& out, const Tensor<S>& dout,
                        Tensor<S>& din, bool need_din) = 0;
  virtual std::vector<Parameter<S>*> parameters() { return {}; }
  virtual void initialize(std::mt19937_64&) {}
};

// 2-D convolution over NHWC images, same padding, stride 1, optional ReLU.
template <class S>
class Conv2D final : public Layer<S> {
 public:
  Conv2D(std::string prefix, std::size_t kh, std::size_t kw, std::size_t cin, std::size_t cout,
         bool relu)
      : kh_(kh), kw_(kw), cin_(cin), cout_(cout), relu_(relu),
        kernel_(prefix + ".kernel", {kh, kw, cin, cout}),
        bias_(prefix + ".bias", {cout}) {}

  void initialize(std::mt19937_64& rng) override {
    glorot_uniform(kernel_.value, kh_ * kw_ * cin_, kh_ * kw_ * cout_, rng);
    bias_.value.fill(S{0});
  }

  std::vector<Parameter<S>*> parameters() override { return {&kernel_, &bias_}; }

  void forward(const Tensor<S>& in, Tensor<S>& out, const ForwardContext&) override {
    check(in);
    const std::size_t n = in.dim(0), h = in.dim(1), w = in.dim(2), k = kh_ * kw_ * cin_;
    out.resize({n, h, w, cout_});
    col_.resize(h * w * k);
    const auto weights = as_matrix(kernel_.value, k, cout_);
    for (std::size_t i = 0; i < n; ++i) {
      im2col(in.data() + i * h * w * cin_, h, w);
      const ConstMatrixMap<S> col(col_.data(), static_cast<Eigen::Index>(h * w),
                                  static_cast<Eigen::Index>(k));
      auto y = as_matrix(out, h * w, cout_, i * h * w * cout_);
      y.noalias() = col * weights;
      S* o = out.data() + i * h * w * cout_;
      for (std::size_t p = 0; p < h * w; ++p, o += cout_)
        for (std::size_t c = 0; c < cout_; ++c) {
          const S v = o[c] + bias_.value[c];
          o[c] = (relu_ && v < S{0}) ? S{0} : v;
        }
    }
  }

  void backward(const Tensor<S>& in, const Tensor<S>& out, const Tensor<S>& dout, Tensor<S>& din,
                bool need_din) override {
    const std::size_t n = in.dim(0), h = in.dim(1), w = in.dim(2), k = kh_ * kw_ * cin_;
    const std::size_t plane = h * w * cout_;
    AlignedVector<S> dz(plane);
    col_.resize(h * w * k);
    dcol_.resize(need_din ? h * w * k : 0);
    if (need_din) din.resize(in.shape());
    auto dweights = as_matrix(kernel_.grad, k, cout_);
    VectorMap<S> dbias(bias_.grad.data(), static_cast<Eigen::Index>(cout_));
    const auto weights = as_matrix(kernel_.value, k, cout_);
    for (std::size_t i = 0; i < n; ++i) {
      const S* g = dout.data() + i * plane;
      const S* y = out.data() + i * plane;
      for (std::size_t j = 0; j < plane; ++j) dz[j] = (!relu_ || y[j] > S{0}) ? g[j] : S{0};
      const ConstMatrixMap<S> dzm(dz.data(), static_cast<Eigen::Index>(h * w),
                                  static_cast<Eigen::Index>(cout_));
      im2col(in.data() + i * h * w * cin_, h, w);
      const ConstMatrixMap<S> col(col_.data(), static_cast<Eigen::Index>(h * w),
                                  static_cast<Eigen::Index>(k));
      dweights.noalias() += col.transpose() * dzm;
      dbias += dzm.colwise().sum();
      if (need_din) {
        MatrixMap<S> dcol(dcol_.data(), static_cast<Eigen::Index>(h * w),
                          static_cast<Eigen::Index>(k));
        dcol.noalias() = dzm * weights.transpose();
        col2im(din.data() + i * h * w * cin_, h, w);
      }
    }
  }

 private:
  void check(const Tensor<S>& in) const {
    if (in.rank() != 4 || in.dim(3) != cin_)
      throw ShapeError("Conv2D expects (N, H, W, " + std::to_string(cin_) + "), got " +
                       to_string(in.shape()));
  }

  // Column layout per pixel: [ky][kx][c]. Each (pixel, ky) pair is one
  // contiguous run of kw * cin values, clipped at the image border.
  template <class Fn>
  void for_each_run(std::size_t h, std::size_t w, Fn&& fn) const {
    const auto ph = static_cast<std::ptrdiff_t>(kh_ / 2);
    const auto pw = static_cast<std::ptrdiff_t>(kw_ / 2);
    const std::size_t k = kh_ * kw_ * cin_;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t ky = 0; ky < kh_; ++ky) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ky) - ph;
          const std::size_t col_off = (y * w + x) * k + ky * kw_ * cin_;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
            fn(col_off, std::size_t{0}, std::size_t{0}, kw_ * cin_, false);
            continue;
          }
          const auto x0 = static_cast<std::ptrdiff_t>(x) - pw;
          const std::size_t skip = x0 < 0 ? static_cast<std::size_t>(-x0) : 0;
          const auto x1 = std::min<std::ptrdiff_t>(x0 + static_cast<std::ptrdiff_t>(kw_),
                                                   static_cast<std::ptrdiff_t>(w));
          const std::size_t first = static_cast<std::size_t>(x0 + static_cast<std::ptrdiff_t>(skip));
          const std::size_t count = static_cast<std::size_t>(x1) - first;
          const std::size_t img_off = (static_cast<std::size_t>(sy) * w + first) * cin_;
          fn(col_off, img_off, skip * cin_, count * cin_, true);
        }
  }

  void im2col(const S* img, std::size_t h, std::size_t w) {
    S* col = col_.data();
    const std::size_t run = kw_ * cin_;
    for_each_run(h, w, [&](std::size_t col_off, std::size_t img_off, std::size_t lead,
                           std::size_t len, bool inside) {
      S* dst = col + col_off;
      if (!inside) {
        std::fill(dst, dst + run, S{0});
        return;
      }
      std::fill(dst, dst + lead, S{0});
      std::copy_n(img + img_off, len, dst + lead);
      std::fill(dst + lead + len, dst + run, S{0});
    });
  }

  void col2im(S* img, std::size_t h, std::size_t w) {
    std::fill(img, img + h * w * cin_, S{0});
    const S* col = dcol_.data();
    for_each_run(h, w, [&](std::size_t col_off, std::size_t img_off, std::size_t lead,
                           std::size_t len, bool inside) {
      if (!inside) return;
      const S* src = col + col_off + lead;
      S* d = img + img_off;
      for (std::size_t i = 0; i < len; ++i) d[i] += src[i];
    });
  }

  std::size_t kh_, kw_, cin_, cout_;
  bool relu_;
  Parameter<S> kernel_, bias_;
  AlignedVector<S> col_, dcol_;
};

// Normalises the last axis. Batch statistics in training, moving averages in
// inference.
template <class S>
class BatchNorm final : public Layer<S> {
 public:
  static constexpr double kDefaultMomentum = 0.99;
  static constexpr double kEpsilon = 1e-3;

  BatchNorm(std::string prefix, std::size_t channels, double momentum = kDefaultMomentum)
      : c_(channels),
        momentum_(momentum),
        gamma_(prefix + ".gamma", {channels}),
        beta_(prefix + ".beta", {channels}),
        moving_mean_(prefix + ".moving_mean", {channels}, false),
        moving_var_(prefix + ".moving_variance", {channels}, false) {}

  void initialize(std::mt19937_64&) override {
    gamma_.value.fill(S{1});
    beta_.value.fill(S{0});
    moving_mean_.value.fill(S{0});
    moving_var_.value.fill(S{1});
  }

  std::vector<Parameter<S>*> parameters() override {
    return {&gamma_, &beta_, &moving_mean_, &moving_var_};
  }

  void forward(const Tensor<S>& in, Tensor<S>& out, const ForwardContext& ctx) override {
    if (in.rank() < 2 || in.shape().back() != c_)
      throw ShapeError("BatchNorm expects last axis " + std::to_string(c_) + ", got " +
                       to_string(in.shape()));
    const std::size_t m = in.size() / c_;
    out.resize(in.shape());
    const auto x = as_matrix(in, m, c_);
    auto y = as_matrix(out, m, c_);
    if (ctx.mode == Mode::inference) {
      for (std::size_t j = 0; j < c_; ++j) {
        const S scale = gamma_.value[j] / std::sqrt(moving_var_.value[j] + S(kEpsilon));
        const S shift = beta_.value[j] - moving_mean_.value[j] * scale;
        y.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(j)) * scale;
        y.col(static_cast<Eigen::Index>(j)).array() += shift;
      }
      return;
    }
    // Accumulate in double so float training keeps stable statistics.
    std::vector<double> mean(c_, 0.0), var(c_, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const S* row = in.data() + r * c_;
      for (std::size_t j = 0; j < c_; ++j) mean[j] += row[j];
    }
    for (auto& v : mean) v /= static_cast<double>(m);
    for (std::size_t r = 0; r < m; ++r) {
      const S* row = in.data() + r * c_;
      for (std::size_t j = 0; j < c_; ++j) {
        const double d = row[j] - mean[j];
        var[j] += d * d;
      }
    }
    for (auto& v : var) v /= static_cast<double>(m);

    inv_std_.assign(c_, S{0});
    xhat_.resize(in.shape());
    for (std::size_t j = 0; j < c_; ++j) inv_std_[j] = static_cast<S>(1.0 / std::sqrt(var[j] + kEpsilon));
    for (std::size_t r = 0; r < m; ++r) {
      const S* row = in.data() + r * c_;
      S* xh = xhat_.data() + r * c_;
      S* o = out.data() + r * c_;
      for (std::size_t j = 0; j < c_; ++j) {
        xh[j] = (row[j] - static_cast<S>(mean[j])) * inv_std_[j];
        o[j] = gamma_.value[j] * xh[j] + beta_.value[j];
      }
    }
    for (std::size_t j = 0; j < c_; ++j) {
      moving_mean_.value[j] = static_cast<S>(momentum_ * moving_mean_.value[j] + (1 - momentum_) * mean[j]);
      moving_var_.value[j] = static_cast<S>(momentum_ * moving_var_.value[j] + (1 - momentum_) * var[j]);
    }
  }

  void backward(const Tensor<S>& in, const Tensor<S>&, const Tensor<S>& dout, Tensor<S>& din,
                bool need_din) override {
    const std::size_t m = in.size() / c_;
    std::vector<double> dgamma(c_, 0.0), dbeta(c_, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const S* g = dout.data() + r * c_;
      const S* xh = xhat_.data() + r * c_;
      for (std::size_t j = 0; j < c_; ++j) {
        dgamma[j] += static_cast<double>(g[j]) * xh[j];
        dbeta[j] += g[j];
      }
    }
    for (std::size_t j = 0; j < c_; ++j) {
      gamma_.grad[j] += static_cast<S>(dgamma[j]);
      beta_.grad[j] += static_cast<S>(dbeta[j]);
    }
    if (!need_din) return;
    din.resize(in.shape());
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t r = 0; r < m; ++r) {
      const S* g = dout.data() + r * c_;
      const S* xh = xhat_.data() + r * c_;
      S* d = din.data() + r * c_;
      for (std::size_t j = 0; j < c_; ++j) {
        const double scale = static_cast<double>(gamma_.value[j]) * inv_std_[j];
        d[j] = static_cast<S>(scale * (g[j] - inv_m * (dbeta[j] + xh[j] * dgamma[j])));
      }
    }
  }

 private:
  std::size_t c_;
  double momentum_;
  Parameter<S> gamma_, beta_, moving_mean_, moving_var_;
  Tensor<S> xhat_;
  AlignedVector<S> inv_std_;
};

// Max pooling with a square window equal to its stride. Partial windows at the
// right and bottom edges are kept (ceil mode).
template <class S>
class MaxPool final : public Layer<S> {
 public:
  explicit MaxPool(std::size_t pool) : p_(pool) {}

  void forward(const Tensor<S>& in, Tensor<S>& out, const ForwardContext& ctx) override {
    if (in.rank() != 4) throw ShapeError("MaxPool expects (N, H, W, C), got " + to_string(in.shape()));
    const std::size_t n = in.dim(0), h = in.dim(1), w = in.dim(2), c = in.dim(3);
    const std::size_t oh = (h + p_ - 1) / p_, ow = (w + p_ - 1) / p_;
    out.resize({n, oh, ow, c});
    const bool keep = ctx.mode == Mode::training;
    if (keep) argmax_.resize(out.size());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x)
          for (std::size_t ch = 0; ch < c; ++ch) {
            S best = -std::numeric_limits<S>::infinity();
            std::size_t best_at = 0;
            for (std::size_t dy = 0; dy < p_ && y * p_ + dy < h; ++dy)
              for (std::size_t dx = 0; dx < p_ && x * p_ + dx < w; ++dx) {
                const std::size_t at = ((i * h + y * p_ + dy) * w + x * p_ + dx) * c + ch;
                if (in[at] > best) best = in[at], best_at = at;
              }
            const std::size_t o = ((i * oh + y) * ow + x) * c + ch;
            out[o] = best;
            if (keep) argmax_[o] = best_at;
          }
  }

  void backward(const Tensor<S>& in, const Tensor<S>&, const Tensor<S>& dout, Tensor<S>& din,
                bool need_din) override {
    if (!need_din) return;
    din.resize(in.shape());
    din.fill(S{0});
    for (std::size_t o = 0; o < dout.size(); ++o) din[argmax_[o]] += dout[o];
  }

 private:
  std::size_t p_;
  std::vector<std::size_t> argmax_;
};

// (B*T, H, W, C) -> (B, T, H*W*C): ends the time-distributed part.
template <class S>
class Flatten final : public Layer<S> {
 public:
  explicit Flatten(std::size_t frames) : t_(frames) {}

  void forward(const Tensor<S>& in, Tensor<S>& out, const ForwardContext&) override {
    if (in.rank() < 2 || in.dim(0) % t_ != 0)
      throw ShapeError("Flatten expects a multiple of " + std::to_string(t_) + " frames, got " +
                       to_string(in.shape()));
    out = in;
    out.reshape({in.dim(0) / t_, t_, in.size() / in.dim(0)});
  }

  void backward(const Tensor<S>& in, const Tensor<S>&, const Tensor<S>& dout, Tensor<S>& din,
                bool need_din) override {
    if (!need_din) return;
    din = dout;
    din.reshape(in.shape());
  }

 private:
  std::size_t t_;
};

// Keras-style LSTM, gate order (input, forget, cell, output).
template <class S>
class Lstm final : public Layer<S> {
 public:
  Lstm(std::string prefix, std::size_t input_dim, std::size_t hidden, bool return_sequences)
      : d_(input_dim), h_(hidden), seq_(return_sequences),
        kernel_(prefix + ".kernel", {input_dim, 4 * hidden}),
        recurrent_(prefix + ".recurrent_kernel", {hidden, 4 * hidden}),
        bias_(prefix + ".bias", {4 * hidden}) {}

  void initialize(std::mt19937_64& rng) override {
    glorot_uniform(kernel_.value, d_, 4 * h_, rng);
    orthogonal(recurrent_.value, h_, 4 * h_, rng);
    bias_.value.fill(S{0});
    for (std::size_t j = h_; j < 2 * h_; ++j) bias_.value[j] = S{1};  // forget gate
  }

  std::vector<Parameter<S>*> parameters() override { return {&kernel_, &recurrent_, &bias_}; }

  void forward(const Tensor<S>& in, Tensor<S>& out, const ForwardContext&) override {
    if (in.rank() != 3 || in.dim(2) != d_)
      throw ShapeError("LSTM expects (B, T, " + std::to_string(d_) + "), got " + to_string(in.shape()));
    b_ = in.dim(0);
    t_ = in.dim(1);
    const std::size_t g4 = 4 * h_;
    gates_.resize({b_, t_, g4});
    cells_.resize({b_, t_, h_});
    hidden_.resize({b_, t_, h_});

    // Input projection for all steps at once.
    auto z = as_matrix(gates_, b_ * t_, g4);
    z.noalias() = as_matrix(in, b_ * t_, d_) * as_matrix(kernel_.value, d_, g4);
    z.rowwise() += ConstVectorMap<S>(bias_.value.data(), static_cast<Eigen::Index>(g4));

    const auto wh = as_matrix(recurrent_.value, h_, g4);
    Eigen::Matrix<S, 1, Eigen::Dynamic> rec(static_cast<Eigen::Index>(g4));
    for (std::size_t b = 0; b < b_; ++b)
      for (std::size_t t = 0; t < t_; ++t) {
        S* g = gates_.data() + (b * t_ + t) * g4;
        if (t > 0) {
          const ConstVectorMap<S> hp(hidden_.data() + (b * t_ + t - 1) * h_, static_cast<Eigen::Index>(h_));
          rec.noalias() = hp * wh;
          for (std::size_t j = 0; j < g4; ++j) g[j] += rec[static_cast<Eigen::Index>(j)];
        }
        const S* cprev = t > 0 ? cells_.data() + (b * t_ + t - 1) * h_ : nullptr;
        S* c = cells_.data() + (b * t_ + t) * h_;
        S* hh = hidden_.data() + (b * t_ + t) * h_;
        for (std::size_t j = 0; j < h_; ++j) {
          const S i = sigmoid(g[j]);
          const S f = sigmoid(g[h_ + j]);
          const S cc = std::tanh(g[2 * h_ + j]);
          const S o = sigmoid(g[3 * h_ + j]);
          g[j] = i, g[h_ + j] = f, g[2 * h_ + j] = cc, g[3 * h_ + j] = o;
          c[j] = f * (cprev ? cprev[j] : S{0}) + i * cc;
          hh[j] = o * std::tanh(c[j]);
        }
      }

    if (seq_) {
      out = hidden_;
    } else {
      out.resize({b_, h_});
      for (std::size_t b = 0; b < b_; ++b)
        std::copy_n(hidden_.data() + (b * t_ + t_ - 1) * h_, h_, out.data() + b * h_);
    }
  }

  void backward(const Tensor<S>& in, const Tensor<S>&, const Tensor<S>& dout, Tensor<S>& din,
                bool need_din) override {
    const std::size_t g4 = 4 * h_;
    Tensor<S> dz({b_, t_, g4});
    const auto wh = as_matrix(recurrent_.value, h_, g4);
    auto dwh = as_matrix(recurrent_.grad, h_, g4);
    AlignedVector<S> dh_next(h_), dc_next(h_), dh(h_);
    Eigen::Matrix<S, 1, Eigen::Dynamic> back(static_cast<Eigen::Index>(h_));
    for (std::size_t b = 0; b < b_; ++b) {
      std::fill(dh_next.begin(), dh_next.end(), S{0});
      std::fill(dc_next.begin(), dc_next.end(), S{0});
      for (std::size_t step = t_; step-- > 0;) {
        const S* g = gates_.data() + (b * t_ + step) * g4;
        const S* c = cells_.data() + (b * t_ + step) * h_;
        const S* cprev = step > 0 ? cells_.data() + (b * t_ + step - 1) * h_ : nullptr;
        S* dzt = dz.data() + (b * t_ + step) * g4;
        for (std::size_t j = 0; j < h_; ++j) {
          S from_out = S{0};
          if (seq_) from_out = dout[(b * t_ + step) * h_ + j];
          else if (step == t_ - 1) from_out = dout[b * h_ + j];
          dh[j] = from_out + dh_next[j];
        }
        for (std::size_t j = 0; j < h_; ++j) {
          const S i = g[j], f = g[h_ + j], cc = g[2 * h_ + j], o = g[3 * h_ + j];
          const S tc = std::tanh(c[j]);
          const S dc = dh[j] * o * (S{1} - tc * tc) + dc_next[j];
          const S cp = cprev ? cprev[j] : S{0};
          dzt[j] = dc * cc * i * (S{1} - i);
          dzt[h_ + j] = dc * cp * f * (S{1} - f);
          dzt[2 * h_ + j] = dc * i * (S{1} - cc * cc);
          dzt[3 * h_ + j] = dh[j] * tc * o * (S{1} - o);
          dc_next[j] = dc * f;
        }
        const ConstVectorMap<S> dzv(dzt, static_cast<Eigen::Index>(g4));
        if (step > 0) {
          const ConstVectorMap<S> hp(hidden_.data() + (b * t_ + step - 1) * h_, static_cast<Eigen::Index>(h_));
          dwh.noalias() += hp.transpose() * dzv;
        }
        back.noalias() = dzv * wh.transpose();
        for (std::size_t j = 0; j < h_; ++j) dh_next[j] = back[static_cast<Eigen::Index>(j)];
      }
    }
    const auto dzm = as_matrix(dz, b_ * t_, g4);
    as_matrix(kernel_.grad, d_, g4).noalias() += as_matrix(in, b_ * t_, d_).transpose() * dzm;
    VectorMap<S>(bias_.grad.data(), static_cast<Eigen::Index>(g4)) += dzm.colwise().sum();
    if (need_din) {
      din.resize(in.shape());
      as_matrix(din, b_ * t_, d_).noalias() = dzm * as_matrix(kernel_.value, d_, g4).transpose();
    }
  }

 private:
  static S sigmoid(S x) { return S{1} / (S{1} + std::exp(-x)); }

  std::size_t d_, h_;
  bool seq_;
  Parameter<S> kernel_, recurrent_, bias_;
  std::size_t b_ = 0, t_ = 0;
  Tensor<S> gates_, cells_, hidden_;
};

// Fully connected layer on (B, D); optional ReLU. The classifier row is
// linear here: softmax is applied by the network.
template <class S>
class Dense final : public Layer<S> {
 public:
  Dense(std::string prefix, std::size_t in_dim, std::size_t units, bool relu)
      : d_(in_dim), u_(units), relu_(relu),
        kernel_(prefix + ".kernel", {in_dim, units}),
        bias_(prefix + ".bias", {units}) {}

  void initialize(std::mt19937_64& rng) override {
    glorot_uniform(kernel_.value, d_, u_, rng);
    bias_.value.fill(S{0});
  }

  std::vector<Parameter<S>*> parameters() override { return {&kernel_, &bias_}; }

  void forward(const Tensor<S>& in, Tensor<S>& out, const ForwardContext&) override {
    if (in.rank() != 2 || in.dim(1) != d_)
      throw ShapeError("Dense expects (B, " + std::to_string(d_) + "), got " + to_string(in.shape()));
    const std::size_t b = in.dim(0);
    out.resize({b, u_});
    auto y = as_matrix(out, b, u_);
    y.noalias() = as_matrix(in, b, d_) * as_matrix(kernel_.value, d_, u_);
    y.rowwise() += ConstVectorMap<S>(bias_.value.data(), static_cast<Eigen::Index>(u_));
    if (relu_) y = y.cwiseMax(S{0});
  }

  void backward(const Tensor<S>& in, const Tensor<S>& out, const Tensor<S>& dout, Tensor<S>& din,
                bool need_din) override {
    const std::size_t b = in.dim(0);
    Tensor<S> dz = dout;
    if (relu_)
      for (std::size_t i = 0; i < dz.size(); ++i)
        if (out[i] <= S{0}) dz[i] = S{0};
    const auto dzm = as_matrix(dz, b, u_);
    as_matrix(kernel_.grad, d_, u_).noalias() += as_matrix(in, b, d_).transpose() * dzm;
    VectorMap<S>(bias_.grad.data(), static_cast<Eigen::Index>(u_)) += dzm.colwise().sum();
    if (need_din) {
      din.resize(in.shape());
      as_matrix(din, b, d_).noalias() = dzm * as_matrix(kernel_.value, d_, u_).transpose();
    }
  }

 private:
  std::size_t d_, u_;
  bool relu_;
  Parameter<S> kernel_, bias_;
};

// Inverted dropout; identity at inference.
template <class S>
class Dropout final : public Layer<S> {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw InvalidArgument("dropout rate must be in [0, 1)");
  }

  void forward(const Tensor<S>& in, Tensor<S>& out, const ForwardContext& ctx) override {
    out = in;
    if (ctx.mode == Mode::inference || rate_ == 0.0) {
      mask_.clear();
      return;
    }
    if (!ctx.rng) throw InvalidArgument("training-mode dropout needs a random generator");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const S keep = static_cast<S>(1.0 / (1.0 - rate_));
    mask_.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      mask_[i] = unit(*ctx.rng) >= rate_ ? keep : S{0};
      out[i] *= mask_[i];
    }
  }

  void backward(const Tensor<S>& in, const Tensor<S>&, const Tensor<S>& dout, Tensor<S>& din,
                bool need_din) override {
    if (!need_din) return;
    din = dout;
    if (mask_.empty()) return;
    for (std::size_t i = 0; i < in.size(); ++i) din[i] *= mask_[i];
  }

 private:
  double rate_;
  AlignedVector<S> mask_;
};

}  // namespace ffd::model
