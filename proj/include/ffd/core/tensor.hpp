#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ffd/core/error.hpp"

namespace ffd {

using Shape = std::vector<std::size_t>;

// Storage aligned to the widest SIMD packet, so vectorised kernels see the
// same alignment, and sum in the same order, on every run.
template <class T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

// Dense row-major tensor. Owns its storage.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{})
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
  Tensor(Shape shape, AlignedVector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_))
      throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  AlignedVector<T>& values() { return data_; }
  const AlignedVector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Changes the shape in place; element count must stay the same.
  void reshape(Shape shape) {
    if (element_count(shape) != data_.size())
      throw ShapeError("cannot reshape " + to_string(shape_) + " to " +
                       to_string(shape));
    shape_ = std::move(shape);
  }

  // Reallocates to the given shape. Contents are unspecified afterwards.
  void resize(Shape shape) {
    shape_ = std::move(shape);
    data_.resize(element_count(shape_));
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  AlignedVector<T> data_;
};

}  // namespace ffd
