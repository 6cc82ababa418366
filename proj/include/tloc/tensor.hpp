#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

#include "tloc/common.hpp"

namespace tloc {

// Shape of a dense array, rank 1 (vector) or 2 (row-major matrix).
// Everything the model computes fits in these two ranks.
struct Shape {
  std::int64_t d0 = 0;
  std::int64_t d1 = 0;  // unused when rank == 1
  int rank = 1;

  static Shape vec(std::int64_t n) { return Shape{n, 0, 1}; }
  static Shape mat(std::int64_t r, std::int64_t c) { return Shape{r, c, 2}; }

  std::int64_t numel() const { return rank == 1 ? d0 : d0 * d1; }
  std::int64_t rows() const { return d0; }
  std::int64_t cols() const { return rank == 1 ? 1 : d1; }

  bool operator==(const Shape& o) const {
    return rank == o.rank && d0 == o.d0 && (rank == 1 || d1 == o.d1);
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const {
    if (rank == 1) return "[" + std::to_string(d0) + "]";
    return "[" + std::to_string(d0) + "x" + std::to_string(d1) + "]";
  }
};

inline std::ostream& operator<<(std::ostream& os, const Shape& s) { return os << s.str(); }

// Dense row-major array of float (training) or double (gradient checks).
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(shape), data_(static_cast<std::size_t>(shape.numel()), T(0)) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_.numel())
      throw ShapeError("tensor " + shape_.str() + " given " + std::to_string(data_.size()) + " values");
  }

  static Tensor vec(std::initializer_list<T> vals) {
    return Tensor(Shape::vec(static_cast<std::int64_t>(vals.size())), std::vector<T>(vals));
  }
  static Tensor zeros(Shape s) { return Tensor(s); }
  static Tensor full(Shape s, T v) {
    Tensor t(s);
    for (auto& x : t.data_) x = v;
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::int64_t numel() const { return shape_.numel(); }
  std::int64_t rows() const { return shape_.rows(); }
  std::int64_t cols() const { return shape_.cols(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  T operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // Matrix element access (rank 2).
  T& at(std::int64_t r, std::int64_t c) { return data_[static_cast<std::size_t>(r * shape_.d1 + c)]; }
  T at(std::int64_t r, std::int64_t c) const { return data_[static_cast<std::size_t>(r * shape_.d1 + c)]; }

  bool all_finite() const {
    for (const T& x : data_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  void fill(T v) {
    for (auto& x : data_) x = v;
  }

  bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::int64_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(data_[static_cast<std::size_t>(i)]);
    return out;
  }

 private:
  Shape shape_{0, 0, 1};
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace tloc
