#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "acf/error.hpp"

namespace acf {

/// Dimensions of a rank-1..4 tensor. Rank-4 shapes follow N×C×H×W.
/// A default-constructed Shape is the empty placeholder (rank 0, no elements).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int> dims);
  explicit Shape(std::span<const int> dims);

  static Shape nchw(int n, int c, int h, int w) { return Shape{n, c, h, w}; }

  int rank() const { return rank_; }
  int operator[](int axis) const;
  std::size_t numel() const;
  bool empty() const { return rank_ == 0; }

  int n() const { return dim4(0); }
  int c() const { return dim4(1); }
  int h() const { return dim4(2); }
  int w() const { return dim4(3); }

  std::string str() const;

  friend bool operator==(const Shape& a, const Shape& b) {
    return a.rank_ == b.rank_ && a.dims_ == b.dims_;
  }

 private:
  int dim4(int axis) const;

  std::array<int, 4> dims_{0, 0, 0, 0};
  int rank_ = 0;
};

/// Dense row-major array with value semantics.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(shape), data_(shape.numel(), T(0)) {}
  Tensor(Shape shape, std::vector<T> data);

  static Tensor zeros(Shape shape) { return Tensor(shape); }
  static Tensor full(Shape shape, T value);
  static Tensor scalar(T value) { return full(Shape{1}, value); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // rank-4 element access
  T& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

  /// Same data, new dims. Element counts must agree.
  Tensor reshaped(Shape shape) const;

  void fill(T value);

  template <class U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

 private:
  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c() + c) * shape_.h() + h) * shape_.w() + w;
  }

  Shape shape_;
  std::vector<T> data_;
};

/// Throws ShapeError unless `s` is rank 4.
void require_rank4(const Shape& s, const char* what);

/// True when every element is finite.
template <class T>
bool all_finite(const Tensor<T>& t);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace acf
