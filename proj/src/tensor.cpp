#include "acf/tensor.hpp"

#include <cmath>
#include <sstream>

namespace acf {

Shape::Shape(std::initializer_list<int> dims) : Shape(std::span<const int>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const int> dims) {
  if (dims.empty() || dims.size() > 4)
    throw ShapeError("tensor rank must be 1..4, got " + std::to_string(dims.size()));
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] < 1) throw ShapeError("tensor dims must be >= 1");
    dims_[i] = dims[i];
  }
  rank_ = static_cast<int>(dims.size());
}

int Shape::operator[](int axis) const {
  if (axis < 0 || axis >= rank_) throw ShapeError("axis out of range for shape " + str());
  return dims_[axis];
}

std::size_t Shape::numel() const {
  if (rank_ == 0) return 0;
  std::size_t n = 1;
  for (int i = 0; i < rank_; ++i) n *= static_cast<std::size_t>(dims_[i]);
  return n;
}

int Shape::dim4(int axis) const {
  if (rank_ != 4) throw ShapeError("expected rank-4 tensor, got shape " + str());
  return dims_[axis];
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < rank_; ++i) os << (i ? "x" : "") << dims_[i];
  os << ')';
  return os.str();
}

void require_rank4(const Shape& s, const char* what) {
  if (s.rank() != 4) throw ShapeError(std::string(what) + ": expected N×C×H×W, got " + s.str());
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.numel())
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_.str());
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  Tensor t(shape);
  t.fill(value);
  return t;
}

template <class T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape.numel() != shape_.numel())
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  return Tensor(shape, data_);
}

template <class T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.values())
    if (!std::isfinite(v)) return false;
  return true;
}

template class Tensor<float>;
template class Tensor<double>;
template bool all_finite(const Tensor<float>&);
template bool all_finite(const Tensor<double>&);

}  // namespace acf
