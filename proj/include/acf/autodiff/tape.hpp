#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acf/tensor.hpp"

namespace acf::ad {

template <class T>
class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; valid while the
/// tape is alive and not cleared.
template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return tape->value(id).shape(); }
};

template <class T>
using GradientMap = std::map<std::string, Tensor<T>>;

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node
/// list is always topologically sorted. Each recorded op stores a closure
/// that scatters the node's output gradient into its inputs.
template <class T>
class Tape {
 public:
  /// Receives the gradient flowing into the node's output.
  using BackwardFn = std::function<void(Tape&, const Tensor<T>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// When disabled, ops evaluate values but keep no backward closures.
  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  Var<T> constant(Tensor<T> value);
  Var<T> parameter(std::string name, Tensor<T> value);

  /// Appends an op result. `fn` is dropped unless recording is on and at
  /// least one input requires a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<std::size_t> inputs, BackwardFn fn);
  Var<T> record(Tensor<T> value, const std::vector<std::size_t>& inputs, BackwardFn fn);

  const Tensor<T>& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer for `id`, zero-allocated on first access.
  Tensor<T>& grad(std::size_t id);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Runs the reverse sweep from a scalar `loss` and returns one gradient per
  /// registered parameter. Parameters the loss does not depend on receive
  /// zero tensors; fan-out contributions are summed.
  GradientMap<T> backward(Var<T> loss);

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    BackwardFn backward;
    std::string param_name;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  bool recording_ = true;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace acf::ad
