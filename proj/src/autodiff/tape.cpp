#include "acf/autodiff/tape.hpp"

#include <cassert>

namespace acf::ad {

template <class T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Tape<T>::parameter(std::string name, Tensor<T> value) {
  Node node;
  node.value = std::move(value);
  node.param_name = std::move(name);
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Tape<T>::record(Tensor<T> value, std::initializer_list<std::size_t> inputs, BackwardFn fn) {
  return record(std::move(value), std::vector<std::size_t>(inputs), std::move(fn));
}

template <class T>
Var<T> Tape<T>::record(Tensor<T> value, const std::vector<std::size_t>& inputs, BackwardFn fn) {
#ifndef NDEBUG
  if (!all_finite(value)) throw EvaluationError("non-finite value produced by a forward op");
#endif
  Node node;
  node.value = std::move(value);
  if (recording_) {
    for (std::size_t id : inputs) {
      assert(id < nodes_.size());
      if (nodes_[id].requires_grad) node.requires_grad = true;
    }
    if (node.requires_grad) node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

template <class T>
Tensor<T>& Tape<T>::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor<T>::zeros(node.value.shape());
  return node.grad;
}

template <class T>
GradientMap<T> Tape<T>::backward(Var<T> loss) {
  if (loss.tape != this) throw ArgumentError("backward: loss belongs to another tape");
  if (nodes_[loss.id].value.size() != 1)
    throw ArgumentError("backward: loss must be a scalar, got shape " +
                        nodes_[loss.id].value.shape().str());

  for (Node& node : nodes_) node.grad = Tensor<T>();
  grad(loss.id)[0] = T(1);

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || node.grad.empty()) continue;
    // The closure may touch other nodes' buffers but never this node's
    // gradient, so handing it a const reference is safe.
    const Tensor<T>& g = node.grad;
    node.backward(*this, g);
  }

  GradientMap<T> out;
  for (Node& node : nodes_) {
    if (node.param_name.empty()) continue;
    Tensor<T> g = node.grad.empty() ? Tensor<T>::zeros(node.value.shape()) : node.grad;
    auto [it, inserted] = out.emplace(node.param_name, g);
    if (!inserted) {
      for (std::size_t k = 0; k < g.size(); ++k) it->second[k] += g[k];
    }
  }
  return out;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace acf::ad
