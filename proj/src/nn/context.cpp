#include "acf/nn/context.hpp"

#include <cmath>

#include "acf/rng.hpp"

namespace acf::nn {

template <class T>
Tensor<T> initial_value(const std::string& name, Shape shape, const Init& init, std::uint64_t seed) {
  Tensor<T> t(shape);
  if (init.kind == Init::Kind::constant) {
    t.fill(static_cast<T>(init.value));
    return t;
  }
  const double bound = std::sqrt(6.0 / std::max(1, init.fan_in));
  Rng rng(derive_seed(seed, name));
  for (std::size_t i = 0; i < t.size(); ++i) {
    // round through float so float and double stores start from equal values
    t[i] = static_cast<T>(static_cast<float>(rng.uniform(-bound, bound)));
  }
  return t;
}

template <class T>
Var<T> Context<T>::param(const std::string& name, const Shape& shape, const Init& init) {
  if (auto it = bound_.find(name); it != bound_.end()) return it->second;
  auto it = store_->params.find(name);
  if (it == store_->params.end()) {
    if (!materialize_seed_) throw ArgumentError("missing parameter '" + name + "'");
    it = store_->params.emplace(name, initial_value<T>(name, shape, init, *materialize_seed_)).first;
  } else if (!(it->second.shape() == shape)) {
    throw ShapeError("parameter '" + name + "' has shape " + it->second.shape().str() +
                     ", expected " + shape.str());
  }
  Var<T> v = tape_->parameter(name, it->second);
  bound_.emplace(name, v);
  return v;
}

template <class T>
Tensor<T>& Context<T>::buffer(const std::string& name, const Shape& shape, T fill) {
  auto it = store_->buffers.find(name);
  if (it == store_->buffers.end()) {
    if (!materialize_seed_) throw ArgumentError("missing buffer '" + name + "'");
    it = store_->buffers.emplace(name, Tensor<T>::full(shape, fill)).first;
  } else if (!(it->second.shape() == shape)) {
    throw ShapeError("buffer '" + name + "' has shape " + it->second.shape().str() + ", expected " +
                     shape.str());
  }
  return it->second;
}

template Tensor<float> initial_value<float>(const std::string&, Shape, const Init&, std::uint64_t);
template Tensor<double> initial_value<double>(const std::string&, Shape, const Init&, std::uint64_t);
template class Context<float>;
template class Context<double>;

}  // namespace acf::nn
