#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>

#include "acf/autodiff/ops.hpp"
#include "acf/autodiff/params.hpp"

namespace acf::nn {

using ad::Activation;
using ad::Var;

enum class Phase { train, eval };

/// How a missing parameter is created during materialisation.
struct Init {
  enum class Kind { he_uniform, constant } kind = Kind::constant;
  double value = 0;   // constant fill
  int fan_in = 1;     // he_uniform: U(−√(6/fan_in), √(6/fan_in))

  static Init he(int fan_in) { return {Kind::he_uniform, 0, fan_in}; }
  static Init zeros() { return {Kind::constant, 0, 1}; }
  static Init ones() { return {Kind::constant, 1, 1}; }
};

/// Deterministic initial value for a named tensor. Each name draws from its
/// own stream, so results do not depend on creation order.
template <class T>
Tensor<T> initial_value(const std::string& name, Shape shape, const Init& init, std::uint64_t seed);

/// Binds a parameter store to a tape for one forward pass. Parameters are
/// registered on the tape once and reused on later lookups. With
/// materialisation enabled, missing entries are created from their Init.
template <class T>
class Context {
 public:
  Context(ad::Tape<T>& tape, ad::ParamStore<T>& store, Phase phase)
      : tape_(&tape), store_(&store), phase_(phase) {}

  void enable_materialize(std::uint64_t seed) { materialize_seed_ = seed; }

  ad::Tape<T>& tape() { return *tape_; }
  Phase phase() const { return phase_; }
  ad::BnMode bn_mode() const { return phase_ == Phase::train ? ad::BnMode::train : ad::BnMode::eval; }

  /// Trainable tensor `name`; throws ArgumentError when missing (and not
  /// materialising) or when the stored shape differs.
  Var<T> param(const std::string& name, const Shape& shape, const Init& init);

  /// Mutable non-trainable buffer.
  Tensor<T>& buffer(const std::string& name, const Shape& shape, T fill);

  Var<T> constant(Tensor<T> value) { return tape_->constant(std::move(value)); }

 private:
  ad::Tape<T>* tape_;
  ad::ParamStore<T>* store_;
  Phase phase_;
  std::optional<std::uint64_t> materialize_seed_;
  std::unordered_map<std::string, Var<T>> bound_;
};

extern template class Context<float>;
extern template class Context<double>;

}  // namespace acf::nn
