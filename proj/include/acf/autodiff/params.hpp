#pragma once

#include <map>
#include <string>
#include <string_view>

#include "acf/tensor.hpp"

namespace acf::ad {

/// Named parameter store: trainable tensors plus non-trainable buffers
/// (batch-norm running statistics). Iteration order is lexicographic by name.
template <class T>
struct ParamStore {
  std::map<std::string, Tensor<T>> params;
  std::map<std::string, Tensor<T>> buffers;

  /// Buffers are recognised by name suffix.
  static bool is_buffer_name(std::string_view name) {
    return name.ends_with(".running_mean") || name.ends_with(".running_var");
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : params) n += t.size();
    return n;
  }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [k, v] : params) out.params.emplace(k, v.template cast<U>());
    for (const auto& [k, v] : buffers) out.buffers.emplace(k, v.template cast<U>());
    return out;
  }
};

}  // namespace acf::ad
