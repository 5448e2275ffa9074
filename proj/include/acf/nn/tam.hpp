#pragma once

#include <array>
#include <optional>
#include <string>

#include "acf/nn/context.hpp"

namespace acf::nn {

/// Type-based attention: five parallel convolution types (1×1, 3×3 and 3×3
/// dilated by 3, 5, 7), one scalar gate per type from its own 64-4-1 MLP,
/// gated recombination, spatial attention and a residual output block.
struct TamOptions {
  int width = 64;
  Activation out_activation = Activation::relu;
  /// Replaces the MLP gates with fixed values (all ones = TAM without MLP).
  std::optional<std::array<double, 5>> forced_gates;
};

inline constexpr int kTamBranches = 5;
inline constexpr std::array<int, kTamBranches> kTamKernels{1, 3, 3, 3, 3};
inline constexpr std::array<int, kTamBranches> kTamDilations{1, 1, 3, 5, 7};
inline constexpr int kTamHidden = 4;

template <class T>
using TamBranches = std::array<Var<T>, kTamBranches>;

template <class T>
struct TamOutput {
  Var<T> out;        // same shape as the input
  Var<T> gates;      // N×5×1×1
  Var<T> f_ta;       // recombined features
  Var<T> attention;  // N×1×H×W spatial map in (0,1)
  Var<T> f_sa;       // f_ta ⊙ attention
};

/// F_1x1 and F_3x3 use conv-BN-relu; the three dilated branches use
/// conv-BN-sigmoid.
template <class T>
TamBranches<T> tam_branches(Context<T>& ctx, const std::string& prefix, Var<T> input,
                            int width = 64);

/// Per branch: spatial average → 64-vector → Linear(64,4) → relu →
/// Linear(4,1) → sigmoid. Returns N×5×1×1.
template <class T>
Var<T> tam_gates(Context<T>& ctx, const std::string& prefix, const TamBranches<T>& branches);

/// Gated recombination, spatial attention and residual output given
/// precomputed branches and gates.
template <class T>
TamOutput<T> tam_combine(Context<T>& ctx, const std::string& prefix, Var<T> input,
                         const TamBranches<T>& branches, Var<T> gates, const TamOptions& options);

template <class T>
TamOutput<T> tam_forward(Context<T>& ctx, const std::string& prefix, Var<T> input,
                         const TamOptions& options = {});

}  // namespace acf::nn
