#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>

#include "acf/nn/context.hpp"

namespace acf::nn {

/// Convolution (no bias) → batch norm → activation, stride-1 outputs keep
/// their spatial size: padding = dilation·(kernel−1)/2.
struct CbrSpec {
  int out_channels = 64;
  int kernel = 3;
  int dilation = 1;
  Activation act = Activation::relu;
  int stride = 1;
};

template <class T>
Var<T> cbr(Context<T>& ctx, const std::string& name, Var<T> x, const CbrSpec& spec);

/// Stage strides relative to the input image for stages 1..5.
inline constexpr std::array<int, 5> kStageStrides{2, 4, 8, 16, 32};

struct EncoderConfig {
  std::array<int, 5> stage_channels{8, 16, 32, 64, 64};
  std::array<int, 5> blocks_per_stage{1, 1, 1, 1, 1};
  int input_channels = 3;
  std::set<int> skip_stages;  // {} , {1} or {1,2}

  /// Throws ArgumentError for non-positive widths or unsupported skips.
  void validate() const;
  int first_stage() const;
  /// Channel count entering `stage` (1-based).
  int stage_input_channels(int stage) const;
};

/// s1..s5 at strides 2..32; skipped stages are absent.
template <class T>
struct SideOutputs {
  std::array<std::optional<Var<T>>, 5> s;

  bool has(int stage) const { return s[static_cast<std::size_t>(stage - 1)].has_value(); }
  /// Throws ArgumentError when the stage is absent.
  Var<T> at(int stage) const;
};

/// One encoder stage: `blocks_per_stage` basic residual blocks, the first of
/// which downsamples by two and projects the shortcut.
template <class T>
Var<T> encoder_stage(Context<T>& ctx, const std::string& prefix, Var<T> x, const EncoderConfig& cfg,
                     int stage);

/// Runs every non-skipped stage. With skip_stages = {1,2} the input is the
/// stride-4 tensor that stage 3 consumes.
template <class T>
SideOutputs<T> encoder_forward(Context<T>& ctx, const std::string& prefix, Var<T> x,
                               const EncoderConfig& cfg);

struct FpnOptions {
  int width = 64;
  // activation of the two intermediate pyramid levels (f4, f3)
  Activation tap_activation = Activation::relu;
};

template <class T>
struct FpnOutputs {
  Var<T> f4;  // stride 16
  Var<T> f3;  // stride 8
  Var<T> f;   // stride 4
};

/// Top-down decoder over s2..s5. Each side is first projected to `width`
/// channels by a 1×1 lateral; then
///   f4 = C(l4 + U(l5)),  f3 = C(l3 + U(f4)),  f = C(l2 + U(f3)).
template <class T>
FpnOutputs<T> fpn_decode(Context<T>& ctx, const std::string& prefix, const SideOutputs<T>& sides,
                         const FpnOptions& options = {});

/// 1×1 convolution to one channel, ×4 bilinear upsampling, sigmoid.
template <class T>
Var<T> prediction_head(Context<T>& ctx, const std::string& prefix, Var<T> features, int target_h,
                       int target_w);

}  // namespace acf::nn
