#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acf/nn/blocks.hpp"
#include "acf/nn/tam.hpp"

namespace acf::nn {

/// Six guidance gates of one image: g_r = (G1r,G2r,G3r), g_d = (G1d,G2d,G3d).
struct GateWeights {
  std::array<double, 3> g_r{};
  std::array<double, 3> g_d{};
};

/// Learned gates, or fixed values in [0,1] ordered g1r,g2r,g3r,g1d,g2d,g3d.
class GateMode {
 public:
  static GateMode learned() { return GateMode(); }
  /// Throws ArgumentError for values outside [0,1].
  static GateMode forced(const std::array<double, 6>& values);

  bool is_forced() const { return forced_.has_value(); }
  const std::array<double, 6>& values() const { return *forced_; }

 private:
  std::optional<std::array<double, 6>> forced_;
};

/// Gate tensors, each N×3×1×1.
template <class T>
struct GateVars {
  Var<T> g_r;
  Var<T> g_d;
};

/// Concatenates the two stage-5 outputs and runs two independent
/// conv-BN heads to 3 channels each; sigmoid, then spatial average.
template <class T>
GateVars<T> gate_compute(Context<T>& ctx, const std::string& prefix, Var<T> s5_r, Var<T> s5_d,
                         int kernel = 3);

/// Ik = Cat(hybrid·1, rgb·Gk_r, depth·Gk_d) for fusion stage k ∈ {1,2,3}.
template <class T>
Var<T> assemble_stage_input(int k, Var<T> hybrid, Var<T> rgb, Var<T> depth, const GateVars<T>& gates);

template <class T>
struct StageInputs {
  Var<T> i1, i2, i3;
};

/// I1 = Cat(F2, R·G1r, D·G1d), I2 = Cat(F3, R3'·G2r, D3'·G2d),
/// I3 = Cat(F4, R4'·G3r, D4'·G3d).
template <class T>
StageInputs<T> assemble_stage_inputs(Var<T> f2, Var<T> r, Var<T> d, Var<T> r3p, Var<T> d3p,
                                     Var<T> r4p, Var<T> d4p, Var<T> f3, Var<T> f4,
                                     const GateVars<T>& gates);

struct ModelConfig {
  std::array<int, 5> stage_channels{8, 16, 32, 64, 64};
  std::array<int, 5> blocks_per_stage{1, 1, 1, 1, 1};
  int width = 64;        // decoder and TAM width
  int gate_kernel = 3;

  EncoderConfig single_modality_encoder(int input_channels) const;
  /// Encoder2-F: stages 3..5 only.
  EncoderConfig fusion_encoder() const;
};

struct ForwardOptions {
  GateMode gate_mode = GateMode::learned();
  /// Replace R, D, R3', D3', R4', D4' by zeros before stage-input assembly.
  bool zero_guidance = false;
  /// Fixed TAM gates applied in all three attention modules.
  std::optional<std::array<double, 5>> tam_forced_gates;
};

template <class T>
struct ResinResOutput {
  Var<T> sal_r, sal_d, sal_f;  // N×1×H×W
  GateVars<T> gates;
  std::map<std::string, Var<T>> intermediates;

  /// Gate scalars per batch item.
  std::vector<GateWeights> gate_values() const;
  /// TAM gates of decoder `which` ("r", "d" or "f") per batch item.
  std::vector<std::array<double, 5>> tam_gate_values(const std::string& which) const;
};

/// Full two-phase forward: single-modality encoders/decoders with TAM,
/// gate computation, gated stage-input assembly into Encoder2-F, fused
/// decoder with TAM, and three prediction heads.
template <class T>
ResinResOutput<T> resinres_forward(Context<T>& ctx, const ModelConfig& cfg, Var<T> rgb,
                                   Var<T> depth, const ForwardOptions& options = {});

/// Seeded initial weights for every parameter and buffer of the model.
ad::ParamStore<float> init_model(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace acf::nn
