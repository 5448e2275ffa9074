#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "acf/nn/acg_fusion.hpp"

namespace acf::app {

struct Prediction {
  Tensor<float> saliency;  // sal_f, 1×1×H×W
  nn::GateWeights gates;
  std::array<std::array<double, 5>, 3> tam_gates{};  // decoders r, d, f
};

/// Eval-mode forward of one RGB-D pair (each 1×C×H×W).
Prediction predict(const ad::ParamStore<float>& weights, const nn::ModelConfig& cfg,
                   const Tensor<float>& rgb, const Tensor<float>& depth,
                   const nn::ForwardOptions& options = {});

/// Parses "g1r,g2r,g3r,g1d,g2d,g3d"; throws ArgumentError on a malformed
/// list or values outside [0,1].
std::array<double, 6> parse_gate_list(const std::string& text);

/// `g1r,g2r,g3r,g1d,g2d,g3d` header and one row of values.
std::string format_gates_csv(const nn::GateWeights& gates);

/// Loads the pair and the weights, writes sal_f to `out_path` as P5 and
/// returns the prediction.
Prediction run_forward(const std::filesystem::path& rgb_path, const std::filesystem::path& depth_path,
                       const std::filesystem::path& weights_path, const std::filesystem::path& out_path,
                       const std::optional<std::array<double, 6>>& gate_override = std::nullopt);

/// Per-image gate table for a dataset: `filename,G1r,G2r,G3r,G1d,G2d,G3d`,
/// plus `tam_<r|d|f>_g1..g5` columns when `with_tam` is set. Rows follow
/// the sorted stems; filename is the RGB file name.
std::string inspect_gates(const std::filesystem::path& data_dir, const std::filesystem::path& weights_path,
                          bool with_tam = false);

}  // namespace acf::app
