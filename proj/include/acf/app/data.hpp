#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "acf/io/dataset.hpp"
#include "acf/tensor.hpp"

namespace acf::app {

/// One RGB-D training/evaluation item; every tensor is 1×C×H×W.
struct RgbdSample {
  std::string stem;
  Tensor<float> rgb;    // C = 3
  Tensor<float> depth;  // C = 1
  Tensor<float> gt;     // C = 1
};

/// Loads a matched RGB/depth/GT triple. Throws ShapeError for wrong channel
/// counts and GeometryError when the three images differ in size.
RgbdSample load_sample(const io::MatchedStem& stem);
std::vector<RgbdSample> load_dataset(const std::filesystem::path& root);

/// Deterministic synthetic scene: an elliptical object of a random colour on
/// a textured background, nearer (brighter) in depth than its surroundings.
RgbdSample make_synthetic_sample(std::uint64_t seed, int index, int size);

/// Writes `count` synthetic samples as RGB/*.ppm, depth/*.pgm, GT/*.pgm.
void write_synthetic_dataset(const std::filesystem::path& root, int count, int size,
                             std::uint64_t seed);

/// Stacks 1×C×H×W tensors into N×C×H×W, optionally mirroring items
/// horizontally. Throws GeometryError when sizes differ.
Tensor<float> stack(const std::vector<const Tensor<float>*>& items, const std::vector<bool>& flip = {});

}  // namespace acf::app
