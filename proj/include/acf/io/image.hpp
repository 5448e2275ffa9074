#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "acf/tensor.hpp"

namespace acf::io {

/// 8-bit image with interleaved channels (1 = gray, 3 = RGB).
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

/// Binary P5/P6 with maxval 255. `name` is used in error messages.
/// Throws ParseError with the byte offset of the first problem.
Image8 decode_pnm(std::span<const std::uint8_t> bytes, const std::string& name);
std::vector<std::uint8_t> encode_pnm(const Image8& image);

/// True when this build can read PNG files.
bool png_supported();

/// Reads a PNM file, or a PNG when supported (detected by signature).
Image8 read_image8(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Image8& image);

/// 1×C×H×W tensor with values v/255.
Tensor<float> to_tensor(const Image8& image);
/// Item `n` of an N×C×H×W tensor (C = 1 or 3), quantised as round(clamp(v,0,1)·255).
Image8 from_tensor(const Tensor<float>& t, int n = 0);

Tensor<float> load_image(const std::filesystem::path& path);
/// Writes P5 for one channel and P6 for three.
void save_image(const std::filesystem::path& path, const Tensor<float>& t, int n = 0);

}  // namespace acf::io
