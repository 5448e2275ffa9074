#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "acf/autodiff/params.hpp"

namespace acf::io {

/// Binary weights container:
///   "ACFW" · version u8 (1) · count u32 · count × entry
///   entry = name_len u16 · name · rank u8 · rank × dim u32 · values f32
/// All integers and floats little-endian. Entries are written in name order;
/// batch-norm running statistics are stored alongside the trainable tensors
/// and told apart by name on load.
inline constexpr std::uint8_t kWeightsVersion = 1;

std::vector<std::uint8_t> encode_weights(const ad::ParamStore<float>& store);
/// Throws ParseError (with byte offset) on bad magic, unknown version,
/// truncated or trailing data, zero dims, or duplicate names.
ad::ParamStore<float> decode_weights(std::span<const std::uint8_t> bytes, const std::string& name);

void save_weights(const std::filesystem::path& path, const ad::ParamStore<float>& store);
ad::ParamStore<float> load_weights(const std::filesystem::path& path);

}  // namespace acf::io
