#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace acf::io {

/// Image files considered by the pairing functions: .pgm, .ppm and .png.
bool is_image_file(const std::filesystem::path& path);

/// One stem matched across several directories; `files` follows the order
/// of the directories passed in.
struct MatchedStem {
  std::string stem;
  std::vector<std::filesystem::path> files;
};

struct Pairing {
  std::vector<MatchedStem> matched;      // sorted by stem
  std::vector<std::string> unmatched;    // files whose stem is missing elsewhere
};

/// Matches image files by identical stem across `dirs`. Throws DatasetError
/// when a directory is missing, when a stem is ambiguous inside one
/// directory, or when nothing matches (the message lists unmatched files).
Pairing pair_by_stem(const std::vector<std::filesystem::path>& dirs);

/// RGB/, depth/ and GT/ under `root`.
Pairing pair_rgbd_dataset(const std::filesystem::path& root);

}  // namespace acf::io
