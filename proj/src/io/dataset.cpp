#include "acf/io/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "acf/error.hpp"

namespace acf::io {

bool is_image_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".png";
}

namespace {

std::map<std::string, std::filesystem::path> list_stems(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DatasetError(dir.string() + ": not a directory");
  std::map<std::string, std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    const std::string stem = entry.path().stem().string();
    auto [it, inserted] = out.emplace(stem, entry.path());
    if (!inserted) {
      const auto a = std::min(it->second, entry.path()), b = std::max(it->second, entry.path());
      throw DatasetError("ambiguous stem '" + stem + "': " + a.string() + " and " + b.string());
    }
  }
  return out;
}

}  // namespace

Pairing pair_by_stem(const std::vector<std::filesystem::path>& dirs) {
  if (dirs.empty()) throw ArgumentError("pair_by_stem needs at least one directory");
  std::vector<std::map<std::string, std::filesystem::path>> listings;
  for (const auto& d : dirs) listings.push_back(list_stems(d));

  std::set<std::string> all;
  for (const auto& l : listings)
    for (const auto& [stem, _] : l) all.insert(stem);

  Pairing out;
  for (const std::string& stem : all) {
    MatchedStem m{stem, {}};
    bool complete = true;
    for (const auto& l : listings) {
      auto it = l.find(stem);
      if (it == l.end()) {
        complete = false;
        continue;
      }
      m.files.push_back(it->second);
    }
    if (complete) {
      out.matched.push_back(std::move(m));
    } else {
      for (const auto& f : m.files) out.unmatched.push_back(f.string());
    }
  }
  if (out.matched.empty()) {
    std::string msg = "no matching stems across";
    for (const auto& d : dirs) msg += " " + d.string();
    if (!out.unmatched.empty()) {
      msg += "; unmatched files:";
      for (const auto& f : out.unmatched) msg += " " + f;
    }
    throw DatasetError(msg);
  }
  return out;
}

Pairing pair_rgbd_dataset(const std::filesystem::path& root) {
  return pair_by_stem({root / "RGB", root / "depth", root / "GT"});
}

}  // namespace acf::io
