#include "acf/app/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "acf/error.hpp"
#include "acf/io/image.hpp"
#include "acf/rng.hpp"

namespace acf::app {

RgbdSample load_sample(const io::MatchedStem& stem) {
  if (stem.files.size() != 3) throw ArgumentError("load_sample expects RGB, depth and GT files");
  RgbdSample s;
  s.stem = stem.stem;
  s.rgb = io::load_image(stem.files[0]);
  s.depth = io::load_image(stem.files[1]);
  s.gt = io::load_image(stem.files[2]);
  if (s.rgb.shape().c() != 3) throw ShapeError(stem.files[0].string() + ": RGB image must have 3 channels");
  if (s.depth.shape().c() != 1) throw ShapeError(stem.files[1].string() + ": depth map must have 1 channel");
  if (s.gt.shape().c() != 1) throw ShapeError(stem.files[2].string() + ": ground truth must have 1 channel");
  const Shape& a = s.rgb.shape();
  for (const Tensor<float>* t : {&s.depth, &s.gt})
    if (t->shape().h() != a.h() || t->shape().w() != a.w())
      throw GeometryError("sample '" + stem.stem + "': RGB, depth and GT sizes differ");
  return s;
}

std::vector<RgbdSample> load_dataset(const std::filesystem::path& root) {
  const io::Pairing pairing = io::pair_rgbd_dataset(root);
  std::vector<RgbdSample> out;
  for (const auto& m : pairing.matched) out.push_back(load_sample(m));
  return out;
}

RgbdSample make_synthetic_sample(std::uint64_t seed, int index, int size) {
  if (size < 8) throw ArgumentError("synthetic samples need size >= 8");
  Rng rng(derive_seed(seed, "synthetic/" + std::to_string(index)));
  const double s = size;
  const double cx = rng.uniform(0.42, 0.58) * s, cy = rng.uniform(0.42, 0.58) * s;
  const double rx = rng.uniform(0.24, 0.36) * s, ry = rng.uniform(0.24, 0.36) * s;
  const double angle = rng.uniform(0.0, 3.14159265358979);
  const double ca = std::cos(angle), sa = std::sin(angle);

  // Bright object colour over a dark, flat background.
  const double hue = rng.uniform();
  double obj[3], bg[3];
  for (int c = 0; c < 3; ++c) {
    obj[c] = 0.65 + 0.3 * std::cos(6.28318530717959 * (hue + c / 3.0));
    bg[c] = rng.uniform(0.05, 0.25);
  }
  const double obj_depth = rng.uniform(0.8, 0.9);
  const double bg_depth = rng.uniform(0.1, 0.25);

  RgbdSample out;
  out.stem = "synth_" + std::string(index < 10 ? "00" : index < 100 ? "0" : "") + std::to_string(index);
  out.rgb = Tensor<float>(Shape::nchw(1, 3, size, size));
  out.depth = Tensor<float>(Shape::nchw(1, 1, size, size));
  out.gt = Tensor<float>(Shape::nchw(1, 1, size, size));
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double u = (ca * dx + sa * dy) / rx, v = (-sa * dx + ca * dy) / ry;
      const bool inside = u * u + v * v <= 1.0;
      for (int c = 0; c < 3; ++c) {
        const double base = inside ? obj[c] : bg[c];
        out.rgb.at(0, c, y, x) = static_cast<float>(std::clamp(base + rng.uniform(-0.01, 0.01), 0.0, 1.0));
      }
      const double d = inside ? obj_depth : bg_depth;
      out.depth.at(0, 0, y, x) = static_cast<float>(std::clamp(d + rng.uniform(-0.01, 0.01), 0.0, 1.0));
      out.gt.at(0, 0, y, x) = inside ? 1.0f : 0.0f;
    }
  }
  // Round-trip through 8 bits so in-memory samples equal their files.
  for (Tensor<float>* t : {&out.rgb, &out.depth, &out.gt}) *t = io::to_tensor(io::from_tensor(*t));
  return out;
}

void write_synthetic_dataset(const std::filesystem::path& root, int count, int size,
                             std::uint64_t seed) {
  for (const char* sub : {"RGB", "depth", "GT"}) std::filesystem::create_directories(root / sub);
  for (int i = 0; i < count; ++i) {
    const RgbdSample s = make_synthetic_sample(seed, i, size);
    io::save_image(root / "RGB" / (s.stem + ".ppm"), s.rgb);
    io::save_image(root / "depth" / (s.stem + ".pgm"), s.depth);
    io::save_image(root / "GT" / (s.stem + ".pgm"), s.gt);
  }
}

Tensor<float> stack(const std::vector<const Tensor<float>*>& items, const std::vector<bool>& flip) {
  if (items.empty()) throw ArgumentError("stack: no items");
  if (!flip.empty() && flip.size() != items.size()) throw ArgumentError("stack: flip mask size mismatch");
  const Shape& s0 = items.front()->shape();
  require_rank4(s0, "stack item");
  const int c = s0.c(), h = s0.h(), w = s0.w();
  Tensor<float> out(Shape::nchw(static_cast<int>(items.size()), c, h, w));
  for (std::size_t n = 0; n < items.size(); ++n) {
    const Shape& s = items[n]->shape();
    if (s.n() != 1 || s.c() != c || s.h() != h || s.w() != w)
      throw GeometryError("stack: item " + s.str() + " differs from " + s0.str());
    const bool mirror = !flip.empty() && flip[n];
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          out.at(static_cast<int>(n), ch, y, x) = items[n]->at(0, ch, y, mirror ? w - 1 - x : x);
  }
  return out;
}

}  // namespace acf::app
