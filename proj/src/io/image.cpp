#include "acf/io/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "acf/error.hpp"

#if ACF_HAVE_PNG
#include <png.h>
#endif

namespace acf::io {
namespace {

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Tokenizer for the ASCII part of a PNM header.
class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, const std::string& name, std::size_t pos)
      : bytes_(bytes), name_(name), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  /// Start of the most recently read number.
  std::size_t token_start() const { return token_start_; }

  int number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = token_start_ = pos_;
    long long v = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) throw ParseError(name_, start, std::string(what) + " is too large");
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= bytes_.size())
        throw ParseError(name_, pos_, std::string("truncated header, expected ") + what);
      throw ParseError(name_, pos_, std::string("expected ") + what);
    }
    return static_cast<int>(v);
  }

  void single_space() {
    if (pos_ >= bytes_.size()) throw ParseError(name_, pos_, "truncated header");
    if (!is_space(bytes_[pos_])) throw ParseError(name_, pos_, "expected whitespace after maxval");
    ++pos_;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  const std::string& name_;
  std::size_t pos_;
  std::size_t token_start_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_png_signature(const std::vector<std::uint8_t>& b) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return b.size() >= 8 && std::equal(sig, sig + 8, b.begin());
}

#if ACF_HAVE_PNG
Image8 decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw ParseError(name + ": " + img.message);
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image8 out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.channels = color ? 3 : 1;
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw ParseError(name + ": " + msg);
  }
  return out;
}
#endif

}  // namespace

Image8 decode_pnm(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (bytes.size() < 2) throw ParseError(name, 0, "truncated magic number");
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw ParseError(name, 0, "bad magic number (expected P5 or P6)");
  Image8 img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader r(bytes, name, 2);
  img.width = r.number("width");
  const std::size_t width_pos = r.token_start();
  img.height = r.number("height");
  const std::size_t height_pos = r.token_start();
  const int maxval = r.number("maxval");
  const std::size_t maxval_pos = r.token_start();
  if (img.width < 1) throw ParseError(name, width_pos, "image width must be positive");
  if (img.height < 1) throw ParseError(name, height_pos, "image height must be positive");
  if (maxval != 255)
    throw ParseError(name, maxval_pos, "unsupported maxval " + std::to_string(maxval) + " (expected 255)");
  r.single_space();
  const std::size_t data = r.pos();
  const std::size_t need = static_cast<std::size_t>(img.width) * img.height * img.channels;
  if (bytes.size() - data < need)
    throw ParseError(name, bytes.size(),
                     "truncated pixel data (expected " + std::to_string(need) + " bytes)");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data),
                    bytes.begin() + static_cast<std::ptrdiff_t>(data + need));
  return img;
}

std::vector<std::uint8_t> encode_pnm(const Image8& image) {
  if (image.channels != 1 && image.channels != 3)
    throw ArgumentError("PNM images have 1 or 3 channels");
  const std::size_t need = static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (image.width < 1 || image.height < 1 || image.pixels.size() != need)
    throw ArgumentError("image buffer does not match its dimensions");
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width) + " " + std::to_string(image.height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

bool png_supported() { return ACF_HAVE_PNG != 0; }

Image8 read_image8(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (has_png_signature(bytes)) {
#if ACF_HAVE_PNG
    return decode_png(bytes, path.string());
#else
    throw ParseError(path.string(), 0, "PNG input is not enabled in this build");
#endif
  }
  return decode_pnm(bytes, path.string());
}

void write_pnm(const std::filesystem::path& path, const Image8& image) {
  const std::vector<std::uint8_t> bytes = encode_pnm(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DatasetError(path.string() + ": write failed");
}

Tensor<float> to_tensor(const Image8& image) {
  Tensor<float> t(Shape::nchw(1, image.channels, image.height, image.width));
  const std::size_t plane = static_cast<std::size_t>(image.width) * image.height;
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < image.channels; ++c)
      t[static_cast<std::size_t>(c) * plane + i] =
          static_cast<float>(image.pixels[i * image.channels + c]) / 255.0f;
  return t;
}

Image8 from_tensor(const Tensor<float>& t, int n) {
  require_rank4(t.shape(), "image tensor");
  const Shape& s = t.shape();
  if (s.c() != 1 && s.c() != 3) throw ShapeError("image tensors have 1 or 3 channels, got " + s.str());
  if (n < 0 || n >= s.n()) throw ArgumentError("image index out of range");
  Image8 img;
  img.width = s.w();
  img.height = s.h();
  img.channels = s.c();
  const std::size_t plane = static_cast<std::size_t>(s.w()) * s.h();
  img.pixels.resize(plane * img.channels);
  const float* base = t.data() + static_cast<std::size_t>(n) * s.c() * plane;
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < img.channels; ++c) {
      const float v = std::clamp(base[static_cast<std::size_t>(c) * plane + i], 0.0f, 1.0f);
      img.pixels[i * img.channels + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  return img;
}

Tensor<float> load_image(const std::filesystem::path& path) { return to_tensor(read_image8(path)); }

void save_image(const std::filesystem::path& path, const Tensor<float>& t, int n) {
  write_pnm(path, from_tensor(t, n));
}

}  // namespace acf::io
