#include "acf/io/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "acf/error.hpp"

namespace acf::io {
namespace {


void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const std::string& name) : b_(bytes), name_(name) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

  std::uint64_t le(int bytes, const char* what) {
    need(static_cast<std::size_t>(bytes), what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  [[noreturn]] void fail(std::size_t at, const std::string& what) const { throw ParseError(name_, at, what); }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw ParseError(name_, b_.size(), std::string("truncated ") + what);
  }

  std::span<const std::uint8_t> b_;
  const std::string& name_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_weights(const ad::ParamStore<float>& store) {
  std::map<std::string, const Tensor<float>*> all;
  for (const auto& [k, v] : store.params) all.emplace(k, &v);
  for (const auto& [k, v] : store.buffers)
    if (!all.emplace(k, &v).second) throw ArgumentError("duplicate weight name: " + k);

  std::vector<std::uint8_t> out{'A', 'C', 'F', 'W', kWeightsVersion};
  put_le(out, all.size(), 4);
  for (const auto& [name, t] : all) {
    if (name.size() > 0xffff) throw ArgumentError("weight name too long: " + name);
    put_le(out, name.size(), 2);
    out.insert(out.end(), name.begin(), name.end());
    const Shape& s = t->shape();
    put_u8(out, static_cast<std::uint8_t>(s.rank()));
    for (int i = 0; i < s.rank(); ++i) put_le(out, static_cast<std::uint32_t>(s[i]), 4);
    for (float v : t->values()) put_le(out, std::bit_cast<std::uint32_t>(v), 4);
  }
  return out;
}

ad::ParamStore<float> decode_weights(std::span<const std::uint8_t> bytes, const std::string& name) {
  Reader r(bytes, name);
  const auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), "ACFW", 4) != 0) r.fail(0, "bad magic (expected ACFW)");
  if (const auto version = r.le(1, "version"); version != kWeightsVersion)
    r.fail(4, "unsupported version " + std::to_string(version));
  const std::uint64_t count = r.le(4, "entry count");

  ad::ParamStore<float> store;
  for (std::uint64_t e = 0; e < count; ++e) {
    const std::size_t entry_pos = r.pos();
    const auto len = static_cast<std::size_t>(r.le(2, "name length"));
    if (len == 0) r.fail(entry_pos, "empty weight name");
    const auto raw = r.take(len, "name");
    std::string key(raw.begin(), raw.end());
    const std::size_t rank_pos = r.pos();
    const auto rank = static_cast<int>(r.le(1, "rank"));
    if (rank < 1 || rank > 4) r.fail(rank_pos, "rank must be 1..4, got " + std::to_string(rank));
    std::vector<int> dims;
    std::size_t numel = 1;
    for (int i = 0; i < rank; ++i) {
      const std::size_t dim_pos = r.pos();
      const std::uint64_t d = r.le(4, "dims");
      if (d == 0 || d > 0x7fffffff) r.fail(dim_pos, "invalid dimension in " + key);
      dims.push_back(static_cast<int>(d));
      numel *= d;
      if (numel > r.remaining()) r.fail(dim_pos, "truncated values of " + key);
    }
    const auto payload = r.take(numel * 4, "values");
    std::vector<float> values(numel);
    for (std::size_t i = 0; i < numel; ++i) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(payload[i * 4 + b]) << (8 * b);
      values[i] = std::bit_cast<float>(u);
    }
    auto& target = ad::ParamStore<float>::is_buffer_name(key) ? store.buffers : store.params;
    if (store.params.contains(key) || store.buffers.contains(key))
      r.fail(entry_pos, "duplicate weight name " + key);
    target.emplace(std::move(key), Tensor<float>(Shape(std::span<const int>(dims)), std::move(values)));
  }
  if (r.remaining() != 0) r.fail(r.pos(), "trailing bytes after last entry");
  return store;
}

void save_weights(const std::filesystem::path& path, const ad::ParamStore<float>& store) {
  const auto bytes = encode_weights(store);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DatasetError(path.string() + ": write failed");
}

ad::ParamStore<float> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_weights(bytes, path.string());
}

}  // namespace acf::io
