#include "acf/app/inference.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "acf/app/data.hpp"
#include "acf/error.hpp"
#include "acf/io/dataset.hpp"
#include "acf/io/image.hpp"
#include "acf/io/weights.hpp"

namespace acf::app {

Prediction predict(const ad::ParamStore<float>& weights, const nn::ModelConfig& cfg,
                   const Tensor<float>& rgb, const Tensor<float>& depth, const nn::ForwardOptions& options) {
  ad::ParamStore<float> store = weights;
  ad::Tape<float> tape;
  tape.set_recording(false);
  nn::Context<float> ctx(tape, store, nn::Phase::eval);
  const auto out = nn::resinres_forward(ctx, cfg, ctx.constant(rgb), ctx.constant(depth), options);
  Prediction p;
  p.saliency = out.sal_f.value();
  p.gates = out.gate_values().at(0);
  const char* names[] = {"r", "d", "f"};
  for (std::size_t k = 0; k < 3; ++k) p.tam_gates[k] = out.tam_gate_values(names[k]).at(0);
  return p;
}

std::array<double, 6> parse_gate_list(const std::string& text) {
  std::array<double, 6> v{};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t end = i < 5 ? text.find(',', pos) : text.size();
    if (end == std::string::npos) throw ArgumentError("--gates expects six comma-separated values");
    const char* first = text.data() + pos;
    const char* last = text.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, v[i]);
    if (ec != std::errc() || ptr != last || first == last)
      throw ArgumentError("--gates: cannot parse '" + std::string(first, last) + "'");
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) throw ArgumentError("--gates values must lie in [0,1]");
    pos = end + 1;
  }
  return v;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string format_gates_csv(const nn::GateWeights& g) {
  std::ostringstream os;
  os << "g1r,g2r,g3r,g1d,g2d,g3d\n";
  for (std::size_t k = 0; k < 3; ++k) os << num(g.g_r[k]) << ',';
  for (std::size_t k = 0; k < 3; ++k) os << num(g.g_d[k]) << (k < 2 ? "," : "\n");
  return os.str();
}

Prediction run_forward(const std::filesystem::path& rgb_path, const std::filesystem::path& depth_path,
                       const std::filesystem::path& weights_path, const std::filesystem::path& out_path,
                       const std::optional<std::array<double, 6>>& gate_override) {
  const Tensor<float> rgb = io::load_image(rgb_path);
  const Tensor<float> depth = io::load_image(depth_path);
  if (rgb.shape().c() != 3) throw ShapeError(rgb_path.string() + ": RGB image must have 3 channels");
  if (depth.shape().c() != 1) throw ShapeError(depth_path.string() + ": depth map must have 1 channel");
  const ad::ParamStore<float> weights = io::load_weights(weights_path);
  nn::ForwardOptions options;
  if (gate_override) options.gate_mode = nn::GateMode::forced(*gate_override);
  Prediction p = predict(weights, nn::ModelConfig{}, rgb, depth, options);
  io::save_image(out_path, p.saliency);
  return p;
}

std::string inspect_gates(const std::filesystem::path& data_dir, const std::filesystem::path& weights_path,
                          bool with_tam) {
  const io::Pairing pairing = io::pair_rgbd_dataset(data_dir);
  const ad::ParamStore<float> weights = io::load_weights(weights_path);
  std::ostringstream os;
  os << "filename,G1r,G2r,G3r,G1d,G2d,G3d";
  if (with_tam)
    for (const char* d : {"r", "d", "f"})
      for (int k = 1; k <= 5; ++k) os << ",tam_" << d << "_g" << k;
  os << '\n';
  for (const auto& m : pairing.matched) {
    const RgbdSample s = load_sample(m);
    const Prediction p = predict(weights, nn::ModelConfig{}, s.rgb, s.depth);
    os << m.files[0].filename().string();
    for (double g : p.gates.g_r) os << ',' << num(g);
    for (double g : p.gates.g_d) os << ',' << num(g);
    if (with_tam)
      for (const auto& row : p.tam_gates)
        for (double g : row) os << ',' << num(g);
    os << '\n';
  }
  return os.str();
}

}  // namespace acf::app
