#include "acf/nn/acg_fusion.hpp"

namespace acf::nn {

GateMode GateMode::forced(const std::array<double, 6>& values) {
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("forced gate values must lie in [0,1]");
  GateMode m;
  m.forced_ = values;
  return m;
}

template <class T>
GateVars<T> gate_compute(Context<T>& ctx, const std::string& prefix, Var<T> s5_r, Var<T> s5_d,
                         int kernel) {
  require_rank4(s5_r.shape(), "gate input");
  require_rank4(s5_d.shape(), "gate input");
  const Shape& a = s5_r.shape();
  const Shape& b = s5_d.shape();
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
    throw ShapeError("gate_compute: stage-5 outputs differ in N/H/W: " + a.str() + " vs " + b.str());
  Var<T> joint = ad::concat_channels({s5_r, s5_d});
  auto head = [&](const std::string& name) {
    Var<T> y = cbr(ctx, prefix + "." + name, joint, {3, kernel, 1, Activation::sigmoid});
    return ad::pool(y, ad::PoolKind::gap_spatial);
  };
  return {head("head_r"), head("head_d")};
}

template <class T>
Var<T> assemble_stage_input(int k, Var<T> hybrid, Var<T> rgb, Var<T> depth, const GateVars<T>& gates) {
  if (k < 1 || k > 3) throw ArgumentError("fusion stage index must be 1..3");
  for (const Var<T>* v : {&rgb, &depth}) {
    require_rank4(v->shape(), "stage-input guidance");
    if (v->shape().h() != hybrid.shape().h() || v->shape().w() != hybrid.shape().w() ||
        v->shape().n() != hybrid.shape().n())
      throw ShapeError("stage " + std::to_string(k) + " input: guidance " + v->shape().str() +
                       " does not match hybrid " + hybrid.shape().str());
  }
  Var<T> gr = ad::slice_channels(gates.g_r, k - 1, 1);
  Var<T> gd = ad::slice_channels(gates.g_d, k - 1, 1);
  return ad::concat_channels({hybrid, ad::mul(rgb, gr), ad::mul(depth, gd)});
}

template <class T>
StageInputs<T> assemble_stage_inputs(Var<T> f2, Var<T> r, Var<T> d, Var<T> r3p, Var<T> d3p,
                                     Var<T> r4p, Var<T> d4p, Var<T> f3, Var<T> f4,
                                     const GateVars<T>& gates) {
  return {assemble_stage_input(1, f2, r, d, gates), assemble_stage_input(2, f3, r3p, d3p, gates),
          assemble_stage_input(3, f4, r4p, d4p, gates)};
}

EncoderConfig ModelConfig::single_modality_encoder(int input_channels) const {
  EncoderConfig e;
  e.stage_channels = stage_channels;
  e.blocks_per_stage = blocks_per_stage;
  e.input_channels = input_channels;
  return e;
}

EncoderConfig ModelConfig::fusion_encoder() const {
  EncoderConfig e = single_modality_encoder(3);
  e.skip_stages = {1, 2};
  return e;
}

namespace {

template <class T>
std::vector<double> per_item(const Var<T>& v) {
  return std::vector<double>(v.value().values().begin(), v.value().values().end());
}

template <class T>
Var<T> zeros_like(Context<T>& ctx, const Var<T>& v) {
  return ctx.constant(Tensor<T>::zeros(v.shape()));
}

}  // namespace

template <class T>
std::vector<GateWeights> ResinResOutput<T>::gate_values() const {
  const std::vector<double> r = per_item(gates.g_r), d = per_item(gates.g_d);
  std::vector<GateWeights> out(r.size() / 3);
  for (std::size_t b = 0; b < out.size(); ++b)
    for (std::size_t k = 0; k < 3; ++k) {
      out[b].g_r[k] = r[b * 3 + k];
      out[b].g_d[k] = d[b * 3 + k];
    }
  return out;
}

template <class T>
std::vector<std::array<double, 5>> ResinResOutput<T>::tam_gate_values(const std::string& which) const {
  const std::vector<double> g = per_item(intermediates.at("tam_" + which + ".gates"));
  std::vector<std::array<double, 5>> out(g.size() / 5);
  for (std::size_t b = 0; b < out.size(); ++b)
    for (std::size_t k = 0; k < 5; ++k) out[b][k] = g[b * 5 + k];
  return out;
}

template <class T>
ResinResOutput<T> resinres_forward(Context<T>& ctx, const ModelConfig& cfg, Var<T> rgb, Var<T> depth,
                                   const ForwardOptions& options) {
  require_rank4(rgb.shape(), "rgb input");
  require_rank4(depth.shape(), "depth input");
  if (rgb.shape().c() != 3) throw ShapeError("rgb input must have 3 channels");
  if (depth.shape().c() != 1) throw ShapeError("depth input must have 1 channel");
  const int n = rgb.shape().n(), h = rgb.shape().h(), w = rgb.shape().w();
  if (depth.shape().n() != n || depth.shape().h() != h || depth.shape().w() != w)
    throw ShapeError("rgb " + rgb.shape().str() + " and depth " + depth.shape().str() +
                     " must share N, H, W");
  if (h % 32 != 0 || w % 32 != 0)
    throw GeometryError("input size " + std::to_string(h) + "x" + std::to_string(w) +
                        " must be a multiple of 32");

  ResinResOutput<T> out;
  auto& im = out.intermediates;
  const FpnOptions gated_fpn{cfg.width, Activation::sigmoid};
  TamOptions branch_tam{cfg.width, Activation::sigmoid, options.tam_forced_gates};

  // phase 1: single-modality encoder/decoder pairs
  const SideOutputs<T> enc_r = encoder_forward(ctx, "enc1_r", rgb, cfg.single_modality_encoder(3));
  const SideOutputs<T> enc_d = encoder_forward(ctx, "enc1_d", depth, cfg.single_modality_encoder(1));
  const FpnOutputs<T> dec_r = fpn_decode(ctx, "dec1_r", enc_r, gated_fpn);
  const FpnOutputs<T> dec_d = fpn_decode(ctx, "dec1_d", enc_d, gated_fpn);
  const TamOutput<T> tam_r = tam_forward(ctx, "tam_r", dec_r.f, branch_tam);
  const TamOutput<T> tam_d = tam_forward(ctx, "tam_d", dec_d.f, branch_tam);

  im["S5_r"] = enc_r.at(5);
  im["S5_d"] = enc_d.at(5);
  im["R2p"] = dec_r.f;
  im["R3p"] = dec_r.f3;
  im["R4p"] = dec_r.f4;
  im["D2p"] = dec_d.f;
  im["D3p"] = dec_d.f3;
  im["D4p"] = dec_d.f4;
  im["R"] = tam_r.out;
  im["D"] = tam_d.out;
  im["tam_r.gates"] = tam_r.gates;
  im["tam_d.gates"] = tam_d.gates;

  // gates
  if (options.gate_mode.is_forced()) {
    const auto& v = options.gate_mode.values();
    Tensor<T> gr(Shape::nchw(n, 3, 1, 1)), gd(Shape::nchw(n, 3, 1, 1));
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < 3; ++k) {
        gr.at(b, k, 0, 0) = static_cast<T>(v[static_cast<std::size_t>(k)]);
        gd.at(b, k, 0, 0) = static_cast<T>(v[static_cast<std::size_t>(k + 3)]);
      }
    out.gates = {ctx.constant(std::move(gr)), ctx.constant(std::move(gd))};
  } else {
    out.gates = gate_compute(ctx, "acg", enc_r.at(5), enc_d.at(5), cfg.gate_kernel);
  }

  Var<T> r = tam_r.out, d = tam_d.out, r3p = dec_r.f3, d3p = dec_d.f3, r4p = dec_r.f4, d4p = dec_d.f4;
  if (options.zero_guidance) {
    for (Var<T>* v : {&r, &d, &r3p, &d3p, &r4p, &d4p}) *v = zeros_like(ctx, *v);
  }

  // phase 2: Encoder2-F fed by gated stage inputs
  const EncoderConfig fusion = cfg.fusion_encoder();
  Var<T> f2 = cbr(ctx, "enc2.fuse_low", ad::concat_channels({dec_r.f, dec_d.f}),
                  {cfg.width, 3, 1, Activation::relu});
  auto adapt = [&](int k, Var<T> x, int stage) {
    return cbr(ctx, "enc2.adapt" + std::to_string(k), x,
               {fusion.stage_input_channels(stage), 1, 1, Activation::relu});
  };
  Var<T> i1 = assemble_stage_input(1, f2, r, d, out.gates);
  Var<T> f3 = encoder_stage(ctx, "enc2", adapt(1, i1, 3), fusion, 3);
  Var<T> i2 = assemble_stage_input(2, f3, r3p, d3p, out.gates);
  Var<T> f4 = encoder_stage(ctx, "enc2", adapt(2, i2, 4), fusion, 4);
  Var<T> i3 = assemble_stage_input(3, f4, r4p, d4p, out.gates);
  Var<T> f5 = encoder_stage(ctx, "enc2", adapt(3, i3, 5), fusion, 5);

  SideOutputs<T> sides2;
  sides2.s[1] = f2;
  sides2.s[2] = f3;
  sides2.s[3] = f4;
  sides2.s[4] = f5;
  const FpnOutputs<T> dec2 = fpn_decode(ctx, "dec2", sides2, {cfg.width, Activation::relu});
  const TamOutput<T> tam_f =
      tam_forward(ctx, "tam_f", dec2.f, {cfg.width, Activation::relu, options.tam_forced_gates});

  im["F2"] = f2;
  im["F3"] = f3;
  im["F4"] = f4;
  im["F5"] = f5;
  im["I1"] = i1;
  im["I2"] = i2;
  im["I3"] = i3;
  im["F"] = dec2.f;
  im["F_out"] = tam_f.out;
  im["tam_f.gates"] = tam_f.gates;

  out.sal_r = prediction_head(ctx, "head_r", tam_r.out, h, w);
  out.sal_d = prediction_head(ctx, "head_d", tam_d.out, h, w);
  out.sal_f = prediction_head(ctx, "head_f", tam_f.out, h, w);
  return out;
}

ad::ParamStore<float> init_model(const ModelConfig& cfg, std::uint64_t seed) {
  ad::ParamStore<float> store;
  ad::Tape<float> tape;
  tape.set_recording(false);
  Context<float> ctx(tape, store, Phase::eval);
  ctx.enable_materialize(seed);
  Var<float> rgb = ctx.constant(Tensor<float>::zeros(Shape::nchw(1, 3, 32, 32)));
  Var<float> depth = ctx.constant(Tensor<float>::zeros(Shape::nchw(1, 1, 32, 32)));
  resinres_forward(ctx, cfg, rgb, depth);
  return store;
}

#define ACF_INSTANTIATE_FUSION(T)                                                               \
  template GateVars<T> gate_compute<T>(Context<T>&, const std::string&, Var<T>, Var<T>, int);  \
  template Var<T> assemble_stage_input<T>(int, Var<T>, Var<T>, Var<T>, const GateVars<T>&);    \
  template StageInputs<T> assemble_stage_inputs<T>(Var<T>, Var<T>, Var<T>, Var<T>, Var<T>,     \
                                                   Var<T>, Var<T>, Var<T>, Var<T>,             \
                                                   const GateVars<T>&);                        \
  template struct ResinResOutput<T>;                                                           \
  template ResinResOutput<T> resinres_forward<T>(Context<T>&, const ModelConfig&, Var<T>,      \
                                                 Var<T>, const ForwardOptions&);

ACF_INSTANTIATE_FUSION(float)
ACF_INSTANTIATE_FUSION(double)

#undef ACF_INSTANTIATE_FUSION

}  // namespace acf::nn
