#include "acf/nn/blocks.hpp"

namespace acf::nn {

template <class T>
Var<T> cbr(Context<T>& ctx, const std::string& name, Var<T> x, const CbrSpec& spec) {
  require_rank4(x.shape(), "cbr input");
  if (spec.kernel < 1 || spec.kernel % 2 == 0) throw ArgumentError("cbr: kernel must be odd");
  if (spec.out_channels < 1) throw ArgumentError("cbr: out_channels must be positive");
  const int cin = x.shape().c();
  const int c = spec.out_channels;
  const Shape kshape = Shape::nchw(c, cin, spec.kernel, spec.kernel);
  Var<T> w = ctx.param(name + ".conv.weight", kshape, Init::he(cin * spec.kernel * spec.kernel));
  const ad::ConvGeometry geo{spec.stride, spec.dilation * (spec.kernel - 1) / 2, spec.dilation};
  Var<T> y = ad::conv2d(x, w, std::nullopt, geo);

  const Shape pshape{c};
  Var<T> gamma = ctx.param(name + ".bn.gamma", pshape, Init::ones());
  Var<T> beta = ctx.param(name + ".bn.beta", pshape, Init::zeros());
  Tensor<T>& rm = ctx.buffer(name + ".bn.running_mean", pshape, T(0));
  Tensor<T>& rv = ctx.buffer(name + ".bn.running_var", pshape, T(1));
  y = ad::batchnorm2d(y, gamma, beta, rm, rv, ctx.bn_mode());
  return ad::activation(y, spec.act);
}

void EncoderConfig::validate() const {
  for (int c : stage_channels)
    if (c < 1) throw ArgumentError("encoder: stage widths must be positive");
  for (int b : blocks_per_stage)
    if (b < 1) throw ArgumentError("encoder: blocks per stage must be positive");
  if (input_channels < 1) throw ArgumentError("encoder: input_channels must be positive");
  const bool ok = skip_stages.empty() || skip_stages == std::set<int>{1} ||
                  skip_stages == std::set<int>{1, 2};
  if (!ok) throw ArgumentError("encoder: skip_stages must be {}, {1} or {1,2}");
}

int EncoderConfig::first_stage() const { return static_cast<int>(skip_stages.size()) + 1; }

int EncoderConfig::stage_input_channels(int stage) const {
  if (stage < 1 || stage > 5) throw ArgumentError("encoder: stage index must be 1..5");
  return stage == 1 ? input_channels : stage_channels[static_cast<std::size_t>(stage - 2)];
}

template <class T>
Var<T> SideOutputs<T>::at(int stage) const {
  if (stage < 1 || stage > 5 || !has(stage))
    throw ArgumentError("side output s" + std::to_string(stage) + " is absent");
  return *s[static_cast<std::size_t>(stage - 1)];
}

namespace {

template <class T>
Var<T> residual_block(Context<T>& ctx, const std::string& name, Var<T> x, int out_channels,
                      int stride) {
  Var<T> y = cbr(ctx, name + ".c1", x, {out_channels, 3, 1, Activation::relu, stride});
  y = cbr(ctx, name + ".c2", y, {out_channels, 3, 1, Activation::none, 1});
  Var<T> shortcut = x;
  if (stride != 1 || x.shape().c() != out_channels)
    shortcut = cbr(ctx, name + ".proj", x, {out_channels, 1, 1, Activation::none, stride});
  return ad::relu(ad::add(y, shortcut));
}

}  // namespace

template <class T>
Var<T> encoder_stage(Context<T>& ctx, const std::string& prefix, Var<T> x, const EncoderConfig& cfg,
                     int stage) {
  cfg.validate();
  require_rank4(x.shape(), "encoder stage input");
  const int expected = cfg.stage_input_channels(stage);
  if (x.shape().c() != expected)
    throw ShapeError("encoder stage " + std::to_string(stage) + " expects " +
                     std::to_string(expected) + " input channels, got " +
                     std::to_string(x.shape().c()));
  if (x.shape().h() % 2 != 0 || x.shape().w() % 2 != 0)
    throw GeometryError("encoder stage " + std::to_string(stage) + " needs even H and W");
  const auto si = static_cast<std::size_t>(stage - 1);
  const int width = cfg.stage_channels[si];
  const std::string name = prefix + ".s" + std::to_string(stage);
  Var<T> y = x;
  for (int b = 0; b < cfg.blocks_per_stage[si]; ++b)
    y = residual_block(ctx, name + ".b" + std::to_string(b), y, width, b == 0 ? 2 : 1);
  return y;
}

template <class T>
SideOutputs<T> encoder_forward(Context<T>& ctx, const std::string& prefix, Var<T> x,
                               const EncoderConfig& cfg) {
  cfg.validate();
  require_rank4(x.shape(), "encoder input");
  const int first = cfg.first_stage();
  // The input sits at stride 2^(first−1); it must reach stride 32 evenly.
  const int remaining = 32 >> (first - 1);
  if (x.shape().h() % remaining != 0 || x.shape().w() % remaining != 0)
    throw GeometryError("encoder input " + x.shape().str() + " must have H and W divisible by " +
                        std::to_string(remaining));
  SideOutputs<T> out;
  Var<T> y = x;
  for (int stage = first; stage <= 5; ++stage) {
    y = encoder_stage(ctx, prefix, y, cfg, stage);
    out.s[static_cast<std::size_t>(stage - 1)] = y;
  }
  return out;
}

template <class T>
FpnOutputs<T> fpn_decode(Context<T>& ctx, const std::string& prefix, const SideOutputs<T>& sides,
                         const FpnOptions& options) {
  const int w = options.width;
  auto lateral = [&](int k) {
    return cbr(ctx, prefix + ".lat" + std::to_string(k), sides.at(k), {w, 1, 1, Activation::relu});
  };
  const Var<T> l5 = lateral(5), l4 = lateral(4), l3 = lateral(3), l2 = lateral(2);
  FpnOutputs<T> out;
  out.f4 = cbr(ctx, prefix + ".c4", ad::add(l4, ad::upsample_bilinear(l5, 2)),
               {w, 3, 1, options.tap_activation});
  out.f3 = cbr(ctx, prefix + ".c3", ad::add(l3, ad::upsample_bilinear(out.f4, 2)),
               {w, 3, 1, options.tap_activation});
  out.f = cbr(ctx, prefix + ".c2", ad::add(l2, ad::upsample_bilinear(out.f3, 2)),
              {w, 3, 1, Activation::relu});
  return out;
}

template <class T>
Var<T> prediction_head(Context<T>& ctx, const std::string& prefix, Var<T> features, int target_h,
                       int target_w) {
  const Shape& fs = features.shape();
  require_rank4(fs, "prediction head input");
  if (fs.h() * 4 != target_h || fs.w() * 4 != target_w)
    throw GeometryError("prediction head: stride-4 features " + fs.str() + " do not map to " +
                        std::to_string(target_h) + "x" + std::to_string(target_w));
  Var<T> w = ctx.param(prefix + ".weight", Shape::nchw(1, fs.c(), 1, 1), Init::he(fs.c()));
  Var<T> b = ctx.param(prefix + ".bias", Shape{1}, Init::zeros());
  Var<T> logits = ad::conv2d(features, w, b, {});
  return ad::sigmoid(ad::upsample_bilinear(logits, 4));
}

#define ACF_INSTANTIATE_BLOCKS(T)                                                             \
  template Var<T> cbr<T>(Context<T>&, const std::string&, Var<T>, const CbrSpec&);           \
  template struct SideOutputs<T>;                                                             \
  template Var<T> encoder_stage<T>(Context<T>&, const std::string&, Var<T>,                   \
                                   const EncoderConfig&, int);                                \
  template SideOutputs<T> encoder_forward<T>(Context<T>&, const std::string&, Var<T>,         \
                                             const EncoderConfig&);                           \
  template FpnOutputs<T> fpn_decode<T>(Context<T>&, const std::string&, const SideOutputs<T>&, \
                                       const FpnOptions&);                                    \
  template Var<T> prediction_head<T>(Context<T>&, const std::string&, Var<T>, int, int);

ACF_INSTANTIATE_BLOCKS(float)
ACF_INSTANTIATE_BLOCKS(double)

#undef ACF_INSTANTIATE_BLOCKS

}  // namespace acf::nn
