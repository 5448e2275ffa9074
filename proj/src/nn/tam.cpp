#include "acf/nn/tam.hpp"

#include <vector>

#include "acf/nn/blocks.hpp"

namespace acf::nn {
namespace {

void check_width(const Shape& s, int width) {
  require_rank4(s, "TAM input");
  if (s.c() != width)
    throw ShapeError("TAM expects " + std::to_string(width) + " channels, got " + std::to_string(s.c()));
}

}  // namespace

template <class T>
TamBranches<T> tam_branches(Context<T>& ctx, const std::string& prefix, Var<T> input, int width) {
  check_width(input.shape(), width);
  TamBranches<T> out;
  for (int i = 0; i < kTamBranches; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Activation act = kTamDilations[k] > 1 ? Activation::sigmoid : Activation::relu;
    out[k] = cbr(ctx, prefix + ".branch" + std::to_string(i + 1), input,
                 {width, kTamKernels[k], kTamDilations[k], act});
  }
  return out;
}

template <class T>
Var<T> tam_gates(Context<T>& ctx, const std::string& prefix, const TamBranches<T>& branches) {
  std::vector<Var<T>> gates;
  for (int i = 0; i < kTamBranches; ++i) {
    const Var<T>& f = branches[static_cast<std::size_t>(i)];
    require_rank4(f.shape(), "TAM branch");
    const int n = f.shape().n(), c = f.shape().c();
    const std::string name = prefix + ".mlp" + std::to_string(i + 1);
    Var<T> v = ad::reshape(ad::pool(f, ad::PoolKind::gap_spatial), Shape{n, c});
    Var<T> w1 = ctx.param(name + ".fc1.weight", Shape{kTamHidden, c}, Init::he(c));
    Var<T> b1 = ctx.param(name + ".fc1.bias", Shape{kTamHidden}, Init::zeros());
    Var<T> w2 = ctx.param(name + ".fc2.weight", Shape{1, kTamHidden}, Init::he(kTamHidden));
    Var<T> b2 = ctx.param(name + ".fc2.bias", Shape{1}, Init::zeros());
    Var<T> h = ad::relu(ad::linear(v, w1, b1));
    Var<T> g = ad::sigmoid(ad::linear(h, w2, b2));
    gates.push_back(ad::reshape(g, Shape::nchw(n, 1, 1, 1)));
  }
  return ad::concat_channels(std::span<const Var<T>>(gates));
}

template <class T>
TamOutput<T> tam_combine(Context<T>& ctx, const std::string& prefix, Var<T> input,
                         const TamBranches<T>& branches, Var<T> gates, const TamOptions& options) {
  check_width(input.shape(), options.width);
  if (!(gates.shape() == Shape::nchw(input.shape().n(), kTamBranches, 1, 1)))
    throw ShapeError("TAM gates must be N×5×1×1, got " + gates.shape().str());
  std::vector<Var<T>> scaled;
  for (int i = 0; i < kTamBranches; ++i)
    scaled.push_back(ad::mul(branches[static_cast<std::size_t>(i)], ad::slice_channels(gates, i, 1)));

  TamOutput<T> out;
  out.gates = gates;
  out.f_ta = cbr(ctx, prefix + ".fuse", ad::concat_channels(std::span<const Var<T>>(scaled)),
                 {options.width, 3, 1, Activation::relu});

  Var<T> pooled = ad::concat_channels({ad::pool(out.f_ta, ad::PoolKind::gap_channel),
                                       ad::pool(out.f_ta, ad::PoolKind::gmp_channel)});
  Var<T> sw = ctx.param(prefix + ".spatial.weight", Shape::nchw(1, 2, 3, 3), Init::he(2 * 9));
  Var<T> sb = ctx.param(prefix + ".spatial.bias", Shape{1}, Init::zeros());
  out.attention = ad::sigmoid(ad::conv2d(pooled, sw, sb, {1, 1, 1}));
  out.f_sa = ad::mul(out.f_ta, out.attention);
  out.out = cbr(ctx, prefix + ".out", ad::add(input, out.f_sa),
                {options.width, 3, 1, options.out_activation});
  return out;
}

template <class T>
TamOutput<T> tam_forward(Context<T>& ctx, const std::string& prefix, Var<T> input,
                         const TamOptions& options) {
  const TamBranches<T> branches = tam_branches(ctx, prefix, input, options.width);
  Var<T> gates;
  if (options.forced_gates) {
    const int n = input.shape().n();
    Tensor<T> g(Shape::nchw(n, kTamBranches, 1, 1));
    for (int b = 0; b < n; ++b)
      for (int i = 0; i < kTamBranches; ++i)
        g.at(b, i, 0, 0) = static_cast<T>((*options.forced_gates)[static_cast<std::size_t>(i)]);
    gates = ctx.constant(std::move(g));
  } else {
    gates = tam_gates(ctx, prefix, branches);
  }
  return tam_combine(ctx, prefix, input, branches, gates, options);
}

#define ACF_INSTANTIATE_TAM(T)                                                                   \
  template TamBranches<T> tam_branches<T>(Context<T>&, const std::string&, Var<T>, int);         \
  template Var<T> tam_gates<T>(Context<T>&, const std::string&, const TamBranches<T>&);          \
  template TamOutput<T> tam_combine<T>(Context<T>&, const std::string&, Var<T>,                  \
                                       const TamBranches<T>&, Var<T>, const TamOptions&);        \
  template TamOutput<T> tam_forward<T>(Context<T>&, const std::string&, Var<T>, const TamOptions&);

ACF_INSTANTIATE_TAM(float)
ACF_INSTANTIATE_TAM(double)

#undef ACF_INSTANTIATE_TAM

}  // namespace acf::nn
