#include "acf/app/gradcheck.hpp"

#include <cmath>

#include "acf/app/data.hpp"
#include "acf/nn/supervision.hpp"
#include "acf/rng.hpp"

namespace acf::app {

ad::GradCheckReport check_network(const NetworkCheckOptions& o) {
  const nn::ModelConfig cfg;
  const RgbdSample s = make_synthetic_sample(o.seed, 0, o.size);
  const Tensor<double> rgb = s.rgb.cast<double>(), depth = s.depth.cast<double>(), gt = s.gt.cast<double>();
  ad::ParamStore<double> params = nn::init_model(cfg, o.seed).cast<double>();
  const ad::LossFn loss = [&](ad::Tape<double>& tape, ad::ParamStore<double>& store) {
    nn::Context<double> ctx(tape, store, nn::Phase::train);
    const auto out = nn::resinres_forward(ctx, cfg, ctx.constant(rgb), ctx.constant(depth));
    return nn::total_loss(out, gt).total;
  };
  ad::GradCheckOptions g;
  g.step = o.step;
  g.tolerance = o.tolerance;
  g.samples = o.samples;
  g.seed = derive_seed(o.seed, "gradcheck/coordinates");
  g.abs_floor = o.abs_floor;
  return ad::finite_diff_check(loss, params, g);
}

namespace {

Tensor<double> random_tensor(Rng& rng, Shape shape, double lo, double hi, bool away_from_zero = false) {
  Tensor<double> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = rng.uniform(lo, hi);
    if (away_from_zero && std::abs(v) < 0.1) v = v < 0 ? v - 0.1 : v + 0.1;
    t[i] = v;
  }
  return t;
}

Tensor<double> random_mask(Rng& rng, Shape shape) {
  Tensor<double> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
  return t;
}

}  // namespace

std::vector<NamedReport> check_elementwise(std::uint64_t seed, double tolerance) {
  Rng rng(derive_seed(seed, "gradcheck/elementwise"));
  ad::GradCheckOptions g;
  g.step = 1e-5;
  g.tolerance = tolerance;
  g.abs_floor = 1e-8;
  g.seed = seed;
  std::vector<NamedReport> out;
  auto run = [&](const std::string& name, ad::ParamStore<double> params, const ad::LossFn& fn) {
    g.samples = params.parameter_count();
    out.push_back({name, ad::finite_diff_check(fn, params, g)});
  };

  {
    ad::ParamStore<double> p;
    p.params["a"] = random_tensor(rng, Shape::nchw(2, 3, 4, 4), -3, 3);
    p.params["b"] = random_tensor(rng, Shape::nchw(2, 3, 1, 1), -1, 1);
    run("sigmoid_mul_broadcast", std::move(p), [](ad::Tape<double>& t, ad::ParamStore<double>& s) {
      ad::Var<double> a = t.parameter("a", s.params.at("a"));
      ad::Var<double> b = t.parameter("b", s.params.at("b"));
      return ad::mean(ad::add(ad::mul(ad::sigmoid(a), b), ad::scale(a, 0.5)));
    });
  }
  {
    ad::ParamStore<double> p;
    p.params["a"] = random_tensor(rng, Shape::nchw(1, 2, 5, 5), -1, 1, true);
    p.params["c"] = random_tensor(rng, Shape::nchw(1, 2, 5, 5), -1, 1);
    run("relu_mul_add", std::move(p), [](ad::Tape<double>& t, ad::ParamStore<double>& s) {
      ad::Var<double> a = t.parameter("a", s.params.at("a"));
      ad::Var<double> c = t.parameter("c", s.params.at("c"));
      return ad::sum(ad::mul(ad::add(ad::relu(a), c), ad::mul(a, c)));
    });
  }
  {
    ad::ParamStore<double> p;
    p.params["z"] = random_tensor(rng, Shape::nchw(2, 1, 6, 6), -4, 4);
    const Tensor<double> gt = random_mask(rng, Shape::nchw(2, 1, 6, 6));
    run("bce_iou", std::move(p), [gt](ad::Tape<double>& t, ad::ParamStore<double>& s) {
      ad::Var<double> prob = ad::sigmoid(t.parameter("z", s.params.at("z")));
      return ad::add(ad::bce_loss(prob, gt), ad::iou_loss(prob, gt));
    });
  }
  return out;
}

}  // namespace acf::app
