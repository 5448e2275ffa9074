#include "acf/app/train.hpp"

#include <algorithm>
#include <cmath>

#include "acf/error.hpp"
#include "acf/metrics/metrics.hpp"
#include "acf/rng.hpp"
#include "acf/simd/kernels.hpp"

namespace acf::app {

void Sgd::step(ad::ParamStore<float>& store, const ad::GradientMap<float>& grads, double lr) {
  const auto& kern = simd::kernels<float>();
  for (auto& [name, w] : store.params) {
    auto g = grads.find(name);
    if (g == grads.end()) continue;
    auto [it, fresh] = velocity_.try_emplace(name, Tensor<float>::zeros(w.shape()));
    Tensor<float>& v = it->second;
    const float mu = static_cast<float>(momentum_), wd = static_cast<float>(weight_decay_);
    float* vp = v.data();
    float* wp = w.data();
    const float* gp = g->second.data();
    for (std::size_t i = 0; i < w.size(); ++i) vp[i] = mu * vp[i] + (gp[i] + wd * wp[i]);
    kern.axpy(w.size(), static_cast<float>(-lr), vp, wp);
  }
}

double learning_rate(int step, int total, double base, double warmup_fraction) {
  if (total <= 0) return 0.0;
  const int warm = std::max(1, static_cast<int>(std::ceil(warmup_fraction * total)));
  if (step < warm) return base * (step + 1) / warm;
  if (total == warm) return base;
  return base * static_cast<double>(total - step) / static_cast<double>(total - warm);
}

namespace {

struct Batch {
  Tensor<float> rgb, depth, gt;
};

Batch make_batch(const std::vector<RgbdSample>& data, std::size_t begin, std::size_t end,
                 const std::vector<bool>& flip) {
  std::vector<const Tensor<float>*> rgb, depth, gt;
  for (std::size_t i = begin; i < end; ++i) {
    rgb.push_back(&data[i].rgb);
    depth.push_back(&data[i].depth);
    gt.push_back(&data[i].gt);
  }
  return {stack(rgb, flip), stack(depth, flip), stack(gt, flip)};
}

}  // namespace

EvalSummary evaluate_model(const ad::ParamStore<float>& weights, const nn::ModelConfig& cfg,
                           const std::vector<RgbdSample>& data) {
  if (data.empty()) throw ArgumentError("evaluate_model: empty dataset");
  ad::ParamStore<float> store = weights;
  ad::Tape<float> tape;
  tape.set_recording(false);
  nn::Context<float> ctx(tape, store, nn::Phase::eval);
  const Batch b = make_batch(data, 0, data.size(), {});
  const auto out = nn::resinres_forward(ctx, cfg, ctx.constant(b.rgb), ctx.constant(b.depth));
  EvalSummary s;
  s.loss = nn::total_loss(out, b.gt).breakdown;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int n = static_cast<int>(i);
    const auto p = metrics::GrayMap::from_tensor(out.sal_f.value(), n);
    const auto g = metrics::GrayMap::from_tensor(b.gt, n);
    s.f_max += metrics::f_measure(metrics::pr_curve(p, g), p, g).f_max;
  }
  s.f_max /= static_cast<double>(data.size());
  return s;
}

TrainResult train_toy(const std::vector<RgbdSample>& data, const TrainOptions& options) {
  if (data.empty()) throw DatasetError("train-toy: empty dataset");
  if (options.epochs < 0) throw ArgumentError("train-toy: epochs must be >= 0");
  if (options.batch_size < 1) throw ArgumentError("train-toy: batch size must be >= 1");

  TrainResult result;
  result.weights = nn::init_model(options.model, options.seed);
  const std::size_t n = data.size();
  const auto bs = static_cast<std::size_t>(options.batch_size);
  const int per_epoch = static_cast<int>((n + bs - 1) / bs);
  const int total = options.epochs * per_epoch;

  Sgd sgd(options.momentum, options.weight_decay);
  Rng rng(derive_seed(options.seed, "train/flip"));
  int step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t begin = 0; begin < n; begin += bs, ++step) {
      const std::size_t end = std::min(n, begin + bs);
      std::vector<bool> flip(end - begin);
      for (std::size_t i = 0; i < flip.size(); ++i) flip[i] = rng.bernoulli(options.flip_probability);
      const Batch b = make_batch(data, begin, end, flip);

      ad::Tape<float> tape;
      nn::Context<float> ctx(tape, result.weights, nn::Phase::train);
      const auto out = nn::resinres_forward(ctx, options.model, ctx.constant(b.rgb), ctx.constant(b.depth));
      const auto loss = nn::total_loss(out, b.gt);
      if (!std::isfinite(loss.breakdown.total))
        throw EvaluationError("train-toy: non-finite loss at step " + std::to_string(step));
      const auto grads = tape.backward(loss.total);
      const double lr = learning_rate(step, total, options.base_lr, options.warmup_fraction);
      sgd.step(result.weights, grads, lr);
      if (options.on_step) options.on_step(step, total, lr, loss.breakdown.total);
    }
  }
  result.steps = step;
  const EvalSummary s = evaluate_model(result.weights, options.model, data);
  result.final_loss = s.loss;
  result.train_f_max = s.f_max;
  return result;
}

}  // namespace acf::app
