#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "acf/app/data.hpp"
#include "acf/nn/supervision.hpp"

namespace acf::app {

/// SGD with momentum and L2 weight decay, PyTorch-style:
///   v ← μ·v + (g + λ·w),  w ← w − lr·v
/// Decay applies to every trainable tensor.
class Sgd {
 public:
  Sgd(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(ad::ParamStore<float>& store, const ad::GradientMap<float>& grads, double lr);

 private:
  double momentum_;
  double weight_decay_;
  std::map<std::string, Tensor<float>> velocity_;
};

/// Linear warm-up over the first ceil(warmup_fraction·total) steps, then
/// linear decay towards zero. `step` is 0-based.
double learning_rate(int step, int total, double base, double warmup_fraction);

struct TrainOptions {
  int epochs = 1;
  std::uint64_t seed = 7;
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double warmup_fraction = 0.1;
  int batch_size = 4;
  double flip_probability = 0.5;
  nn::ModelConfig model;
  /// Called after every step with (step, total steps, learning rate, loss).
  std::function<void(int, int, double, double)> on_step;
};

struct TrainResult {
  ad::ParamStore<float> weights;
  int steps = 0;
  nn::LossBreakdown final_loss;  // eval mode, whole training set, no flips
  double train_f_max = 0;        // mean f_max of sal_f over the training set
};

/// Trains from the seeded initialisation. Batches follow dataset order;
/// each step mirrors every item with probability flip_probability.
TrainResult train_toy(const std::vector<RgbdSample>& data, const TrainOptions& options);

/// Inference-mode losses and mean f_max of sal_f on `data`.
struct EvalSummary {
  nn::LossBreakdown loss;
  double f_max = 0;
};
EvalSummary evaluate_model(const ad::ParamStore<float>& weights, const nn::ModelConfig& cfg,
                           const std::vector<RgbdSample>& data);

}  // namespace acf::app
