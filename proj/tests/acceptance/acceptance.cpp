// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <string>
#include <vector>

#include "acf/app/data.hpp"
#include "acf/app/eval.hpp"
#include "acf/app/gradcheck.hpp"
#include "acf/app/train.hpp"
#include "acf/io/image.hpp"
#include "acf/io/weights.hpp"
#include "acf/metrics/metrics.hpp"
#include "acf/nn/acg_fusion.hpp"
#include "acf/nn/blocks.hpp"
#include "acf/nn/supervision.hpp"
#include "acf/nn/tam.hpp"
#include "acf/rng.hpp"
#include "reference_metrics.hpp"
#include "test_helpers.hpp"

using namespace acf;
namespace fs = std::filesystem;
using testing_support::bit_equal;
using testing_support::random_tensor;
using testing_support::read_file;
using testing_support::TempDir;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

// ---- 1 -----------------------------------------------------------------------

Outcome gradient_integrity() {
  Outcome o;
  app::NetworkCheckOptions opt;
  const auto net = app::check_network(opt);
  char buf[160];
  std::snprintf(buf, sizeof buf, "network %zu coords max_rel %.2e", net.entries.size(), net.max_rel_error());
  o.detail = buf;
  o.require(net.entries.size() >= 200, "fewer than 200 coordinates checked");
  o.require(net.passed() && net.max_rel_error() <= 1e-3, std::string("network check failed: ") + buf);
  for (const auto& r : app::check_elementwise(0, 1e-5)) {
    o.require(r.report.passed() && r.report.max_rel_error() <= 1e-5, r.name + " failed");
    if (o.pass) {
      std::snprintf(buf, sizeof buf, "; %s %.2e", r.name.c_str(), r.report.max_rel_error());
      o.detail += buf;
    }
  }
  return o;
}

// ---- 2 -----------------------------------------------------------------------

nn::ForwardOptions forced_gates(const std::array<double, 6>& values) {
  nn::ForwardOptions opt;
  opt.gate_mode = nn::GateMode::forced(values);
  return opt;
}

struct FusionRun {
  ad::Tape<float> tape;
  ad::ParamStore<float> store;
  nn::Context<float> ctx{tape, store, nn::Phase::eval};
  nn::ResinResOutput<float> out;

  FusionRun(const ad::ParamStore<float>& w, const Tensor<float>& rgb, const Tensor<float>& depth,
            const nn::ForwardOptions& opt)
      : store(w) {
    tape.set_recording(false);
    out = nn::resinres_forward(ctx, nn::ModelConfig{}, ctx.constant(rgb), ctx.constant(depth), opt);
  }
};

Outcome fusion_extremes() {
  Outcome o;
  const auto weights = nn::init_model(nn::ModelConfig{}, 11);
  const int width = nn::ModelConfig{}.width;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto rgb = random_tensor<float>(Shape::nchw(2, 3, 64, 64), seed, 0, 1);
    const auto depth = random_tensor<float>(Shape::nchw(2, 1, 64, 64), seed + 50, 0, 1);
    FusionRun forced(weights, rgb, depth, forced_gates({0, 0, 0, 0, 0, 0}));
    nn::ForwardOptions zeroed;
    zeroed.zero_guidance = true;
    FusionRun ablated(weights, rgb, depth, zeroed);
    for (const char* k : {"F3", "F4", "F5", "F_out"})
      o.require(bit_equal(forced.out.intermediates.at(k).value(), ablated.out.intermediates.at(k).value()),
                std::string("forced-zero gates differ from zeroed guidance at ") + k);
    o.require(bit_equal(forced.out.sal_f.value(), ablated.out.sal_f.value()), "sal_f differs under zero gates");

    FusionRun late(weights, rgb, depth, forced_gates({1, 0, 0, 1, 0, 0}));
    for (const char* k : {"I2", "I3"}) {
      const auto& v = late.out.intermediates.at(k);
      const int hybrid = v.shape().c() - 2 * width;
      for (float x : ad::slice_channels(v, hybrid, 2 * width).value().values())
        if (x != 0.0f) {
          o.require(false, std::string("non-zero guidance in ") + k);
          break;
        }
    }
    const auto& i1 = late.out.intermediates.at("I1");
    o.require(bit_equal(ad::slice_channels(i1, width, width).value(), late.out.intermediates.at("R").value()),
              "I1 RGB guidance is not passed through at gate 1");
  }
  if (o.pass) o.detail = "3 seeds, batch 2, bit-exact";
  return o;
}

// ---- 3 -----------------------------------------------------------------------

Outcome tam_algebra() {
  Outcome o;
  ad::Tape<float> tape;
  ad::ParamStore<float> store;
  nn::Context<float> ctx(tape, store, nn::Phase::train);
  ctx.enable_materialize(5);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto x = tape.constant(random_tensor<float>(Shape::nchw(2, 64, 8, 8), seed));
    nn::TamOptions unit;
    unit.forced_gates = std::array<double, 5>{1, 1, 1, 1, 1};
    const auto out = nn::tam_forward(ctx, "tam", x, unit);
    const auto br = nn::tam_branches(ctx, "tam", x);
    const auto plain =
        nn::cbr(ctx, "tam.fuse", ad::concat_channels(std::span<const ad::Var<float>>(br)), {64, 3, 1, ad::Activation::relu});
    o.require(bit_equal(out.f_ta.value(), plain.value()), "unit gates differ from plain concat");

    for (int i = 0; i < nn::kTamBranches; ++i) {
      Tensor<float> g = Tensor<float>::full(Shape::nchw(2, 5, 1, 1), 0.6f);
      g.at(0, i, 0, 0) = g.at(1, i, 0, 0) = 0.0f;
      auto gates = tape.constant(g);
      const auto base = nn::tam_combine(ctx, "tam", x, br, gates, {});
      nn::TamBranches<float> moved = br;
      moved[static_cast<std::size_t>(i)] =
          tape.constant(random_tensor<float>(br[0].shape(), 1000 * seed + static_cast<std::uint64_t>(i), -20, 20));
      const auto other = nn::tam_combine(ctx, "tam", x, moved, gates, {});
      o.require(bit_equal(base.out.value(), other.out.value()),
                "zero gate does not annihilate branch " + std::to_string(i + 1));
    }
  }
  if (o.pass) o.detail = "3 inputs, 5 branches, bit-exact";
  return o;
}

// ---- 4 -----------------------------------------------------------------------

Outcome loss_analytics() {
  Outcome o;
  Rng rng(4);
  double worst_bce = 0, worst_iou = 0;
  for (int k = 0; k < 20; ++k) {
    const int h = 2 + k % 7, w = 3 + k % 5;
    const Shape s = Shape::nchw(1 + k % 2, 1, h, w);
    auto g = random_tensor(s, 300 + k, 0, 1);
    if (k % 2) for (double& v : g.values()) v = v > 0.5;
    worst_bce = std::max(worst_bce, std::abs(nn::bce_value(Tensor<double>::full(s, 0.5), g) - std::log(2.0)));
    worst_iou = std::max(worst_iou,
                         std::abs(nn::iou_value(Tensor<double>::full(s, 0.5), Tensor<double>::full(s, 1.0)) - 0.5));
  }
  o.require(worst_bce <= 1e-6, "bce of the half map is not ln 2");
  o.require(worst_iou <= 1e-6, "iou of the half map on all-ones is not 0.5");
  for (int k = 0; k < 1000; ++k) {
    const Shape s = Shape::nchw(1 + k % 3, 1, 1 + static_cast<int>(rng.uniform(0, 9)), 1 + static_cast<int>(rng.uniform(0, 9)));
    auto p = random_tensor(s, 10000 + k, 0, 1);
    auto g = random_tensor(s, 20000 + k, 0, 1);
    if (k % 3 == 0) for (double& v : g.values()) v = v > 0.5;
    if (k % 7 == 0) p.fill(0.0);
    if (k % 11 == 0) g.fill(0.0);
    const double v = nn::iou_value(p, g);
    if (!(v >= 0.0 && v <= 1.0)) {
      o.require(false, "iou outside [0,1] on fuzz case " + std::to_string(k));
      break;
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "|bce-ln2| %.1e, |iou-0.5| %.1e, 1000 iou fuzz cases in [0,1]", worst_bce, worst_iou);
  if (o.pass) o.detail = buf;
  return o;
}

// ---- 5 -----------------------------------------------------------------------

struct RandomPair {
  metrics::GrayMap p, g;
  oracle::Map op;
  oracle::Map og;
  oracle::Mask mask;
};

RandomPair random_pair(std::uint64_t seed, int w, int h, bool quantise) {
  Rng rng(seed);
  std::vector<double> p(static_cast<std::size_t>(w) * h), g(p.size());
  const double density = rng.uniform(0.1, 0.7);
  for (std::size_t i = 0; i < p.size(); ++i) {
    g[i] = rng.uniform(0, 1) < density ? 1.0 : 0.0;
    double v = std::clamp(0.6 * g[i] + rng.uniform(0, 0.6), 0.0, 1.0);
    if (quantise) v = std::round(v * 255) / 255;
    p[i] = v;
  }
  if (seed % 17 == 0) std::fill(g.begin(), g.end(), 0.0);
  if (seed % 19 == 0) std::fill(g.begin(), g.end(), 1.0);
  RandomPair r{metrics::GrayMap(w, h, p), metrics::GrayMap(w, h, g), {w, h, p}, {w, h, g}, {}};
  for (double v : g) r.mask.push_back(v >= 0.5);
  return r;
}

Outcome metric_oracles() {
  Outcome o;
  double counting = 0, structural = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto t = random_pair(seed, 8, 8, seed % 2 == 0);
    const auto curve = metrics::pr_curve(t.p, t.g);
    counting = std::max(counting, std::abs(metrics::mae(t.p, t.g) - oracle::mae(t.op, t.og)));
    double f_max = 0;
    for (int k = 0; k < metrics::kThresholds; ++k) {
      const auto [pr, rc] = oracle::prec_rec(t.op, t.mask, k / 255.0);
      counting = std::max({counting, std::abs(curve.precision[k] - pr), std::abs(curve.recall[k] - rc)});
      f_max = std::max(f_max, oracle::f_beta(pr, rc));
    }
    const auto f = metrics::f_measure(curve, t.p, t.g);
    const auto [pa, ra] = oracle::prec_rec(t.op, t.mask, oracle::adaptive(t.op));
    counting = std::max({counting, std::abs(f.f_max - f_max), std::abs(f.f_avg - oracle::f_beta(pa, ra))});
    structural = std::max({structural, std::abs(metrics::s_measure(t.p, t.g) - oracle::s_measure(t.op, t.mask)),
                           std::abs(metrics::e_measure(t.p, t.g) - oracle::e_measure(t.op, t.mask)),
                           std::abs(metrics::weighted_f(t.p, t.g) - oracle::weighted_f(t.op, t.mask))});
  }
  o.require(counting <= 1e-9, "mae/pr/f deviate from the counting oracle");
  o.require(structural <= 1e-6, "S/E/weighted F deviate from the reference");

  double fixed = 0;
  for (std::uint64_t seed = 1; seed < 60; ++seed) {
    const auto t = random_pair(seed, 8, 8, false);
    const auto m = metrics::evaluate(t.g, t.g);
    const bool empty = std::none_of(t.mask.begin(), t.mask.end(), [](bool b) { return b; });
    fixed = std::max({fixed, m.mae, std::abs(m.f_max - 1), std::abs(m.s_measure - 1)});
    if (!empty) fixed = std::max({fixed, std::abs(m.e_measure - 1), std::abs(m.f_weighted - 1)});
  }
  o.require(fixed <= 1e-6, "perfect predictions are not fixed points");
  char buf[120];
  std::snprintf(buf, sizeof buf, "counting %.1e, structural %.1e, fixed points %.1e", counting, structural, fixed);
  if (o.pass) o.detail = buf;
  return o;
}

// ---- 6 -----------------------------------------------------------------------

Outcome toy_learnability() {
  Outcome o;
  std::vector<app::RgbdSample> data;
  for (int i = 0; i < 4; ++i) data.push_back(app::make_synthetic_sample(7, i, 64));
  app::TrainOptions opt;
  opt.epochs = 500;  // one step per epoch with batch 4
  opt.seed = 7;
  const double t0 = cpu_seconds();
  const auto r = app::train_toy(data, opt);
  const double cpu = cpu_seconds() - t0;
  o.require(r.steps <= 500, "more than 500 steps");
  o.require(r.final_loss.total < 0.1, "total loss not below 0.1");
  o.require(r.train_f_max >= 0.95, "training-set f_max below 0.95");
  o.require(cpu < 300, "training exceeded 5 CPU minutes");
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d steps, total loss %.4f, f_max %.4f, train cpu %.0f s", r.steps, r.final_loss.total,
                r.train_f_max, cpu);
  o.detail = (o.pass ? "" : o.detail + "; ") + buf;
  return o;
}

// ---- 7 -----------------------------------------------------------------------

Outcome determinism_and_formats() {
  Outcome o;
  TempDir dir("acceptance");
  std::vector<app::RgbdSample> data;
  for (int i = 0; i < 2; ++i) data.push_back(app::make_synthetic_sample(7, i, 32));
  app::TrainOptions opt;
  opt.epochs = 3;
  for (const char* f : {"a.bin", "b.bin"}) io::save_weights(dir / f, app::train_toy(data, opt).weights);
  o.require(read_file(dir / "a.bin") == read_file(dir / "b.bin"), "same seed gave different weight files");

  const auto w = io::load_weights(dir / "a.bin");
  io::save_weights(dir / "c.bin", w);
  o.require(read_file(dir / "c.bin") == read_file(dir / "a.bin"), "weights round trip is not lossless");

  for (int c : {1, 3}) {
    const auto t = random_tensor<float>(Shape::nchw(1, c, 13, 9), 70 + c, 0, 1);
    const fs::path p = dir / (c == 1 ? "x.pgm" : "x.ppm");
    io::save_image(p, t);
    const auto back = io::load_image(p);
    o.require(back.shape() == t.shape() && testing_support::max_abs_diff(back, t) <= 1.0 / 510 + 1e-7,
              "image round trip exceeds half a quantisation step");
    io::save_image(p, back);
    o.require(bit_equal(io::load_image(p), back), "8-bit image round trip is not lossless");
  }

  const fs::path eval5 = fs::path(ACF_FIXTURE_DIR) / "eval5";
  const std::string expected = read_file(eval5 / "expected.json");
  for (int jobs : {1, 4})
    o.require(app::format_report_json(app::run_eval(eval5 / "pred", eval5 / "gt", jobs)) == expected,
              "eval JSON differs from the reference bytes");
  if (o.pass) o.detail = "weights, P5/P6 and eval JSON stable";
  return o;
}

// ---- 8 -----------------------------------------------------------------------

Outcome pr_sanity() {
  Outcome o;
  int instances = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const int w = 4 + static_cast<int>(seed % 21), h = 3 + static_cast<int>(seed % 13);
    const auto t = random_pair(5000 + seed, w, h, true);
    const auto curve = metrics::pr_curve(t.p, t.g);
    for (int k = 1; k < metrics::kThresholds; ++k)
      if (curve.recall[k] > curve.recall[k - 1]) {
        o.require(false, "recall increases on instance " + std::to_string(seed));
        break;
      }
    const auto f = metrics::f_measure(curve, t.p, t.g);
    o.require(f.f_max >= f.f_avg, "f_max < f_avg on instance " + std::to_string(seed));
    ++instances;
  }
  const fs::path eval5 = fs::path(ACF_FIXTURE_DIR) / "eval5";
  for (const auto& img : app::run_eval(eval5 / "pred", eval5 / "gt", 1).images)
    o.require(img.metrics.f_max >= img.metrics.f_avg, "f_max < f_avg on " + img.stem);
  if (o.pass) o.detail = std::to_string(instances) + " fuzzed maps plus the eval fixture";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"gradient integrity", 120, gradient_integrity},
      {"fusion extremes", 10, fusion_extremes},
      {"attention gate algebra", 10, tam_algebra},
      {"loss analytics", 5, loss_analytics},
      {"metric oracles", 30, metric_oracles},
      {"toy learnability", 300, toy_learnability},
      {"determinism and formats", 60, determinism_and_formats},
      {"pr-curve sanity", 30, pr_sanity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const double t0 = cpu_seconds();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double cpu = cpu_seconds() - t0;
    if (cpu > c.budget_s) o.require(false, "over the " + std::to_string(static_cast<int>(c.budget_s)) + " s budget");
    std::printf("criterion %zu %-24s %s  (%s; %.1f s cpu)\n", i + 1, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), cpu);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
