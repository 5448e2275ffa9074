#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "acf/error.hpp"
#include "acf/metrics/metrics.hpp"
#include "acf/rng.hpp"
#include "reference_metrics.hpp"

using namespace acf;
using namespace acf::metrics;

namespace {

struct Pair {
  GrayMap p, g;
  oracle::Map op, og;
  oracle::Mask mask;
};

// Prediction: smooth blob plus noise, optionally quantised to k/255.
// Ground truth: binary rectangle, sometimes empty or full.
Pair random_pair(std::uint64_t seed, int w = 8, int h = 8) {
  Rng rng(seed);
  const int kind = static_cast<int>(seed % 10);
  const bool quantise = seed % 3 == 0;
  std::vector<double> p(static_cast<std::size_t>(w) * h), g(p.size());
  const int x0 = static_cast<int>(rng.uniform(0, w - 1)), y0 = static_cast<int>(rng.uniform(0, h - 1));
  const int x1 = std::min(w, x0 + 1 + static_cast<int>(rng.uniform(0, w))),
            y1 = std::min(h, y0 + 1 + static_cast<int>(rng.uniform(0, h)));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      bool fg = x >= x0 && x < x1 && y >= y0 && y < y1;
      if (kind == 0) fg = false;
      if (kind == 1) fg = true;
      g[i] = fg ? 1.0 : 0.0;
      double v = std::clamp((fg ? 0.7 : 0.2) + rng.uniform(-0.35, 0.35), 0.0, 1.0);
      if (quantise) v = std::round(v * 255) / 255;
      p[i] = v;
    }
  Pair out{GrayMap(w, h, p), GrayMap(w, h, g), {w, h, p}, {w, h, g}, {}};
  for (double v : g) out.mask.push_back(v >= 0.5);
  return out;
}

}  // namespace

TEST(Metrics, MaePrAndFMatchOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Pair t = random_pair(seed);
    EXPECT_NEAR(mae(t.p, t.g), oracle::mae(t.op, t.og), 1e-12);
    const PrCurve curve = pr_curve(t.p, t.g);
    double f_max = 0;
    for (int k = 0; k < kThresholds; ++k) {
      const auto [pr, rc] = oracle::prec_rec(t.op, t.mask, k / 255.0);
      ASSERT_NEAR(curve.precision[k], pr, 1e-12) << seed << " t=" << k;
      ASSERT_NEAR(curve.recall[k], rc, 1e-12) << seed << " t=" << k;
      f_max = std::max(f_max, oracle::f_beta(pr, rc));
    }
    const FMeasure f = f_measure(curve, t.p, t.g);
    const auto [pa, ra] = oracle::prec_rec(t.op, t.mask, oracle::adaptive(t.op));
    EXPECT_NEAR(f.f_max, f_max, 1e-9) << seed;
    EXPECT_NEAR(f.f_avg, oracle::f_beta(pa, ra), 1e-9) << seed;
  }
}

TEST(Metrics, StructuralMetricsMatchOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Pair t = random_pair(seed, 8 + static_cast<int>(seed % 5), 8);
    EXPECT_NEAR(weighted_f(t.p, t.g), oracle::weighted_f(t.op, t.mask), 1e-6) << seed;
    EXPECT_NEAR(s_measure(t.p, t.g), oracle::s_measure(t.op, t.mask), 1e-6) << seed;
    EXPECT_NEAR(e_measure(t.p, t.g), oracle::e_measure(t.op, t.mask), 1e-6) << seed;
  }
}

TEST(Metrics, DistanceTransformMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const int w = 5 + static_cast<int>(seed % 7), h = 4 + static_cast<int>(seed % 5);
    std::vector<bool> mask(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform(0, 1) < 0.15;
    mask[seed % mask.size()] = true;
    std::vector<double> dist;
    std::vector<std::size_t> idx;
    oracle::nearest_foreground(mask, w, h, dist, idx);
    const DistanceField df = distance_transform(mask, w, h);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      ASSERT_NEAR(df.distance[i], dist[i], 1e-12) << seed << " i=" << i;
      ASSERT_EQ(df.nearest[i], idx[i]) << seed << " i=" << i;
    }
  }
}

TEST(Metrics, DistanceTieGoesToLowestIndex) {
  // foreground at (0,0) and (0,4); pixel (0,2) is equidistant
  std::vector<bool> mask(5, false);
  mask[0] = mask[4] = true;
  const DistanceField df = distance_transform(mask, 5, 1);
  EXPECT_EQ(df.nearest[2], 0u);
  EXPECT_EQ(df.distance[2], 2.0);
  EXPECT_THROW(distance_transform(std::vector<bool>(4, false), 2, 2), ArgumentError);
}

TEST(Metrics, PerfectPredictionIsAFixedPoint) {
  for (std::uint64_t seed = 1; seed < 40; ++seed) {
    if (seed % 10 == 0) continue;  // empty ground truth
    const Pair t = random_pair(seed);
    const ImageMetrics m = evaluate(t.g, t.g);
    EXPECT_EQ(m.mae, 0.0);
    EXPECT_NEAR(m.f_max, 1.0, 1e-12);
    EXPECT_NEAR(m.s_measure, 1.0, 1e-9);
    EXPECT_NEAR(m.e_measure, 1.0, 1e-9);
    EXPECT_NEAR(m.f_weighted, 1.0, 1e-9);
  }
  // empty ground truth: S rewards the all-zero map, weighted F is zero by definition
  const GrayMap zero(3, 3, std::vector<double>(9, 0.0));
  const ImageMetrics m = evaluate(zero, zero);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.s_measure, 1.0);
  EXPECT_EQ(m.f_weighted, 0.0);
}

TEST(Metrics, CurveProperties) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Pair t = random_pair(seed, 12, 10);
    const PrCurve c = pr_curve(t.p, t.g);
    for (int k = 0; k < kThresholds; ++k) {
      EXPECT_GE(c.precision[k], 0.0);
      EXPECT_LE(c.precision[k], 1.0);
      if (k > 0) {
        EXPECT_LE(c.recall[k], c.recall[k - 1]);
      }
    }
  }
}

TEST(Metrics, FMaxDominatesFAvgOnQuantisedMaps) {
  for (std::uint64_t seed = 0; seed < 300; seed += 3) {
    const Pair t = random_pair(seed, 9, 7);
    const FMeasure f = f_measure(pr_curve(t.p, t.g), t.p, t.g);
    EXPECT_GE(f.f_max + 1e-12, f.f_avg) << seed;
  }
}

TEST(Metrics, ScalarConventions) {
  EXPECT_EQ(f_beta(0, 0), 0.0);
  EXPECT_NEAR(f_beta(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(f_beta(0.5, 1), 1.3 * 0.5 / (0.15 + 1), 1e-15);
  const GrayMap bright(2, 1, {0.9, 0.8});
  EXPECT_EQ(adaptive_threshold(bright), 1.0);
  EXPECT_NEAR(adaptive_threshold(GrayMap(2, 1, {0.1, 0.2})), 0.3, 1e-15);

  const GrayMap empty_gt(2, 2, {0, 0, 0, 0});
  EXPECT_EQ(weighted_f(GrayMap(2, 2, {0.1, 0.2, 0.3, 0.4}), empty_gt), 0.0);
  const PrCurve c = pr_curve(GrayMap(2, 2, {0, 0, 0, 0}), GrayMap(2, 2, {1, 0, 0, 0}));
  EXPECT_EQ(c.precision[255], 1.0);  // nothing predicted
  EXPECT_EQ(c.recall[255], 0.0);

  const auto k = weighted_f_kernel();
  EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-15);
  EXPECT_EQ(k[0], k[48]);
  EXPECT_GT(k[24], k[0]);
}

TEST(Metrics, InputValidation) {
  EXPECT_THROW(GrayMap(2, 2, {0, 0, 0}), ArgumentError);
  EXPECT_THROW(GrayMap(1, 1, {1.5}), ArgumentError);
  EXPECT_THROW(GrayMap(1, 1, {-0.1}), ArgumentError);
  EXPECT_THROW(mae(GrayMap(1, 1, {0}), GrayMap(2, 1, {0, 0})), ShapeError);
  EXPECT_THROW(aggregate({}), ArgumentError);
}

TEST(Metrics, AggregateIsArithmeticMean) {
  std::vector<ImageMetrics> ims;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Pair t = random_pair(seed + 3);
    ims.push_back(evaluate(t.p, t.g));
  }
  const MetricReport r = aggregate(ims);
  double mae_sum = 0, s_sum = 0, p7 = 0;
  for (const auto& m : ims) {
    mae_sum += m.mae;
    s_sum += m.s_measure;
    p7 += m.curve.precision[7];
  }
  EXPECT_EQ(r.n_images, 5u);
  EXPECT_NEAR(r.mae, mae_sum / 5, 1e-15);
  EXPECT_NEAR(r.s_measure, s_sum / 5, 1e-15);
  EXPECT_NEAR(r.curve.precision[7], p7 / 5, 1e-15);
}
