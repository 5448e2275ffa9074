#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "acf/tensor.hpp"

namespace acf::metrics {

/// Single-channel map with values in [0,1], row-major.
struct GrayMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  GrayMap() = default;
  /// Throws ArgumentError on a size mismatch or values outside [0,1].
  GrayMap(int width, int height, std::vector<double> values);

  /// Channel `c` of item `n` of an N×C×H×W tensor.
  static GrayMap from_tensor(const Tensor<float>& t, int n = 0, int c = 0);

  std::size_t size() const { return values.size(); }
  double operator()(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

inline constexpr int kThresholds = 256;
inline constexpr double kBeta2 = 0.3;           // F-measure weight β²
inline constexpr double kWeightedBeta2 = 1.0;   // weighted F-measure β²
inline constexpr double kStructureAlpha = 0.5;  // S-measure object/region balance

/// Ground-truth foreground test used by every metric.
inline bool is_foreground(double g) { return g >= 0.5; }

/// precision[t], recall[t] at threshold t/255; a pixel is predicted
/// foreground when P ≥ t/255.
struct PrCurve {
  std::array<double, kThresholds> precision{};
  std::array<double, kThresholds> recall{};
};

struct FMeasure {
  double f_max = 0;
  double f_avg = 0;
};

/// (1+β²)·p·r / (β²·p + r), zero when the denominator is zero.
double f_beta(double precision, double recall, double beta2 = kBeta2);

/// min(2·mean(P), 1).
double adaptive_threshold(const GrayMap& p);

double mae(const GrayMap& p, const GrayMap& g);
/// Precision is 1 when nothing is predicted, recall is 1 when G is empty.
PrCurve pr_curve(const GrayMap& p, const GrayMap& g);
/// f_max over the curve; f_avg at the adaptive threshold.
FMeasure f_measure(const PrCurve& curve, const GrayMap& p, const GrayMap& g);
/// Weighted F-measure with distance-dependent error propagation; 0 when G is empty.
double weighted_f(const GrayMap& p, const GrayMap& g);
double s_measure(const GrayMap& p, const GrayMap& g);
/// Enhanced-alignment measure of P binarised at the adaptive threshold.
double e_measure(const GrayMap& p, const GrayMap& g);

/// Exact Euclidean distance transform to the nearest foreground pixel of
/// `mask` (row-major) together with that pixel's linear index. Equidistant
/// candidates resolve to the lowest linear index. `mask` must contain at
/// least one foreground pixel.
struct DistanceField {
  std::vector<double> distance;
  std::vector<std::size_t> nearest;
};
DistanceField distance_transform(const std::vector<bool>& mask, int width, int height);

/// Normalised 7×7 Gaussian with σ = 5 used by weighted_f.
std::array<double, 49> weighted_f_kernel();

struct ImageMetrics {
  double mae = 0;
  double f_max = 0;
  double f_avg = 0;
  double f_weighted = 0;
  double s_measure = 0;
  double e_measure = 0;
  PrCurve curve;
};

/// All metrics of one prediction against its ground truth (same size).
ImageMetrics evaluate(const GrayMap& p, const GrayMap& g);

struct MetricReport {
  std::size_t n_images = 0;
  double mae = 0;
  double f_max = 0;
  double f_avg = 0;
  double f_weighted = 0;
  double s_measure = 0;
  double e_measure = 0;
  PrCurve curve;  // pointwise mean over images
};

/// Arithmetic means in the given order. Throws ArgumentError when empty.
MetricReport aggregate(std::span<const ImageMetrics> images);

}  // namespace acf::metrics
