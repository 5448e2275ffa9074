#include "acf/metrics/metrics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>

#include "acf/error.hpp"

namespace acf::metrics {
namespace {

constexpr double kEps = DBL_EPSILON;

void check_pair(const GrayMap& p, const GrayMap& g, const char* what) {
  if (p.width != g.width || p.height != g.height)
    throw ShapeError(std::string(what) + ": prediction " + std::to_string(p.width) + "x" +
                     std::to_string(p.height) + " vs ground truth " + std::to_string(g.width) +
                     "x" + std::to_string(g.height));
  if (p.size() == 0) throw ShapeError(std::string(what) + ": empty maps");
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Largest t in [0,255] with t/255 <= v (v in [0,1]).
int threshold_bin(double v) {
  int t = std::clamp(static_cast<int>(std::floor(v * 255.0)), 0, 255);
  while (t < 255 && static_cast<double>(t + 1) / 255.0 <= v) ++t;
  while (t > 0 && static_cast<double>(t) / 255.0 > v) --t;
  return t;
}

struct Counts {
  double tp = 0, fp = 0, fn = 0;
};

double precision_of(const Counts& c) { return c.tp + c.fp > 0 ? c.tp / (c.tp + c.fp) : 1.0; }
double recall_of(const Counts& c) { return c.tp + c.fn > 0 ? c.tp / (c.tp + c.fn) : 1.0; }

Counts count_at(const GrayMap& p, const GrayMap& g, double threshold) {
  Counts c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pred = p.values[i] >= threshold;
    const bool fg = is_foreground(g.values[i]);
    c.tp += pred && fg;
    c.fp += pred && !fg;
    c.fn += !pred && fg;
  }
  return c;
}

// ---- S-measure pieces ------------------------------------------------------

double object_score(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const double mean = mean_of(xs);
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sigma = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return 2.0 * mean / (mean * mean + 1.0 + sigma + kEps);
}

double s_object(const GrayMap& p, const GrayMap& g) {
  std::vector<double> fg, bg;
  std::size_t n_fg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (is_foreground(g.values[i])) {
      fg.push_back(p.values[i]);
      ++n_fg;
    } else {
      bg.push_back(1.0 - p.values[i]);
    }
  }
  const double u = static_cast<double>(n_fg) / static_cast<double>(p.size());
  return u * object_score(fg) + (1.0 - u) * object_score(bg);
}

// SSIM-style similarity of one rectangular region.
double region_ssim(const GrayMap& p, const GrayMap& g, int r0, int r1, int c0, int c1) {
  const double n = static_cast<double>(r1 - r0) * (c1 - c0);
  double sx = 0, sy = 0;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      sx += p(r, c);
      sy += is_foreground(g(r, c)) ? 1.0 : 0.0;
    }
  const double x = sx / n, y = sy / n;
  double vx = 0, vy = 0, cxy = 0;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      const double dx = p(r, c) - x;
      const double dy = (is_foreground(g(r, c)) ? 1.0 : 0.0) - y;
      vx += dx * dx;
      vy += dy * dy;
      cxy += dx * dy;
    }
  const double denom = n - 1.0 + kEps;
  vx /= denom;
  vy /= denom;
  cxy /= denom;
  const double alpha = 4.0 * x * y * cxy;
  const double beta = (x * x + y * y) * (vx + vy);
  if (alpha != 0) return alpha / (beta + kEps);
  if (beta == 0) return 1.0;
  return 0.0;
}

double s_region(const GrayMap& p, const GrayMap& g) {
  const int h = g.height, w = g.width;
  // Foreground centroid in 1-based coordinates; std::round goes half away from zero.
  double total = 0, sx = 0, sy = 0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (is_foreground(g(r, c))) {
        total += 1;
        sx += c + 1;
        sy += r + 1;
      }
  int cx, cy;
  if (total == 0) {
    cx = static_cast<int>(std::round(w / 2.0));
    cy = static_cast<int>(std::round(h / 2.0));
  } else {
    cx = static_cast<int>(std::round(sx / total));
    cy = static_cast<int>(std::round(sy / total));
  }
  const double area = static_cast<double>(w) * h;
  const double w1 = static_cast<double>(cx) * cy / area;
  const double w2 = static_cast<double>(w - cx) * cy / area;
  const double w3 = static_cast<double>(cx) * (h - cy) / area;
  const double w4 = 1.0 - w1 - w2 - w3;
  const int rows[3] = {0, cy, h};
  const int cols[3] = {0, cx, w};
  const double weights[4] = {w1, w2, w3, w4};
  double q = 0;
  for (int k = 0; k < 4; ++k) {
    const int ri = k / 2, ci = k % 2;
    if (rows[ri] == rows[ri + 1] || cols[ci] == cols[ci + 1]) continue;  // empty quadrant
    q += weights[k] * region_ssim(p, g, rows[ri], rows[ri + 1], cols[ci], cols[ci + 1]);
  }
  return q;
}

}  // namespace

GrayMap::GrayMap(int w, int h, std::vector<double> v) : width(w), height(h), values(std::move(v)) {
  if (w < 1 || h < 1) throw ArgumentError("GrayMap dimensions must be positive");
  if (values.size() != static_cast<std::size_t>(w) * h)
    throw ArgumentError("GrayMap value count does not match " + std::to_string(w) + "x" + std::to_string(h));
  for (double x : values)
    if (!(x >= 0.0 && x <= 1.0)) throw ArgumentError("GrayMap values must lie in [0,1]");
}

GrayMap GrayMap::from_tensor(const Tensor<float>& t, int n, int c) {
  require_rank4(t.shape(), "gray map tensor");
  const Shape& s = t.shape();
  if (n < 0 || n >= s.n() || c < 0 || c >= s.c()) throw ArgumentError("gray map index out of range");
  const std::size_t plane = static_cast<std::size_t>(s.h()) * s.w();
  const float* base = t.data() + (static_cast<std::size_t>(n) * s.c() + c) * plane;
  return GrayMap(s.w(), s.h(), std::vector<double>(base, base + plane));
}

double f_beta(double precision, double recall, double beta2) {
  const double denom = beta2 * precision + recall;
  return denom > 0 ? (1.0 + beta2) * precision * recall / denom : 0.0;
}

double adaptive_threshold(const GrayMap& p) { return std::min(2.0 * mean_of(p.values), 1.0); }

double mae(const GrayMap& p, const GrayMap& g) {
  check_pair(p, g, "mae");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p.values[i] - g.values[i]);
  return s / static_cast<double>(p.size());
}

PrCurve pr_curve(const GrayMap& p, const GrayMap& g) {
  check_pair(p, g, "pr_curve");
  // Pixels with bin b are predicted foreground for thresholds 0..b.
  std::array<double, kThresholds> fg_hist{}, bg_hist{};
  double n_fg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int b = threshold_bin(p.values[i]);
    if (is_foreground(g.values[i])) {
      fg_hist[static_cast<std::size_t>(b)] += 1;
      n_fg += 1;
    } else {
      bg_hist[static_cast<std::size_t>(b)] += 1;
    }
  }
  PrCurve curve;
  double tp = 0, fp = 0;
  for (int t = kThresholds - 1; t >= 0; --t) {
    const auto k = static_cast<std::size_t>(t);
    tp += fg_hist[k];
    fp += bg_hist[k];
    const Counts c{tp, fp, n_fg - tp};
    curve.precision[k] = precision_of(c);
    curve.recall[k] = recall_of(c);
  }
  return curve;
}

FMeasure f_measure(const PrCurve& curve, const GrayMap& p, const GrayMap& g) {
  check_pair(p, g, "f_measure");
  FMeasure out;
  for (int t = 0; t < kThresholds; ++t) {
    const auto k = static_cast<std::size_t>(t);
    out.f_max = std::max(out.f_max, f_beta(curve.precision[k], curve.recall[k]));
  }
  const Counts c = count_at(p, g, adaptive_threshold(p));
  out.f_avg = f_beta(precision_of(c), recall_of(c));
  return out;
}

DistanceField distance_transform(const std::vector<bool>& mask, int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (mask.size() != n) throw ArgumentError("distance_transform: mask size mismatch");
  if (std::find(mask.begin(), mask.end(), true) == mask.end())
    throw ArgumentError("distance_transform: mask has no foreground");
  constexpr long long kNone = -1;
  // Column pass: nearest foreground row in the same column (upper row on ties).
  std::vector<long long> col_row(n, kNone);
  for (int c = 0; c < width; ++c) {
    long long last = kNone;
    for (int r = 0; r < height; ++r) {
      if (mask[static_cast<std::size_t>(r) * width + c]) last = r;
      col_row[static_cast<std::size_t>(r) * width + c] = last;
    }
    long long next = kNone;
    for (int r = height - 1; r >= 0; --r) {
      const std::size_t i = static_cast<std::size_t>(r) * width + c;
      if (mask[i]) next = r;
      if (next == kNone) continue;
      const long long up = col_row[i];
      if (up == kNone || (next - r) < (r - up)) col_row[i] = next;
    }
  }
  // Row pass: combine columns, comparing squared distances exactly.
  DistanceField out;
  out.distance.resize(n);
  out.nearest.resize(n);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      long long best = std::numeric_limits<long long>::max();
      std::size_t best_idx = 0;
      for (int c2 = 0; c2 < width; ++c2) {
        const long long rr = col_row[static_cast<std::size_t>(r) * width + c2];
        if (rr == kNone) continue;
        const long long dc = c - c2, dr = r - rr;
        const long long d2 = dc * dc + dr * dr;
        const std::size_t idx = static_cast<std::size_t>(rr) * width + c2;
        if (d2 < best || (d2 == best && idx < best_idx)) {
          best = d2;
          best_idx = idx;
        }
      }
      const std::size_t i = static_cast<std::size_t>(r) * width + c;
      out.distance[i] = std::sqrt(static_cast<double>(best));
      out.nearest[i] = best_idx;
    }
  }
  return out;
}

std::array<double, 49> weighted_f_kernel() {
  std::array<double, 49> k{};
  double sum = 0;
  for (int y = -3; y <= 3; ++y)
    for (int x = -3; x <= 3; ++x) {
      const double v = std::exp(-(x * x + y * y) / (2.0 * 5.0 * 5.0));
      k[static_cast<std::size_t>((y + 3) * 7 + (x + 3))] = v;
      sum += v;
    }
  for (double& v : k) v /= sum;
  return k;
}

double weighted_f(const GrayMap& p, const GrayMap& g) {
  check_pair(p, g, "weighted_f");
  const int w = g.width, h = g.height;
  const std::size_t n = p.size();
  std::vector<bool> fg(n);
  for (std::size_t i = 0; i < n; ++i) fg[i] = is_foreground(g.values[i]);
  if (std::find(fg.begin(), fg.end(), true) == fg.end()) return 0.0;

  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = std::abs(p.values[i] - (fg[i] ? 1.0 : 0.0));
  const DistanceField dt = distance_transform(fg, w, h);

  // Background errors take the value of their nearest foreground pixel so
  // the blur treats the object boundary correctly.
  std::vector<double> et(n);
  for (std::size_t i = 0; i < n; ++i) et[i] = fg[i] ? e[i] : e[dt.nearest[i]];

  const auto kernel = weighted_f_kernel();
  std::vector<double> ea(n, 0.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double s = 0;
      for (int ky = -3; ky <= 3; ++ky) {
        const int rr = r + ky;
        if (rr < 0 || rr >= h) continue;
        for (int kx = -3; kx <= 3; ++kx) {
          const int cc = c + kx;
          if (cc < 0 || cc >= w) continue;
          s += kernel[static_cast<std::size_t>((ky + 3) * 7 + (kx + 3))] *
               et[static_cast<std::size_t>(rr) * w + cc];
        }
      }
      ea[static_cast<std::size_t>(r) * w + c] = s;
    }

  const double slope = std::log(0.5) / 5.0;
  double n_fg = 0, ew_fg = 0, ew_bg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = e[i];
    if (fg[i] && ea[i] < e[i]) m = ea[i];
    const double importance = fg[i] ? 1.0 : 2.0 - std::exp(slope * dt.distance[i]);
    const double ew = m * importance;
    if (fg[i]) {
      n_fg += 1;
      ew_fg += ew;
    } else {
      ew_bg += ew;
    }
  }
  const double tpw = n_fg - ew_fg;
  const double fpw = ew_bg;
  const double recall = 1.0 - ew_fg / n_fg;
  const double precision = tpw / (kEps + tpw + fpw);
  const double q = (1.0 + kWeightedBeta2) * recall * precision /
                   (kEps + recall + kWeightedBeta2 * precision);
  return std::clamp(q, 0.0, 1.0);
}

double s_measure(const GrayMap& p, const GrayMap& g) {
  check_pair(p, g, "s_measure");
  double n_fg = 0;
  for (double v : g.values) n_fg += is_foreground(v) ? 1.0 : 0.0;
  double q;
  if (n_fg == 0) {
    q = 1.0 - mean_of(p.values);
  } else if (n_fg == static_cast<double>(g.size())) {
    q = mean_of(p.values);
  } else {
    q = kStructureAlpha * s_object(p, g) + (1.0 - kStructureAlpha) * s_region(p, g);
  }
  return std::clamp(q, 0.0, 1.0);
}

double e_measure(const GrayMap& p, const GrayMap& g) {
  check_pair(p, g, "e_measure");
  const std::size_t n = p.size();
  const double thr = adaptive_threshold(p);
  std::vector<double> fm(n), gt(n);
  double n_fg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fm[i] = p.values[i] >= thr ? 1.0 : 0.0;
    gt[i] = is_foreground(g.values[i]) ? 1.0 : 0.0;
    n_fg += gt[i];
  }
  double sum = 0;
  if (n_fg == 0) {
    for (double f : fm) sum += 1.0 - f;
  } else if (n_fg == static_cast<double>(n)) {
    for (double f : fm) sum += f;
  } else {
    const double mu_fm = mean_of(fm), mu_gt = mean_of(gt);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = fm[i] - mu_fm, b = gt[i] - mu_gt;
      const double align = 2.0 * a * b / (a * a + b * b + kEps);
      sum += (align + 1.0) * (align + 1.0) / 4.0;
    }
  }
  return std::clamp(sum / static_cast<double>(n), 0.0, 1.0);
}

ImageMetrics evaluate(const GrayMap& p, const GrayMap& g) {
  check_pair(p, g, "evaluate");
  ImageMetrics m;
  m.mae = mae(p, g);
  m.curve = pr_curve(p, g);
  const FMeasure f = f_measure(m.curve, p, g);
  m.f_max = f.f_max;
  m.f_avg = f.f_avg;
  m.f_weighted = weighted_f(p, g);
  m.s_measure = s_measure(p, g);
  m.e_measure = e_measure(p, g);
  return m;
}

MetricReport aggregate(std::span<const ImageMetrics> images) {
  if (images.empty()) throw ArgumentError("aggregate: no images");
  MetricReport r;
  r.n_images = images.size();
  for (const ImageMetrics& m : images) {
    r.mae += m.mae;
    r.f_max += m.f_max;
    r.f_avg += m.f_avg;
    r.f_weighted += m.f_weighted;
    r.s_measure += m.s_measure;
    r.e_measure += m.e_measure;
    for (std::size_t t = 0; t < kThresholds; ++t) {
      r.curve.precision[t] += m.curve.precision[t];
      r.curve.recall[t] += m.curve.recall[t];
    }
  }
  const double n = static_cast<double>(images.size());
  for (double* v : {&r.mae, &r.f_max, &r.f_avg, &r.f_weighted, &r.s_measure, &r.e_measure}) *v /= n;
  for (std::size_t t = 0; t < kThresholds; ++t) {
    r.curve.precision[t] /= n;
    r.curve.recall[t] /= n;
  }
  return r;
}

}  // namespace acf::metrics
