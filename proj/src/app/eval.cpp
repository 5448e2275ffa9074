#include "acf/app/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "acf/error.hpp"
#include "acf/io/dataset.hpp"
#include "acf/io/image.hpp"
#include "acf/resample.hpp"

namespace acf::app {

metrics::GrayMap resample_to(const metrics::GrayMap& p, int width, int height) {
  if (p.width == width && p.height == height) return p;
  std::vector<double> out(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  bilinear_resize_plane(p.values.data(), p.height, p.width, out.data(), height, width);
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return metrics::GrayMap(width, height, std::move(out));
}

int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ACF_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min<long>(n, cap);
  }
  return std::max(1, n);
}

namespace {

// Built from the 8-bit samples directly so every value is exactly k/255.
metrics::GrayMap load_gray(const std::filesystem::path& path, const char* role) {
  const io::Image8 img = io::read_image8(path);
  if (img.channels != 1)
    throw ShapeError(path.string() + ": " + role + " must be a single-channel image");
  std::vector<double> v(img.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = img.pixels[i] / 255.0;
  return metrics::GrayMap(img.width, img.height, std::move(v));
}

ImageReport score(const io::MatchedStem& m) {
  const metrics::GrayMap g = load_gray(m.files[1], "ground truth");
  const metrics::GrayMap p = resample_to(load_gray(m.files[0], "prediction"), g.width, g.height);
  return {m.stem, metrics::evaluate(p, g)};
}

}  // namespace

EvalReport run_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir, int jobs) {
  const io::Pairing pairing = io::pair_by_stem({pred_dir, gt_dir});
  const std::size_t n = pairing.matched.size();
  EvalReport report;
  report.images.resize(n);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        report.images[i] = score(pairing.matched[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(worker_count(jobs)), n));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<metrics::ImageMetrics> per_image;
  for (const auto& r : report.images) per_image.push_back(r.metrics);
  report.aggregate = metrics::aggregate(per_image);
  return report;
}

namespace {

std::string fixed6(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void scalar_fields(std::ostringstream& os, const char* indent, double mae, double f_max, double f_avg,
                   double f_weighted, double s_measure, double e_measure) {
  os << indent << "\"mae\": " << fixed6(mae) << ",\n"
     << indent << "\"f_max\": " << fixed6(f_max) << ",\n"
     << indent << "\"f_avg\": " << fixed6(f_avg) << ",\n"
     << indent << "\"f_weighted\": " << fixed6(f_weighted) << ",\n"
     << indent << "\"s_measure\": " << fixed6(s_measure) << ",\n"
     << indent << "\"e_measure\": " << fixed6(e_measure);
}

}  // namespace

std::string format_report_json(const EvalReport& report) {
  const auto& a = report.aggregate;
  std::ostringstream os;
  os << "{\n";
  scalar_fields(os, "  ", a.mae, a.f_max, a.f_avg, a.f_weighted, a.s_measure, a.e_measure);
  os << ",\n  \"n_images\": " << a.n_images << ",\n  \"images\": [";
  for (std::size_t i = 0; i < report.images.size(); ++i) {
    const auto& r = report.images[i];
    const auto& m = r.metrics;
    os << (i ? ",\n" : "\n") << "    {\n      \"stem\": " << nlohmann::json(r.stem).dump() << ",\n";
    scalar_fields(os, "      ", m.mae, m.f_max, m.f_avg, m.f_weighted, m.s_measure, m.e_measure);
    os << "\n    }";
  }
  os << (report.images.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return os.str();
}

std::string format_pr_csv(const metrics::PrCurve& curve) {
  std::ostringstream os;
  os << "threshold,precision,recall\n";
  for (int t = 0; t < metrics::kThresholds; ++t)
    os << t << ',' << fixed6(curve.precision[static_cast<std::size_t>(t)]) << ','
       << fixed6(curve.recall[static_cast<std::size_t>(t)]) << '\n';
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace acf::app
