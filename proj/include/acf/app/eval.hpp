#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "acf/metrics/metrics.hpp"

namespace acf::app {

/// Bilinear resize of a prediction to the ground-truth size, using the same
/// sampling kernel as the upsampling op. Equal sizes are returned unchanged.
metrics::GrayMap resample_to(const metrics::GrayMap& p, int width, int height);

struct ImageReport {
  std::string stem;
  metrics::ImageMetrics metrics;
};

struct EvalReport {
  std::vector<ImageReport> images;  // sorted by stem
  metrics::MetricReport aggregate;
};

/// Worker count for `requested` jobs (0 means one per hardware thread),
/// capped by the ACF_THREADS environment variable when it is set.
int worker_count(int requested);

/// Scores every prediction in `pred_dir` against the ground truth with the
/// same stem in `gt_dir`. Predictions must be single-channel.
EvalReport run_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                    int jobs = 0);

/// Aggregate scalars at the top level plus an "images" array, every number
/// printed with six decimals.
std::string format_report_json(const EvalReport& report);

/// Header `threshold,precision,recall` followed by 256 rows.
std::string format_pr_csv(const metrics::PrCurve& curve);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace acf::app
