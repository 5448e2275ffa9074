#include "acf/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "acf/rng.hpp"

namespace acf::ad {

std::size_t GradCheckReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const GradCheckEntry& e) { return !e.pass; }));
}

double GradCheckReport::max_rel_error() const {
  double m = 0;
  for (const auto& e : entries) m = std::max(m, e.rel_error);
  return m;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

std::vector<Coordinate> sample_coordinates(const ParamStore<double>& params, std::size_t samples,
                                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Coordinate> out;
  std::set<std::pair<std::string, std::size_t>> seen;
  std::vector<std::pair<const std::string*, std::size_t>> flat;
  std::size_t total = 0;
  for (const auto& [name, t] : params.params) {
    const std::size_t idx = rng.index(t.size());
    out.push_back({name, idx});
    seen.emplace(name, idx);
    flat.emplace_back(&name, t.size());
    total += t.size();
  }
  while (out.size() < samples && seen.size() < total) {
    std::size_t pick = rng.index(total);
    for (const auto& [name, n] : flat) {
      if (pick < n) {
        if (seen.emplace(*name, pick).second) out.push_back({*name, pick});
        break;
      }
      pick -= n;
    }
  }
  return out;
}

namespace {

double evaluate(const LossFn& fn, ParamStore<double>& params) {
  Tape<double> tape;
  tape.set_recording(false);
  const double v = fn(tape, params).value()[0];
  if (!std::isfinite(v)) throw EvaluationError("finite_diff_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckReport finite_diff_check(const LossFn& loss_fn, ParamStore<double>& params,
                                  const GradCheckOptions& options) {
  if (!(options.step > 0)) throw ArgumentError("finite_diff_check: step must be positive");
  GradCheckReport report;
  GradientMap<double> grads;
  {
    Tape<double> tape;
    Var<double> loss = loss_fn(tape, params);
    report.loss = loss.value()[0];
    if (!std::isfinite(report.loss)) throw EvaluationError("finite_diff_check: non-finite loss");
    grads = tape.backward(loss);
  }

  const double h = options.step;
  for (const Coordinate& c : sample_coordinates(params, options.samples, options.seed)) {
    Tensor<double>& t = params.params.at(c.param);
    const double saved = t[c.index];
    t[c.index] = saved + h;
    const double fp = evaluate(loss_fn, params);
    t[c.index] = saved - h;
    const double fm = evaluate(loss_fn, params);
    t[c.index] = saved;

    GradCheckEntry e;
    e.coord = c;
    auto it = grads.find(c.param);
    e.analytic = it == grads.end() ? 0.0 : it->second[c.index];
    e.numeric = (fp - fm) / (2 * h);
    e.rel_error = relative_error(e.analytic, e.numeric, options.abs_floor);
    e.pass = e.rel_error <= options.tolerance;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace acf::ad
