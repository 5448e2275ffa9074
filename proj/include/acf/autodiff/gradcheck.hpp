#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "acf/autodiff/params.hpp"
#include "acf/autodiff/tape.hpp"

namespace acf::ad {

/// Builds a scalar loss on `tape` from the current parameter values. Must be
/// deterministic: two calls with equal parameters give equal losses.
using LossFn = std::function<Var<double>(Tape<double>& tape, ParamStore<double>& params)>;

struct GradCheckOptions {
  double step = 1e-4;        // central-difference half-width h
  double tolerance = 1e-3;   // max relative error per coordinate
  std::size_t samples = 200; // coordinates checked (at least one per tensor)
  std::uint64_t seed = 0;
  // Denominator floor for the relative error, so coordinates whose true
  // gradient is ~0 are judged on absolute error instead.
  double abs_floor = 1e-7;
};

struct Coordinate {
  std::string param;
  std::size_t index = 0;
};

struct GradCheckEntry {
  Coordinate coord;
  double analytic = 0;
  double numeric = 0;
  double rel_error = 0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double loss = 0;

  std::size_t failures() const;
  double max_rel_error() const;
  bool passed() const { return !entries.empty() && failures() == 0; }
};

/// |a − n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Picks one coordinate from every parameter tensor, then tops up with
/// uniformly drawn coordinates until `samples` is reached.
std::vector<Coordinate> sample_coordinates(const ParamStore<double>& params, std::size_t samples,
                                           std::uint64_t seed);

/// Compares reverse-mode gradients with central differences
/// (f(θ+h) − f(θ−h)) / 2h on sampled coordinates. Parameters are restored
/// afterwards. Throws EvaluationError on a non-finite loss.
GradCheckReport finite_diff_check(const LossFn& loss_fn, ParamStore<double>& params,
                                  const GradCheckOptions& options = {});

}  // namespace acf::ad
