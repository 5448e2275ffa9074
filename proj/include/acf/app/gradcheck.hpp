#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acf/autodiff/gradcheck.hpp"
#include "acf/nn/acg_fusion.hpp"

namespace acf::app {

struct NetworkCheckOptions {
  std::uint64_t seed = 0;
  int size = 64;
  double tolerance = 1e-3;
  std::size_t samples = 200;
  double step = 1e-6;
  double abs_floor = 1e-5;
};

/// Finite-difference check of the total loss of the full model in double
/// precision on one synthetic pair, train-mode batch normalisation.
ad::GradCheckReport check_network(const NetworkCheckOptions& options = {});

struct NamedReport {
  std::string name;
  ad::GradCheckReport report;
};

/// Small graphs built only from elementwise ops and the losses, checked at
/// `tolerance` (every coordinate of every input).
std::vector<NamedReport> check_elementwise(std::uint64_t seed = 0, double tolerance = 1e-5);

}  // namespace acf::app
