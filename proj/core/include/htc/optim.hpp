#pragma once

#include <functional>
#include <span>
#include <vector>

namespace htc {

struct NelderMeadOptions {
  double initial_step = 0.05;
  double value_tolerance = 1e-11;
  double point_tolerance = 1e-9;
  int max_evaluations = 4000;
};

struct OptimResult {
  std::vector<double> point;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Maximises `objective` with the Nelder-Mead simplex. The objective may
/// return -inf to mark infeasible points; the starting point must be feasible.
OptimResult nelder_mead_maximize(const std::function<double(std::span<const double>)>& objective,
                                 std::vector<double> start, const NelderMeadOptions& options = {});

}  // namespace htc
