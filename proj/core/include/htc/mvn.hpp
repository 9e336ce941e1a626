#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

namespace htc {

struct MvnOptions {
  std::size_t points = 1024;      // lattice points per shift at the first pass
  std::size_t shifts = 16;
  std::size_t max_points = 1u << 20;
  double target_se = 0.0;         // absolute; 0 runs a single pass
  std::uint64_t seed = 20240611;
};

struct MvnResult {
  double value = 0.0;
  double se = 0.0;
};

/// Pr(lower < X < upper) for X ~ N(0, cov) by separation of variables over a
/// randomly shifted Richtmyer lattice. Infinite bounds are allowed.
MvnResult mvn_probability(const Eigen::MatrixXd& cov, std::span<const double> lower, std::span<const double> upper,
                          const MvnOptions& options = {});

Eigen::MatrixXd ar1_correlation(double rho, std::size_t dim);

/// theta(x, m) = Pr(X_0 > x, X_1 <= x, ..., X_m <= x) / Pr(X_0 > x) for a
/// stationary Gaussian AR(1), with x the Gaussian quantile at `x_quantile`.
/// The SE reported is that of the ratio and meets `precision` unless the point budget runs out.
MvnResult true_theta_ar1(double rho, double x_quantile, std::size_t m, double precision = 1e-4);

}  // namespace htc
