#pragma once

#include <array>
#include <span>
#include <vector>

#include "htc/series.hpp"

namespace htc {

/// Generalised Pareto tail above `threshold`: survivor (1 + shape (x - u) / scale)_+^(-1/shape).
struct GpdParams {
  double scale = 1.0;
  double shape = 0.0;
  double threshold = 0.0;
};

// |shape| below this switches to the exponential limit.
inline constexpr double kGpdShapeZero = 1e-8;

double gpd_log_survivor(const GpdParams& p, double x);
double gpd_survivor(const GpdParams& p, double x);
/// Inverse of the survivor on the log scale: the x with log S(x) = log_survivor.
double gpd_quantile_from_log_survivor(const GpdParams& p, double log_survivor);

double gpd_log_likelihood(const GpdParams& p, std::span<const double> sample);
/// Gradient of the log-likelihood with respect to (scale, shape).
std::array<double, 2> gpd_score(const GpdParams& p, std::span<const double> sample);

struct GpdFitOptions {
  std::size_t min_exceedances = 10;
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
};

/// Maximum likelihood over {scale > 0, shape in (-1, 1)} from the values of
/// `sample` strictly above `threshold`.
GpdParams fit_gpd(std::span<const double> sample, double threshold, const GpdFitOptions& options = {});

/// Probability-weighted-moment estimates used to start the likelihood search.
GpdParams gpd_pwm(std::span<const double> sample, double threshold);

/// Standard Laplace distribution helpers.
double laplace_cdf(double y);
double laplace_quantile(double p);

/// Composite marginal: empirical CDF (plotting positions rank/(n+1)) below the
/// threshold, GPD tail above it, glued so that the two branches meet at u.
class MarginalModel {
 public:
  MarginalModel(std::vector<double> sample, GpdParams gpd);

  double cdf(double x) const;
  double empirical_cdf(double x) const;

  double to_laplace(double x) const;
  double from_laplace(double y) const;
  /// Composite quantile function, F^-1(p).
  double quantile(double p) const;

  const GpdParams& gpd() const { return gpd_; }
  double threshold() const { return gpd_.threshold; }
  /// 1 - F~(u): probability mass carried by the GPD tail.
  double tail_fraction() const { return tail_fraction_; }
  /// Laplace image of the threshold.
  double laplace_threshold() const;
  const std::vector<double>& sorted_sample() const { return sorted_; }

 private:
  std::vector<double> sorted_;
  GpdParams gpd_;
  double tail_fraction_;
  double log_tail_fraction_;
};

/// Empirical quantile with linear interpolation between order statistics.
double empirical_quantile(std::span<const double> sorted, double p);

MarginalModel fit_marginal(const TimeSeries& series, double threshold_quantile);

}  // namespace htc
