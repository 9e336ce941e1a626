#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "htc/dpmix.hpp"
#include "htc/marginals.hpp"
#include "htc/residual_law.hpp"
#include "htc/rng.hpp"
#include "htc/series.hpp"
#include "htc/stepwise.hpp"

namespace htc {

enum class Method { empirical, stepwise, bayes };

std::string to_string(Method method);
Method parse_method(const std::string& text);

struct Level {
  double data = 0.0;
  double laplace = 0.0;
};

Level level_from_data(const MarginalModel& marginal, double x);

struct FunctionalEstimate {
  Level level;
  std::size_t m = 1;  // run length for theta, lag for chi
  double value = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  Method method = Method::empirical;
  std::size_t replicates = 0;
  double mc_se = 0.0;
};

struct MonteCarloValue {
  double value = 0.0;
  double se = 0.0;
};

/// Fraction of exceedances of x (with a complete m-step window) followed by m
/// values all <= x. Throws beyond_data when x >= max and no_exceedances when
/// no window qualifies.
double theta_runs(const TimeSeries& series, double x, std::size_t m);

/// Fraction of exceedances of x (with a complete j-step window) exceeded again at lag j.
double chi_empirical(const TimeSeries& series, double x, std::size_t j);

/// Unit-exponential excesses E_r; the conditioning value at Laplace level x is x + E_r.
/// Reusing one vector across levels, run lengths and posterior states gives common random numbers.
std::vector<double> exceedance_draws(std::size_t replicates, Rng& rng);

/// theta(x, p) for every p in `run_lengths` (ascending) from one pass over the draws:
/// the mean of G_p{z(x, x + E_r)}.
std::vector<MonteCarloValue> theta_model(const ResidualLaw& law, const HtParams& params, double x_laplace,
                                         std::span<const std::size_t> run_lengths, std::span<const double> draws);

MonteCarloValue theta_model(const ResidualLaw& law, const HtParams& params, double x_laplace, std::size_t m,
                            std::span<const double> draws);

/// chi_j(x) = mean of Pr(Z_j > z_j(x, x + E_r)); j is one-based.
MonteCarloValue chi_model(const ResidualLaw& law, const HtParams& params, double x_laplace, std::size_t j,
                          std::span<const double> draws);

/// Per-state theta: rows are recorded states, columns follow `run_lengths`.
Eigen::MatrixXd theta_posterior_draws(const Chain& chain, double x_laplace, std::span<const std::size_t> run_lengths,
                                      std::span<const double> draws);
Eigen::VectorXd chi_posterior_draws(const Chain& chain, double x_laplace, std::size_t j, std::span<const double> draws);

/// Median and equal-tailed (1 - coverage) interval of posterior draws.
FunctionalEstimate summarize_posterior(std::span<const double> values, double coverage = 0.95);

FunctionalEstimate theta_posterior(const Chain& chain, const Level& level, std::size_t m, std::size_t replicates,
                                   std::uint64_t seed, double coverage = 0.95);
FunctionalEstimate chi_posterior(const Chain& chain, const Level& level, std::size_t j, std::size_t replicates,
                                 std::uint64_t seed, double coverage = 0.95);

/// Stepwise plug-in: the fitted (alpha, beta) with the empirical residual cloud as G.
MonteCarloValue theta_stepwise(const StepwiseFit& fit, double x_laplace, std::size_t m,
                               std::span<const double> draws);
MonteCarloValue chi_stepwise(const StepwiseFit& fit, double x_laplace, std::size_t j, std::span<const double> draws);

/// 1 - theta(x, m) / theta(u, m) * GPD survivor at x: the approximate law of a cluster maximum above u.
double cluster_max_cdf(const std::function<double(double)>& theta_fn, const GpdParams& gpd, double x);

struct BootstrapResult {
  std::vector<double> replicates;  // sorted, failures removed
  std::size_t dropped = 0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Resampled series: with season segments, groups of `block_len` consecutive
/// segments are drawn whole; otherwise moving blocks of `block_len` values.
/// Each drawn block becomes its own segment so lag windows never straddle a join.
TimeSeries block_resample(const TimeSeries& series, std::size_t block_len, Rng& rng);

/// Percentile interval over B resampled series. Replicates whose estimator
/// throws htc::Error are dropped and counted. Replicate b uses stream b of `seed`.
/// Intervals for model-based theta from this bootstrap are known to be unreliable.
BootstrapResult block_bootstrap(const TimeSeries& series, std::size_t block_len, std::size_t replicates,
                                const std::function<double(const TimeSeries&)>& estimator, std::uint64_t seed,
                                double coverage = 0.95);

/// Vector-valued form: one result per estimator output coordinate. A replicate
/// is dropped whole when the estimator throws or returns the wrong length.
std::vector<BootstrapResult> block_bootstrap(
    const TimeSeries& series, std::size_t block_len, std::size_t replicates,
    const std::function<std::vector<double>(const TimeSeries&)>& estimator, std::size_t outputs, std::uint64_t seed,
    double coverage = 0.95);

}  // namespace htc
