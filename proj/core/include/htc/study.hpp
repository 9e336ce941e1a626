#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "htc/dpmix.hpp"
#include "htc/ht_core.hpp"
#include "htc/series.hpp"
#include "htc/simulate.hpp"

namespace htc {

/// Replicated AR(1) simulation study of theta(x, m) estimators.
struct StudyDesign {
  Ar1Spec ar1;
  std::size_t replicates = 50;
  double marginal_quantile = 0.95;
  double dependence_quantile = 0.95;
  std::vector<double> level_quantiles{0.98, 0.9999};
  std::size_t m = 1;
  TieKind tie = TieKind::markov_geometric;
  std::vector<std::string> methods{"empirical", "stepwise", "bayes"};
  ChainConfig chain;
  std::optional<Priors> priors;
  std::size_t mc_replicates = 2000;
  std::size_t bootstrap_replicates = 100;
  std::size_t block_len = 50;
  std::vector<double> nominal{0.25, 0.5, 0.75};
  std::uint64_t seed = 1;
  std::string checkpoint_dir;  // empty disables checkpoints
  std::size_t workers = 1;

  void validate() const;
  /// FNV-1a hash of the canonical JSON form; checkpoints from another design are ignored.
  std::uint64_t hash() const;
};

/// True quantile of the simulated margin at probability p.
double ar1_level(const StudyDesign& design, double p);

/// One method's output on one replicate. Entries are NaN where the method is undefined.
struct MethodResult {
  std::string method;
  std::vector<double> estimate;                 // per level
  std::vector<std::vector<double>> lower;       // [level][nominal]: one-sided bound q_{1-c}
  std::string error;                            // non-empty when the whole method failed
};

struct ReplicateResult {
  std::size_t index = 0;
  std::vector<MethodResult> methods;
};

struct ReplicateContext {
  const StudyDesign& design;
  const TimeSeries& series;
  std::size_t index;
  std::uint64_t seed;  // replicate-specific
};

using StudyEstimator = std::function<MethodResult(const ReplicateContext&)>;

/// The built-in estimator for "empirical", "stepwise" or "bayes".
StudyEstimator builtin_estimator(const std::string& method);

struct StudyReport {
  std::vector<double> level_quantiles;
  std::vector<double> truth;
  std::vector<double> truth_se;
  std::vector<std::string> methods;
  Eigen::MatrixXd rmse;                   // methods x levels
  Eigen::MatrixXi used;                   // replicates contributing to each RMSE
  std::vector<double> nominal;
  std::vector<Eigen::MatrixXd> coverage_error;  // per method: levels x nominal
  std::vector<ReplicateResult> replicates;
  std::size_t failures = 0;

  std::size_t method_index(const std::string& method) const;
  double rmse_ratio(const std::string& numerator, const std::string& denominator, std::size_t level) const;
  /// Mean of |coverage error| over nominal levels.
  double mean_abs_coverage_error(const std::string& method, std::size_t level) const;
};

/// Runs (or resumes from checkpoints) every replicate, then reduces. `truth`
/// overrides the AR(1) oracle values when given.
StudyReport run_study(const StudyDesign& design, const std::vector<StudyEstimator>& estimators,
                      std::optional<std::vector<double>> truth = std::nullopt);

StudyReport run_study(const StudyDesign& design);

/// Recomputes the reduction from replicate results.
StudyReport reduce_study(const StudyDesign& design, std::vector<double> truth, std::vector<double> truth_se,
                         std::vector<ReplicateResult> replicates);

}  // namespace htc
