#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "htc/ht_core.hpp"
#include "htc/marginals.hpp"
#include "htc/rng.hpp"

namespace htc {

struct LagFit {
  double alpha = 0.0;
  double beta = 0.0;
  double mu = 0.0;
  double psi = 1.0;
  double log_likelihood = 0.0;
  bool converged = false;
  std::string message;
};

/// Two-stage Heffernan-Tawn fit: per-lag Gaussian working likelihood, then
/// the residual cloud whose rows define the empirical joint residual law.
struct StepwiseFit {
  HtParams params;
  std::vector<double> mu;
  std::vector<double> psi;
  Eigen::MatrixXd residual_cloud;
  std::vector<LagFit> lags;
  double u = 0.0;
};

struct StepwiseOptions {
  bool constraints = true;
  int seed_grid = 11;
  int refine_from = 3;  // Nelder-Mead restarts from the best grid seeds
  std::size_t min_rows = 20;
};

/// Working log-likelihood for lag j with (mu, psi) profiled out at (alpha, beta);
/// -inf when (alpha, beta) is out of bounds or, with constraints on, infeasible.
double profile_log_likelihood(const LagData& data, std::size_t lag, double alpha, double beta,
                              const KptSettings& kpt);

StepwiseFit fit_stepwise(const LagData& data, const StepwiseOptions& options = {});

/// Conditioned trajectories: R rows of (X0, X1..Xm) on the Laplace scale, and
/// on the data scale when a marginal model is given.
struct ConditionalSample {
  Eigen::MatrixXd laplace;
  Eigen::MatrixXd data;
  std::vector<std::size_t> residual_rows;
};

ConditionalSample sample_conditional(const StepwiseFit& fit, const MarginalModel* marginal, double x_laplace,
                                     std::size_t replicates, Rng& rng);

}  // namespace htc
