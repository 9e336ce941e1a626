#include "htc/stepwise.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>

#include "htc/error.hpp"
#include "htc/optim.hpp"

namespace htc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct LagProfile {
  double log_lik = kNegInf;
  double mu = 0.0;
  double psi_sq = 0.0;
};

LagProfile profile(const LagData& data, std::size_t lag, double a, double b, const KptSettings& kpt) {
  LagProfile out;
  if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) return out;
  const auto col = static_cast<Eigen::Index>(lag);
  const auto n = data.y0.size();
  double sum = 0.0, sum_log_y = 0.0;
  double z_min = INFINITY, z_max = -INFINITY, d_min = INFINITY, d_max = -INFINITY;
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = data.y0[i];
    const double log_y = std::log(y);
    z[i] = (data.lags(i, col) - a * y) * std::exp(-b * log_y);
    sum += z[i];
    sum_log_y += log_y;
    z_min = std::min(z_min, z[i]);
    z_max = std::max(z_max, z[i]);
    const double d = data.lags(i, col) - y;
    d_min = std::min(d_min, d);
    d_max = std::max(d_max, d);
  }
  if (kpt.enabled) {
    if (!kpt_lag_feasible(a, b, z_min, d_min, kpt.v) || !kpt_lag_feasible(a, b, z_max, d_max, kpt.v)) return out;
  }
  const double nn = static_cast<double>(n);
  const double mu = sum / nn;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) ss += (z[i] - mu) * (z[i] - mu);
  const double psi_sq = ss / nn;
  if (!(psi_sq > 0.0)) return out;
  out.mu = mu;
  out.psi_sq = psi_sq;
  out.log_lik = -b * sum_log_y - 0.5 * nn * (std::log(2.0 * std::numbers::pi * psi_sq) + 1.0);
  return out;
}

LagFit fit_lag(const LagData& data, std::size_t lag, const StepwiseOptions& options, const KptSettings& kpt) {
  struct Seed {
    double a, b, ll;
  };
  std::vector<Seed> seeds;
  const int g = std::max(options.seed_grid, 2);
  for (int ia = 0; ia < g; ++ia) {
    for (int ib = 0; ib < g; ++ib) {
      const double a = static_cast<double>(ia) / (g - 1);
      const double b = static_cast<double>(ib) / (g - 1);
      const double ll = profile(data, lag, a, b, kpt).log_lik;
      if (std::isfinite(ll)) seeds.push_back({a, b, ll});
    }
  }
  LagFit fit;
  if (seeds.empty()) {
    fit.message = "no feasible (alpha, beta) on the seed grid";
    return fit;
  }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& x, const Seed& y) { return x.ll > y.ll; });

  auto objective = [&](std::span<const double> p) { return profile(data, lag, p[0], p[1], kpt).log_lik; };
  NelderMeadOptions nm;
  nm.initial_step = 0.5 / (g - 1);
  OptimResult best{{seeds[0].a, seeds[0].b}, seeds[0].ll, 0, false};
  const auto restarts = std::min<std::size_t>(seeds.size(), static_cast<std::size_t>(std::max(options.refine_from, 1)));
  for (std::size_t s = 0; s < restarts; ++s) {
    auto res = nelder_mead_maximize(objective, {seeds[s].a, seeds[s].b}, nm);
    if (res.value > best.value || (s == 0 && res.value >= best.value)) best = res;
  }
  const auto prof = profile(data, lag, best.point[0], best.point[1], kpt);
  fit.alpha = best.point[0];
  fit.beta = best.point[1];
  fit.mu = prof.mu;
  fit.psi = std::sqrt(prof.psi_sq);
  fit.log_likelihood = prof.log_lik;
  fit.converged = best.converged && std::isfinite(prof.log_lik);
  if (!fit.converged) fit.message = "Nelder-Mead stopped before meeting its tolerance";
  return fit;
}

}  // namespace

double profile_log_likelihood(const LagData& data, std::size_t lag, double alpha, double beta,
                              const KptSettings& kpt) {
  return profile(data, lag, alpha, beta, kpt).log_lik;
}

StepwiseFit fit_stepwise(const LagData& data, const StepwiseOptions& options) {
  if (data.rows() < options.min_rows) {
    throw Error(ErrorKind::too_few_points, "stepwise fit needs at least " + std::to_string(options.min_rows) +
                                               " exceedances, got " + std::to_string(data.rows()));
  }
  const std::size_t m = data.lag_count();
  const KptSettings kpt{options.constraints, kpt_reference_level(data)};

  std::vector<LagFit> fits(m);
  if (m == 1) {
    fits[0] = fit_lag(data, 0, options, kpt);
  } else {
    std::vector<std::future<LagFit>> jobs;
    for (std::size_t j = 0; j < m; ++j) {
      jobs.push_back(std::async(std::launch::async, [&, j] { return fit_lag(data, j, options, kpt); }));
    }
    for (std::size_t j = 0; j < m; ++j) fits[j] = jobs[j].get();
  }

  StepwiseFit out;
  out.u = data.u;
  out.params.alpha.resize(m);
  out.params.beta.resize(m);
  out.mu.resize(m);
  out.psi.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    out.params.alpha[j] = fits[j].alpha;
    out.params.beta[j] = fits[j].beta;
    out.mu[j] = fits[j].mu;
    out.psi[j] = fits[j].psi;
  }
  out.lags = std::move(fits);
  out.residual_cloud = residuals(data, out.params);
  return out;
}

ConditionalSample sample_conditional(const StepwiseFit& fit, const MarginalModel* marginal, double x_laplace,
                                     std::size_t replicates, Rng& rng) {
  if (replicates == 0) throw Error(ErrorKind::invalid_argument, "need at least one replicate");
  const auto m = static_cast<Eigen::Index>(fit.params.lags());
  const auto rows = static_cast<std::size_t>(fit.residual_cloud.rows());
  ConditionalSample out;
  out.laplace.resize(static_cast<Eigen::Index>(replicates), m + 1);
  out.residual_rows.resize(replicates);
  std::uniform_int_distribution<std::size_t> pick(0, rows - 1);
  for (std::size_t r = 0; r < replicates; ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const double y0 = x_laplace + draw_exponential(rng);
    const std::size_t row = pick(rng);
    out.residual_rows[r] = row;
    out.laplace(i, 0) = y0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      out.laplace(i, j + 1) =
          fit.params.alpha[jj] * y0 + std::pow(y0, fit.params.beta[jj]) * fit.residual_cloud(static_cast<Eigen::Index>(row), j);
    }
  }
  if (marginal != nullptr) {
    out.data = out.laplace.unaryExpr([&](double y) { return marginal->from_laplace(y); });
  }
  return out;
}

}  // namespace htc
