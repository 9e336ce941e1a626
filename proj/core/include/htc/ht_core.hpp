#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "htc/marginals.hpp"
#include "htc/series.hpp"

namespace htc {

/// Heffernan-Tawn normalising parameters, one (alpha_j, beta_j) pair per lag,
/// each restricted to [0, 1].
struct HtParams {
  std::vector<double> alpha;
  std::vector<double> beta;

  std::size_t lags() const { return alpha.size(); }
  bool in_bounds() const;
};

enum class TieKind {
  free,               // 2m parameters
  markov_geometric,   // alpha_j = a^j, beta_j = b
  markov_beta_power,  // alpha_j = 0, beta_j = b^j
};

std::string to_string(TieKind kind);
TieKind parse_tie_kind(const std::string& text);

struct TieStructure {
  TieKind kind = TieKind::free;
  std::size_t lags = 1;

  std::size_t free_count() const;
  HtParams expand(std::span<const double> free) const;
  /// Free parameters of a vector pair that lies in the structure.
  std::vector<double> collapse(const HtParams& params) const;
  std::string parameter_name(std::size_t index) const;
};

/// Conditioning exceedances on the Laplace scale with their m lagged companions.
struct LagData {
  Eigen::VectorXd y0;    // n conditioning values, all > u
  Eigen::MatrixXd lags;  // n x m companions
  double u = 0.0;        // Laplace-scale threshold

  std::size_t rows() const { return static_cast<std::size_t>(y0.size()); }
  std::size_t lag_count() const { return static_cast<std::size_t>(lags.cols()); }
};

/// Validates and keeps rows with y0 > u and no missing companions.
LagData make_lag_data(const Eigen::VectorXd& y0, const Eigen::MatrixXd& lags, double u);

/// Transforms the series to Laplace margins and collects every exceedance of
/// the `dependence_quantile` empirical quantile whose m-step window is complete.
LagData make_lag_data(const TimeSeries& series, const MarginalModel& marginal, double dependence_quantile,
                      std::size_t m);

/// Z[i,j] = (lags[i,j] - alpha_j y0[i]) / y0[i]^beta_j.
Eigen::MatrixXd residuals(const LagData& data, const HtParams& params);

/// z_j(x, y) = (x - alpha_j y) / y^beta_j.
Eigen::VectorXd z_of_level(double x, double y, const HtParams& params);

/// Per-lag extremes of the fitted residuals and of the residuals under the
/// asymptotically dependent fit (alpha, beta) = (1, 0).
struct ResidualEnvelope {
  std::vector<double> z_min, z_max;
  std::vector<double> dependent_min, dependent_max;
};

ResidualEnvelope residual_envelope(const LagData& data, const Eigen::MatrixXd& fitted_residuals);

/// Reference level above which conditional quantiles must stay ordered: max y0 + 1.
double kpt_reference_level(const LagData& data);

struct KptSettings {
  bool enabled = true;
  double v = 0.0;
};

/// Quantile-ordering feasibility for one lag: for q in {min, max} the fitted
/// curve alpha x + x^beta z_q must not exceed the dependent curve x + zd_q for
/// any x >= v.
bool kpt_lag_feasible(double alpha, double beta, double z, double dependent_z, double v);

bool kpt_feasible(const HtParams& params, const ResidualEnvelope& envelope, const KptSettings& settings);

/// Convenience: computes residuals and envelope, then checks every lag.
bool kpt_feasible(const HtParams& params, const LagData& data, const KptSettings& settings);

}  // namespace htc
