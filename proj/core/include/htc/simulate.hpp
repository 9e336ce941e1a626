#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "htc/ht_core.hpp"
#include "htc/mvn.hpp"
#include "htc/residual_law.hpp"
#include "htc/series.hpp"

namespace htc {

enum class Margins { gaussian, exponential };

struct Ar1Spec {
  double rho = 0.5;
  std::size_t n = 8000;
  Margins margins = Margins::exponential;
};

/// X_0 ~ N(0, 1), X_{t+1} = rho X_t + eps_t with eps_t ~ N(0, 1 - rho^2);
/// optionally mapped to unit-exponential margins through Phi.
TimeSeries sim_ar1(const Ar1Spec& spec, std::uint64_t seed);

enum class ResidualFamily { gaussian, laplace };

struct MixtureComponent {
  double weight = 1.0;
  double location = 0.0;
  double scale = 1.0;
  ResidualFamily family = ResidualFamily::gaussian;
};

struct HtSimSpec {
  double alpha = 0.5;
  double beta = 0.5;
  double u = 2.0;
  std::vector<MixtureComponent> residual_mix;
  std::size_t n = 400;

  void validate() const;
};

struct HtSample {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  std::vector<std::size_t> component;
};

/// X = u + Exp(1), Z from the residual mixture, Y = alpha X + X^beta Z.
HtSample sim_ht(const HtSimSpec& spec, std::uint64_t seed);

/// One-lag conditioning data from a simulated sample.
LagData to_lag_data(const HtSample& sample, double u);

/// (sign(rho) rho^{2j}, 1/2).
std::pair<double, double> ht_truth_gaussian(double rho, std::size_t j);

/// Centred Gaussian residual law with full covariance. Prefixes of length 1
/// are exact; longer prefixes use lattice integration with a fixed seed.
class GaussianResidualLaw final : public ResidualLaw {
 public:
  explicit GaussianResidualLaw(Eigen::MatrixXd covariance);

  std::size_t dimension() const override { return static_cast<std::size_t>(cov_.rows()); }
  void prefix_cdf(std::span<const double> z, std::span<const std::size_t> prefixes,
                  std::span<double> out) const override;
  double marginal_survivor(std::size_t j, double z) const override;
  const Eigen::MatrixXd& covariance() const { return cov_; }

 private:
  Eigen::MatrixXd cov_;
};

/// The limiting Gaussian residual law of an AR(1) with correlation rho on m lags,
/// on Laplace margins: variances 2 rho^{2j}(1 - rho^{2j}), correlations sign(rho^{i+j}) rho^{j-i} sqrt((1 - rho^{2i}) / (1 - rho^{2j})).
GaussianResidualLaw ar1_residual_law(double rho, std::size_t m);

}  // namespace htc
