#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace htc {

/// Joint distribution of the m-dimensional residual Z, as needed by the
/// cluster functionals: the CDF of the leading coordinates and the marginal
/// survivor of one coordinate.
class ResidualLaw {
 public:
  virtual ~ResidualLaw() = default;

  virtual std::size_t dimension() const = 0;

  /// out[i] = Pr(Z_1 <= z_1, ..., Z_p <= z_p) with p = prefixes[i]; prefixes ascending.
  virtual void prefix_cdf(std::span<const double> z, std::span<const std::size_t> prefixes,
                          std::span<double> out) const = 0;

  /// Pr(Z_j > z), j zero-based.
  virtual double marginal_survivor(std::size_t j, double z) const = 0;

  double cdf(std::span<const double> z) const;
};

/// Standard normal CDF and survivor via erfc (no cancellation in either tail).
double normal_cdf(double x);
double normal_survivor(double x);

/// Mixture of diagonal Gaussians: G(z) = sum_k w_k prod_j Phi((z_j - mu_jk) / psi_jk).
class MixtureResidualLaw final : public ResidualLaw {
 public:
  MixtureResidualLaw(std::vector<double> weights, Eigen::MatrixXd means, Eigen::MatrixXd variances);

  std::size_t dimension() const override { return static_cast<std::size_t>(means_.cols()); }
  void prefix_cdf(std::span<const double> z, std::span<const std::size_t> prefixes,
                  std::span<double> out) const override;
  double marginal_survivor(std::size_t j, double z) const override;

 private:
  std::vector<double> weights_;
  Eigen::MatrixXd means_;
  Eigen::MatrixXd inv_sd_;
  std::vector<Eigen::Index> active_;  // components with positive weight
};

/// Empirical joint distribution of the rows of a residual cloud.
class EmpiricalResidualLaw final : public ResidualLaw {
 public:
  explicit EmpiricalResidualLaw(Eigen::MatrixXd cloud);

  std::size_t dimension() const override { return static_cast<std::size_t>(cloud_.cols()); }
  void prefix_cdf(std::span<const double> z, std::span<const std::size_t> prefixes,
                  std::span<double> out) const override;
  double marginal_survivor(std::size_t j, double z) const override;

 private:
  Eigen::MatrixXd cloud_;
  std::vector<std::vector<double>> sorted_columns_;
};

}  // namespace htc
