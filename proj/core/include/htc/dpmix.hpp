#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "htc/ht_core.hpp"
#include "htc/residual_law.hpp"
#include "htc/rng.hpp"

namespace htc {

/// Hyperparameters of the truncated Dirichlet-process mixture. gamma ~ Gamma(eta1, scale eta2)
/// truncated to [gamma_floor, inf); mu_jk ~ N(0, psi_mu_sq_j); psi_sq_jk ~ InvGamma(nu1_j, nu2_j).
struct Priors {
  double eta1 = 1.0;
  double eta2 = 1.0;
  std::vector<double> psi_mu_sq;
  std::vector<double> nu1;
  std::vector<double> nu2;
  double gamma_floor = 0.5;
  std::size_t truncation = 150;

  static Priors defaults(std::size_t lags);
  /// Throws Error(config) on a non-positive value, N < 2 or a per-lag size mismatch.
  void validate(std::size_t lags) const;
};

struct MixtureState {
  HtParams ht;
  Eigen::MatrixXd mu;      // N x m
  Eigen::MatrixXd psi_sq;  // N x m
  std::vector<double> breaks;         // V_1..V_{N-1}
  std::vector<double> log_breaks;     // log V_k
  std::vector<double> log1m_breaks;   // log(1 - V_k)
  std::vector<double> w;
  std::vector<double> log_w;
  std::vector<std::uint32_t> c;  // zero-based component labels
  double gamma = 1.0;

  std::size_t components() const { return w.size(); }
  std::vector<std::size_t> counts() const;
  std::size_t occupied() const;
  /// Rebuilds w and log_w from the stored breaks.
  void refresh_weights();
};

/// Throws Error(invalid_argument) naming the first violated invariant.
void check_state(const MixtureState& state, std::size_t rows, double gamma_floor);

/// w_1 = V_1, w_k = V_k prod_{i<k}(1 - V_i), w_N = prod_{i<N}(1 - V_i).
std::vector<double> stick_break(std::span<const double> breaks);

/// L1 bound 4 n exp(-(N - 1) / gamma) on the truncation error.
double truncation_error_bound(double n, double gamma, double truncation);

// Full conditionals. Each returns the parameters of the conditional law so
// it can be checked independently of the draw.

struct NormalParams {
  double mean;
  double variance;
};
struct InvGammaParams {
  double shape;
  double scale;
};
struct BetaParams {
  double a;
  double b;
};
struct GammaParams {
  double shape;
  double scale;
};

NormalParams mu_conditional(const MixtureState& state, const Eigen::MatrixXd& resid, const Priors& priors,
                            std::size_t k, std::size_t j);
InvGammaParams psi_sq_conditional(const MixtureState& state, const Eigen::MatrixXd& resid, const Priors& priors,
                                  std::size_t k, std::size_t j);
/// Normalised allocation probabilities of observation i over the N components.
std::vector<double> allocation_probabilities(const MixtureState& state, const Eigen::MatrixXd& resid, std::size_t i);
/// Beta parameters of the N - 1 stick breaks given allocation counts.
std::vector<BetaParams> weight_conditional(std::span<const std::size_t> counts, double gamma);
/// Untruncated Gamma(N + eta1 - 1, eta2 / (1 - eta2 log w_N)); log w_N taken from stored log-weights.
GammaParams gamma_conditional(const MixtureState& state, const Priors& priors);

struct TruncatedDraw {
  double value;
  std::size_t attempts;  // proposals used; 0 when the inverse-CDF fallback was taken
};

/// Gamma draw restricted to [floor, inf): rejection from the untruncated law,
/// falling back to inversion when the acceptance probability is below 1e-3.
TruncatedDraw draw_truncated_gamma(Rng& rng, GammaParams params, double floor);

void gibbs_mu(MixtureState& state, const LagData& data, const Priors& priors, Rng& rng);
void gibbs_psi_sq(MixtureState& state, const LagData& data, const Priors& priors, Rng& rng);
void gibbs_alloc(MixtureState& state, const LagData& data, Rng& rng);
void gibbs_weights(MixtureState& state, Rng& rng);
void gibbs_gamma(MixtureState& state, const Priors& priors, Rng& rng);

/// Gaussian log-likelihood of the lagged values given (alpha, beta), allocations
/// and component parameters, including the -beta log y0 Jacobian terms.
double ht_log_likelihood(const LagData& data, const MixtureState& state, const HtParams& ht);

struct AdaptState {
  std::vector<double> log_scale;  // per free parameter, logit scale
  std::vector<std::size_t> proposed;
  std::vector<std::size_t> accepted;
  std::size_t step = 0;
  bool frozen = false;

  static AdaptState initial(std::size_t free_count, double scale = 0.3);
};

void mh_alpha_beta(MixtureState& state, const LagData& data, const TieStructure& tie, const KptSettings& kpt,
                   AdaptState& adapt, Rng& rng);

enum class LabelMove { swap_parameters = 1, swap_with_breaks = 2 };

/// Log acceptance ratio for swapping components k and k + 1.
double label_swap_log_ratio(const MixtureState& state, LabelMove move, std::size_t k);
void apply_label_swap(MixtureState& state, LabelMove move, std::size_t k);

struct LabelStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
};

void label_switch(MixtureState& state, Rng& rng, LabelStats* stats = nullptr);

/// Unnormalised log posterior (flat prior on the free alpha/beta coordinates).
double log_posterior(const LagData& data, const MixtureState& state, const Priors& priors);

/// One sweep: alloc, weights, mu, psi_sq, gamma, alpha/beta, label switch.
void gibbs_sweep(MixtureState& state, const LagData& data, const Priors& priors, const TieStructure& tie,
                 const KptSettings& kpt, AdaptState& adapt, Rng& rng, LabelStats* labels = nullptr);

/// State drawn from the prior given (alpha, beta); allocations drawn from the weights.
MixtureState prior_state(const HtParams& ht, std::size_t rows, const Priors& priors, Rng& rng);

struct ChainConfig {
  std::size_t iterations = 3000;
  std::size_t burn_in = 1000;
  std::size_t thin = 10;
  std::uint64_t seed = 1;
  bool kpt = true;
  /// Starting (alpha, beta); the stepwise estimate collapsed to the tie structure when absent.
  std::optional<HtParams> initial;
};

struct Chain {
  std::vector<MixtureState> states;
  std::vector<std::size_t> iterations;  // sweep index of each recorded state
  std::vector<double> log_posterior;
  std::vector<double> mh_acceptance;    // per free parameter, post burn-in
  double label_acceptance = 0.0;
  Priors priors;
  TieStructure tie;
  ChainConfig config;
};

Chain run_chain(const LagData& data, const Priors& priors, const TieStructure& tie, const ChainConfig& config);

/// G(z) = sum_k w_k prod_j Phi((z_j - mu_jk) / psi_jk).
double residual_mixture_cdf(const MixtureState& state, std::span<const double> z);

MixtureResidualLaw mixture_law(const MixtureState& state);

}  // namespace htc
