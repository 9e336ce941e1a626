#include "htc/functionals.hpp"

#include <algorithm>
#include <cmath>

#include "htc/error.hpp"

namespace htc {
namespace {

MonteCarloValue mean_and_se(double sum, double sum_sq, std::size_t count) {
  const double n = static_cast<double>(count);
  const double mean = sum / n;
  const double var = count > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {std::clamp(mean, 0.0, 1.0), std::sqrt(var / n)};
}

void check_draws(std::span<const double> draws) {
  if (draws.empty()) throw Error(ErrorKind::invalid_argument, "need at least one Monte Carlo draw");
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::empirical: return "empirical";
    case Method::stepwise: return "stepwise";
    case Method::bayes: return "bayes";
  }
  return "empirical";
}

Method parse_method(const std::string& text) {
  if (text == "empirical") return Method::empirical;
  if (text == "stepwise") return Method::stepwise;
  if (text == "bayes") return Method::bayes;
  throw Error(ErrorKind::config, "unknown method '" + text + "' (expected empirical, stepwise or bayes)");
}

Level level_from_data(const MarginalModel& marginal, double x) { return {x, marginal.to_laplace(x)}; }

double theta_runs(const TimeSeries& series, double x, std::size_t m) {
  if (m == 0) throw Error(ErrorKind::invalid_argument, "run length must be at least 1");
  if (series.size() == 0) throw Error(ErrorKind::no_exceedances, "empty series");
  const double top = *std::max_element(series.values.begin(), series.values.end());
  if (x >= top) throw Error(ErrorKind::beyond_data, "level lies at or above the sample maximum");
  std::size_t exceed = 0, quiet = 0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (!(series.values[t] > x) || !series.window_within(t, m)) continue;
    ++exceed;
    bool all_below = true;
    for (std::size_t j = 1; j <= m && all_below; ++j) all_below = series.values[t + j] <= x;
    if (all_below) ++quiet;
  }
  if (exceed == 0) throw Error(ErrorKind::no_exceedances, "no exceedance of the level has a complete window");
  return static_cast<double>(quiet) / static_cast<double>(exceed);
}

double chi_empirical(const TimeSeries& series, double x, std::size_t j) {
  if (j == 0) throw Error(ErrorKind::invalid_argument, "lag must be at least 1");
  if (series.size() == 0) throw Error(ErrorKind::no_exceedances, "empty series");
  const double top = *std::max_element(series.values.begin(), series.values.end());
  if (x >= top) throw Error(ErrorKind::beyond_data, "level lies at or above the sample maximum");
  std::size_t exceed = 0, again = 0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (!(series.values[t] > x) || !series.window_within(t, j)) continue;
    ++exceed;
    if (series.values[t + j] > x) ++again;
  }
  if (exceed == 0) throw Error(ErrorKind::no_exceedances, "no exceedance of the level has a complete window");
  return static_cast<double>(again) / static_cast<double>(exceed);
}

std::vector<double> exceedance_draws(std::size_t replicates, Rng& rng) {
  std::vector<double> e(replicates);
  for (double& v : e) v = draw_exponential(rng);
  return e;
}

std::vector<MonteCarloValue> theta_model(const ResidualLaw& law, const HtParams& params, double x_laplace,
                                         std::span<const std::size_t> run_lengths, std::span<const double> draws) {
  check_draws(draws);
  if (run_lengths.empty()) return {};
  if (!std::is_sorted(run_lengths.begin(), run_lengths.end()) || run_lengths.front() == 0 ||
      run_lengths.back() > params.lags() || run_lengths.back() > law.dimension()) {
    throw Error(ErrorKind::invalid_argument, "run lengths must be ascending within 1..m");
  }
  const std::size_t deepest = run_lengths.back();
  std::vector<double> z(deepest), g(run_lengths.size());
  std::vector<double> sum(run_lengths.size(), 0.0), sum_sq(run_lengths.size(), 0.0);
  for (double e : draws) {
    const double y = x_laplace + e;
    const double log_y = std::log(y);
    for (std::size_t j = 0; j < deepest; ++j) {
      z[j] = (x_laplace - params.alpha[j] * y) * std::exp(-params.beta[j] * log_y);
    }
    law.prefix_cdf(z, run_lengths, g);
    for (std::size_t p = 0; p < g.size(); ++p) {
      sum[p] += g[p];
      sum_sq[p] += g[p] * g[p];
    }
  }
  std::vector<MonteCarloValue> out(run_lengths.size());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = mean_and_se(sum[p], sum_sq[p], draws.size());
  return out;
}

MonteCarloValue theta_model(const ResidualLaw& law, const HtParams& params, double x_laplace, std::size_t m,
                            std::span<const double> draws) {
  return theta_model(law, params, x_laplace, std::span<const std::size_t>(&m, 1), draws).front();
}

MonteCarloValue chi_model(const ResidualLaw& law, const HtParams& params, double x_laplace, std::size_t j,
                          std::span<const double> draws) {
  check_draws(draws);
  if (j == 0 || j > params.lags() || j > law.dimension()) throw Error(ErrorKind::invalid_argument, "lag out of range");
  const double a = params.alpha[j - 1];
  const double b = params.beta[j - 1];
  double sum = 0.0, sum_sq = 0.0;
  for (double e : draws) {
    const double y = x_laplace + e;
    const double s = law.marginal_survivor(j - 1, (x_laplace - a * y) * std::exp(-b * std::log(y)));
    sum += s;
    sum_sq += s * s;
  }
  return mean_and_se(sum, sum_sq, draws.size());
}

Eigen::MatrixXd theta_posterior_draws(const Chain& chain, double x_laplace, std::span<const std::size_t> run_lengths,
                                      std::span<const double> draws) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(chain.states.size()), static_cast<Eigen::Index>(run_lengths.size()));
  for (std::size_t s = 0; s < chain.states.size(); ++s) {
    const auto& state = chain.states[s];
    const auto vals = theta_model(mixture_law(state), state.ht, x_laplace, run_lengths, draws);
    for (std::size_t p = 0; p < vals.size(); ++p) {
      out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(p)) = vals[p].value;
    }
  }
  return out;
}

Eigen::VectorXd chi_posterior_draws(const Chain& chain, double x_laplace, std::size_t j, std::span<const double> draws) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(chain.states.size()));
  for (std::size_t s = 0; s < chain.states.size(); ++s) {
    const auto& state = chain.states[s];
    out[static_cast<Eigen::Index>(s)] = chi_model(mixture_law(state), state.ht, x_laplace, j, draws).value;
  }
  return out;
}

FunctionalEstimate summarize_posterior(std::span<const double> values, double coverage) {
  if (values.empty()) throw Error(ErrorKind::invalid_argument, "no posterior draws to summarise");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double tail = 0.5 * (1.0 - coverage);
  FunctionalEstimate est;
  est.value = empirical_quantile(sorted, 0.5);
  est.lo = empirical_quantile(sorted, tail);
  est.hi = empirical_quantile(sorted, 1.0 - tail);
  return est;
}

FunctionalEstimate theta_posterior(const Chain& chain, const Level& level, std::size_t m, std::size_t replicates,
                                   std::uint64_t seed, double coverage) {
  if (chain.states.empty()) throw Error(ErrorKind::invalid_argument, "empty chain");
  Rng rng = make_stream(seed, 0);
  const auto draws = exceedance_draws(replicates, rng);
  const Eigen::VectorXd per_state = theta_posterior_draws(chain, level.laplace, std::span<const std::size_t>(&m, 1), draws).col(0);
  FunctionalEstimate est = summarize_posterior(std::span<const double>(per_state.data(), per_state.size()), coverage);
  est.level = level;
  est.m = m;
  est.method = Method::bayes;
  est.replicates = replicates;
  return est;
}

FunctionalEstimate chi_posterior(const Chain& chain, const Level& level, std::size_t j, std::size_t replicates,
                                 std::uint64_t seed, double coverage) {
  if (chain.states.empty()) throw Error(ErrorKind::invalid_argument, "empty chain");
  Rng rng = make_stream(seed, 0);
  const auto draws = exceedance_draws(replicates, rng);
  const Eigen::VectorXd per_state = chi_posterior_draws(chain, level.laplace, j, draws);
  FunctionalEstimate est = summarize_posterior(std::span<const double>(per_state.data(), per_state.size()), coverage);
  est.level = level;
  est.m = j;
  est.method = Method::bayes;
  est.replicates = replicates;
  return est;
}

MonteCarloValue theta_stepwise(const StepwiseFit& fit, double x_laplace, std::size_t m, std::span<const double> draws) {
  return theta_model(EmpiricalResidualLaw(fit.residual_cloud), fit.params, x_laplace, m, draws);
}

MonteCarloValue chi_stepwise(const StepwiseFit& fit, double x_laplace, std::size_t j, std::span<const double> draws) {
  return chi_model(EmpiricalResidualLaw(fit.residual_cloud), fit.params, x_laplace, j, draws);
}

double cluster_max_cdf(const std::function<double(double)>& theta_fn, const GpdParams& gpd, double x) {
  if (x < gpd.threshold) throw Error(ErrorKind::invalid_argument, "level below the threshold");
  const double base = theta_fn(gpd.threshold);
  if (!(base > 0.0)) throw Error(ErrorKind::invalid_argument, "theta at the threshold must be positive");
  return 1.0 - theta_fn(x) / base * gpd_survivor(gpd, x);
}

TimeSeries block_resample(const TimeSeries& series, std::size_t block_len, Rng& rng) {
  if (block_len == 0) throw Error(ErrorKind::invalid_argument, "block length must be positive");
  const std::size_t n = series.size();
  if (n == 0) throw Error(ErrorKind::invalid_argument, "empty series");
  TimeSeries out;
  out.values.reserve(n);
  out.segment.reserve(n);
  std::int32_t next_id = 0;

  if (series.segmented()) {
    const auto ranges = segment_ranges(series);
    const std::size_t count = ranges.size();
    const std::size_t group = std::min(block_len, count);
    std::uniform_int_distribution<std::size_t> pick(0, count - group);
    std::size_t taken = 0;
    while (taken < count) {
      const std::size_t first = pick(rng);
      for (std::size_t g = 0; g < group && taken < count; ++g, ++taken) {
        const auto [b, e] = ranges[first + g];
        for (std::size_t t = b; t < e; ++t) {
          out.values.push_back(series.values[t]);
          out.segment.push_back(next_id);
        }
        ++next_id;
      }
    }
    return out;
  }

  const std::size_t len = std::min(block_len, n);
  std::uniform_int_distribution<std::size_t> pick(0, n - len);
  while (out.values.size() < n) {
    const std::size_t first = pick(rng);
    for (std::size_t t = first; t < first + len && out.values.size() < n; ++t) {
      out.values.push_back(series.values[t]);
      out.segment.push_back(next_id);
    }
    ++next_id;
  }
  return out;
}

std::vector<BootstrapResult> block_bootstrap(
    const TimeSeries& series, std::size_t block_len, std::size_t replicates,
    const std::function<std::vector<double>(const TimeSeries&)>& estimator, std::size_t outputs, std::uint64_t seed,
    double coverage) {
  if (replicates == 0) throw Error(ErrorKind::invalid_argument, "need at least one bootstrap replicate");
  std::vector<BootstrapResult> out(outputs);
  std::size_t dropped = 0;
  for (std::size_t b = 0; b < replicates; ++b) {
    Rng rng = make_stream(seed, b);
    std::vector<double> values;
    try {
      values = estimator(block_resample(series, block_len, rng));
    } catch (const Error&) {
      ++dropped;
      continue;
    }
    if (values.size() != outputs) {
      ++dropped;
      continue;
    }
    for (std::size_t k = 0; k < outputs; ++k) out[k].replicates.push_back(values[k]);
  }
  if (dropped == replicates) throw Error(ErrorKind::non_convergence, "every bootstrap replicate failed");
  const double tail = 0.5 * (1.0 - coverage);
  for (auto& r : out) {
    r.dropped = dropped;
    std::sort(r.replicates.begin(), r.replicates.end());
    r.lo = empirical_quantile(r.replicates, tail);
    r.hi = empirical_quantile(r.replicates, 1.0 - tail);
  }
  return out;
}

BootstrapResult block_bootstrap(const TimeSeries& series, std::size_t block_len, std::size_t replicates,
                                const std::function<double(const TimeSeries&)>& estimator, std::uint64_t seed,
                                double coverage) {
  auto wrapped = [&](const TimeSeries& s) { return std::vector<double>{estimator(s)}; };
  return block_bootstrap(series, block_len, replicates, wrapped, 1, seed, coverage).front();
}

}  // namespace htc
