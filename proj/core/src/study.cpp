#include "htc/study.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <mutex>
#include <numbers>
#include <spdlog/spdlog.h>
#include <thread>

#include "htc/error.hpp"
#include "htc/functionals.hpp"
#include "htc/marginals.hpp"
#include "htc/mvn.hpp"
#include "htc/stepwise.hpp"

namespace htc {
namespace {

using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json design_json(const StudyDesign& d) {
  json j;
  j["rho"] = d.ar1.rho;
  j["n"] = d.ar1.n;
  j["margins"] = d.ar1.margins == Margins::exponential ? "exponential" : "gaussian";
  j["replicates"] = d.replicates;
  j["marginal_quantile"] = d.marginal_quantile;
  j["dependence_quantile"] = d.dependence_quantile;
  j["level_quantiles"] = d.level_quantiles;
  j["m"] = d.m;
  j["tie"] = to_string(d.tie);
  j["methods"] = d.methods;
  j["chain"] = {{"iterations", d.chain.iterations}, {"burn_in", d.chain.burn_in}, {"thin", d.chain.thin},
                {"kpt", d.chain.kpt}};
  const Priors p = d.priors.value_or(Priors::defaults(d.m));
  j["priors"] = {{"eta1", p.eta1}, {"eta2", p.eta2}, {"psi_mu_sq", p.psi_mu_sq}, {"nu1", p.nu1},
                 {"nu2", p.nu2}, {"gamma_floor", p.gamma_floor}, {"truncation", p.truncation}};
  j["mc_replicates"] = d.mc_replicates;
  j["bootstrap_replicates"] = d.bootstrap_replicates;
  j["block_len"] = d.block_len;
  j["nominal"] = d.nominal;
  j["seed"] = d.seed;
  return j;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json replicate_json(const ReplicateResult& r, std::uint64_t design_hash) {
  json j;
  j["design_hash"] = design_hash;
  j["index"] = r.index;
  j["methods"] = json::array();
  for (const auto& m : r.methods) {
    json jm;
    jm["method"] = m.method;
    jm["error"] = m.error;
    jm["estimate"] = json::array();
    for (double v : m.estimate) jm["estimate"].push_back(number(v));
    jm["lower"] = json::array();
    for (const auto& row : m.lower) {
      json jr = json::array();
      for (double v : row) jr.push_back(number(v));
      jm["lower"].push_back(jr);
    }
    j["methods"].push_back(jm);
  }
  return j;
}

ReplicateResult replicate_from_json(const json& j) {
  ReplicateResult r;
  r.index = j.at("index").get<std::size_t>();
  for (const auto& jm : j.at("methods")) {
    MethodResult m;
    m.method = jm.at("method").get<std::string>();
    m.error = jm.at("error").get<std::string>();
    for (const auto& v : jm.at("estimate")) m.estimate.push_back(number(v));
    for (const auto& jr : jm.at("lower")) {
      std::vector<double> row;
      for (const auto& v : jr) row.push_back(number(v));
      m.lower.push_back(std::move(row));
    }
    r.methods.push_back(std::move(m));
  }
  return r;
}

std::filesystem::path checkpoint_path(const StudyDesign& d, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "replicate_%04zu.json", index);
  return std::filesystem::path(d.checkpoint_dir) / name;
}

std::optional<ReplicateResult> load_checkpoint(const StudyDesign& d, std::size_t index, std::uint64_t hash) {
  if (d.checkpoint_dir.empty()) return std::nullopt;
  const auto path = checkpoint_path(d, index);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const json j = json::parse(in);
    if (j.at("design_hash").get<std::uint64_t>() != hash) return std::nullopt;
    return replicate_from_json(j);
  } catch (const std::exception& e) {
    spdlog::warn("ignoring unreadable checkpoint {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void save_checkpoint(const StudyDesign& d, const ReplicateResult& r, std::uint64_t hash) {
  if (d.checkpoint_dir.empty()) return;
  std::filesystem::create_directories(d.checkpoint_dir);
  const auto path = checkpoint_path(d, r.index);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    out << replicate_json(r, hash).dump(1) << '\n';
    if (!out) throw Error(ErrorKind::invalid_argument, "cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// q_{1-c} for each nominal level c from a sorted sample.
std::vector<double> lower_bounds(const std::vector<double>& sorted, const std::vector<double>& nominal) {
  std::vector<double> out;
  for (double c : nominal) out.push_back(sorted.empty() ? kNaN : empirical_quantile(sorted, 1.0 - c));
  return out;
}

std::vector<double> stepwise_thetas(const TimeSeries& series, const StudyDesign& d, std::span<const double> draws) {
  const MarginalModel marg = fit_marginal(series, d.marginal_quantile);
  const LagData data = make_lag_data(series, marg, d.dependence_quantile, d.m);
  const StepwiseFit fit = fit_stepwise(data);
  std::vector<double> out;
  for (double p : d.level_quantiles) {
    out.push_back(theta_stepwise(fit, marg.to_laplace(ar1_level(d, p)), d.m, draws).value);
  }
  return out;
}

MethodResult empirical_estimator(const ReplicateContext& ctx) {
  const auto& d = ctx.design;
  MethodResult r;
  r.method = "empirical";
  for (std::size_t l = 0; l < d.level_quantiles.size(); ++l) {
    const double x = ar1_level(d, d.level_quantiles[l]);
    try {
      r.estimate.push_back(theta_runs(ctx.series, x, d.m));
      const auto boot = block_bootstrap(
          ctx.series, d.block_len, d.bootstrap_replicates, [&](const TimeSeries& s) { return theta_runs(s, x, d.m); },
          ctx.seed ^ (0x5bd1e995ULL * (l + 1)));
      r.lower.push_back(lower_bounds(boot.replicates, d.nominal));
    } catch (const Error&) {
      r.estimate.push_back(kNaN);
      r.lower.emplace_back(d.nominal.size(), kNaN);
    }
  }
  return r;
}

MethodResult stepwise_estimator(const ReplicateContext& ctx) {
  const auto& d = ctx.design;
  MethodResult r;
  r.method = "stepwise";
  Rng rng = make_stream(ctx.seed, 1);
  const auto draws = exceedance_draws(d.mc_replicates, rng);
  r.estimate = stepwise_thetas(ctx.series, d, draws);
  const auto boot = block_bootstrap(
      ctx.series, d.block_len, d.bootstrap_replicates,
      [&](const TimeSeries& s) { return stepwise_thetas(s, d, draws); }, d.level_quantiles.size(), ctx.seed + 2);
  for (const auto& b : boot) r.lower.push_back(lower_bounds(b.replicates, d.nominal));
  return r;
}

MethodResult bayes_estimator(const ReplicateContext& ctx) {
  const auto& d = ctx.design;
  MethodResult r;
  r.method = "bayes";
  const MarginalModel marg = fit_marginal(ctx.series, d.marginal_quantile);
  const LagData data = make_lag_data(ctx.series, marg, d.dependence_quantile, d.m);
  ChainConfig cfg = d.chain;
  cfg.seed = ctx.seed + 3;
  const Priors priors = d.priors.value_or(Priors::defaults(d.m));
  const Chain chain = run_chain(data, priors, TieStructure{d.tie, d.m}, cfg);
  Rng rng = make_stream(ctx.seed, 1);
  const auto draws = exceedance_draws(d.mc_replicates, rng);
  for (double p : d.level_quantiles) {
    const std::size_t m = d.m;
    const Eigen::VectorXd per_state =
        theta_posterior_draws(chain, marg.to_laplace(ar1_level(d, p)), std::span<const std::size_t>(&m, 1), draws).col(0);
    std::vector<double> sorted(per_state.data(), per_state.data() + per_state.size());
    std::sort(sorted.begin(), sorted.end());
    r.estimate.push_back(empirical_quantile(sorted, 0.5));
    r.lower.push_back(lower_bounds(sorted, d.nominal));
  }
  return r;
}

ReplicateResult run_replicate(const StudyDesign& d, const std::vector<StudyEstimator>& estimators, std::size_t index) {
  Rng seeder = make_stream(d.seed, index);
  const std::uint64_t series_seed = seeder();
  const std::uint64_t method_seed = seeder();
  const TimeSeries series = sim_ar1(d.ar1, series_seed);
  ReplicateResult out;
  out.index = index;
  for (std::size_t k = 0; k < estimators.size(); ++k) {
    MethodResult r;
    try {
      r = estimators[k](ReplicateContext{d, series, index, method_seed});
    } catch (const std::exception& e) {
      r = MethodResult{};
      r.error = e.what();
      r.estimate.assign(d.level_quantiles.size(), kNaN);
      r.lower.assign(d.level_quantiles.size(), std::vector<double>(d.nominal.size(), kNaN));
    }
    r.method = d.methods[k];
    out.methods.push_back(std::move(r));
  }
  return out;
}

}  // namespace

void StudyDesign::validate() const {
  if (replicates < 2) throw Error(ErrorKind::config, "a study needs at least two replicates");
  if (!(marginal_quantile > 0.5 && marginal_quantile < 1.0) ||
      !(dependence_quantile >= marginal_quantile && dependence_quantile < 1.0)) {
    throw Error(ErrorKind::config, "need 0.5 < marginal quantile <= dependence quantile < 1");
  }
  if (level_quantiles.empty()) throw Error(ErrorKind::config, "empty level grid");
  for (double p : level_quantiles) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::config, "level quantiles must lie in (0, 1)");
  }
  for (double c : nominal) {
    if (!(c > 0.0 && c < 1.0)) throw Error(ErrorKind::config, "nominal levels must lie in (0, 1)");
  }
  if (m == 0 || mc_replicates == 0 || bootstrap_replicates == 0 || block_len == 0 || workers == 0) {
    throw Error(ErrorKind::config, "counts must be positive");
  }
  if (methods.empty()) throw Error(ErrorKind::config, "no methods requested");
}

std::uint64_t StudyDesign::hash() const {
  const std::string text = design_json(*this).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

double ar1_level(const StudyDesign& d, double p) {
  if (d.ar1.margins == Margins::exponential) return -std::log1p(-p);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

StudyEstimator builtin_estimator(const std::string& method) {
  if (method == "empirical") return empirical_estimator;
  if (method == "stepwise") return stepwise_estimator;
  if (method == "bayes") return bayes_estimator;
  throw Error(ErrorKind::config, "unknown study method '" + method + "'");
}

std::size_t StudyReport::method_index(const std::string& method) const {
  const auto it = std::find(methods.begin(), methods.end(), method);
  if (it == methods.end()) throw Error(ErrorKind::invalid_argument, "method '" + method + "' not in the report");
  return static_cast<std::size_t>(it - methods.begin());
}

double StudyReport::rmse_ratio(const std::string& numerator, const std::string& denominator, std::size_t level) const {
  const auto l = static_cast<Eigen::Index>(level);
  return rmse(static_cast<Eigen::Index>(method_index(numerator)), l) /
         rmse(static_cast<Eigen::Index>(method_index(denominator)), l);
}

double StudyReport::mean_abs_coverage_error(const std::string& method, std::size_t level) const {
  const Eigen::MatrixXd& ce = coverage_error[method_index(method)];
  return ce.row(static_cast<Eigen::Index>(level)).cwiseAbs().mean();
}

StudyReport reduce_study(const StudyDesign& d, std::vector<double> truth, std::vector<double> truth_se,
                         std::vector<ReplicateResult> replicates) {
  StudyReport rep;
  rep.level_quantiles = d.level_quantiles;
  rep.truth = std::move(truth);
  rep.truth_se = std::move(truth_se);
  rep.methods = d.methods;
  rep.nominal = d.nominal;
  const auto nm = static_cast<Eigen::Index>(d.methods.size());
  const auto nl = static_cast<Eigen::Index>(d.level_quantiles.size());
  const auto nc = static_cast<Eigen::Index>(d.nominal.size());
  rep.rmse = Eigen::MatrixXd::Zero(nm, nl);
  rep.used = Eigen::MatrixXi::Zero(nm, nl);
  rep.coverage_error.assign(d.methods.size(), Eigen::MatrixXd::Zero(nl, nc));
  std::vector<Eigen::MatrixXi> covered(d.methods.size(), Eigen::MatrixXi::Zero(nl, nc));
  std::vector<Eigen::MatrixXi> judged(d.methods.size(), Eigen::MatrixXi::Zero(nl, nc));

  for (const auto& r : replicates) {
    for (Eigen::Index k = 0; k < nm; ++k) {
      const auto& mr = r.methods[static_cast<std::size_t>(k)];
      if (!mr.error.empty()) ++rep.failures;
      for (Eigen::Index l = 0; l < nl; ++l) {
        const auto ll = static_cast<std::size_t>(l);
        const double est = ll < mr.estimate.size() ? mr.estimate[ll] : kNaN;
        if (std::isfinite(est)) {
          const double e = est - rep.truth[ll];
          rep.rmse(k, l) += e * e;
          ++rep.used(k, l);
        }
        for (Eigen::Index c = 0; c < nc; ++c) {
          const double q = ll < mr.lower.size() ? mr.lower[ll][static_cast<std::size_t>(c)] : kNaN;
          if (!std::isfinite(q)) continue;
          ++judged[static_cast<std::size_t>(k)](l, c);
          if (rep.truth[ll] >= q) ++covered[static_cast<std::size_t>(k)](l, c);
        }
      }
    }
  }
  for (Eigen::Index k = 0; k < nm; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    for (Eigen::Index l = 0; l < nl; ++l) {
      rep.rmse(k, l) = rep.used(k, l) > 0 ? std::sqrt(rep.rmse(k, l) / rep.used(k, l)) : kNaN;
      for (Eigen::Index c = 0; c < nc; ++c) {
        const int n = judged[kk](l, c);
        rep.coverage_error[kk](l, c) =
            n > 0 ? static_cast<double>(covered[kk](l, c)) / n - d.nominal[static_cast<std::size_t>(c)] : kNaN;
      }
    }
  }
  rep.replicates = std::move(replicates);
  return rep;
}

StudyReport run_study(const StudyDesign& d, const std::vector<StudyEstimator>& estimators,
                      std::optional<std::vector<double>> truth) {
  d.validate();
  if (estimators.size() != d.methods.size()) throw Error(ErrorKind::config, "one estimator per method is required");

  std::vector<double> values, ses;
  if (truth) {
    if (truth->size() != d.level_quantiles.size()) throw Error(ErrorKind::config, "truth must match the level grid");
    values = *truth;
    ses.assign(values.size(), 0.0);
  } else {
    for (double p : d.level_quantiles) {
      const MvnResult t = true_theta_ar1(d.ar1.rho, p, d.m);
      values.push_back(t.value);
      ses.push_back(t.se);
    }
  }

  const std::uint64_t hash = d.hash();
  std::vector<ReplicateResult> results(d.replicates);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < d.replicates; i = next++) {
      if (auto cached = load_checkpoint(d, i, hash)) {
        results[i] = std::move(*cached);
        continue;
      }
      results[i] = run_replicate(d, estimators, i);
      save_checkpoint(d, results[i], hash);
      std::lock_guard lock(log_mutex);
      spdlog::info("study replicate {}/{} done", i + 1, d.replicates);
    }
  };
  const std::size_t threads = std::min(d.workers, d.replicates);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return reduce_study(d, std::move(values), std::move(ses), std::move(results));
}

StudyReport run_study(const StudyDesign& d) {
  std::vector<StudyEstimator> estimators;
  for (const auto& m : d.methods) estimators.push_back(builtin_estimator(m));
  return run_study(d, estimators);
}

}  // namespace htc
