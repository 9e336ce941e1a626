#include "commands.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "htc/error.hpp"
#include "htc/functionals.hpp"
#include "htc/io.hpp"
#include "htc/simulate.hpp"
#include "htc/stepwise.hpp"
#include "htc/study.hpp"
#include "ingest.hpp"

namespace htc::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
  Options options;
  RunConfig config;
  std::string out;
  std::uint64_t seed = 0;

  std::string path(const std::string& name) const { return (fs::path(out) / name).string(); }

  std::string csv_header() const {
    return fmt::format("# htc {} command={} config_hash={} seed={}\n", kVersion, options.command,
                       hex(config.hash()), seed);
  }

  json provenance() const {
    return {{"tool", "htc"},
            {"version", kVersion},
            {"command", options.command},
            {"config_hash", hex(config.hash())},
            {"seed", seed}};
  }

  void write_json(const std::string& name, const std::string& key, json body) const {
    json doc = {{"provenance", provenance()}, {key, std::move(body)}};
    write_atomic(path(name), doc.dump(2) + "\n");
  }

  json read_json(const std::string& name, const std::string& key, const std::string& producer) const {
    const std::string p = path(name);
    std::ifstream in(p);
    if (!in) throw Error(ErrorKind::missing_artifact, p + " not found; run `htc " + producer + "` first");
    try {
      return json::parse(in).at(key);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::malformed_input, p + ": " + e.what());
    }
  }
};

std::string num(double v) { return fmt::format("{}", v); }

TimeSeries read_canonical(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::missing_artifact, path + " not found; run `htc ingest` first or pass --input");
  std::string header;
  while (std::getline(in, header) && !header.empty() && header.front() == '#') {
  }
  RunConfig canonical;
  if (header.find("season") != std::string::npos) canonical.season_column = "season";
  in.clear();
  in.seekg(0);
  return read_series_csv(in, canonical, path);
}

TimeSeries load_series(const Context& ctx) {
  if (!ctx.config.input.empty()) return read_series_csv(ctx.config.input, ctx.config);
  return read_canonical(ctx.path("series.csv"));
}

MarginalModel load_marginal(const Context& ctx) {
  return marginal_from_json(ctx.read_json("marginal.json", "marginal", "fit-marginal"));
}

std::vector<double> requested_levels(const Context& ctx) {
  if (ctx.config.levels.empty()) throw Error(ErrorKind::config, "no levels given (--levels or config \"levels\")");
  return ctx.config.levels;
}

void cmd_ingest(const Context& ctx) {
  if (ctx.config.input.empty()) throw Error(ErrorKind::config, "ingest needs --input or config \"input\"");
  const TimeSeries series = read_series_csv(ctx.config.input, ctx.config);
  write_atomic(ctx.path("series.csv"), series_csv(series, ctx.csv_header()));
  json summary = {{"observations", series.size()},
                  {"segments", series.segment_count()},
                  {"seasonal", series.segmented()},
                  {"dated", !series.dates.empty()}};
  ctx.write_json("ingest.json", "series", std::move(summary));
}

void cmd_fit_marginal(const Context& ctx) {
  const TimeSeries series = load_series(ctx);
  const MarginalModel marginal = fit_marginal(series, ctx.config.marginal_quantile);
  ctx.write_json("marginal.json", "marginal", to_json(marginal));
}

void cmd_fit_stepwise(const Context& ctx) {
  const TimeSeries series = load_series(ctx);
  const MarginalModel marginal = load_marginal(ctx);
  const LagData data = make_lag_data(series, marginal, ctx.config.dependence_quantile, ctx.config.m);
  ctx.write_json("stepwise.json", "stepwise", to_json(fit_stepwise(data)));
}

void cmd_fit_bayes(const Context& ctx) {
  const TimeSeries series = load_series(ctx);
  const MarginalModel marginal = load_marginal(ctx);
  const LagData data = make_lag_data(series, marginal, ctx.config.dependence_quantile, ctx.config.m);
  ChainConfig chain_config = ctx.config.chain;
  chain_config.seed = ctx.seed;
  const Chain chain = run_chain(data, ctx.config.priors, TieStructure{ctx.config.tie, ctx.config.m}, chain_config);
  ctx.write_json("chain.json", "chain", to_json(chain));
  std::ostringstream trace;
  trace << ctx.csv_header();
  write_chain_trace(trace, chain);
  write_atomic(ctx.path("trace.csv"), trace.str());
}

// theta(x, m) when `theta` is set, chi_m(x) otherwise.
void cmd_functional(const Context& ctx, bool theta) {
  const RunConfig& cfg = ctx.config;
  const Method method = parse_method(ctx.options.method);
  const std::vector<double> levels = requested_levels(ctx);
  const std::size_t m = cfg.m;
  const TimeSeries series = load_series(ctx);

  std::vector<FunctionalEstimate> rows;
  if (method == Method::empirical) {
    for (double x : levels) {
      auto estimator = [&](const TimeSeries& s) { return theta ? theta_runs(s, x, m) : chi_empirical(s, x, m); };
      FunctionalEstimate est;
      est.level = {x, std::nan("")};
      est.m = m;
      est.method = method;
      est.value = estimator(series);
      const BootstrapResult boot =
          block_bootstrap(series, cfg.block_len, cfg.bootstrap_replicates, estimator, ctx.seed, cfg.coverage);
      est.lo = boot.lo;
      est.hi = boot.hi;
      est.replicates = boot.replicates.size();
      rows.push_back(est);
    }
  } else if (method == Method::stepwise) {
    const MarginalModel marginal = load_marginal(ctx);
    const StepwiseFit fit = stepwise_from_json(ctx.read_json("stepwise.json", "stepwise", "fit-stepwise"));
    if (m > fit.params.lags()) {
      throw Error(ErrorKind::config, fmt::format("m = {} exceeds the {} lags of the stepwise fit", m, fit.params.lags()));
    }
    Rng rng = make_stream(ctx.seed, 1);
    const std::vector<double> draws = exceedance_draws(cfg.mc_replicates, rng);
    auto evaluate = [&](const StepwiseFit& f, const MarginalModel& marg, double x) {
      const double y = marg.to_laplace(x);
      return theta ? theta_stepwise(f, y, m, draws) : chi_stepwise(f, y, m, draws);
    };
    const std::size_t fit_lags = fit.params.lags();
    const auto boot = block_bootstrap(
        series, cfg.block_len, cfg.bootstrap_replicates,
        [&](const TimeSeries& s) {
          const MarginalModel marg = fit_marginal(s, cfg.marginal_quantile);
          const StepwiseFit refit = fit_stepwise(make_lag_data(s, marg, cfg.dependence_quantile, fit_lags));
          std::vector<double> out;
          for (double x : levels) out.push_back(evaluate(refit, marg, x).value);
          return out;
        },
        levels.size(), ctx.seed + 2, cfg.coverage);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const MonteCarloValue v = evaluate(fit, marginal, levels[l]);
      FunctionalEstimate est;
      est.level = level_from_data(marginal, levels[l]);
      est.m = m;
      est.method = method;
      est.value = v.value;
      est.mc_se = v.se;
      est.lo = boot[l].lo;
      est.hi = boot[l].hi;
      est.replicates = boot[l].replicates.size();
      rows.push_back(est);
    }
  } else {
    const MarginalModel marginal = load_marginal(ctx);
    const Chain chain = chain_from_json(ctx.read_json("chain.json", "chain", "fit-bayes"));
    for (double x : levels) {
      const Level level = level_from_data(marginal, x);
      rows.push_back(theta ? theta_posterior(chain, level, m, cfg.mc_replicates, ctx.seed, cfg.coverage)
                           : chi_posterior(chain, level, m, cfg.mc_replicates, ctx.seed, cfg.coverage));
    }
  }

  std::string csv = ctx.csv_header();
  csv += fmt::format("level,laplace_level,{},method,estimate,lo,hi,mc_se,replicates\n", theta ? "m" : "lag");
  for (const auto& r : rows) {
    csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", num(r.level.data), num(r.level.laplace), r.m,
                       to_string(r.method), num(r.value), num(r.lo), num(r.hi), num(r.mc_se), r.replicates);
  }
  write_atomic(ctx.path(theta ? "theta.csv" : "chi.csv"), csv);
}

Ar1Spec parse_ar1(const std::vector<std::string>& tokens, std::uint64_t& seed) {
  Ar1Spec spec;
  for (const auto& token : tokens) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::config, "simulate token '" + token + "' is not key=value");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "rho") {
        spec.rho = std::stod(value);
      } else if (key == "n") {
        spec.n = std::stoul(value);
      } else if (key == "seed") {
        seed = std::stoull(value);
      } else if (key == "margins") {
        if (value != "exponential" && value != "gaussian") throw Error(ErrorKind::config, "margins must be exponential or gaussian");
        spec.margins = value == "exponential" ? Margins::exponential : Margins::gaussian;
      } else {
        throw Error(ErrorKind::config, "unknown simulate key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::config, "bad simulate value '" + token + "'");
    }
  }
  if (!(spec.rho > -1.0 && spec.rho < 1.0) || spec.n < 2) {
    throw Error(ErrorKind::config, "simulate needs |rho| < 1 and n >= 2");
  }
  return spec;
}

void cmd_simulate(Context ctx) {
  if (ctx.options.ar1.empty()) throw Error(ErrorKind::config, "simulate needs --ar1 key=value tokens");
  const Ar1Spec spec = parse_ar1(ctx.options.ar1, ctx.seed);
  const TimeSeries series = sim_ar1(spec, ctx.seed);
  write_atomic(ctx.path("simulated.csv"), series_csv(series, ctx.csv_header()));
}

void cmd_study(const Context& ctx) {
  StudyDesign design = ctx.config.study;
  if (ctx.options.workers) design.workers = *ctx.options.workers;
  if (ctx.options.seed) design.seed = *ctx.options.seed;
  design.checkpoint_dir = ctx.path("checkpoints");
  const StudyReport report = run_study(design);

  json levels = json::array();
  std::string rmse_csv = ctx.csv_header() + "level_quantile,level,truth,truth_se,method,rmse,used\n";
  std::string cover_csv = ctx.csv_header() + "level_quantile,method,nominal,coverage_error\n";
  for (std::size_t l = 0; l < report.level_quantiles.size(); ++l) {
    const auto li = static_cast<Eigen::Index>(l);
    json per_method = json::object();
    for (std::size_t k = 0; k < report.methods.size(); ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      json cov = json::array();
      for (std::size_t c = 0; c < report.nominal.size(); ++c) {
        const double err = report.coverage_error[k](li, static_cast<Eigen::Index>(c));
        cov.push_back(std::isfinite(err) ? json(err) : json(nullptr));
        cover_csv += fmt::format("{},{},{},{}\n", num(report.level_quantiles[l]), report.methods[k],
                                 num(report.nominal[c]), num(err));
      }
      const double rmse = report.rmse(ki, li);
      per_method[report.methods[k]] = {{"rmse", std::isfinite(rmse) ? json(rmse) : json(nullptr)},
                                       {"used", report.used(ki, li)},
                                       {"coverage_error", std::move(cov)}};
      rmse_csv += fmt::format("{},{},{},{},{},{},{}\n", num(report.level_quantiles[l]),
                              num(ar1_level(design, report.level_quantiles[l])), num(report.truth[l]),
                              num(report.truth_se[l]), report.methods[k], num(rmse), report.used(ki, li));
    }
    levels.push_back({{"level_quantile", report.level_quantiles[l]},
                      {"level", ar1_level(design, report.level_quantiles[l])},
                      {"truth", report.truth[l]},
                      {"truth_se", report.truth_se[l]},
                      {"methods", std::move(per_method)}});
  }
  json body = {{"design", study_to_json(design)},
               {"nominal", report.nominal},
               {"failures", report.failures},
               {"levels", std::move(levels)}};
  ctx.write_json("study.json", "study", std::move(body));
  write_atomic(ctx.path("study_rmse.csv"), rmse_csv);
  write_atomic(ctx.path("study_coverage.csv"), cover_csv);
}

}  // namespace

std::string resolve_out_dir(const Options& options) {
  if (!options.out_dir.empty()) return options.out_dir;
  if (const char* env = std::getenv("HTC_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "htc-out";
}

RunConfig resolve_config(const Options& options) {
  RunConfig config = options.config.empty() ? RunConfig{} : load_config(options.config);
  if (!options.input.empty()) config.input = options.input;
  if (options.seed) config.seed = *options.seed;
  if (!options.levels.empty()) config.levels = parse_levels(options.levels);
  if (options.m && *options.m != config.m) {
    config.m = *options.m;
    if (config.priors.nu1.size() != config.m) {
      const std::size_t truncation = config.priors.truncation;
      config.priors = Priors::defaults(config.m);
      config.priors.truncation = truncation;
    }
  }
  config.validate();
  return config;
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    while (used < item.size() && item[used] == ' ') ++used;
    if (used == 0 || used != item.size() || !std::isfinite(v)) {
      throw Error(ErrorKind::config, "bad level '" + item + "' in --levels");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::config, "--levels is empty");
  return out;
}

void write_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::invalid_argument, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorKind::invalid_argument, "write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, target);
}

std::string series_csv(const TimeSeries& series, const std::string& provenance) {
  const bool dated = !series.dates.empty();
  const bool seasonal = !series.labels.empty();
  std::string csv = provenance;
  csv += "value";
  if (dated) csv += ",date";
  if (seasonal) csv += ",season";
  csv += '\n';
  for (std::size_t t = 0; t < series.size(); ++t) {
    csv += num(series.values[t]);
    if (dated) csv += "," + series.dates[t];
    if (seasonal) csv += "," + series.labels[t];
    csv += '\n';
  }
  return csv;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::missing_artifact: return 3;
    default: return 1;
  }
}

std::string error_json(std::string_view kind, const std::string& message) {
  return json{{"error", kind}, {"message", message}}.dump();
}

void run_command(const Options& options) {
  Context ctx{options, resolve_config(options), resolve_out_dir(options), 0};
  ctx.seed = ctx.config.seed;
  const std::string& c = options.command;
  if (c == "ingest") return cmd_ingest(ctx);
  if (c == "fit-marginal") return cmd_fit_marginal(ctx);
  if (c == "fit-stepwise") return cmd_fit_stepwise(ctx);
  if (c == "fit-bayes") return cmd_fit_bayes(ctx);
  if (c == "theta") return cmd_functional(ctx, true);
  if (c == "chi") return cmd_functional(ctx, false);
  if (c == "simulate") return cmd_simulate(ctx);
  if (c == "study") return cmd_study(ctx);
  throw Error(ErrorKind::config, "unknown command '" + c + "'");
}

}  // namespace htc::app
