#include <CLI11.hpp>
#include <iostream>

#include "app/commands.hpp"
#include "htc/error.hpp"

int main(int argc, char** argv) {
  using namespace htc::app;
  CLI::App cli{"Clustering of extremes in stationary time series"};
  cli.set_version_flag("--version", kVersion);
  cli.require_subcommand(1);

  Options options;
  std::uint64_t seed = 0;
  std::size_t m = 0;
  std::size_t workers = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--input", options.input, "Input CSV (overrides the config)");
    sub->add_option("--config", options.config, "JSON run configuration");
    sub->add_option("--seed", seed, "Random seed (overrides the config)");
    sub->add_option("--out-dir", options.out_dir, "Output directory (default $HTC_OUT_DIR or htc-out)");
  };
  auto functional = [&](CLI::App* sub, const char* m_help) {
    sub->add_option("--levels", options.levels, "Comma-separated levels on the data scale");
    sub->add_option("--m", m, m_help)->check(CLI::PositiveNumber);
    sub->add_option("--method", options.method, "empirical, stepwise or bayes")
        ->check(CLI::IsMember({"empirical", "stepwise", "bayes"}));
  };

  common(cli.add_subcommand("ingest", "Validate a CSV and write series.csv"));
  for (const char* name : {"fit-marginal", "fit-stepwise", "fit-bayes"}) {
    auto* sub = cli.add_subcommand(name, std::string("Write the ") + (name + 4) + " model");
    common(sub);
    if (std::string(name) != "fit-marginal") sub->add_option("--m", m, "Number of lags")->check(CLI::PositiveNumber);
  }
  auto* theta = cli.add_subcommand("theta", "Threshold-based extremal index theta(x, m)");
  common(theta);
  functional(theta, "Run length");
  auto* chi = cli.add_subcommand("chi", "Extremogram chi_j(x)");
  common(chi);
  functional(chi, "Lag j");
  auto* simulate = cli.add_subcommand("simulate", "Simulate a series");
  common(simulate);
  simulate->add_option("--ar1", options.ar1, "AR(1) settings: rho=, n=, seed=, margins=")->expected(1, -1);
  auto* study = cli.add_subcommand("study", "Replicated AR(1) study of theta estimators");
  common(study);
  study->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e);
  }

  for (auto* sub : cli.get_subcommands()) {
    options.command = sub->get_name();
    if (sub->count("--seed") > 0) options.seed = seed;
    if (sub->get_option_no_throw("--m") != nullptr && sub->count("--m") > 0) options.m = m;
    if (sub->get_option_no_throw("--workers") != nullptr && sub->count("--workers") > 0) options.workers = workers;
  }

  try {
    run_command(options);
  } catch (const htc::Error& e) {
    std::cerr << error_json(htc::to_string(e.kind()), e.what()) << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what()) << '\n';
    return 1;
  }
  return 0;
}
