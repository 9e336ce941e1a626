#include <benchmark/benchmark.h>

#include "htc/dpmix.hpp"
#include "htc/functionals.hpp"
#include "htc/mvn.hpp"
#include "htc/simulate.hpp"

namespace {

htc::LagData ar1_lag_data(std::size_t m) {
  const htc::TimeSeries series = htc::sim_ar1(htc::Ar1Spec{0.5, 8000, htc::Margins::exponential}, 3);
  const htc::MarginalModel marginal = htc::fit_marginal(series, 0.95);
  return htc::make_lag_data(series, marginal, 0.95, m);
}

void BM_GibbsSweep(benchmark::State& st) {
  const auto m = static_cast<std::size_t>(st.range(0));
  const htc::LagData data = ar1_lag_data(m);
  htc::Priors priors = htc::Priors::defaults(m);
  priors.truncation = static_cast<std::size_t>(st.range(1));
  const htc::TieStructure tie{htc::TieKind::free, m};
  htc::Rng rng = htc::make_stream(1);
  htc::HtParams start{std::vector<double>(m, 0.3), std::vector<double>(m, 0.4)};
  htc::MixtureState state = htc::prior_state(start, data.rows(), priors, rng);
  htc::AdaptState adapt = htc::AdaptState::initial(tie.free_count());
  const htc::KptSettings kpt{};
  for (auto _ : st) {
    htc::gibbs_sweep(state, data, priors, tie, kpt, adapt, rng);
    benchmark::DoNotOptimize(state.gamma);
  }
  st.counters["rows"] = static_cast<double>(data.rows());
}
BENCHMARK(BM_GibbsSweep)->Args({1, 50})->Args({1, 150})->Args({3, 150})->Unit(benchmark::kMicrosecond);

void BM_ThetaModel(benchmark::State& st) {
  const auto m = static_cast<std::size_t>(st.range(0));
  const auto law = htc::ar1_residual_law(0.5, m);
  const auto truth = htc::ht_truth_gaussian(0.5, 1);
  htc::HtParams params;
  for (std::size_t j = 1; j <= m; ++j) {
    params.alpha.push_back(htc::ht_truth_gaussian(0.5, j).first);
    params.beta.push_back(truth.second);
  }
  htc::Rng rng = htc::make_stream(2);
  const auto draws = htc::exceedance_draws(static_cast<std::size_t>(st.range(1)), rng);
  for (auto _ : st) benchmark::DoNotOptimize(htc::theta_model(law, params, 4.0, m, draws).value);
}
BENCHMARK(BM_ThetaModel)->Args({1, 2000})->Args({1, 200000})->Args({3, 50})->Unit(benchmark::kMicrosecond);

void BM_TrueThetaAr1(benchmark::State& st) {
  const auto m = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(htc::true_theta_ar1(0.5, 0.99, m).value);
}
BENCHMARK(BM_TrueThetaAr1)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_RunsEstimator(benchmark::State& st) {
  const htc::TimeSeries series = htc::sim_ar1(htc::Ar1Spec{0.5, static_cast<std::size_t>(st.range(0))}, 4);
  for (auto _ : st) benchmark::DoNotOptimize(htc::theta_runs(series, 3.0, 3));
}
BENCHMARK(BM_RunsEstimator)->Arg(8000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
