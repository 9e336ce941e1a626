#pragma once

#include <cstdint>
#include <random>

namespace htc {

using Rng = std::mt19937_64;

/// Independent stream `stream` derived from a user seed. Streams with
/// different ids are used for parallel replicates and shared Monte Carlo draws.
Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0);

double draw_uniform(Rng& rng);
double draw_normal(Rng& rng);
double draw_exponential(Rng& rng);
double draw_gamma(Rng& rng, double shape, double scale);

// A Beta variate with its logarithm and the logarithm of its complement,
// both computed from the underlying gamma pair so neither loses precision
// when the variate is close to 0 or 1.
struct BetaDraw {
  double value;
  double log_value;
  double log_complement;
};

BetaDraw draw_beta(Rng& rng, double a, double b);

}  // namespace htc
