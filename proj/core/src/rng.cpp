#include "htc/rng.hpp"

#include <cmath>
#include <limits>

namespace htc {

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

double draw_uniform(Rng& rng) {
  // (0, 1): never returns 0 so logs stay finite.
  double u;
  do {
    u = std::generate_canonical<double, 53>(rng);
  } while (u <= 0.0);
  return u;
}

double draw_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double draw_exponential(Rng& rng) { return -std::log(draw_uniform(rng)); }

double draw_gamma(Rng& rng, double shape, double scale) {
  std::gamma_distribution<double> dist(shape, scale);
  return dist(rng);
}

BetaDraw draw_beta(Rng& rng, double a, double b) {
  double ga = draw_gamma(rng, a, 1.0);
  double gb = draw_gamma(rng, b, 1.0);
  if (ga <= 0.0 && gb <= 0.0) {
    // Both shapes tiny enough to underflow: decide by a fair coin on the ratio.
    ga = draw_uniform(rng) < a / (a + b) ? 1.0 : 0.0;
    gb = 1.0 - ga;
  }
  const double total = ga + gb;
  const double log_total = std::log(total);
  BetaDraw out;
  out.value = ga / total;
  out.log_value = ga > 0.0 ? std::log(ga) - log_total : -std::numeric_limits<double>::infinity();
  out.log_complement = gb > 0.0 ? std::log(gb) - log_total : -std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace htc
