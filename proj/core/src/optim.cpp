#include "htc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace htc {

OptimResult nelder_mead_maximize(const std::function<double(std::span<const double>)>& objective,
                                 std::vector<double> start, const NelderMeadOptions& options) {
  const std::size_t dim = start.size();
  std::vector<std::vector<double>> simplex(dim + 1, start);
  std::vector<double> values(dim + 1);
  int evaluations = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evaluations;
    const double v = objective(x);
    return std::isnan(v) ? -INFINITY : v;
  };

  values[0] = eval(simplex[0]);
  for (std::size_t i = 0; i < dim; ++i) {
    simplex[i + 1][i] += options.initial_step;
    values[i + 1] = eval(simplex[i + 1]);
    if (!std::isfinite(values[i + 1])) {
      // Try the opposite direction before giving up on this vertex.
      simplex[i + 1][i] -= 2.0 * options.initial_step;
      values[i + 1] = eval(simplex[i + 1]);
    }
  }

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), trial(dim), trial2(dim);
  bool converged = false;

  while (evaluations < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[dim - 1];

    double spread = 0.0;
    for (std::size_t i = 0; i <= dim; ++i) {
      for (std::size_t d = 0; d < dim; ++d) spread = std::max(spread, std::abs(simplex[i][d] - simplex[best][d]));
    }
    const bool flat = std::isfinite(values[worst]) &&
                      values[best] - values[worst] <= options.value_tolerance * (1.0 + std::abs(values[best]));
    if (flat && spread <= options.point_tolerance) {
      converged = true;
      break;
    }
    if (spread <= 1e-14) {
      converged = std::isfinite(values[best]);
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[i][d] / static_cast<double>(dim);
    }
    for (std::size_t d = 0; d < dim; ++d) trial[d] = centroid[d] + (centroid[d] - simplex[worst][d]);
    const double reflected = eval(trial);

    if (reflected > values[best]) {
      for (std::size_t d = 0; d < dim; ++d) trial2[d] = centroid[d] + 2.0 * (centroid[d] - simplex[worst][d]);
      const double expanded = eval(trial2);
      if (expanded > reflected) {
        simplex[worst] = trial2;
        values[worst] = expanded;
      } else {
        simplex[worst] = trial;
        values[worst] = reflected;
      }
      continue;
    }
    if (reflected > values[second_worst]) {
      simplex[worst] = trial;
      values[worst] = reflected;
      continue;
    }
    const bool outside = reflected > values[worst];
    for (std::size_t d = 0; d < dim; ++d) {
      trial2[d] = outside ? centroid[d] + 0.5 * (trial[d] - centroid[d])
                          : centroid[d] + 0.5 * (simplex[worst][d] - centroid[d]);
    }
    const double contracted = eval(trial2);
    if (contracted > (outside ? reflected : values[worst]) ||
        (std::isfinite(contracted) && !std::isfinite(values[worst]))) {
      simplex[worst] = trial2;
      values[worst] = contracted;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < dim; ++d) simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
      values[i] = eval(simplex[i]);
    }
  }

  const auto best = static_cast<std::size_t>(std::distance(values.begin(), std::max_element(values.begin(), values.end())));
  return OptimResult{simplex[best], values[best], evaluations, converged};
}

}  // namespace htc
