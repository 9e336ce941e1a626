#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace htc {

enum class ErrorKind {
  invalid_argument,
  too_few_points,
  non_convergence,
  out_of_support,
  no_exceedances,
  beyond_data,
  malformed_input,
  missing_artifact,
  config,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised when an optimiser stops without meeting its stationarity test.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate, double gradient_norm)
      : Error(ErrorKind::non_convergence, what),
        last_iterate_(std::move(last_iterate)),
        gradient_norm_(gradient_norm) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  std::vector<double> last_iterate_;
  double gradient_norm_;
};

}  // namespace htc
