#include "htc/error.hpp"

namespace htc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::too_few_points: return "too-few-points";
    case ErrorKind::non_convergence: return "non-convergence";
    case ErrorKind::out_of_support: return "out-of-support";
    case ErrorKind::no_exceedances: return "no-exceedances";
    case ErrorKind::beyond_data: return "level-beyond-sample";
    case ErrorKind::malformed_input: return "malformed-input";
    case ErrorKind::missing_artifact: return "missing-artifact";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

}  // namespace htc
