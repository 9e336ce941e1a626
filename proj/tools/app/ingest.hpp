#pragma once

#include <istream>
#include <string>

#include "config.hpp"
#include "htc/series.hpp"

namespace htc::app {

/// Reads a headed CSV: one numeric value column, optional date and season
/// columns. Rows must be in temporal order; errors name the offending line.
TimeSeries read_series_csv(std::istream& in, const RunConfig& config, const std::string& source = "input");
TimeSeries read_series_csv(const std::string& path, const RunConfig& config);

}  // namespace htc::app
