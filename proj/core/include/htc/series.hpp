#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace htc {

/// Ordered observations of a stationary series. Optional season labels split
/// the series into segments (maximal runs of one label); lag windows never
/// cross a segment boundary, and seasonal bootstraps resample whole segments.
struct TimeSeries {
  std::vector<double> values;
  std::vector<std::int32_t> segment;  // empty when the series is unlabelled
  std::vector<std::string> labels;    // season label per observation, optional
  std::vector<std::string> dates;     // optional

  std::size_t size() const { return values.size(); }
  bool segmented() const { return !segment.empty(); }

  // True when t, t+1, ..., t+m all exist and share one segment.
  bool window_within(std::size_t t, std::size_t m) const;

  std::size_t segment_count() const;
};

TimeSeries make_series(std::vector<double> values);
TimeSeries make_series(std::vector<double> values, std::vector<std::string> labels);

// [begin, end) index ranges of each segment (one range for an unlabelled series).
std::vector<std::pair<std::size_t, std::size_t>> segment_ranges(const TimeSeries& series);

}  // namespace htc
