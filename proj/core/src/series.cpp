#include "htc/series.hpp"

#include "htc/error.hpp"

namespace htc {

bool TimeSeries::window_within(std::size_t t, std::size_t m) const {
  if (t + m >= values.size()) return false;
  if (segment.empty()) return true;
  return segment[t] == segment[t + m];
}

std::size_t TimeSeries::segment_count() const {
  if (segment.empty()) return values.empty() ? 0 : 1;
  return static_cast<std::size_t>(segment.back() - segment.front() + 1);
}

TimeSeries make_series(std::vector<double> values) {
  TimeSeries s;
  s.values = std::move(values);
  return s;
}

TimeSeries make_series(std::vector<double> values, std::vector<std::string> labels) {
  if (labels.size() != values.size()) {
    throw Error(ErrorKind::invalid_argument, "season labels must match the number of observations");
  }
  TimeSeries s;
  s.values = std::move(values);
  s.segment.resize(s.values.size());
  std::int32_t id = 0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (t > 0 && labels[t] != labels[t - 1]) ++id;
    s.segment[t] = id;
  }
  s.labels = std::move(labels);
  return s;
}

std::vector<std::pair<std::size_t, std::size_t>> segment_ranges(const TimeSeries& series) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = series.size();
  if (n == 0) return out;
  if (!series.segmented()) {
    out.emplace_back(0, n);
    return out;
  }
  std::size_t begin = 0;
  for (std::size_t t = 1; t <= n; ++t) {
    if (t == n || series.segment[t] != series.segment[t - 1]) {
      out.emplace_back(begin, t);
      begin = t;
    }
  }
  return out;
}

}  // namespace htc
