#include "ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

#include "htc/error.hpp"

namespace htc::app {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Comma-separated fields; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

Error bad_line(const std::string& source, std::size_t line, const std::string& what) {
  return Error(ErrorKind::malformed_input, source + " line " + std::to_string(line) + ": " + what);
}

}  // namespace

TimeSeries read_series_csv(std::istream& in, const RunConfig& config, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  // Leading '#' lines carry provenance and are skipped.
  do {
    if (!std::getline(in, line)) throw Error(ErrorKind::malformed_input, source + " is empty");
    ++line_no;
  } while (!line.empty() && line.front() == '#');
  const auto header = split_fields(line);
  auto column = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  std::ptrdiff_t value_col = column(config.value_column);
  if (value_col < 0 && header.size() == 1) value_col = 0;
  if (value_col < 0) {
    throw bad_line(source, line_no, "no column named '" + config.value_column + "' in the header");
  }
  const std::ptrdiff_t date_col = column(config.date_column);
  std::ptrdiff_t season_col = -1;
  if (!config.season_column.empty()) {
    season_col = column(config.season_column);
    if (season_col < 0) throw bad_line(source, line_no, "no season column named '" + config.season_column + "'");
  }

  std::vector<double> values;
  std::vector<std::string> dates, seasons;
  std::size_t first_blank = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      if (first_blank == 0) first_blank = line_no;
      continue;
    }
    if (first_blank != 0) throw bad_line(source, first_blank, "blank row");
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw bad_line(source, line_no,
                     "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    const std::string& text = fields[static_cast<std::size_t>(value_col)];
    if (text.empty()) throw bad_line(source, line_no, "missing value");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
      throw bad_line(source, line_no, "value '" + text + "' is not a finite number");
    }
    values.push_back(v);
    if (date_col >= 0) {
      const std::string& d = fields[static_cast<std::size_t>(date_col)];
      if (d.empty()) throw bad_line(source, line_no, "missing date");
      if (!dates.empty() && !(dates.back() < d)) {
        throw bad_line(source, line_no, "date " + d + " does not follow " + dates.back());
      }
      dates.push_back(d);
    }
    if (season_col >= 0) {
      const std::string& s = fields[static_cast<std::size_t>(season_col)];
      if (s.empty()) throw bad_line(source, line_no, "missing season label");
      seasons.push_back(s);
    }
  }
  if (values.empty()) throw Error(ErrorKind::malformed_input, source + " has no data rows");
  TimeSeries series = season_col >= 0 ? make_series(std::move(values), std::move(seasons)) : make_series(std::move(values));
  series.dates = std::move(dates);
  return series;
}

TimeSeries read_series_csv(const std::string& path, const RunConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::missing_artifact, "cannot open input " + path);
  return read_series_csv(in, config, path);
}

}  // namespace htc::app
