#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "htc/error.hpp"
#include "htc/series.hpp"

namespace htc::app {

inline constexpr const char* kVersion = "0.1.0";

struct Options {
  std::string command;
  std::string input;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string levels;  // comma-separated, data scale
  std::optional<std::size_t> m;
  std::string method = "empirical";
  std::string out_dir;
  std::optional<std::size_t> workers;
  std::vector<std::string> ar1;  // key=value tokens for simulate
};

/// --out-dir, else $HTC_OUT_DIR, else "htc-out".
std::string resolve_out_dir(const Options& options);

/// The config file (or defaults) with command-line overrides applied and validated.
RunConfig resolve_config(const Options& options);

/// Runs one subcommand; throws htc::Error on failure.
void run_command(const Options& options);

/// Process exit code for an error kind: 2 config, 3 missing artifact, 1 otherwise.
int exit_code(ErrorKind kind);

std::string error_json(std::string_view kind, const std::string& message);

std::vector<double> parse_levels(const std::string& text);

void write_atomic(const std::string& path, const std::string& contents);

/// Series with the canonical columns written by `ingest` and `simulate`.
std::string series_csv(const TimeSeries& series, const std::string& provenance);

}  // namespace htc::app
