#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "monoball/io.hpp"

namespace monoball {

// Exit statuses shared by every verb.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 2;    // parse error, invalid config, range mismatch
inline constexpr int kExitExtinct = 3;     // beam died and could not be reseeded
inline constexpr int kExitIo = 4;          // cannot open a file

struct TrackOptions {
  std::string input = "-";  // "-" is stdin
  std::string output = "-";
  std::optional<std::string> config;
  std::optional<std::size_t> lag;
  std::optional<std::size_t> beam;
};

/// Streams frames through the fixed-lag filter, one trajectory line per frame.
/// Reader, filter and writer run on separate threads joined by bounded queues.
int track_stream(std::istream& in, std::ostream& out, std::ostream& err, const ModelParams& params, std::size_t lag);
int cmd_track(const TrackOptions& opts, std::ostream& err);

struct SimulateOptions {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string output = "-";
  std::string truth = "truth.jsonl";
};

int cmd_simulate(const SimulateOptions& opts, std::ostream& err);

struct EvalOptions {
  std::string pred;
  std::string truth;
  int window = 12;
};

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);

struct SweepOptions {
  std::string input;
  std::string truth;
  std::optional<std::string> config;
  std::vector<std::size_t> lags = {1, 10, 25, 50};
  std::optional<std::size_t> beam;
  int window = 12;
  std::optional<std::string> output;  // CSV path
};

/// Table on `out` (one row per lag, including measured fps); the CSV file
/// carries only the deterministic columns.
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);

std::vector<std::size_t> parse_lag_list(const std::string& text);

}  // namespace monoball
