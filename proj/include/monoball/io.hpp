#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "monoball/beam_filter.hpp"
#include "monoball/simulator.hpp"
#include "monoball/transition_gen.hpp"

namespace monoball {

// ---- diagnostics ------------------------------------------------------------

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Threshold from MONOBALL_LOG (error|warn|info|debug); warn when unset.
LogLevel log_threshold();
void log_message(LogLevel level, const std::string& message);

// ---- frame stream -------------------------------------------------------------
//
// One JSON object per line:
//   {"frame":7,"detections":[[u,v],...],"players":[[x,y],...],
//    "calib":{"K":[9 row-major],"R":[9 row-major],"T":[3]}}
// "calib" may be omitted when unchanged since the previous frame; the first
// frame must carry it. Frame indices increase by exactly one.

nlohmann::json frame_to_json(const FrameObservations& obs, bool with_calib);

class FrameStreamWriter {
 public:
  explicit FrameStreamWriter(std::ostream& out) : out_(out) {}
  void write(const FrameObservations& obs);

 private:
  std::ostream& out_;
  std::optional<Calibration> last_;
};

class FrameStreamReader {
 public:
  explicit FrameStreamReader(std::istream& in) : in_(in) {}

  /// Next frame, or nullopt at end of stream. Throws ParseError naming the line.
  std::optional<FrameObservations> next();
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::optional<Calibration> calib_;
  std::optional<FrameIndex> last_frame_;
};

std::vector<FrameObservations> read_frame_stream(std::istream& in);

// ---- trajectory output --------------------------------------------------------
//
// {"frame":f,"x":..,"y":..,"z":..,"mode":"J","log_weight":..,"finalized":true}

std::string trajectory_line(const TrajectoryRecord& r);
TrajectoryRecord parse_trajectory_line(const std::string& line);
std::vector<TrajectoryRecord> read_trajectory(std::istream& in);

// ---- ground-truth sidecar -------------------------------------------------------
//
// {"frame":f,"x":..,"y":..,"z":..,"mode":"P","events":["kick"|"oop"]}

void write_ground_truth(std::ostream& out, const GroundTruth& truth);
GroundTruth read_ground_truth(std::istream& in);

// ---- hypotheses -----------------------------------------------------------------

nlohmann::json hypothesis_to_json(const Hypothesis& h);
Hypothesis hypothesis_from_json(const nlohmann::json& j);

// ---- configuration ----------------------------------------------------------------
//
// A flat JSON object with dotted keys, e.g. {"model.beam_width": 200,
// "physics.restitution": 0.6, "sim.seed": 3}. Unknown keys are rejected and
// every value is range-checked.

struct Config {
  ModelParams model = default_params();
  SimConfig sim;
};

Config parse_config(const nlohmann::json& j);
Config load_config(const std::string& path);
/// Every accepted key with its current value.
nlohmann::json config_to_json(const Config& config);

}  // namespace monoball
