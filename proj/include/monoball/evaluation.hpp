#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "monoball/beam_filter.hpp"
#include "monoball/simulator.hpp"

namespace monoball {

inline const std::vector<double> kDefaultThresholds = {0.5, 1.0, 2.0, 4.0, 8.0};
inline constexpr int kDefaultEventWindow = 12;

struct EvalReport {
  std::map<double, double> accuracy_at;
  double f1_kick = 0.0;
  double f1_oop = 0.0;
  double throughput_fps = 0.0;  // 0 when not measured
  double latency_frames = 0.0;
};

/// Fraction of frames whose predicted position lies within d of the truth.
/// Frames whose ground-truth mode is O are skipped; frames without a
/// prediction count as misses. Throws RangeMismatch when the frame ranges differ.
double accuracy_at(std::span<const TrajectoryRecord> pred, const GroundTruth& gt, double d);

/// Greedy earliest-first one-to-one matching within +-window frames.
double event_f1(std::vector<FrameIndex> pred, std::vector<FrameIndex> gt, int window);

struct PredictedEvents {
  std::vector<FrameIndex> kicks;  // first W frame after P
  std::vector<FrameIndex> oops;   // first O frame after J
};

PredictedEvents extract_pred_events(std::span<const TrajectoryRecord> pred);

EvalReport evaluate(std::span<const TrajectoryRecord> pred, const GroundTruth& gt, int window = kDefaultEventWindow,
                    const std::vector<double>& thresholds = kDefaultThresholds);

using Clock = std::function<std::chrono::steady_clock::time_point()>;

struct ThroughputLatency {
  double fps = 0.0;
  double latency_frames = 0.0;   // frames between availability and the finalized estimate
  double wall_latency_ms = 0.0;  // mean wall time from push to finalization
  std::vector<TrajectoryRecord> trajectory;
};

/// Streams `frames` through a FixedLagTracker and times it with `clock`.
ThroughputLatency measure_throughput_latency(std::span<const FrameObservations> frames, const ModelParams& params,
                                             std::size_t lag, const Clock& clock = std::chrono::steady_clock::now);

/// "key value" lines, one metric per line.
std::string format_report(const EvalReport& report);

}  // namespace monoball
