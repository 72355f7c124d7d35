#include "monoball/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace monoball {

double accuracy_at(std::span<const TrajectoryRecord> pred, const GroundTruth& gt, double d) {
  if (gt.frames.empty()) {
    if (!pred.empty()) throw Error(ErrorCode::RangeMismatch, "prediction covers frames the ground truth does not");
    return 1.0;
  }
  const FrameIndex first = gt.frames.front().frame;
  const FrameIndex last = gt.frames.back().frame;
  if (!pred.empty() && (pred.front().frame != first || pred.back().frame != last)) {
    throw Error(ErrorCode::RangeMismatch, "prediction spans [" + std::to_string(pred.front().frame) + ", " +
                                              std::to_string(pred.back().frame) + "], truth spans [" +
                                              std::to_string(first) + ", " + std::to_string(last) + "]");
  }

  std::vector<const TrajectoryRecord*> by_frame(static_cast<std::size_t>(last - first + 1), nullptr);
  for (const auto& r : pred) {
    if (r.frame < first || r.frame > last) throw Error(ErrorCode::RangeMismatch, "prediction outside truth range");
    by_frame[static_cast<std::size_t>(r.frame - first)] = &r;
  }

  std::size_t counted = 0, hits = 0;
  for (const auto& g : gt.frames) {
    if (g.mode == Mode::O) continue;
    ++counted;
    const TrajectoryRecord* p = by_frame[static_cast<std::size_t>(g.frame - first)];
    if (p && (p->position - g.position).norm() <= d) ++hits;
  }
  return counted == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(counted);
}

double event_f1(std::vector<FrameIndex> pred, std::vector<FrameIndex> gt, int window) {
  if (pred.empty() && gt.empty()) return 1.0;
  if (pred.empty() || gt.empty()) return 0.0;
  std::sort(pred.begin(), pred.end());
  std::sort(gt.begin(), gt.end());

  std::vector<bool> used(gt.size(), false);
  std::size_t tp = 0;
  for (FrameIndex p : pred) {
    // earliest unmatched truth inside the window
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (used[i] || gt[i] < p - window) continue;
      if (gt[i] > p + window) break;
      used[i] = true;
      ++tp;
      break;
    }
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(tp) / static_cast<double>(gt.size());
  return 2.0 * precision * recall / (precision + recall);
}

PredictedEvents extract_pred_events(std::span<const TrajectoryRecord> pred) {
  PredictedEvents ev;
  for (std::size_t i = 1; i < pred.size(); ++i) {
    const Mode a = pred[i - 1].mode, b = pred[i].mode;
    if (a == Mode::P && b == Mode::W) ev.kicks.push_back(pred[i].frame);
    if (a == Mode::J && b == Mode::O) ev.oops.push_back(pred[i].frame);
  }
  return ev;
}

EvalReport evaluate(std::span<const TrajectoryRecord> pred, const GroundTruth& gt, int window,
                    const std::vector<double>& thresholds) {
  EvalReport report;
  for (double d : thresholds) report.accuracy_at[d] = accuracy_at(pred, gt, d);
  const PredictedEvents ev = extract_pred_events(pred);
  report.f1_kick = event_f1(ev.kicks, gt.event_frames(EventKind::Kick), window);
  report.f1_oop = event_f1(ev.oops, gt.event_frames(EventKind::OutOfPitch), window);
  return report;
}

ThroughputLatency measure_throughput_latency(std::span<const FrameObservations> frames, const ModelParams& params,
                                             std::size_t lag, const Clock& clock) {
  ThroughputLatency out;
  FixedLagTracker tracker(params, lag, /*keep_committed=*/false);
  std::vector<std::chrono::steady_clock::time_point> arrival;
  arrival.reserve(frames.size());
  double frame_lag_sum = 0.0, wall_sum = 0.0;
  std::size_t finalized = 0;

  const auto start = clock();
  for (const auto& obs : frames) {
    arrival.push_back(clock());
    auto done = tracker.push(obs);
    const auto now = clock();
    for (auto& r : done) {
      const auto k = static_cast<std::size_t>(r.frame - frames.front().frame);
      frame_lag_sum += static_cast<double>(obs.frame - r.frame);
      wall_sum += std::chrono::duration<double, std::milli>(now - arrival[k]).count();
      ++finalized;
      out.trajectory.push_back(std::move(r));
    }
  }
  const double seconds = std::chrono::duration<double>(clock() - start).count();
  for (auto& r : tracker.finish()) out.trajectory.push_back(std::move(r));

  out.fps = seconds > 0.0 ? static_cast<double>(frames.size()) / seconds : 0.0;
  if (finalized > 0) {
    out.latency_frames = frame_lag_sum / static_cast<double>(finalized);
    out.wall_latency_ms = wall_sum / static_cast<double>(finalized);
  }
  return out;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  char buf[64];
  for (const auto& [d, acc] : report.accuracy_at) {
    std::snprintf(buf, sizeof buf, "accuracy@%g %.6f\n", d, acc);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "f1_kick %.6f\n", report.f1_kick);
  os << buf;
  std::snprintf(buf, sizeof buf, "f1_oop %.6f\n", report.f1_oop);
  os << buf;
  if (report.throughput_fps > 0.0) {
    std::snprintf(buf, sizeof buf, "throughput_fps %.1f\n", report.throughput_fps);
    os << buf;
    std::snprintf(buf, sizeof buf, "latency_frames %g\n", report.latency_frames);
    os << buf;
  }
  return os.str();
}

}  // namespace monoball
