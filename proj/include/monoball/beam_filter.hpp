#pragma once

#include <deque>
#include <limits>
#include <span>
#include <vector>

#include "monoball/state_model.hpp"
#include "monoball/transition_gen.hpp"

namespace monoball {

/// Hypotheses of one frame, sorted by ranks_before, at most beam_width long.
/// Hypothesis::parent indexes the previous frame's Beam.
struct Beam {
  FrameIndex frame = 0;
  std::vector<Hypothesis> hypotheses;
};

struct TrajectoryRecord {
  FrameIndex frame = 0;
  Vec3 position = Vec3::Zero();
  Mode mode = Mode::O;
  double log_weight = 0.0;
  bool finalized = false;
};

struct StepStats {
  std::size_t candidates = 0;  // descendants over all parents (what exhaustive scoring would touch)
  std::size_t scored = 0;      // descendants actually evaluated after window pruning
  std::size_t retained = 0;
};

Beam init_beam(const FrameObservations& obs, const ModelParams& params);

/// One filter step: score descendants, keep the best per distinct state, and
/// retain the top beam_width. Throws BeamExtinct when nothing survives.
Beam step(const Beam& prev, const FrameObservations& obs, const ModelParams& params, StepStats* stats = nullptr);

/// Same contract as step() but materialises every descendant through
/// generate_all before selecting. Slow; kept as a cross-check.
Beam step_exhaustive(const Beam& prev, const FrameObservations& obs, const ModelParams& params);

/// Chain of the best hypothesis in history.back(), oldest first, walking parent
/// links until a root or the front of `history`.
std::vector<TrajectoryRecord> trace_best_chain(const std::deque<Beam>& history);

struct Extraction {
  std::vector<TrajectoryRecord> finalized;
  std::vector<TrajectoryRecord> soft;
};

/// Stateless split of the best chain: frames <= t - lag finalized, the rest soft.
Extraction extract(const std::deque<Beam>& history, std::size_t lag);

/**
 * Online filter with a fixed-lag output buffer.
 *
 * After each frame t the record for frame t - lag is committed from the
 * current best chain and never revised. Only the last lag + 1 beams are kept,
 * so memory is O(beam_width * lag) regardless of stream length. A lag of
 * kUnbounded keeps every beam and commits nothing until finish().
 */
class FixedLagTracker {
 public:
  static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

  FixedLagTracker(ModelParams params, std::size_t lag, bool keep_committed = true);

  /// Processes one frame and returns the records it finalizes.
  std::vector<TrajectoryRecord> push(const FrameObservations& obs);

  /// Committed prefix (when kept) plus the current soft window.
  Extraction extract() const;

  std::vector<TrajectoryRecord> soft() const;

  /// Soft window at end of stream, returned with finalized = false.
  std::vector<TrajectoryRecord> finish() const { return soft(); }

  const Beam& beam() const { return history_.back(); }
  bool empty() const { return history_.empty(); }
  std::size_t lag() const { return lag_; }
  std::size_t retained_beams() const { return history_.size(); }
  std::size_t discontinuities() const { return discontinuities_; }
  const StepStats& last_stats() const { return last_stats_; }

 private:
  void commit_ready(std::vector<TrajectoryRecord>& out);
  void trim();

  ModelParams params_;
  std::size_t lag_;
  bool keep_committed_;
  std::deque<Beam> history_;
  std::vector<TrajectoryRecord> committed_;
  FrameIndex next_commit_ = 0;
  std::size_t discontinuities_ = 0;
  StepStats last_stats_;
};

/// Whole-clip reconstruction: one finalized record per frame.
std::vector<TrajectoryRecord> run_offline(std::span<const FrameObservations> frames, const ModelParams& params);

}  // namespace monoball
