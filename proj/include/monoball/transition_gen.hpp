#pragma once

#include <optional>
#include <vector>

#include "monoball/geometry.hpp"
#include "monoball/state_model.hpp"

namespace monoball {

struct FrameObservations {
  FrameIndex frame = 0;
  std::vector<Vec2> detections;  // pixels
  std::vector<Vec2> players;     // pitch metres
  Calibration calib;
};

struct ScoredCandidate {
  Hypothesis hypothesis;  // log_weight already includes delta_logl
  double delta_logl = 0.0;
};

/// Candidate ball positions on every detection's viewing ray. Each ray keeps
/// its own segment so the filter can window the search per ray.
struct RayPositions {
  struct Segment {
    std::size_t begin = 0;
    std::size_t count = 0;
    Vec3 ground = Vec3::Zero();
    Vec3 up = Vec3::UnitZ();  // unit vector from the ground point toward the camera
  };
  std::vector<Vec3> points;
  std::vector<Segment> segments;
  double step = 0.0;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

RayPositions gen_ray_positions(const FrameObservations& obs, const ModelParams& params);

/// Invisible extrapolation of a J hypothesis over one frame.
struct JumpPrediction {
  KinematicState<double> state;
  double variance = 0.0;
};
JumpPrediction predict_jump(const Hypothesis& h, const ModelParams& params);

/// Velocity at the detection frame of the free-flight arc from the kicker to r.
Vec3 velocity_after_wait(const WaitLatent& wait, const Vec3& r, FrameIndex t_now, const ModelParams& params);

/// Frames of flight assumed for a W->J child; at least one.
FrameIndex wait_frames(const WaitLatent& wait, FrameIndex t_now);

/// Flight-time part of the launch prior: a velocity prior turns into a
/// position density scaled by flight_time^-3, taken relative to a one-frame
/// flight. Zero when params.wait_prior is off.
double wait_log_prior(const WaitLatent& wait, FrameIndex t_now, const ModelParams& params);

/// W->J log prior for landing at r: wait_log_prior, or empty when the launch
/// would exceed params.max_kick_speed. 0 with the prior off.
std::optional<double> launch_log_prior(const WaitLatent& wait, const Vec3& r, FrameIndex t_now,
                                       const ModelParams& params);

/// launch_log_prior(...) has a value.
bool launch_feasible(const WaitLatent& wait, const Vec3& r, FrameIndex t_now, const ModelParams& params);

/// Position-inheriting edges O->O, W->W, J->O, P->W.
/// `observation_logp` is the detection term of the child's frame, usually
/// unexplained_logp(obs, params, false).
ScoredCandidate gen_inherit(const Hypothesis& h, Mode to, FrameIndex child_frame, const ModelParams& params,
                            double observation_logp = 0.0);

/// logp_clutter times the detections a child leaves unexplained: all of them,
/// or all but one when the child puts a visible ball on a ray.
double unexplained_logp(const FrameObservations& obs, const ModelParams& params, bool visible);

/// One candidate per player within possession_threshold (plus the current
/// player for P parents). With `distant`, players further away are added at
/// the extra cost params.logp_distant_possession.
std::vector<ScoredCandidate> gen_possession(const Hypothesis& h, const FrameObservations& obs,
                                            const ModelParams& params, bool distant = true);

std::vector<ScoredCandidate> gen_jump_from_jump(const Hypothesis& h, const FrameObservations& obs,
                                                const RayPositions& rays, const ModelParams& params);

std::vector<ScoredCandidate> gen_jump_from_wait(const Hypothesis& h, const FrameObservations& obs,
                                                const RayPositions& rays, const ModelParams& params);

/// Every legal descendant of `h` for frame obs.frame. Candidates with
/// delta_logl = -inf are never emitted.
std::vector<ScoredCandidate> generate_all(const Hypothesis& h, const FrameObservations& obs,
                                          const RayPositions& rays, const ModelParams& params);

/// Number of descendants generate_all produces for `h`, without building them.
std::size_t count_descendants(const Hypothesis& h, const FrameObservations& obs, const RayPositions& rays,
                              const ModelParams& params);

}  // namespace monoball
