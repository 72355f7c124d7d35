#include "monoball/transition_gen.hpp"

#include <cmath>
#include <string>

#include "monoball/dynamics.hpp"

namespace monoball {

RayPositions gen_ray_positions(const FrameObservations& obs, const ModelParams& params) {
  RayPositions out;
  out.step = params.ray_step;
  for (const Vec2& u : obs.detections) {
    std::vector<Vec3> pts;
    Ray<double> ray;
    try {
      ray = backproject_ray(u, obs.calib);
      pts = discretize_ray(ray, params.ray_step);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoGroundIntersection || e.code() == ErrorCode::DegenerateDirection) continue;
      throw;
    }
    RayPositions::Segment seg;
    seg.begin = out.points.size();
    seg.count = pts.size();
    seg.ground = pts.front();
    seg.up = -ray.direction;
    out.segments.push_back(seg);
    out.points.insert(out.points.end(), pts.begin(), pts.end());
  }
  return out;
}

JumpPrediction predict_jump(const Hypothesis& h, const ModelParams& params) {
  const auto& jump = std::get<JumpLatent>(h.latent);
  JumpPrediction pred;
  pred.state = extrapolate(KinematicState<double>{h.position, jump.velocity}, params.dt(), params.physics);
  pred.variance = propagate_variance(jump.variance, params.dt(), params.sigma_v);
  return pred;
}

FrameIndex wait_frames(const WaitLatent& wait, FrameIndex t_now) {
  // A kick detected on its own frame is treated as one frame of flight.
  return t_now > wait.kick_frame ? t_now - wait.kick_frame : 1;
}

namespace {

Vec3 launch_velocity(const WaitLatent& wait, const Vec3& r, double flight_time, const ModelParams& params) {
  const Vec3 origin(wait.kicker_position.x(), wait.kicker_position.y(), params.physics.ball_radius);
  return kick_velocity(origin, r, flight_time, params.physics);
}

}  // namespace

Vec3 velocity_after_wait(const WaitLatent& wait, const Vec3& r, FrameIndex t_now, const ModelParams& params) {
  const double flight_time = static_cast<double>(wait_frames(wait, t_now)) / params.fps;
  Vec3 v = launch_velocity(wait, r, flight_time, params);
  v.z() -= params.physics.gravity * flight_time;
  return v;
}

double wait_log_prior(const WaitLatent& wait, FrameIndex t_now, const ModelParams& params) {
  if (!params.wait_prior) return 0.0;
  return -3.0 * std::log(static_cast<double>(wait_frames(wait, t_now)));
}

bool launch_feasible(const WaitLatent& wait, const Vec3& r, FrameIndex t_now, const ModelParams& params) {
  return launch_log_prior(wait, r, t_now, params).has_value();
}

std::optional<double> launch_log_prior(const WaitLatent& wait, const Vec3& r, FrameIndex t_now,
                                       const ModelParams& params) {
  if (!params.wait_prior) return 0.0;
  const double flight_time = static_cast<double>(wait_frames(wait, t_now)) / params.fps;
  const double v2 = launch_velocity(wait, r, flight_time, params).squaredNorm();
  if (v2 > params.max_kick_speed * params.max_kick_speed) return std::nullopt;
  return wait_log_prior(wait, t_now, params);
}

namespace {

ScoredCandidate make_child(const Hypothesis& parent, FrameIndex frame, const Vec3& position, LatentState latent,
                           double delta) {
  ScoredCandidate c;
  c.hypothesis.frame = frame;
  c.hypothesis.position = position;
  c.hypothesis.latent = std::move(latent);
  c.hypothesis.log_weight = parent.log_weight + delta;
  c.hypothesis.parent = -1;
  c.delta_logl = delta;
  return c;
}

bool finite(double x) { return x > kNegInf; }

}  // namespace

double unexplained_logp(const FrameObservations& obs, const ModelParams& params, bool visible) {
  const std::size_t n = obs.detections.size();
  const std::size_t missed = visible && n > 0 ? n - 1 : n;
  if (missed == 0 || params.logp_clutter == 0.0) return 0.0;
  return static_cast<double>(missed) * params.logp_clutter;
}

ScoredCandidate gen_inherit(const Hypothesis& h, Mode to, FrameIndex child_frame, const ModelParams& params,
                            double observation_logp) {
  const Mode from = h.mode();
  const bool inherit_edge = (from == Mode::O && to == Mode::O) || (from == Mode::W && to == Mode::W) ||
                            (from == Mode::J && to == Mode::O) || (from == Mode::P && to == Mode::W);
  if (!inherit_edge) {
    throw Error(ErrorCode::IllegalEdge,
                std::string("no inherit transition ") + to_char(from) + "->" + to_char(to));
  }
  if (from == Mode::J && params.pitch.contains(h.position)) {
    throw Error(ErrorCode::IllegalEdge, "J->O requires a position outside the pitch");
  }
  LatentState latent = OutLatent{};
  if (from == Mode::W) {
    latent = h.latent;
  } else if (from == Mode::P) {
    latent = WaitLatent{h.frame, h.position.head<2>()};
  }
  return make_child(h, child_frame, h.position, std::move(latent),
                    transition_logp(params.transition, from, to) + observation_logp);
}

namespace {

// An out-of-play ball is restarted from the ground, so O parents are gated on
// horizontal distance.
bool within_gate(const Hypothesis& h, const Vec3& child, const ModelParams& params) {
  const double thr2 = params.possession_threshold * params.possession_threshold;
  if (h.mode() == Mode::O) return (child.head<2>() - h.position.head<2>()).squaredNorm() < thr2;
  return squared_distance(child, h.position) < thr2;
}

}  // namespace

std::vector<ScoredCandidate> gen_possession(const Hypothesis& h, const FrameObservations& obs,
                                            const ModelParams& params, bool distant) {
  std::vector<ScoredCandidate> out;
  const double logp = transition_logp(params.transition, h.mode(), Mode::P);
  if (!finite(logp)) return out;
  const int same_player = h.mode() == Mode::P ? std::get<PossessionLatent>(h.latent).player_index : -1;
  const double miss = unexplained_logp(obs, params, false);
  const double delta = logp + miss;
  distant = distant && finite(params.logp_distant_possession);
  const double far_delta = (logp + params.logp_distant_possession) + miss;
  for (std::size_t i = 0; i < obs.players.size(); ++i) {
    const Vec3 child(obs.players[i].x(), obs.players[i].y(), params.physics.ball_radius);
    const bool near = within_gate(h, child, params);
    if (near || static_cast<int>(i) == same_player) {
      out.push_back(make_child(h, obs.frame, child, PossessionLatent{static_cast<int>(i)}, delta));
    } else if (distant) {
      out.push_back(make_child(h, obs.frame, child, PossessionLatent{static_cast<int>(i)}, far_delta));
    }
  }
  return out;
}

std::vector<ScoredCandidate> gen_jump_from_jump(const Hypothesis& h, const FrameObservations& obs,
                                                const RayPositions& rays, const ModelParams& params) {
  std::vector<ScoredCandidate> out;
  const double logp = transition_logp(params.transition, Mode::J, Mode::J);
  if (!finite(logp)) return out;
  const JumpPrediction pred = predict_jump(h, params);
  if (finite(params.logp_invisible)) {
    out.push_back(make_child(h, obs.frame, pred.state.position, JumpLatent{pred.state.velocity, pred.variance, false},
                             (logp + params.logp_invisible) + unexplained_logp(obs, params, false)));
  }
  const IsoGaussian gauss(pred.variance);
  const double hit = unexplained_logp(obs, params, true);
  out.reserve(out.size() + rays.size());
  for (const Vec3& r : rays.points) {
    const double delta = (logp + gauss.log_density(squared_distance(r, pred.state.position))) + hit;
    out.push_back(make_child(h, obs.frame, r, JumpLatent{pred.state.velocity, 0.0, true}, delta));
  }
  return out;
}

std::vector<ScoredCandidate> gen_jump_from_wait(const Hypothesis& h, const FrameObservations& obs,
                                                const RayPositions& rays, const ModelParams& params) {
  std::vector<ScoredCandidate> out;
  const double logp = transition_logp(params.transition, Mode::W, Mode::J);
  if (!finite(logp)) return out;
  const auto& wait = std::get<WaitLatent>(h.latent);
  const double hit = unexplained_logp(obs, params, true);
  out.reserve(rays.size());
  for (const Vec3& r : rays.points) {
    const auto prior = launch_log_prior(wait, r, obs.frame, params);
    if (!prior) continue;
    out.push_back(make_child(h, obs.frame, r,
                             JumpLatent{velocity_after_wait(wait, r, obs.frame, params), params.sigma_g, true},
                             (logp + *prior) + hit));
  }
  return out;
}

namespace {

void append_inherit(std::vector<ScoredCandidate>& out, const Hypothesis& h, Mode to, const FrameObservations& obs,
                    const ModelParams& params) {
  if (!finite(transition_logp(params.transition, h.mode(), to))) return;
  out.push_back(gen_inherit(h, to, obs.frame, params, unexplained_logp(obs, params, false)));
}

void append(std::vector<ScoredCandidate>& out, std::vector<ScoredCandidate>&& more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

}  // namespace

std::vector<ScoredCandidate> generate_all(const Hypothesis& h, const FrameObservations& obs,
                                          const RayPositions& rays, const ModelParams& params) {
  std::vector<ScoredCandidate> out;
  switch (h.mode()) {
    case Mode::J:
      out = gen_jump_from_jump(h, obs, rays, params);
      append(out, gen_possession(h, obs, params));
      if (!params.pitch.contains(h.position)) append_inherit(out, h, Mode::O, obs, params);
      break;
    case Mode::P:
      out = gen_possession(h, obs, params);
      append_inherit(out, h, Mode::W, obs, params);
      break;
    case Mode::W:
      append_inherit(out, h, Mode::W, obs, params);
      append(out, gen_jump_from_wait(h, obs, rays, params));
      break;
    case Mode::O:
      append_inherit(out, h, Mode::O, obs, params);
      append(out, gen_possession(h, obs, params));
      break;
  }
  return out;
}

std::size_t count_descendants(const Hypothesis& h, const FrameObservations& obs, const RayPositions& rays,
                              const ModelParams& params) {
  const auto& tm = params.transition;
  auto possession = [&] {
    if (!finite(transition_logp(tm, h.mode(), Mode::P))) return std::size_t{0};
    const int same = h.mode() == Mode::P ? std::get<PossessionLatent>(h.latent).player_index : -1;
    const bool distant = finite(params.logp_distant_possession);
    std::size_t n = 0;
    for (std::size_t i = 0; i < obs.players.size(); ++i) {
      const Vec3 child(obs.players[i].x(), obs.players[i].y(), params.physics.ball_radius);
      n += (within_gate(h, child, params) || static_cast<int>(i) == same || distant) ? 1 : 0;
    }
    return n;
  };
  auto edge = [&](Mode to) -> std::size_t { return finite(transition_logp(tm, h.mode(), to)) ? 1 : 0; };
  switch (h.mode()) {
    case Mode::J: {
      std::size_t n = possession();
      if (edge(Mode::J)) n += rays.size() + (finite(params.logp_invisible) ? 1 : 0);
      if (!params.pitch.contains(h.position)) n += edge(Mode::O);
      return n;
    }
    case Mode::P: return possession() + edge(Mode::W);
    case Mode::W: {
      std::size_t n = edge(Mode::W);
      if (edge(Mode::J)) {
        const auto& wait = std::get<WaitLatent>(h.latent);
        for (const Vec3& r : rays.points) n += launch_feasible(wait, r, obs.frame, params) ? 1 : 0;
      }
      return n;
    }
    case Mode::O: return edge(Mode::O) + possession();
  }
  return 0;
}

}  // namespace monoball
