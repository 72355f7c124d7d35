#include "monoball/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "monoball/dynamics.hpp"
#include "monoball/io.hpp"

namespace monoball {

Calibration broadcast_camera() {
  return look_at<double>(Vec3(0.0, -85.0, 40.0), Vec3(0.0, 0.0, 0.0), 1500.0, Vec2(1920.0, 1080.0));
}

void validate(const SimConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ConfigInvalid, what);
  };
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(c.duration >= 1, "sim.duration must be >= 1");
  require(c.fps > 0, "sim.fps must be positive");
  require(c.n_players >= 1, "sim.n_players must be >= 1");
  require(prob(c.occlusion_prob), "sim.occlusion_prob must be in [0, 1]");
  require(prob(c.out_of_play_prob), "sim.out_of_play_prob must be in [0, 1]");
  require(c.pixel_noise_sigma >= 0, "sim.pixel_noise_sigma must be >= 0");
  require(c.kick_rate >= 0, "sim.kick_rate must be >= 0");
  require(c.kick_rate / (60.0 * c.fps) <= 1.0, "sim.kick_rate exceeds one kick per frame");
  require(c.possession_dwell >= 0, "sim.possession_dwell must be >= 0");
  require(c.false_positive_rate >= 0, "sim.false_positive_rate must be >= 0");
  require(c.capture_radius > 0, "sim.capture_radius must be positive");
  require(c.image_width > 0 && c.image_height > 0, "image size must be positive");
  require(c.player_speed > 0, "sim.player_speed must be positive");
  require(c.pitch.length > 0 && c.pitch.width > 0, "pitch dimensions must be positive");
  require(c.physics.gravity > 0, "gravity must be positive");
  require(prob(c.physics.restitution) && prob(c.physics.ground_friction), "restitution/friction must be in [0, 1]");
  c.calib.validate();
}

std::vector<FrameIndex> GroundTruth::event_frames(EventKind kind) const {
  std::vector<FrameIndex> out;
  for (const auto& e : events) {
    if (e.kind == kind) out.push_back(e.frame);
  }
  return out;
}

namespace {

constexpr double kPlayerHeight = 1.8;
constexpr double kPlayerMargin = 2.0;  // how far players may stray beyond the lines
constexpr int kKickerGrace = 12;       // frames before the kicker may regain the ball
constexpr int kCatchGrace = 4;         // frames before anyone may take a kicked ball
constexpr double kMinKickSpeed = 8.0;  // m/s
constexpr double kMaxKickSpeed = 30.0;

class Match {
 public:
  explicit Match(const SimConfig& c) : c_(c), rng_(c.seed), dt_(1.0 / c.fps) {}

  Simulation run() {
    Simulation sim;
    sim.truth.frames.reserve(c_.duration);
    sim.frames.reserve(c_.duration);
    init();
    for (FrameIndex f = 1; f <= static_cast<FrameIndex>(c_.duration); ++f) {
      if (f > 1) advance(f, sim.truth);
      FrameObservations obs = render(f);
      label(f, obs);
      sim.truth.frames.push_back({f, ball_.position, mode_});
      sim.frames.push_back(std::move(obs));
    }
    return sim;
  }

 private:
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  double normal(double sigma) { return sigma > 0 ? std::normal_distribution<double>(0.0, sigma)(rng_) : 0.0; }
  bool bernoulli(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

  Vec3 at_feet(std::size_t i) const { return {players_[i].x(), players_[i].y(), c_.physics.ball_radius}; }

  void init() {
    const double hl = 0.5 * c_.pitch.length;
    const double hw = 0.5 * c_.pitch.width;
    players_.resize(c_.n_players);
    player_vel_.assign(c_.n_players, Vec2::Zero());
    for (auto& p : players_) p = Vec2(uniform(-hl, hl), uniform(-hw, hw));
    possessor_ = static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, c_.n_players - 1)(rng_));
    players_[possessor_] = Vec2::Zero();  // centre spot
    kicked_off_ = false;
    mode_ = Mode::P;
    frames_in_mode_ = 0;
    ball_ = {at_feet(possessor_), Vec3::Zero()};
  }

  std::size_t nearest_player(const Vec2& target, FrameIndex f) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < players_.size(); ++i) {
      if (i == kicker_ && f < kick_frame_ + kKickerGrace) continue;
      const double d = (players_[i] - target).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  void move_players(FrameIndex f) {
    const double hl = 0.5 * c_.pitch.length + kPlayerMargin;
    const double hw = 0.5 * c_.pitch.width + kPlayerMargin;
    std::size_t chaser = players_.size();
    Vec2 chase_target = Vec2::Zero();
    if (mode_ == Mode::J || mode_ == Mode::W) {
      chase_target = ball_.position.head<2>();
      chaser = nearest_player(chase_target, f);
    } else if (mode_ == Mode::O) {
      chase_target = out_position_.head<2>();
      chaser = nearest_player(chase_target, f);
    }
    for (std::size_t i = 0; i < players_.size(); ++i) {
      if (i == chaser) {
        const Vec2 to = chase_target - players_[i];
        const double dist = to.norm();
        const double stride = std::min(dist, 0.85 * c_.player_speed * dt_);
        player_vel_[i] = dist > 1e-9 ? Vec2(to / dist * (stride / dt_)) : Vec2(Vec2::Zero());
        players_[i] += stride > 0 && dist > 1e-9 ? Vec2(to / dist * stride) : Vec2(Vec2::Zero());
        continue;
      }
      player_vel_[i] = 0.95 * player_vel_[i] + Vec2(normal(1.5), normal(1.5)) * std::sqrt(dt_);
      const double speed = player_vel_[i].norm();
      const double cap = (mode_ == Mode::P && i == possessor_) ? 0.5 * c_.player_speed : c_.player_speed;
      if (speed > cap) player_vel_[i] *= cap / speed;
      players_[i] += player_vel_[i] * dt_;
      players_[i].x() = std::clamp(players_[i].x(), -hl, hl);
      players_[i].y() = std::clamp(players_[i].y(), -hw, hw);
    }
  }

  void kick(FrameIndex f, GroundTruth& truth) {
    const double hl = 0.5 * c_.pitch.length;
    const double hw = 0.5 * c_.pitch.width;
    Vec2 target;
    // a kick from beyond the lines always comes back in
    const bool kick_out = bernoulli(c_.out_of_play_prob) && c_.pitch.contains(ball_.position);
    if (kick_out) {
      const double beyond = uniform(2.0, 8.0);
      switch (std::uniform_int_distribution<int>(0, 3)(rng_)) {
        case 0: target = Vec2(uniform(-hl, hl), hw + beyond); break;
        case 1: target = Vec2(uniform(-hl, hl), -hw - beyond); break;
        case 2: target = Vec2(hl + beyond, uniform(-hw, hw)); break;
        default: target = Vec2(-hl - beyond, uniform(-hw, hw)); break;
      }
    } else {
      target = Vec2(uniform(-hl, hl), uniform(-hw, hw));
    }
    const Vec2 origin = ball_.position.head<2>();
    Vec2 dir = target - origin;
    dir = dir.norm() > 1e-6 ? Vec2(dir.normalized()) : Vec2(1.0, 0.0);
    const double elevation = uniform(10.0, 45.0) * std::numbers::pi / 180.0;
    // first landing near the target, within what a kick can reach
    const double range = (target - origin).norm();
    const double speed =
        std::clamp(std::sqrt(c_.physics.gravity * range / std::sin(2.0 * elevation)), kMinKickSpeed, kMaxKickSpeed);
    ball_.velocity = Vec3(speed * std::cos(elevation) * dir.x(), speed * std::cos(elevation) * dir.y(),
                          speed * std::sin(elevation));
    kicker_ = possessor_;
    kick_frame_ = f - 1;
    kicked_off_ = true;
    been_inside_ = false;
    ball_ = extrapolate(ball_, dt_, c_.physics);
    mode_ = Mode::W;
    frames_in_mode_ = 0;
    truth.events.push_back({EventKind::Kick, f});
  }

  /// Ball and mode from frame f - 1 to frame f. W/J labelling is settled in label().
  void advance(FrameIndex f, GroundTruth& truth) {
    const Vec3 prev = ball_.position;
    const Mode prev_mode = mode_;
    move_players(f);
    ++frames_in_mode_;
    switch (prev_mode) {
      case Mode::P: {
        const double hazard = c_.kick_rate / (60.0 * c_.fps);
        // the clip opens with a kick-off, later kicks follow the hazard
        if (static_cast<double>(frames_in_mode_) > c_.possession_dwell && (!kicked_off_ || bernoulli(hazard))) {
          ball_.position = prev;  // launched from where it sat at f - 1
          kick(f, truth);
        } else {
          ball_ = {at_feet(possessor_), Vec3::Zero()};
        }
        break;
      }
      case Mode::W:
        ball_ = extrapolate(ball_, dt_, c_.physics);
        break;
      case Mode::J: {
        if (c_.pitch.contains(prev)) been_inside_ = true;
        // out as soon as it crosses a line, at any height; play restarts from
        // the ground below
        const bool stray = static_cast<double>(f - kick_frame_) > c_.fps;
        if ((been_inside_ || stray) && !c_.pitch.contains(prev)) {
          mode_ = Mode::O;
          frames_in_mode_ = 0;
          out_position_ = Vec3(prev.x(), prev.y(), c_.physics.ball_radius);
          ball_ = {prev, Vec3::Zero()};
          truth.events.push_back({EventKind::OutOfPitch, f});
          break;
        }
        const double r2 = c_.capture_radius * c_.capture_radius;
        double best = r2;
        std::size_t taker = players_.size();
        for (std::size_t i = 0; i < players_.size() && f >= kick_frame_ + kCatchGrace; ++i) {
          if (i == kicker_ && f < kick_frame_ + kKickerGrace) continue;
          const double d = squared_distance(at_feet(i), prev);
          if (d < best) {
            best = d;
            taker = i;
          }
        }
        if (taker < players_.size()) {
          mode_ = Mode::P;
          frames_in_mode_ = 0;
          possessor_ = taker;
          ball_ = {at_feet(taker), Vec3::Zero()};
        } else {
          ball_ = extrapolate(ball_, dt_, c_.physics);
        }
        break;
      }
      case Mode::O: {
        const double r2 = c_.capture_radius * c_.capture_radius;
        for (std::size_t i = 0; i < players_.size(); ++i) {
          if (squared_distance(at_feet(i), out_position_) < r2) {
            mode_ = Mode::P;
            frames_in_mode_ = 0;
            possessor_ = i;
            ball_ = {at_feet(i), Vec3::Zero()};
            break;
          }
        }
        break;
      }
    }
  }

  // The kicker no longer covers the ball once it is in flight.
  bool hidden_by_player(const Vec2& pixel) const {
    for (std::size_t i = 0; i < players_.size(); ++i) {
      if (i == kicker_ && (mode_ == Mode::W || mode_ == Mode::J)) continue;
      const Vec2& g = players_[i];
      Vec2 foot, head;
      try {
        foot = project(Vec3(g.x(), g.y(), 0.0), c_.calib);
        head = project(Vec3(g.x(), g.y(), kPlayerHeight), c_.calib);
      } catch (const Error&) {
        continue;
      }
      const double height = foot.y() - head.y();
      const double half_width = 0.2 * std::abs(height);
      if (pixel.x() >= foot.x() - half_width && pixel.x() <= foot.x() + half_width &&
          pixel.y() >= std::min(head.y(), foot.y()) && pixel.y() <= std::max(head.y(), foot.y())) {
        return true;
      }
    }
    return false;
  }

  FrameObservations render(FrameIndex f) {
    FrameObservations obs;
    obs.frame = f;
    obs.calib = c_.calib;
    obs.players = players_;
    ball_seen_ = false;
    // Right after the kick the ball is still inside the kicker's silhouette.
    const bool at_kicker = mode_ == Mode::W && f < kick_frame_ + 2;
    if (mode_ != Mode::O && !at_kicker) {
      try {
        const Vec2 px = project(ball_.position, c_.calib);
        const bool in_image = px.x() >= 0 && px.x() < c_.image_width && px.y() >= 0 && px.y() < c_.image_height;
        const bool dropped = bernoulli(c_.occlusion_prob);
        if (in_image && !dropped && !(c_.player_occlusion && hidden_by_player(px))) {
          obs.detections.push_back(px + Vec2(normal(c_.pixel_noise_sigma), normal(c_.pixel_noise_sigma)));
          ball_seen_ = true;
        }
      } catch (const Error&) {
      }
    }
    if (c_.false_positive_rate > 0) {
      const int spurious = std::poisson_distribution<int>(c_.false_positive_rate)(rng_);
      for (int k = 0; k < spurious; ++k) {
        obs.detections.emplace_back(uniform(0.0, c_.image_width), uniform(0.0, c_.image_height));
      }
    }
    std::sort(obs.detections.begin(), obs.detections.end(),
              [](const Vec2& a, const Vec2& b) { return std::tie(a.x(), a.y()) < std::tie(b.x(), b.y()); });
    return obs;
  }

  /// W becomes J at the first detection from two frames after the kick on,
  /// or once the wait runs out.
  void label(FrameIndex f, const FrameObservations&) {
    if (mode_ != Mode::W) return;
    const bool late_enough = f >= kick_frame_ + 2;
    if (late_enough && (ball_seen_ || frames_in_mode_ >= c_.max_wait_frames)) {
      mode_ = Mode::J;
      frames_in_mode_ = 0;
    }
  }

  const SimConfig& c_;
  std::mt19937_64 rng_;
  double dt_;
  std::vector<Vec2> players_;
  std::vector<Vec2> player_vel_;
  KinematicState<double> ball_;
  Mode mode_ = Mode::P;
  std::size_t possessor_ = 0;
  std::size_t kicker_ = std::numeric_limits<std::size_t>::max();
  FrameIndex kick_frame_ = std::numeric_limits<FrameIndex>::min() / 2;
  std::size_t frames_in_mode_ = 0;
  Vec3 out_position_ = Vec3::Zero();
  bool kicked_off_ = false;
  bool been_inside_ = false;  // O needs the flight to have been on the pitch
  bool ball_seen_ = false;
};

}  // namespace

Simulation simulate(const SimConfig& config) {
  validate(config);
  return Match(config).run();
}

void replay_to_stream(const GroundTruth& truth, const std::vector<FrameObservations>& frames, std::ostream& stream,
                      std::ostream& sidecar) {
  if (truth.frames.size() != frames.size()) {
    throw Error(ErrorCode::LengthMismatch, "ground truth has " + std::to_string(truth.frames.size()) +
                                               " frames, observations " + std::to_string(frames.size()));
  }
  FrameStreamWriter writer(stream);
  for (const auto& f : frames) writer.write(f);
  write_ground_truth(sidecar, truth);
}

}  // namespace monoball
