#include "monoball/state_model.hpp"

#include <string>

namespace monoball {

char to_char(Mode m) noexcept {
  switch (m) {
    case Mode::J: return 'J';
    case Mode::P: return 'P';
    case Mode::W: return 'W';
    case Mode::O: return 'O';
  }
  return '?';
}

std::optional<Mode> mode_from_char(char c) noexcept {
  switch (c) {
    case 'J': return Mode::J;
    case 'P': return Mode::P;
    case 'W': return Mode::W;
    case 'O': return Mode::O;
    default: return std::nullopt;
  }
}

namespace {

std::weak_ordering cmp(double a, double b) noexcept {
  if (a < b) return std::weak_ordering::less;
  if (b < a) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

template <typename V>
std::weak_ordering cmp_vec(const V& a, const V& b) noexcept {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (auto c = cmp(a[i], b[i]); c != 0) return c;
  }
  return std::weak_ordering::equivalent;
}

}  // namespace

std::weak_ordering compare_state(const Hypothesis& a, const Hypothesis& b) noexcept {
  if (auto c = a.latent.index() <=> b.latent.index(); c != 0) return c;
  if (auto c = cmp_vec(a.position, b.position); c != 0) return c;
  switch (a.mode()) {
    case Mode::J: {
      const auto& ja = std::get<JumpLatent>(a.latent);
      const auto& jb = std::get<JumpLatent>(b.latent);
      if (auto c = cmp_vec(ja.velocity, jb.velocity); c != 0) return c;
      if (auto c = cmp(ja.variance, jb.variance); c != 0) return c;
      return ja.visible <=> jb.visible;
    }
    case Mode::P:
      return std::get<PossessionLatent>(a.latent).player_index <=> std::get<PossessionLatent>(b.latent).player_index;
    case Mode::W: {
      const auto& wa = std::get<WaitLatent>(a.latent);
      const auto& wb = std::get<WaitLatent>(b.latent);
      if (auto c = wa.kick_frame <=> wb.kick_frame; c != 0) return c;
      return cmp_vec(wa.kicker_position, wb.kicker_position);
    }
    case Mode::O:
      return std::weak_ordering::equivalent;
  }
  return std::weak_ordering::equivalent;
}

bool edge_allowed(Mode from, Mode to) noexcept {
  if (from == to) return true;
  switch (from) {
    case Mode::J: return to == Mode::O || to == Mode::P;
    case Mode::P: return to == Mode::W;
    case Mode::W: return to == Mode::J;
    case Mode::O: return to == Mode::P;
  }
  return false;
}

double transition_logp(const TransitionMatrix& matrix, Mode from, Mode to) noexcept {
  return edge_allowed(from, to) ? matrix(from, to) : kNegInf;
}

TransitionMatrix make_transition_matrix(double self_prob) {
  return make_transition_matrix({self_prob, self_prob, self_prob, self_prob});
}

TransitionMatrix make_transition_matrix(const std::array<double, 4>& self_prob) {
  std::array<std::array<double, 4>, 4> prob{};
  for (Mode from : kAllModes) {
    const double stay = self_prob[index(from)];
    if (!(stay > 0.0 && stay <= 1.0)) {
      throw Error(ErrorCode::ConfigInvalid, "self-transition probability must be in (0, 1]");
    }
    int exits = 0;
    for (Mode to : kAllModes) exits += (to != from && edge_allowed(from, to)) ? 1 : 0;
    for (Mode to : kAllModes) {
      if (to == from) {
        prob[index(from)][index(to)] = stay;
      } else if (edge_allowed(from, to)) {
        prob[index(from)][index(to)] = (1.0 - stay) / exits;
      }
    }
  }
  return transition_from_probabilities(prob);
}

TransitionMatrix transition_from_probabilities(const std::array<std::array<double, 4>, 4>& prob) {
  TransitionMatrix m;
  for (Mode from : kAllModes) {
    for (Mode to : kAllModes) {
      const double p = prob[index(from)][index(to)];
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::ConfigInvalid, "transition probability out of [0, 1]");
      }
      if (!edge_allowed(from, to) && p != 0.0) {
        throw Error(ErrorCode::ConfigInvalid, std::string("forbidden transition ") + to_char(from) + "->" +
                                                  to_char(to) + " has non-zero probability");
      }
      m.logp[index(from)][index(to)] = edge_allowed(from, to) ? std::log(p) : kNegInf;
    }
  }
  validate(m);
  return m;
}

void validate(const TransitionMatrix& matrix) {
  for (Mode from : kAllModes) {
    double total = 0.0;
    for (Mode to : kAllModes) {
      const double lp = matrix(from, to);
      if (!edge_allowed(from, to)) {
        if (lp != kNegInf) {
          throw Error(ErrorCode::ConfigInvalid, "forbidden transition must have log-probability -inf");
        }
        continue;
      }
      total += std::exp(lp);
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(ErrorCode::ConfigInvalid, std::string("transition row ") + to_char(from) + " does not sum to 1");
    }
  }
}

ModelParams default_params() {
  ModelParams p;
  // W leaks a little faster so that, between equally likely kickers, the most
  // recent kick frame ranks first. O does too: play restarts within seconds.
  p.transition = make_transition_matrix({0.95, 0.95, 0.9, 0.9});
  return p;
}

void validate(const ModelParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ConfigInvalid, what);
  };
  validate(p.transition);
  require(p.beam_width >= 1, "beam_width must be >= 1");
  require(p.fps > 0 && std::isfinite(p.fps), "fps must be positive");
  require(p.possession_threshold > 0, "possession_threshold must be positive");
  require(p.sigma_g > 0, "sigma_g must be positive");
  require(p.sigma_v >= 0, "sigma_v must be non-negative");
  require(p.ray_step > 0, "ray_step must be positive");
  require(p.logp_distant_possession <= 0 && !std::isnan(p.logp_distant_possession),
          "logp_distant_possession must be <= 0");
  require(p.logp_clutter <= 0 && !std::isnan(p.logp_clutter), "logp_clutter must be <= 0");
  require(p.max_kick_speed > 0 && !std::isnan(p.max_kick_speed), "max_kick_speed must be positive");
  require(p.logp_invisible <= 0 && !std::isnan(p.logp_invisible), "logp_invisible must be <= 0");
  require(p.physics.gravity > 0, "gravity must be positive");
  require(p.physics.restitution >= 0 && p.physics.restitution <= 1, "restitution must be in [0, 1]");
  require(p.physics.ground_friction >= 0 && p.physics.ground_friction <= 1, "ground_friction must be in [0, 1]");
  require(p.physics.ball_radius >= 0, "ball_radius must be non-negative");
  require(p.physics.settle_speed >= 0, "settle_speed must be non-negative");
  require(p.pitch.length > 0 && p.pitch.width > 0, "pitch dimensions must be positive");
}

}  // namespace monoball
