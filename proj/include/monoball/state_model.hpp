#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <variant>

#include "monoball/dynamics.hpp"
#include "monoball/geometry.hpp"

namespace monoball {

/// Discrete ball mode. Enumerator order is the tie-break order.
enum class Mode : std::uint8_t { J = 0, P = 1, W = 2, O = 3 };

inline constexpr std::array<Mode, 4> kAllModes = {Mode::J, Mode::P, Mode::W, Mode::O};

constexpr std::size_t index(Mode m) noexcept { return static_cast<std::size_t>(m); }
char to_char(Mode m) noexcept;
std::optional<Mode> mode_from_char(char c) noexcept;

using FrameIndex = std::int64_t;

struct JumpLatent {
  Vec3 velocity = Vec3::Zero();
  double variance = 0.0;  // isotropic position variance, m^2
  bool visible = true;
};

struct PossessionLatent {
  int player_index = 0;
};

struct WaitLatent {
  FrameIndex kick_frame = 0;
  Vec2 kicker_position = Vec2::Zero();
};

struct OutLatent {};

using LatentState = std::variant<JumpLatent, PossessionLatent, WaitLatent, OutLatent>;

inline Mode mode_of(const LatentState& latent) noexcept { return static_cast<Mode>(latent.index()); }

struct Hypothesis {
  FrameIndex frame = 0;
  Vec3 position = Vec3::Zero();
  LatentState latent = OutLatent{};
  double log_weight = 0.0;
  std::int32_t parent = -1;  // index into the previous frame's beam, -1 for roots

  Mode mode() const noexcept { return mode_of(latent); }
};

/// Total order on hybrid states: mode, then position, then the mode's latents.
std::weak_ordering compare_state(const Hypothesis& a, const Hypothesis& b) noexcept;
inline bool same_state(const Hypothesis& a, const Hypothesis& b) noexcept {
  return compare_state(a, b) == std::weak_ordering::equivalent;
}

/// Beam order: higher log-weight first, ties broken by compare_state.
inline bool ranks_before(const Hypothesis& a, const Hypothesis& b) noexcept {
  if (a.log_weight != b.log_weight) return a.log_weight > b.log_weight;
  return compare_state(a, b) == std::weak_ordering::less;
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct TransitionMatrix {
  std::array<std::array<double, 4>, 4> logp{};

  double operator()(Mode from, Mode to) const noexcept { return logp[index(from)][index(to)]; }
};

/// Edges of the mode graph: J->J, J->O, J->P, O->O, O->P, P->P, P->W, W->W, W->J.
bool edge_allowed(Mode from, Mode to) noexcept;

double transition_logp(const TransitionMatrix& matrix, Mode from, Mode to) noexcept;

/// Each mode keeps `self_prob` and splits the rest evenly across its exits.
TransitionMatrix make_transition_matrix(double self_prob);
/// Per-mode self-loop probabilities, indexed by Mode.
TransitionMatrix make_transition_matrix(const std::array<double, 4>& self_prob);

/// Builds a matrix from probabilities; throws ConfigInvalid when a forbidden
/// edge carries mass or a row does not sum to one within 1e-9.
TransitionMatrix transition_from_probabilities(const std::array<std::array<double, 4>, 4>& prob);

void validate(const TransitionMatrix& matrix);

struct ModelParams {
  TransitionMatrix transition;
  double possession_threshold = 1.5;  // m
  double sigma_v = 0.5;               // m^2 / s
  double sigma_g = 0.25;              // m^2
  double logp_invisible = std::log(0.2);
  double ray_step = 0.03;  // m
  std::size_t beam_width = 1000;
  // Slots per mode kept for that mode's best hypotheses even when they rank
  // below the global top beam_width; the beam never exceeds beam_width.
  std::size_t mode_reserve = 20;
  std::size_t lag = 50;
  double fps = 25.0;
  // W->J prior: launch velocity uniform within |v| <= max_kick_speed. Off
  // means every W->J child scores the transition term alone.
  bool wait_prior = true;
  // Charged per detection a child leaves unexplained; a visible ball explains
  // one. Zero disables it.
  double logp_clutter = std::log(0.01);
  // Extra cost of a possession candidate beyond possession_threshold; -inf
  // makes the threshold a hard gate.
  double logp_distant_possession = -20.0;
  double max_kick_speed = 40.0;    // m/s
  PhysicsParams physics;
  PitchGeometry pitch;

  double dt() const noexcept { return 1.0 / fps; }
};

ModelParams default_params();

/// Range checks on every field; throws ConfigInvalid.
void validate(const ModelParams& params);

/// Isotropic 3D Gaussian log-density, floored at kLogDensityFloor.
inline constexpr double kLogDensityFloor = -745.0;
inline constexpr double kMinVariance = 1e-12;

struct IsoGaussian {
  double log_norm;  // -1.5 ln(2 pi var)
  double two_var;

  explicit IsoGaussian(double variance) noexcept {
    const double var = variance > kMinVariance ? variance : kMinVariance;
    two_var = 2.0 * var;
    log_norm = -1.5 * std::log(2.0 * 3.14159265358979323846 * var);
  }

  double log_density(double sq_dist) const noexcept {
    const double v = log_norm - sq_dist / two_var;
    return v > kLogDensityFloor ? v : kLogDensityFloor;
  }
};

inline double iso_gaussian_logpdf(double sq_dist, double variance) noexcept {
  return IsoGaussian(variance).log_density(sq_dist);
}

}  // namespace monoball
