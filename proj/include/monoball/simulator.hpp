#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "monoball/geometry.hpp"
#include "monoball/state_model.hpp"
#include "monoball/transition_gen.hpp"

namespace monoball {

/// Side-line broadcast camera over a standard pitch, 3840x2160 image.
Calibration broadcast_camera();

struct SimConfig {
  std::uint64_t seed = 1;
  std::size_t duration = 2500;  // frames
  double fps = 25.0;
  Calibration calib = broadcast_camera();
  PitchGeometry pitch;
  std::size_t n_players = 22;
  double occlusion_prob = 0.0;      // i.i.d. per visible frame
  double pixel_noise_sigma = 0.0;   // px
  double kick_rate = 15.0;          // kick hazard while in possession, per minute
  double possession_dwell = 10.0;   // frames in possession before a kick may happen
  double out_of_play_prob = 0.1;    // per kick
  double false_positive_rate = 0.0; // spurious detections per frame
  PhysicsParams physics;
  double capture_radius = 1.2;      // m, ball-to-player distance that ends a flight
  bool player_occlusion = true;     // hide the ball behind player silhouettes
  double image_width = 3840.0;
  double image_height = 2160.0;
  double player_speed = 7.0;        // m/s cap
  std::size_t max_wait_frames = 25;
};

void validate(const SimConfig& config);

enum class EventKind : std::uint8_t { Kick, OutOfPitch };

struct GroundTruthEvent {
  EventKind kind = EventKind::Kick;
  FrameIndex frame = 0;
  bool operator==(const GroundTruthEvent&) const = default;
};

struct GroundTruthFrame {
  FrameIndex frame = 0;
  Vec3 position = Vec3::Zero();
  Mode mode = Mode::P;
};

struct GroundTruth {
  std::vector<GroundTruthFrame> frames;
  std::vector<GroundTruthEvent> events;

  std::vector<FrameIndex> event_frames(EventKind kind) const;
};

struct Simulation {
  GroundTruth truth;
  std::vector<FrameObservations> frames;
};

/// Synthetic match: possession spells, kicks, bounced flights, captures and
/// out-of-play spells, rendered through the camera. Deterministic per seed.
Simulation simulate(const SimConfig& config);

/// Writes the frame stream and the ground-truth sidecar; throws LengthMismatch.
void replay_to_stream(const GroundTruth& truth, const std::vector<FrameObservations>& frames, std::ostream& stream,
                      std::ostream& sidecar);

}  // namespace monoball
