#pragma once

#include <cmath>

#include "monoball/error.hpp"
#include "monoball/geometry.hpp"

namespace monoball {

template <typename Scalar>
struct KinematicState {
  Vector3<Scalar> position = Vector3<Scalar>::Zero();
  Vector3<Scalar> velocity = Vector3<Scalar>::Zero();
};

struct PhysicsParams {
  double gravity = 9.81;
  double restitution = 0.7;
  double ground_friction = 0.85;
  double ball_radius = 0.11;
  // Rebounds slower than this settle into rolling contact.
  double settle_speed = 0.5;
};

/// Gravity-only flight with no ground contact.
template <typename Scalar>
KinematicState<Scalar> extrapolate_free(const KinematicState<Scalar>& s, Scalar dt, Scalar gravity) {
  if (!(dt > 0)) throw Error(ErrorCode::NonPositiveDt, "dt must be positive");
  KinematicState<Scalar> out;
  out.position = s.position + dt * s.velocity;
  out.position.z() -= Scalar(0.5) * gravity * dt * dt;
  out.velocity = s.velocity;
  out.velocity.z() -= gravity * dt;
  return out;
}

/**
 * Ballistic step with ground bounces.
 *
 * The ball centre touches the ground at z = ball_radius. Each impact inside
 * the step is located in closed form; v_z flips with factor restitution and
 * the horizontal velocity is scaled by ground_friction. A rebound slower than
 * settle_speed turns into rolling at constant horizontal velocity.
 */
template <typename Scalar>
KinematicState<Scalar> extrapolate(KinematicState<Scalar> s, Scalar dt, const PhysicsParams& phys) {
  if (!(dt > 0)) throw Error(ErrorCode::NonPositiveDt, "dt must be positive");
  const Scalar g = phys.gravity;
  const Scalar floor_z = phys.ball_radius;
  constexpr Scalar eps = Scalar(1e-9);
  if (s.position.z() < floor_z) s.position.z() = floor_z;

  Scalar remaining = dt;
  for (int bounces = 0; bounces < 64 && remaining > 0; ++bounces) {
    const Scalar height = s.position.z() - floor_z;
    if (height <= eps && std::abs(s.velocity.z()) <= eps) {
      // rolling
      s.position.template head<2>() += remaining * s.velocity.template head<2>();
      s.position.z() = floor_z;
      s.velocity.z() = 0;
      return s;
    }
    const Scalar vz = s.velocity.z();
    const Scalar impact = (vz + std::sqrt(vz * vz + 2 * g * height)) / g;
    if (impact >= remaining) {
      return extrapolate_free(s, remaining, g);
    }
    s.position.template head<2>() += impact * s.velocity.template head<2>();
    s.position.z() = floor_z;
    const Scalar rebound = -phys.restitution * (vz - g * impact);
    s.velocity.template head<2>() *= phys.ground_friction;
    s.velocity.z() = rebound < phys.settle_speed ? Scalar(0) : rebound;
    remaining -= impact;
  }
  // Only reachable with degenerate parameters; finish on the ground.
  s.velocity.z() = 0;
  s.position.z() = floor_z;
  s.position.template head<2>() += remaining * s.velocity.template head<2>();
  return s;
}

/// Launch velocity of the unique bounce-free arc from x_start to x_end.
template <typename Scalar>
Vector3<Scalar> kick_velocity(const Vector3<Scalar>& x_start, const Vector3<Scalar>& x_end, Scalar flight_time,
                              const PhysicsParams& phys) {
  if (!(flight_time > 0)) throw Error(ErrorCode::NonPositiveFlightTime, "flight time must be positive");
  Vector3<Scalar> v = (x_end - x_start) / flight_time;
  v.z() += Scalar(0.5) * phys.gravity * flight_time;
  return v;
}

template <typename Scalar>
Scalar propagate_variance(Scalar sigma, Scalar dt, Scalar sigma_v) {
  if (!(sigma >= 0) || !(sigma_v >= 0)) throw Error(ErrorCode::NegativeInput, "variances must be non-negative");
  if (!(dt > 0)) throw Error(ErrorCode::NonPositiveDt, "dt must be positive");
  return sigma + dt * sigma_v;
}

template <typename Scalar>
Scalar mechanical_energy(const KinematicState<Scalar>& s, const PhysicsParams& phys) {
  return Scalar(0.5) * s.velocity.squaredNorm() + phys.gravity * (s.position.z() - phys.ball_radius);
}

}  // namespace monoball
