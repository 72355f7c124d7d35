#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "monoball/error.hpp"

namespace monoball {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec2 = Vector2<double>;
using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;

/// Squared Euclidean distance with a fixed summation order (x, y, z).
/// Scores built on it are reproduced bit-for-bit by the test oracles.
template <typename Scalar>
inline Scalar squared_distance(const Vector3<Scalar>& a, const Vector3<Scalar>& b) noexcept {
  const Scalar dx = a.x() - b.x();
  const Scalar dy = a.y() - b.y();
  const Scalar dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/**
 * Pinhole camera: pixel ~ K (R x + T).
 *
 * World frame has the pitch plane at z = 0 with z pointing up. Construct
 * through make() to get the invariant checks; the raw aggregate is left
 * public so the wire format can fill it before validation.
 */
template <typename Scalar>
struct CameraCalibration {
  Matrix3<Scalar> intrinsics = Matrix3<Scalar>::Identity();
  Matrix3<Scalar> rotation = Matrix3<Scalar>::Identity();
  Vector3<Scalar> translation = Vector3<Scalar>::Zero();

  static CameraCalibration make(const Matrix3<Scalar>& K, const Matrix3<Scalar>& R,
                                const Vector3<Scalar>& T) {
    CameraCalibration c{K, R, T};
    c.validate();
    return c;
  }

  void validate() const {
    const Scalar orth = (rotation * rotation.transpose() - Matrix3<Scalar>::Identity()).cwiseAbs().maxCoeff();
    if (!(orth <= Scalar(1e-6)) || !(std::abs(rotation.determinant() - Scalar(1)) <= Scalar(1e-6))) {
      throw Error(ErrorCode::InvalidCalibration, "rotation is not a proper orthonormal matrix");
    }
    const auto& K = intrinsics;
    if (K(1, 0) != 0 || K(2, 0) != 0 || K(2, 1) != 0 || K(2, 2) != 1) {
      throw Error(ErrorCode::InvalidCalibration, "intrinsics must be upper-triangular with K[2][2] = 1");
    }
    if (!(K(0, 0) > 0) || !(K(1, 1) > 0)) {
      throw Error(ErrorCode::InvalidCalibration, "focal lengths must be positive");
    }
    if (!translation.allFinite() || !K.allFinite()) {
      throw Error(ErrorCode::InvalidCalibration, "non-finite calibration entries");
    }
  }

  bool operator==(const CameraCalibration& o) const {
    return intrinsics == o.intrinsics && rotation == o.rotation && translation == o.translation;
  }
};

using Calibration = CameraCalibration<double>;

template <typename Scalar>
struct Ray {
  Vector3<Scalar> origin;
  Vector3<Scalar> direction;  // unit norm
};

struct PitchGeometry {
  double length = 105.0;
  double width = 68.0;

  /// Rectangle test on (x, y); the pitch is centred at the origin.
  bool contains(double x, double y) const noexcept {
    return std::abs(x) <= 0.5 * length && std::abs(y) <= 0.5 * width;
  }
  bool contains(const Vec3& p) const noexcept { return contains(p.x(), p.y()); }
};

template <typename Scalar>
Vector3<Scalar> camera_center(const CameraCalibration<Scalar>& calib) {
  return -(calib.rotation.transpose() * calib.translation);
}

template <typename Scalar>
Vector2<Scalar> project(const Vector3<Scalar>& x, const CameraCalibration<Scalar>& calib) {
  const Vector3<Scalar> cam = calib.rotation * x + calib.translation;
  if (!(cam.z() > Scalar(1e-9))) {
    throw Error(ErrorCode::NonPositiveDepth, "point is behind or on the camera plane");
  }
  const Vector3<Scalar> h = calib.intrinsics * cam;
  return h.template head<2>() / h.z();
}

template <typename Scalar>
Ray<Scalar> backproject_ray(const Vector2<Scalar>& pixel, const CameraCalibration<Scalar>& calib) {
  const Vector3<Scalar> homog(pixel.x(), pixel.y(), Scalar(1));
  const Vector3<Scalar> cam = calib.intrinsics.template triangularView<Eigen::Upper>().solve(homog);
  const Vector3<Scalar> world = calib.rotation.transpose() * cam;
  const Scalar norm = world.norm();
  if (!(norm > Scalar(1e-12)) || !std::isfinite(norm)) {
    throw Error(ErrorCode::DegenerateDirection, "viewing ray has near-zero direction");
  }
  return {camera_center(calib), world / norm};
}

/// Candidate positions along a viewing ray, from the pitch plane up to the
/// camera height, spaced `step` apart. Ground intersection comes first.
template <typename Scalar>
std::vector<Vector3<Scalar>> discretize_ray(const Ray<Scalar>& ray, Scalar step) {
  if (!(step > 0)) {
    throw Error(ErrorCode::ConfigInvalid, "ray step must be positive");
  }
  if (!(ray.direction.z() < Scalar(-1e-9))) {
    throw Error(ErrorCode::NoGroundIntersection, "ray does not point toward the pitch plane");
  }
  const Scalar distance = -ray.origin.z() / ray.direction.z();
  if (!(distance >= 0)) {
    throw Error(ErrorCode::NoGroundIntersection, "camera is below the pitch plane");
  }
  Vector3<Scalar> ground = ray.origin + distance * ray.direction;
  ground.z() = 0;
  const Vector3<Scalar> up = -ray.direction;
  // The slack keeps the camera-height endpoint when distance is a whole
  // number of steps up to rounding.
  const auto count = static_cast<std::size_t>(std::floor(distance / step + Scalar(1e-9))) + 1;
  std::vector<Vector3<Scalar>> points;
  points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    points.push_back(ground + (static_cast<Scalar>(i) * step) * up);
  }
  return points;
}

/// Calibration for a camera at `position` looking at `target`, with square
/// pixels of focal length `focal` and principal point `principal`.
template <typename Scalar>
CameraCalibration<Scalar> look_at(const Vector3<Scalar>& position, const Vector3<Scalar>& target, Scalar focal,
                                  const Vector2<Scalar>& principal) {
  const Vector3<Scalar> forward = (target - position).normalized();
  Vector3<Scalar> right = forward.cross(Vector3<Scalar>::UnitZ());
  if (right.norm() < Scalar(1e-9)) {
    throw Error(ErrorCode::InvalidCalibration, "look_at: view direction parallel to world up");
  }
  right.normalize();
  const Vector3<Scalar> down = forward.cross(right);
  Matrix3<Scalar> R;
  R.row(0) = right.transpose();
  R.row(1) = down.transpose();
  R.row(2) = forward.transpose();
  Matrix3<Scalar> K = Matrix3<Scalar>::Identity();
  K(0, 0) = focal;
  K(1, 1) = focal;
  K(0, 2) = principal.x();
  K(1, 2) = principal.y();
  return CameraCalibration<Scalar>::make(K, R, -(R * position));
}

}  // namespace monoball
