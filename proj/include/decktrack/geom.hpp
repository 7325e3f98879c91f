#pragma once

// Core geometric types shared by every module.
//
// Conventions (fixed globally):
//   world:  right-handed, Z up, deck plane at Z = z0.
//   body:   x toward the nose, y toward the left wing, z up.
//   camera: x right, y down, z forward (optical axis); pixel origin top-left.
//   Rotation from (yaw, pitch, roll) is intrinsic Z-Y-X: R = Rz(yaw) Ry(pitch) Rx(roll).

#include <Eigen/Dense>

#include <optional>
#include <string_view>

namespace decktrack {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / kPi; }

// Throws InvalidArgument when any component is NaN/Inf.
void require_finite(const Vec2& v, std::string_view what);
void require_finite(const Vec3& v, std::string_view what);
void require_finite(double v, std::string_view what);

// Wraps to [0, 360).
double wrap_deg_360(double deg) noexcept;
// Wraps to (-180, 180].
double wrap_deg_180(double deg) noexcept;
// Minimal absolute difference on the circle, in [0, 180].
double angular_difference_deg(double a, double b);

class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  // Validates orthonormality (to 1e-9) and det = +1.
  static Rotation from_matrix(const Mat3& m);
  // Closest rotation in Frobenius norm (SVD projection); for solver outputs.
  static Rotation nearest(const Mat3& m);
  static Rotation from_ypr(double yaw, double pitch, double roll);
  static Rotation yaw_only(double yaw) { return from_ypr(yaw, 0.0, 0.0); }
  // Rodrigues map of an axis-angle 3-vector.
  static Rotation exp(const Vec3& omega);

  const Mat3& matrix() const noexcept { return m_; }
  double yaw() const noexcept;
  double pitch() const noexcept;
  double roll() const noexcept;

  Rotation inverse() const { return Rotation(m_.transpose(), Unchecked{}); }
  Rotation operator*(const Rotation& rhs) const { return Rotation(m_ * rhs.m_, Unchecked{}); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}

  Mat3 m_;
};

// Rigid transform mapping body-frame points to the world: p_w = R p_b + t.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Pose on_deck(double x, double y, double z0, double yaw_deg) {
    return {Rotation::yaw_only(deg_to_rad(yaw_deg)), Vec3(x, y, z0)};
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const {
    const Rotation inv = rotation.inverse();
    return {inv, -(inv * translation)};
  }
  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  double yaw_deg() const { return wrap_deg_360(rad_to_deg(rotation.yaw())); }
};

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  Mat3 matrix() const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length

  Vec3 at(double s) const { return origin + s * direction; }
};

class CameraModel {
 public:
  // rotation/translation map world points into the camera frame: X_c = R X_w + t.
  CameraModel(const Intrinsics& intrinsics, const Rotation& rotation, const Vec3& translation);

  // Camera placed at `center`, with a camera-to-world rotation.
  static CameraModel from_center(const Intrinsics& intrinsics, const Rotation& camera_to_world,
                                 const Vec3& center);

  const Intrinsics& intrinsics() const noexcept { return intrinsics_; }
  const Rotation& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }

  Vec3 center() const { return -(rotation_.inverse() * translation_); }
  Vec3 to_camera(const Vec3& world) const { return rotation_ * world + translation_; }
  bool in_bounds(const Vec2& px) const;

 private:
  Intrinsics intrinsics_;
  Rotation rotation_;
  Vec3 translation_;
};

inline constexpr double kMinDepth = 1e-9;

// nullopt when the point's camera-frame depth is <= 1e-9 m ("Behind").
// The pixel may lie outside the image.
std::optional<Vec2> project(const CameraModel& camera, const Vec3& world);
Ray backproject(const CameraModel& camera, const Vec2& pixel);

}  // namespace decktrack
