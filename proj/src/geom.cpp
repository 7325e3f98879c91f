#include "decktrack/geom.hpp"

#include "decktrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace decktrack {

namespace {
constexpr double kOrthoTol = 1e-9;
}

void require_finite(const Vec2& v, std::string_view what) {
  if (!v.allFinite()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not finite");
}

void require_finite(const Vec3& v, std::string_view what) {
  if (!v.allFinite()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not finite");
}

void require_finite(double v, std::string_view what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not finite");
}

double wrap_deg_360(double deg) noexcept {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative plus 360 can round up to exactly 360.
  if (r >= 360.0) r -= 360.0;
  return r;
}

double wrap_deg_180(double deg) noexcept {
  double r = wrap_deg_360(deg);
  if (r > 180.0) r -= 360.0;
  return r;
}

double angular_difference_deg(double a, double b) {
  require_finite(a, "angle a");
  require_finite(b, "angle b");
  return std::abs(wrap_deg_180(a - b));
}

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite()) throw Error(ErrorCode::InvalidArgument, "rotation matrix is not finite");
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kOrthoTol || std::abs(m.determinant() - 1.0) > kOrthoTol) {
    throw Error(ErrorCode::InvalidArgument, "matrix is not a proper rotation");
  }
  return Rotation(m, Unchecked{});
}

Rotation Rotation::nearest(const Mat3& m) {
  if (!m.allFinite()) throw Error(ErrorCode::InvalidArgument, "rotation matrix is not finite");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return Rotation(svd.matrixU() * d * svd.matrixV().transpose(), Unchecked{});
}

Rotation Rotation::from_ypr(double yaw, double pitch, double roll) {
  require_finite(Vec3(yaw, pitch, roll), "yaw/pitch/roll");
  const Mat3 m = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                  Eigen::AngleAxisd(roll, Vec3::UnitX()))
                     .toRotationMatrix();
  return Rotation(m, Unchecked{});
}

Rotation Rotation::exp(const Vec3& omega) {
  require_finite(omega, "rotation vector");
  const double theta = omega.norm();
  if (theta < 1e-300) return Rotation();
  return Rotation(Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix(), Unchecked{});
}

double Rotation::yaw() const noexcept { return std::atan2(m_(1, 0), m_(0, 0)); }

double Rotation::pitch() const noexcept { return std::asin(std::clamp(-m_(2, 0), -1.0, 1.0)); }

double Rotation::roll() const noexcept { return std::atan2(m_(2, 1), m_(2, 2)); }

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

CameraModel::CameraModel(const Intrinsics& intrinsics, const Rotation& rotation, const Vec3& translation)
    : intrinsics_(intrinsics), rotation_(rotation), translation_(translation) {
  const auto& k = intrinsics_;
  require_finite(Vec2(k.fx, k.fy), "focal length");
  require_finite(Vec2(k.cx, k.cy), "principal point");
  require_finite(translation_, "camera translation");
  if (!(k.fx > 0.0 && k.fy > 0.0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (k.width <= 0 || k.height <= 0) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (!(k.cx > 0.0 && k.cx < k.width && k.cy > 0.0 && k.cy < k.height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point must lie inside the image");
  }
  // Re-validate: a Rotation built from products may carry drift.
  rotation_ = Rotation::from_matrix(rotation.matrix());
}

CameraModel CameraModel::from_center(const Intrinsics& intrinsics, const Rotation& camera_to_world,
                                     const Vec3& center) {
  const Rotation world_to_camera = camera_to_world.inverse();
  return CameraModel(intrinsics, world_to_camera, -(world_to_camera * center));
}

bool CameraModel::in_bounds(const Vec2& px) const {
  return px.x() >= 0.0 && px.x() < intrinsics_.width && px.y() >= 0.0 && px.y() < intrinsics_.height;
}

std::optional<Vec2> project(const CameraModel& camera, const Vec3& world) {
  const Vec3 pc = camera.to_camera(world);
  if (pc.z() <= kMinDepth) return std::nullopt;
  const auto& k = camera.intrinsics();
  return Vec2(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
}

Ray backproject(const CameraModel& camera, const Vec2& pixel) {
  require_finite(pixel, "pixel");
  const auto& k = camera.intrinsics();
  const Vec3 dir_cam((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0);
  return {camera.center(), (camera.rotation().inverse() * dir_cam).normalized()};
}

}  // namespace decktrack
