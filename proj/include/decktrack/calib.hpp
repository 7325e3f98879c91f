#pragma once

// Camera calibration by the direct linear transform: estimate a 3x4
// projection matrix from surveyed 3D/2D correspondences, then split it into
// intrinsics and extrinsics.

#include "decktrack/geom.hpp"

#include <span>
#include <string>
#include <vector>

namespace decktrack::calib {

using Mat34 = Eigen::Matrix<double, 3, 4>;

struct Correspondence {
  std::string name;
  Vec3 world;
  Vec2 pixel;
};

// 3x4 camera matrix, stored with ||row 3, cols 0..2|| = 1 and det(leading 3x3) > 0.
class ProjectionMatrix {
 public:
  // Normalizes scale and sign; throws SingularCamera for a zero or non-finite input.
  explicit ProjectionMatrix(const Mat34& p);

  const Mat34& matrix() const noexcept { return p_; }
  // nullopt when the point maps to the plane at infinity or behind the camera.
  std::optional<Vec2> project(const Vec3& world) const;

 private:
  Mat34 p_;
};

struct DltOptions {
  bool normalize = true;  // Hartley isotropic normalization of both point sets
  double degenerate_ratio = 0.99;
};

ProjectionMatrix estimate_projection_dlt(std::span<const Correspondence> points, const DltOptions& options = {});

struct DecomposedCamera {
  Mat3 k;  // upper triangular, positive diagonal, k(2,2) = 1
  Rotation rotation;
  Vec3 translation;
};

ProjectionMatrix compose_projection(const Mat3& k, const Rotation& rotation, const Vec3& translation);
ProjectionMatrix compose_projection(const CameraModel& camera);
DecomposedCamera decompose_projection(const ProjectionMatrix& p);

// Drops skew; throws InvalidArgument if the principal point leaves the image.
CameraModel to_camera_model(const DecomposedCamera& cam, int width, int height);

double reprojection_rmse(const ProjectionMatrix& p, std::span<const Correspondence> points);

}  // namespace decktrack::calib
