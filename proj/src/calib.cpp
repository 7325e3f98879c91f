#include "decktrack/calib.hpp"

#include "decktrack/error.hpp"

#include <cmath>

namespace decktrack::calib {

namespace {

// Similarity taking the centroid to the origin and the mean distance to sqrt(dim).
template <int Dim>
Eigen::Matrix<double, Dim + 1, Dim + 1> isotropic_normalizer(const std::vector<Eigen::Matrix<double, Dim, 1>>& pts) {
  Eigen::Matrix<double, Dim, 1> centroid = Eigen::Matrix<double, Dim, 1>::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) throw Error(ErrorCode::DegenerateConfiguration, "all points coincide");
  const double s = std::sqrt(static_cast<double>(Dim)) / mean_dist;
  Eigen::Matrix<double, Dim + 1, Dim + 1> t = Eigen::Matrix<double, Dim + 1, Dim + 1>::Identity();
  t.template topLeftCorner<Dim, Dim>() *= s;
  t.template topRightCorner<Dim, 1>() = -s * centroid;
  return t;
}

void check_world_spread(const std::vector<Vec3>& world_normalized) {
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : world_normalized) scatter += p * p.transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Vec3 ev = eig.eigenvalues();  // ascending
  if (ev(0) < 1e-10 * ev(2)) {
    throw Error(ErrorCode::DegenerateConfiguration, "world points are coplanar or collinear");
  }
}

}  // namespace

ProjectionMatrix::ProjectionMatrix(const Mat34& p) : p_(p) {
  if (!p_.allFinite()) throw Error(ErrorCode::SingularCamera, "projection matrix is not finite");
  const double s = p_.block<1, 3>(2, 0).norm();
  if (!(s > 0.0)) throw Error(ErrorCode::SingularCamera, "projection matrix has zero depth row");
  p_ /= s;
  if (p_.leftCols<3>().determinant() < 0.0) p_ = -p_;
}

std::optional<Vec2> ProjectionMatrix::project(const Vec3& world) const {
  const Vec3 h = p_ * world.homogeneous();
  if (h.z() <= kMinDepth) return std::nullopt;
  return Vec2(h.x() / h.z(), h.y() / h.z());
}

ProjectionMatrix estimate_projection_dlt(std::span<const Correspondence> points, const DltOptions& options) {
  const std::size_t n = points.size();
  if (n < 6) throw Error(ErrorCode::TooFewPoints, "DLT needs at least 6 correspondences, got " + std::to_string(n));

  std::vector<Vec3> world;
  std::vector<Vec2> pixel;
  world.reserve(n);
  pixel.reserve(n);
  for (const auto& c : points) {
    require_finite(c.world, "correspondence world point");
    require_finite(c.pixel, "correspondence pixel");
    world.push_back(c.world);
    pixel.push_back(c.pixel);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (pixel[i] == pixel[j] && world[i] != world[j]) {
        throw Error(ErrorCode::DegenerateConfiguration, "identical pixels for distinct world points");
      }
    }
  }

  Eigen::Matrix4d tw = Eigen::Matrix4d::Identity();
  Mat3 tp = Mat3::Identity();
  if (options.normalize) {
    tw = isotropic_normalizer<3>(world);
    tp = isotropic_normalizer<2>(pixel);
  }

  std::vector<Vec3> world_n(n);
  for (std::size_t i = 0; i < n; ++i) world_n[i] = (tw * world[i].homogeneous()).hnormalized();
  {
    // Centered copy for the spread check regardless of normalization.
    Vec3 c = Vec3::Zero();
    for (const auto& p : world_n) c += p;
    c /= static_cast<double>(n);
    std::vector<Vec3> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = world_n[i] - c;
    check_world_spread(centered);
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * n), 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::RowVector4d x = world_n[i].homogeneous().transpose();
    const Vec2 uv = (tp * pixel[i].homogeneous()).hnormalized();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.block<1, 4>(r, 4) = -x;
    a.block<1, 4>(r, 8) = uv.y() * x;
    a.block<1, 4>(r + 1, 0) = x;
    a.block<1, 4>(r + 1, 8) = -uv.x() * x;
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smallest = sv(11);
  const double second = sv(10);
  if (second < 1e-12 * sv(0) || smallest > options.degenerate_ratio * second) {
    throw Error(ErrorCode::DegenerateConfiguration, "DLT system has no unique solution direction");
  }

  const Eigen::VectorXd h = svd.matrixV().col(11);
  Mat34 pn;
  pn << h.segment<4>(0).transpose(), h.segment<4>(4).transpose(), h.segment<4>(8).transpose();
  const Mat34 p = tp.inverse() * pn * tw;
  return ProjectionMatrix(p);
}

ProjectionMatrix compose_projection(const Mat3& k, const Rotation& rotation, const Vec3& translation) {
  Mat34 rt;
  rt << rotation.matrix(), translation;
  return ProjectionMatrix(k * rt);
}

ProjectionMatrix compose_projection(const CameraModel& camera) {
  return compose_projection(camera.intrinsics().matrix(), camera.rotation(), camera.translation());
}

DecomposedCamera decompose_projection(const ProjectionMatrix& p) {
  const Mat3 m = p.matrix().leftCols<3>();
  const double det = m.determinant();
  if (!(std::abs(det) > 1e-12 * std::pow(m.norm(), 3))) {
    throw Error(ErrorCode::SingularCamera, "leading 3x3 block is singular");
  }

  // RQ through QR of the row-reversed transpose.
  Mat3 flip = Mat3::Zero();
  flip(0, 2) = flip(1, 1) = flip(2, 0) = 1.0;
  const Eigen::HouseholderQR<Mat3> qr((flip * m).transpose());
  const Mat3 q = qr.householderQ();
  const Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();
  Mat3 k = flip * r.transpose() * flip;
  Mat3 rot = flip * q.transpose();

  const Vec3 signs = k.diagonal().cwiseSign();
  const Mat3 d = signs.asDiagonal();
  k = k * d;
  rot = d * rot;

  const Vec3 t = k.triangularView<Eigen::Upper>().solve(p.matrix().col(3));
  k /= k(2, 2);
  return {k, Rotation::nearest(rot), t};
}

CameraModel to_camera_model(const DecomposedCamera& cam, int width, int height) {
  Intrinsics in;
  in.fx = cam.k(0, 0);
  in.fy = cam.k(1, 1);
  in.cx = cam.k(0, 2);
  in.cy = cam.k(1, 2);
  in.width = width;
  in.height = height;
  return CameraModel(in, cam.rotation, cam.translation);
}

double reprojection_rmse(const ProjectionMatrix& p, std::span<const Correspondence> points) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "no correspondences");
  double sum = 0.0;
  for (const auto& c : points) {
    const Vec3 h = p.matrix() * c.world.homogeneous();
    sum += (h.hnormalized() - c.pixel).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(points.size()));
}

}  // namespace decktrack::calib
