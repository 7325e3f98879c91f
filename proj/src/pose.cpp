#include "decktrack/pose.hpp"

#include "decktrack/calib.hpp"
#include "decktrack/error.hpp"

#include <cmath>
#include <optional>
#include <limits>
#include <set>

namespace decktrack::pose {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec3 centroid_of(std::span<const Vec3> pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

// Eigenvalues (ascending) of the centered scatter matrix.
Vec3 scatter_eigenvalues(std::span<const Vec3> pts) {
  const Vec3 c = centroid_of(pts);
  Mat3 s = Mat3::Zero();
  for (const auto& p : pts) s += (p - c) * (p - c).transpose();
  return Eigen::SelfAdjointEigenSolver<Mat3>(s, Eigen::EigenvaluesOnly).eigenvalues();
}

bool collinear(std::span<const Vec3> pts) {
  const Vec3 ev = scatter_eigenvalues(pts);
  return !(ev(1) > 1e-12 * ev(2)) || !(ev(2) > 0.0);
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

double sum_sq_residual(const CameraModel& camera, const Pose& pose, std::span<const Vec3> body,
                       std::span<const Vec2> pixels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const auto px = project(camera, pose.apply(body[i]));
    if (!px) return kInf;
    sum += (*px - pixels[i]).squaredNorm();
  }
  return sum;
}

std::optional<Pose> dlt_seed(const CameraModel& camera, std::span<const Vec3> body, std::span<const Vec2> pixels) {
  std::vector<calib::Correspondence> corr(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) corr[i] = {"", body[i], pixels[i]};
  try {
    const calib::ProjectionMatrix p = calib::estimate_projection_dlt(corr);
    // K^-1 P = lambda [R_co | t_co], with det > 0 by ProjectionMatrix's sign convention.
    const calib::Mat34 m = camera.intrinsics().matrix().inverse() * p.matrix();
    const Mat3 a = m.leftCols<3>();
    const Eigen::JacobiSVD<Mat3> svd(a);
    const double lambda = svd.singularValues().mean();
    if (!(lambda > 0.0)) return std::nullopt;
    const Rotation r_co = Rotation::nearest(a);
    const Vec3 t_co = m.col(3) / lambda;
    const Rotation rc_inv = camera.rotation().inverse();
    return Pose{rc_inv * r_co, rc_inv * (t_co - camera.translation())};
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Homography from the keypoints' best-fit plane to normalized image
// coordinates; exact for coplanar subsets, where the DLT seed is undefined.
std::optional<Pose> planar_seed(const CameraModel& camera, std::span<const Vec3> body, std::span<const Vec2> pixels) {
  const std::size_t n = body.size();
  const Vec3 c = centroid_of(body);
  Mat3 scatter = Mat3::Zero();
  for (const auto& b : body) scatter += (b - c) * (b - c).transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  Mat3 basis;  // columns: in-plane axes, then the normal
  basis << eig.eigenvectors().col(2), eig.eigenvectors().col(1), eig.eigenvectors().col(2).cross(eig.eigenvectors().col(1));

  const Mat3 k_inv = camera.intrinsics().matrix().inverse();
  std::vector<Vec2> plane(n), image(n);
  Vec2 pm = Vec2::Zero(), im = Vec2::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    plane[i] = (basis.transpose() * (body[i] - c)).head<2>();
    image[i] = (k_inv * pixels[i].homogeneous()).hnormalized();
    pm += plane[i];
    im += image[i];
  }
  pm /= static_cast<double>(n);
  im /= static_cast<double>(n);
  double ps = 0.0, is = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ps += (plane[i] - pm).norm();
    is += (image[i] - im).norm();
  }
  if (!(ps > 0.0 && is > 0.0)) return std::nullopt;
  ps = std::sqrt(2.0) * static_cast<double>(n) / ps;
  is = std::sqrt(2.0) * static_cast<double>(n) / is;
  Mat3 tp, ti;
  tp << ps, 0, -ps * pm.x(), 0, ps, -ps * pm.y(), 0, 0, 1;
  ti << is, 0, -is * im.x(), 0, is, -is * im.y(), 0, 0, 1;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(n), 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 x = tp * plane[i].homogeneous();
    const Vec2 u = (ti * image[i].homogeneous()).hnormalized();
    const auto r = 2 * static_cast<Eigen::Index>(i);
    a.block<1, 3>(r, 0) = x.transpose();
    a.block<1, 3>(r, 6) = -u.x() * x.transpose();
    a.block<1, 3>(r + 1, 3) = x.transpose();
    a.block<1, 3>(r + 1, 6) = -u.y() * x.transpose();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3 hm;
  hm << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  hm = ti.inverse() * hm * tp;

  // hm = lambda [r1 r2 t]; the centroid sits at t, which must be in front.
  double lambda = 0.5 * (hm.col(0).norm() + hm.col(1).norm());
  if (!(lambda > 0.0)) return std::nullopt;
  if (hm(2, 2) < 0.0) lambda = -lambda;
  Mat3 r_cp;
  r_cp.col(0) = hm.col(0) / lambda;
  r_cp.col(1) = hm.col(1) / lambda;
  r_cp.col(2) = r_cp.col(0).cross(r_cp.col(1));
  const Rotation r_co = Rotation::nearest(r_cp * basis.transpose());
  const Vec3 t_co = hm.col(2) / lambda - r_co * c;
  const Rotation rc_inv = camera.rotation().inverse();
  return Pose{rc_inv * r_co, rc_inv * (t_co - camera.translation())};
}

// Object placed where the pixel-centroid ray meets the deck (or, failing
// that, at a range inferred from pixel spread), best of a yaw grid.
Pose deck_seed(const CameraModel& camera, std::span<const Vec3> body, std::span<const Vec2> pixels,
               const PnpOptions& options) {
  Vec2 pc = Vec2::Zero();
  for (const auto& p : pixels) pc += p;
  pc /= static_cast<double>(pixels.size());
  const Vec3 bc = centroid_of(body);

  Vec3 anchor;
  try {
    // Under zero pitch/roll the matched-subset centroid sits bc.z above the deck.
    anchor = locate::intersect_deck(camera, pc, locate::DeckPlane{options.deck.z0 + bc.z()});
  } catch (const Error&) {
    double px_spread = 0.0;
    for (const auto& p : pixels) px_spread += (p - pc).squaredNorm();
    double body_spread = 0.0;
    for (const auto& b : body) body_spread += (b - bc).squaredNorm();
    if (!(px_spread > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "all observations share one pixel");
    const auto& k = camera.intrinsics();
    const double range = 0.5 * (k.fx + k.fy) * std::sqrt(body_spread / px_spread);
    anchor = backproject(camera, pc).at(range);
  }

  Pose best;
  double best_cost = kInf;
  const int samples = std::max(1, options.yaw_grid_samples);
  for (int i = 0; i < samples; ++i) {
    const Rotation r = Rotation::yaw_only(2.0 * kPi * i / samples);
    const Pose candidate{r, anchor - r * bc};
    const double cost = sum_sq_residual(camera, candidate, body, pixels);
    // Strict comparison keeps the smallest yaw on exact ties.
    if (cost < best_cost) {
      best_cost = cost;
      best = candidate;
    }
  }
  if (!std::isfinite(best_cost)) {
    throw Error(ErrorCode::DegenerateGeometry, "no yaw sample places the object in front of the camera");
  }
  return best;
}

struct LmOutcome {
  Pose pose;
  double cost;
  int iterations;
  bool hit_max;
};

LmOutcome refine(const CameraModel& camera, Pose pose, std::span<const Vec3> body, std::span<const Vec2> pixels,
                 const PnpOptions& options) {
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  const auto& k = camera.intrinsics();
  const Mat3& rc = camera.rotation().matrix();

  double cost = sum_sq_residual(camera, pose, body, pixels);
  double lambda = 1e-3;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    Mat6 h = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    const Mat3 rcr = rc * pose.rotation.matrix();
    for (std::size_t i = 0; i < body.size(); ++i) {
      const Vec3 xc = camera.to_camera(pose.apply(body[i]));
      const double iz = 1.0 / xc.z();
      const Vec2 r(k.fx * xc.x() * iz + k.cx - pixels[i].x(), k.fy * xc.y() * iz + k.cy - pixels[i].y());
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << k.fx * iz, 0.0, -k.fx * xc.x() * iz * iz, 0.0, k.fy * iz, -k.fy * xc.y() * iz * iz;
      Eigen::Matrix<double, 2, 6> j;
      j.leftCols<3>() = dproj * (-rcr * skew(body[i]));
      j.rightCols<3>() = dproj * rc;
      h.noalias() += j.transpose() * j;
      g.noalias() += j.transpose() * r;
    }

    bool accepted = false;
    Vec6 delta = Vec6::Zero();
    while (lambda < 1e16) {
      Mat6 a = h;
      a.diagonal() += lambda * h.diagonal() + Vec6::Constant(1e-12);
      delta = a.ldlt().solve(-g);
      const Pose candidate{pose.rotation * Rotation::exp(delta.head<3>()), pose.translation + delta.tail<3>()};
      const double c = sum_sq_residual(camera, candidate, body, pixels);
      if (c < cost) {
        pose = candidate;
        cost = c;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || delta.norm() < options.step_tolerance || cost == 0.0) {
      ++iter;
      return {pose, cost, iter, false};
    }
  }
  return {pose, cost, iter, true};
}

}  // namespace

SkeletonModel::SkeletonModel(std::string class_name, std::vector<NamedPoint> keypoints)
    : class_name_(std::move(class_name)), keypoints_(std::move(keypoints)) {
  if (keypoints_.size() < 3) throw Error(ErrorCode::InvalidArgument, "skeleton needs at least 3 keypoints");
  std::set<std::string> names;
  std::vector<Vec3> pts;
  for (const auto& kp : keypoints_) {
    require_finite(kp.xyz, "skeleton keypoint " + kp.name);
    if (!names.insert(kp.name).second) throw Error(ErrorCode::InvalidArgument, "duplicate keypoint name " + kp.name);
    pts.push_back(kp.xyz);
  }
  if (collinear(pts)) throw Error(ErrorCode::InvalidArgument, "skeleton keypoints are collinear");
  const Vec3 c = centroid_of(pts);
  for (auto& kp : keypoints_) kp.xyz -= c;
}

std::optional<std::size_t> SkeletonModel::find(std::string_view name) const {
  for (std::size_t i = 0; i < keypoints_.size(); ++i) {
    if (keypoints_[i].name == name) return i;
  }
  return std::nullopt;
}

MatchedKeypoints match_keypoints(const SkeletonModel& model, std::span<const KeypointObservation> obs) {
  MatchedKeypoints m;
  std::set<std::size_t> seen;
  for (const auto& o : obs) {
    const auto idx = model.find(o.name);
    if (!idx || !seen.insert(*idx).second) continue;
    require_finite(o.pixel, "observation pixel");
    if (!(o.confidence >= 0.0 && o.confidence <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "observation confidence outside [0,1]");
    }
    m.model_index.push_back(*idx);
    m.body.push_back(model.keypoints()[*idx].xyz);
    m.pixels.push_back(o.pixel);
    m.confidence.push_back(o.confidence);
  }
  return m;
}

double reprojection_rms(const CameraModel& camera, const Pose& pose, std::span<const Vec3> body,
                        std::span<const Vec2> pixels) {
  if (body.empty()) throw Error(ErrorCode::EmptyInput, "no points");
  return std::sqrt(sum_sq_residual(camera, pose, body, pixels) / static_cast<double>(body.size()));
}

PnpResult solve_pnp(const SkeletonModel& model, std::span<const KeypointObservation> obs, const CameraModel& camera,
                    const PnpOptions& options) {
  const MatchedKeypoints m = match_keypoints(model, obs);
  const std::size_t n = m.body.size();
  if (n < 4) throw Error(ErrorCode::TooFewPoints, "PnP needs at least 4 matched keypoints, got " + std::to_string(n));
  if (collinear(m.body)) throw Error(ErrorCode::DegenerateGeometry, "matched model keypoints are collinear");

  struct Seed {
    Pose pose;
    PnpInit init;
  };
  std::vector<Seed> seeds;
  std::optional<Error> deck_failure;
  try {
    seeds.push_back({deck_seed(camera, m.body, m.pixels, options), PnpInit::DeckSeed});
  } catch (const Error& e) {
    deck_failure = e;
  }
  if (n >= 6) {
    if (const auto dlt = dlt_seed(camera, m.body, m.pixels)) seeds.push_back({*dlt, PnpInit::Dlt});
  }
  if (const auto planar = planar_seed(camera, m.body, m.pixels)) seeds.push_back({*planar, PnpInit::Planar});

  // Refine every usable seed; the lowest final cost wins, earlier seeds on ties.
  std::optional<PnpResult> best;
  double best_cost = kInf;
  bool any_usable = false;
  const double nd = static_cast<double>(n);
  for (const auto& seed : seeds) {
    const double seed_cost = sum_sq_residual(camera, seed.pose, m.body, m.pixels);
    if (!std::isfinite(seed_cost)) continue;
    any_usable = true;
    const LmOutcome out = refine(camera, seed.pose, m.body, m.pixels, options);
    if (out.hit_max && !(out.cost < seed_cost)) continue;
    if (out.cost < best_cost) {
      best_cost = out.cost;
      best = PnpResult{out.pose, std::sqrt(out.cost / nd), std::sqrt(seed_cost / nd), out.iterations, seed.init};
    }
  }
  if (!best) {
    if (deck_failure && seeds.empty()) throw *deck_failure;
    if (!any_usable) throw Error(ErrorCode::DegenerateGeometry, "no initialization places the object in front of the camera");
    throw Error(ErrorCode::NoConvergence, "reprojection residual did not decrease within the iteration limit");
  }
  return *best;
}

std::vector<NamedPoint> keypoints_to_world(const SkeletonModel& model, const Pose& pose) {
  std::vector<NamedPoint> out;
  out.reserve(model.size());
  for (const auto& kp : model.keypoints()) out.push_back({kp.name, pose.apply(kp.xyz)});
  return out;
}

Similarity umeyama_align(std::span<const Vec3> source, std::span<const Vec3> target, bool with_scale,
                         std::span<const double> weights) {
  const std::size_t n = source.size();
  if (target.size() != n) throw Error(ErrorCode::DimensionMismatch, "source and target sizes differ");
  if (!weights.empty() && weights.size() != n) throw Error(ErrorCode::DimensionMismatch, "weights size differs");
  if (n < 3) throw Error(ErrorCode::TooFewPoints, "alignment needs at least 3 point pairs");
  if (collinear(source)) throw Error(ErrorCode::DegenerateGeometry, "source points are collinear");

  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double wsum = 0.0;
  Vec3 mu_s = Vec3::Zero();
  Vec3 mu_t = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(w(i) >= 0.0)) throw Error(ErrorCode::InvalidArgument, "alignment weights must be non-negative");
    wsum += w(i);
    mu_s += w(i) * source[i];
    mu_t += w(i) * target[i];
  }
  if (!(wsum > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "alignment weights sum to zero");
  mu_s /= wsum;
  mu_t /= wsum;

  Mat3 cov = Mat3::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 ds = source[i] - mu_s;
    cov += w(i) * (target[i] - mu_t) * ds.transpose();
    var_s += w(i) * ds.squaredNorm();
  }
  cov /= wsum;
  var_s /= wsum;

  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  if (!(d(1) > 1e-12 * d(0))) throw Error(ErrorCode::DegenerateGeometry, "cross-covariance is rank deficient");

  Mat3 s = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2, 2) = -1.0;

  Similarity out;
  out.rotation = Rotation::nearest(svd.matrixU() * s * svd.matrixV().transpose());
  out.scale = with_scale ? (d.asDiagonal() * s).trace() / var_s : 1.0;
  out.translation = mu_t - out.scale * (out.rotation * mu_s);

  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) sq += w(i) * (out.apply(source[i]) - target[i]).squaredNorm();
  out.rms_residual = std::sqrt(sq / wsum);
  return out;
}

AssetPoseEstimate estimate_asset_pose(const SkeletonModel& model, std::span<const KeypointObservation> obs,
                                      const CameraModel& camera, const AssetPoseConfig& config) {
  const MatchedKeypoints m = match_keypoints(model, obs);
  if (m.body.size() < 4) {
    throw Error(ErrorCode::NoEstimate, "only " + std::to_string(m.body.size()) + " matched keypoints");
  }

  const PnpResult pnp = solve_pnp(model, obs, camera, config.pnp);

  std::vector<Vec3> world(m.body.size());
  for (std::size_t i = 0; i < m.body.size(); ++i) world[i] = pnp.pose.apply(m.body[i]);
  const std::span<const double> weights =
      config.weighted_alignment ? std::span<const double>(m.confidence) : std::span<const double>();
  const Similarity align = umeyama_align(m.body, world, config.align_with_scale, weights);

  AssetPoseEstimate est;
  est.pose = Pose{align.rotation, align.translation};
  est.x = est.pose.translation.x();
  est.y = est.pose.translation.y();
  est.yaw_deg = est.pose.yaw_deg();
  est.pnp_rms_px = pnp.rms_residual_px;
  est.align_rms_m = align.rms_residual;

  double mean_conf = 0.0;
  for (double c : m.confidence) mean_conf += c;
  mean_conf /= static_cast<double>(m.confidence.size());
  const double rho = config.confidence_rho_px > 0.0 ? config.confidence_rho_px : 1.0;
  est.confidence = mean_conf * std::exp(-pnp.rms_residual_px / rho);

  est.keypoints_world.reserve(model.size());
  for (const auto& kp : model.keypoints()) est.keypoints_world.push_back({kp.name, align.apply(kp.xyz)});

  if (config.max_deck_offset_m) {
    const double dz = std::abs(est.pose.translation.z() - config.pnp.deck.z0);
    if (dz > *config.max_deck_offset_m) {
      throw Error(ErrorCode::NoEstimate, "recovered pose is " + std::to_string(dz) + " m off the deck");
    }
  }
  return est;
}

}  // namespace decktrack::pose
