#pragma once

// Keypoint-based pose recovery: PnP against a known skeleton, then a
// closed-form SVD alignment of the skeleton onto the recovered keypoints.

#include "decktrack/geom.hpp"
#include "decktrack/locate.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace decktrack::pose {

struct NamedPoint {
  std::string name;
  Vec3 xyz;
};

// Named body-frame keypoints of one asset class. Construction recenters the
// points so their centroid is the body origin.
class SkeletonModel {
 public:
  SkeletonModel(std::string class_name, std::vector<NamedPoint> keypoints);

  const std::string& class_name() const noexcept { return class_name_; }
  const std::vector<NamedPoint>& keypoints() const noexcept { return keypoints_; }
  std::size_t size() const noexcept { return keypoints_.size(); }
  // Index of a keypoint by name, or nullopt.
  std::optional<std::size_t> find(std::string_view name) const;

 private:
  std::string class_name_;
  std::vector<NamedPoint> keypoints_;
};

struct KeypointObservation {
  std::string name;
  Vec2 pixel;
  double confidence = 1.0;
};

enum class PnpInit { Dlt, DeckSeed, Planar };

struct PnpOptions {
  int max_iterations = 100;
  double step_tolerance = 1e-10;
  int yaw_grid_samples = 24;
  locate::DeckPlane deck;
};

struct PnpResult {
  Pose pose;  // body -> world
  double rms_residual_px = 0.0;
  double initial_rms_px = 0.0;
  int iterations = 0;
  PnpInit init = PnpInit::Dlt;
};

// Model/observation pairs matched by keypoint name; unknown names are skipped.
struct MatchedKeypoints {
  std::vector<std::size_t> model_index;
  std::vector<Vec3> body;
  std::vector<Vec2> pixels;
  std::vector<double> confidence;
};

MatchedKeypoints match_keypoints(const SkeletonModel& model, std::span<const KeypointObservation> obs);

double reprojection_rms(const CameraModel& camera, const Pose& pose, std::span<const Vec3> body,
                        std::span<const Vec2> pixels);

// Throws TooFewPoints (< 4 matches), DegenerateGeometry (collinear model
// points or no usable initialization) or NoConvergence.
PnpResult solve_pnp(const SkeletonModel& model, std::span<const KeypointObservation> obs, const CameraModel& camera,
                    const PnpOptions& options = {});

std::vector<NamedPoint> keypoints_to_world(const SkeletonModel& model, const Pose& pose);

struct Similarity {
  double scale = 1.0;
  Rotation rotation;
  Vec3 translation = Vec3::Zero();
  double rms_residual = 0.0;  // weighted like the fit

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
};

// Least-squares similarity (or rigid, with_scale = false) mapping source onto
// target. Optional non-negative weights give a weighted fit.
Similarity umeyama_align(std::span<const Vec3> source, std::span<const Vec3> target, bool with_scale,
                         std::span<const double> weights = {});

struct AssetPoseConfig {
  bool align_with_scale = false;
  bool weighted_alignment = false;
  double confidence_rho_px = 1.0;
  std::optional<double> max_deck_offset_m = 0.5;
  PnpOptions pnp;
};

struct AssetPoseEstimate {
  double x = 0.0;
  double y = 0.0;
  double yaw_deg = 0.0;  // [0, 360)
  Pose pose;
  double confidence = 0.0;
  double pnp_rms_px = 0.0;
  double align_rms_m = 0.0;
  std::vector<NamedPoint> keypoints_world;
};

// Throws NoEstimate when fewer than 4 keypoints match or when the recovered
// pose leaves the deck sanity bound; other solver errors propagate.
AssetPoseEstimate estimate_asset_pose(const SkeletonModel& model, std::span<const KeypointObservation> obs,
                                      const CameraModel& camera, const AssetPoseConfig& config = {});

}  // namespace decktrack::pose
