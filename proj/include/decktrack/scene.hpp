#pragma once

// Synthetic flight-deck world: panoramic rig, scripted trajectories, box
// occluders and the noisy keypoint detection oracle.

#include "decktrack/geom.hpp"
#include "decktrack/pose.hpp"
#include "decktrack/records.hpp"
#include "decktrack/yawcodec.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace decktrack::scene {

struct NamedCamera {
  std::string name;
  CameraModel camera;
};

struct RigConfig {
  Vec3 mount = Vec3(0.0, -45.0, 20.0);
  double heading_deg = 90.0;                              // world yaw of the zero offset
  std::vector<double> yaw_offsets_deg = {-80.0, -40.0, 0.0, 40.0, 80.0};
  double pitch_deg = 10.0;                                // downward tilt, positive looks down
  Intrinsics intrinsics = {1600.0, 1600.0, 960.0, 540.0, 1920, 1080};
};

// Sum of the left and right half-angles about the principal point.
double horizontal_fov_deg(const Intrinsics& in);

// Cameras named cam0..camN-1 in offset order, sharing one optical center.
// Throws InvalidRig when sorted neighbouring offsets leave a gap.
std::vector<NamedCamera> build_panoramic_rig(const RigConfig& config);

struct Keyframe {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
  double yaw_deg = 0.0;
};

struct Trajectory {
  std::string object;
  std::vector<Keyframe> keyframes;

  void validate() const;
  int first_frame() const { return keyframes.front().frame; }
  int last_frame() const { return keyframes.back().frame; }
  bool covers(int frame) const { return frame >= first_frame() && frame <= last_frame(); }
};

// Linear in x, y and shortest-arc in yaw; throws OutOfRange outside the keyframe span.
Pose pose_at_frame(const Trajectory& traj, int frame, double deck_z0 = 0.0);

// Body-frame box centered on the body origin.
struct OccluderVolume {
  double length = 17.0;
  double width = 13.5;
  double height = 5.0;

  void validate() const;
};

struct PosedOccluder {
  std::string object;
  Pose pose;
  OccluderVolume box;
};

// Segment/box intersection, segment parameter in [0, 1].
bool segment_hits_box(const Vec3& a, const Vec3& b, const PosedOccluder& occ);

// In bounds, in front of the camera, and not hidden by any other object's box.
bool visible(const Vec3& keypoint_world, const CameraModel& camera, std::span<const PosedOccluder> occluders,
             std::string_view self_id);

struct NoiseConfig {
  double pixel_sigma = 0.0;
  double dropout_prob = 0.0;
  double confidence_floor = 0.05;
  double confidence_scale_sigmas = 4.0;
  double yaw_sigma_deg = 0.0;     // noise on the yaw head's underlying angle
  double yaw_score_sigma = 0.0;   // noise on the yaw head's bin scores
  std::uint64_t seed = 0;

  void validate() const;
};

struct DeckConfig {
  double z0 = 0.0;
  double length = 330.0;
  double width = 78.0;
};

struct SceneObject {
  std::string id;
  std::string cls;
  OccluderVolume occluder;
};

struct Scene {
  RigConfig rig;
  DeckConfig deck;
  std::vector<SceneObject> objects;
  std::map<std::string, pose::SkeletonModel> skeletons;  // by class
  std::vector<Trajectory> trajectories;                  // one per object id
  NoiseConfig noise;
  yaw::YawBins bins = yaw::default_bins();
  std::optional<int> first_frame;
  std::optional<int> last_frame;

  // Throws InvalidArgument on missing skeletons/trajectories.
  void validate() const;
  std::pair<int, int> frame_span() const;
};

// Per-frame generator seeded from (seed, frame) only, so frames can be
// rendered in any order or on any thread.
class FrameRng {
 public:
  FrameRng(std::uint64_t seed, std::int64_t frame);
  double uniform();  // [0, 1)
  double normal();

 private:
  std::mt19937_64 engine_;
};

struct ObjectState {
  const SceneObject* object;
  Pose pose;
};

struct FrameOutput {
  std::vector<DetectionRecord> detections;
  std::vector<TruthRecord> truth;
};

// One frame: for each object x camera, project the visible keypoints, add
// noise, apply dropout and assign confidences. A record is emitted whenever
// any keypoint falls inside the camera's frustum, so a fully hidden object
// still yields a record with no keypoints (and no box or yaw head).
FrameOutput render_detections(int frame, std::span<const ObjectState> objects,
                              const std::map<std::string, pose::SkeletonModel>& skeletons,
                              std::span<const NamedCamera> cameras, const NoiseConfig& noise,
                              const yaw::YawBins& bins);

struct SimulationOutput {
  std::vector<NamedCamera> cameras;
  std::vector<DetectionRecord> detections;
  std::vector<TruthRecord> truth;
};

// OpenMP over frames; output in frame order.
SimulationOutput simulate(const Scene& scene);
// Serial reference; must match simulate() exactly.
SimulationOutput simulate_reference(const Scene& scene);

}  // namespace decktrack::scene
