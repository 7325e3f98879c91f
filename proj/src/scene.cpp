#include "decktrack/scene.hpp"

#include "decktrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace decktrack::scene {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Camera-to-world rotation for a camera looking along world yaw `yaw` and
// tilted down by `pitch_down` (radians). Columns are the camera x (right),
// y (down) and z (forward) axes in world coordinates.
Rotation camera_to_world(double yaw, double pitch_down) {
  const Vec3 forward(std::cos(yaw) * std::cos(pitch_down), std::sin(yaw) * std::cos(pitch_down), -std::sin(pitch_down));
  const Vec3 right(std::sin(yaw), -std::cos(yaw), 0.0);
  const Vec3 down = forward.cross(right);
  Mat3 m;
  m << right, down, forward;
  return Rotation::nearest(m);
}

}  // namespace

double horizontal_fov_deg(const Intrinsics& in) {
  return rad_to_deg(std::atan(in.cx / in.fx) + std::atan((in.width - in.cx) / in.fx));
}

std::vector<NamedCamera> build_panoramic_rig(const RigConfig& config) {
  require_finite(config.mount, "rig mount");
  if (config.yaw_offsets_deg.empty()) throw Error(ErrorCode::InvalidRig, "rig has no cameras");
  const double hfov = horizontal_fov_deg(config.intrinsics);
  std::vector<double> sorted = config.yaw_offsets_deg;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] > hfov) {
      throw Error(ErrorCode::InvalidRig, "gap between camera offsets " + std::to_string(sorted[i - 1]) + " and " +
                                              std::to_string(sorted[i]) + " exceeds the " + std::to_string(hfov) +
                                              " deg field of view");
    }
  }
  std::vector<NamedCamera> cams;
  for (std::size_t i = 0; i < config.yaw_offsets_deg.size(); ++i) {
    const double yaw = deg_to_rad(config.heading_deg + config.yaw_offsets_deg[i]);
    const Rotation c2w = camera_to_world(yaw, deg_to_rad(config.pitch_deg));
    cams.push_back({"cam" + std::to_string(i), CameraModel::from_center(config.intrinsics, c2w, config.mount)});
  }
  return cams;
}

void Trajectory::validate() const {
  if (keyframes.empty()) throw Error(ErrorCode::InvalidArgument, "trajectory for " + object + " has no keyframes");
  for (std::size_t i = 0; i < keyframes.size(); ++i) {
    require_finite(Vec3(keyframes[i].x, keyframes[i].y, keyframes[i].yaw_deg), "keyframe");
    if (i > 0 && keyframes[i].frame <= keyframes[i - 1].frame) {
      throw Error(ErrorCode::InvalidArgument, "keyframes of " + object + " are not strictly increasing");
    }
  }
}

Pose pose_at_frame(const Trajectory& traj, int frame, double deck_z0) {
  traj.validate();
  if (!traj.covers(frame)) {
    throw Error(ErrorCode::OutOfRange, "frame " + std::to_string(frame) + " outside trajectory of " + traj.object);
  }
  const auto& kf = traj.keyframes;
  const auto hi = std::lower_bound(kf.begin(), kf.end(), frame,
                                   [](const Keyframe& k, int f) { return k.frame < f; });
  if (hi->frame == frame) return Pose::on_deck(hi->x, hi->y, deck_z0, hi->yaw_deg);
  const auto lo = std::prev(hi);
  const double a = static_cast<double>(frame - lo->frame) / static_cast<double>(hi->frame - lo->frame);
  const double x = lo->x + a * (hi->x - lo->x);
  const double y = lo->y + a * (hi->y - lo->y);
  const double yaw = lo->yaw_deg + a * wrap_deg_180(hi->yaw_deg - lo->yaw_deg);
  return Pose::on_deck(x, y, deck_z0, wrap_deg_360(yaw));
}

void OccluderVolume::validate() const {
  if (!(length > 0.0 && width > 0.0 && height > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "occluder extents must be positive");
  }
}

bool segment_hits_box(const Vec3& a, const Vec3& b, const PosedOccluder& occ) {
  const Pose inv = occ.pose.inverse();
  const Vec3 p = inv.apply(a);
  const Vec3 d = inv.apply(b) - p;
  const Vec3 half(0.5 * occ.box.length, 0.5 * occ.box.width, 0.5 * occ.box.height);
  double t0 = 0.0;
  double t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d(k)) < 1e-15) {
      if (p(k) < -half(k) || p(k) > half(k)) return false;
      continue;
    }
    double ta = (-half(k) - p(k)) / d(k);
    double tb = (half(k) - p(k)) / d(k);
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

bool visible(const Vec3& keypoint_world, const CameraModel& camera, std::span<const PosedOccluder> occluders,
             std::string_view self_id) {
  const auto px = project(camera, keypoint_world);
  if (!px || !camera.in_bounds(*px)) return false;
  const Vec3 center = camera.center();
  return std::none_of(occluders.begin(), occluders.end(), [&](const PosedOccluder& occ) {
    return occ.object != self_id && segment_hits_box(center, keypoint_world, occ);
  });
}

void NoiseConfig::validate() const {
  if (!(pixel_sigma >= 0.0) || !(yaw_sigma_deg >= 0.0) || !(yaw_score_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise sigmas must be non-negative");
  }
  if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout probability must be in [0, 1]");
  }
  if (!(confidence_floor >= 0.0 && confidence_floor <= 1.0) || !(confidence_scale_sigmas > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid confidence model");
  }
}

void Scene::validate() const {
  noise.validate();
  std::set<std::string> ids;
  for (const auto& o : objects) {
    if (!ids.insert(o.id).second) throw Error(ErrorCode::InvalidArgument, "duplicate object id " + o.id);
    o.occluder.validate();
    if (!skeletons.contains(o.cls)) throw Error(ErrorCode::InvalidArgument, "no skeleton for class " + o.cls);
  }
  std::set<std::string> with_traj;
  for (const auto& t : trajectories) {
    t.validate();
    if (!ids.contains(t.object)) throw Error(ErrorCode::InvalidArgument, "trajectory for unknown object " + t.object);
    if (!with_traj.insert(t.object).second) {
      throw Error(ErrorCode::InvalidArgument, "object " + t.object + " has more than one trajectory");
    }
  }
  if (trajectories.empty()) throw Error(ErrorCode::InvalidArgument, "scene has no trajectories");
}

std::pair<int, int> Scene::frame_span() const {
  int lo = std::numeric_limits<int>::max();
  int hi = std::numeric_limits<int>::min();
  for (const auto& t : trajectories) {
    lo = std::min(lo, t.first_frame());
    hi = std::max(hi, t.last_frame());
  }
  return {first_frame.value_or(lo), last_frame.value_or(hi)};
}

FrameRng::FrameRng(std::uint64_t seed, std::int64_t frame)
    : engine_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(frame)))) {}

double FrameRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double FrameRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

FrameOutput render_detections(int frame, std::span<const ObjectState> objects,
                              const std::map<std::string, pose::SkeletonModel>& skeletons,
                              std::span<const NamedCamera> cameras, const NoiseConfig& noise,
                              const yaw::YawBins& bins) {
  FrameRng rng(noise.seed, frame);
  std::vector<PosedOccluder> occluders;
  occluders.reserve(objects.size());
  for (const auto& o : objects) occluders.push_back({o.object->id, o.pose, o.object->occluder});

  FrameOutput out;
  for (const auto& o : objects) {
    const auto& skeleton = skeletons.at(o.object->cls);
    const auto world = pose::keypoints_to_world(skeleton, o.pose);

    TruthRecord truth;
    truth.frame = frame;
    truth.object = o.object->id;
    truth.x = o.pose.translation.x();
    truth.y = o.pose.translation.y();
    truth.yaw = o.pose.yaw_deg();
    bool blocked = false;
    int visible_total = 0;

    for (const auto& cam : cameras) {
      DetectionRecord rec;
      rec.frame = frame;
      rec.camera = cam.name;
      rec.object = o.object->id;
      rec.cls = o.object->cls;
      int in_frustum = 0;
      int n_visible = 0;
      Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
      Vec2 hi = -lo;
      for (const auto& kp : world) {
        const auto px = project(cam.camera, kp.xyz);
        if (!px || !cam.camera.in_bounds(*px)) continue;
        ++in_frustum;
        if (!visible(kp.xyz, cam.camera, occluders, o.object->id)) continue;
        ++n_visible;
        const Vec2 draw(rng.normal(), rng.normal());
        const bool dropped = rng.uniform() < noise.dropout_prob;
        const Vec2 uv = *px + noise.pixel_sigma * draw;
        lo = lo.cwiseMin(uv);
        hi = hi.cwiseMax(uv);
        if (dropped) continue;
        const double conf =
            noise.pixel_sigma > 0.0
                ? std::clamp(1.0 - draw.norm() / noise.confidence_scale_sigmas, noise.confidence_floor, 1.0)
                : 1.0;
        rec.keypoints.push_back({kp.name, uv, conf, true});
      }
      if (in_frustum > n_visible) blocked = true;
      visible_total += n_visible;
      truth.visible_max = std::max(truth.visible_max, n_visible);
      if (in_frustum == 0) continue;
      if (n_visible > 0) {
        const auto& in = cam.camera.intrinsics();
        lo = lo.cwiseMax(Vec2::Zero());
        hi = hi.cwiseMin(Vec2(in.width, in.height));
        if (lo.x() < hi.x() && lo.y() < hi.y()) rec.bbox = locate::BoundingBox{lo.x(), lo.y(), hi.x(), hi.y()};

        const double noisy_yaw = truth.yaw + noise.yaw_sigma_deg * rng.normal();
        const yaw::YawTarget target = yaw::encode(noisy_yaw, bins);
        yaw::YawPrediction head;
        head.offsets = target.offsets;
        head.scores.resize(target.membership.size());
        for (std::size_t i = 0; i < head.scores.size(); ++i) {
          head.scores[i] = target.membership[i] + noise.yaw_score_sigma * rng.normal();
        }
        rec.yaw_head = std::move(head);
      }
      out.detections.push_back(std::move(rec));
    }

    if (blocked) truth.occlusion = visible_total == 0 ? Occlusion::Full : Occlusion::Partial;
    out.truth.push_back(truth);
  }
  return out;
}

namespace {

std::vector<ObjectState> states_at(const Scene& scene, int frame) {
  std::vector<ObjectState> states;
  for (const auto& obj : scene.objects) {
    const auto it = std::find_if(scene.trajectories.begin(), scene.trajectories.end(),
                                 [&](const Trajectory& t) { return t.object == obj.id; });
    if (it == scene.trajectories.end() || !it->covers(frame)) continue;
    states.push_back({&obj, pose_at_frame(*it, frame, scene.deck.z0)});
  }
  return states;
}

FrameOutput render_frame(const Scene& scene, std::span<const NamedCamera> cameras, int frame) {
  const auto states = states_at(scene, frame);
  return render_detections(frame, states, scene.skeletons, cameras, scene.noise, scene.bins);
}

SimulationOutput concat(std::vector<NamedCamera> cameras, std::vector<FrameOutput>& frames) {
  SimulationOutput out;
  out.cameras = std::move(cameras);
  for (auto& f : frames) {
    std::move(f.detections.begin(), f.detections.end(), std::back_inserter(out.detections));
    std::move(f.truth.begin(), f.truth.end(), std::back_inserter(out.truth));
  }
  return out;
}

}  // namespace

SimulationOutput simulate(const Scene& scene) {
  scene.validate();
  auto cameras = build_panoramic_rig(scene.rig);
  const auto [first, last] = scene.frame_span();
  const int count = std::max(0, last - first + 1);
  std::vector<FrameOutput> frames(static_cast<std::size_t>(count));
  std::vector<std::string> errors(static_cast<std::size_t>(count));

#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < count; ++i) {
    try {
      frames[static_cast<std::size_t>(i)] = render_frame(scene, cameras, first + i);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(ErrorCode::InvalidArgument, e);
  }
  return concat(std::move(cameras), frames);
}

SimulationOutput simulate_reference(const Scene& scene) {
  scene.validate();
  auto cameras = build_panoramic_rig(scene.rig);
  const auto [first, last] = scene.frame_span();
  std::vector<FrameOutput> frames;
  for (int f = first; f <= last; ++f) frames.push_back(render_frame(scene, cameras, f));
  return concat(std::move(cameras), frames);
}

}  // namespace decktrack::scene
