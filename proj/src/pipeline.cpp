#include "decktrack/pipeline.hpp"

#include "decktrack/error.hpp"
#include "decktrack/locate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace decktrack::pipeline {

std::string_view to_string(Kind k) noexcept {
  switch (k) {
    case Kind::KeypointPnpSvd: return "keypoint-pnp-svd";
    case Kind::BboxDltYaw: return "bbox-dlt-yaw";
  }
  return "unknown";
}

Kind kind_from_string(std::string_view s) {
  if (s == "keypoint-pnp-svd") return Kind::KeypointPnpSvd;
  if (s == "bbox-dlt-yaw") return Kind::BboxDltYaw;
  throw Error(ErrorCode::InvalidArgument, "unknown pipeline kind '" + std::string(s) + "'");
}

namespace {

std::size_t camera_index(const std::vector<scene::NamedCamera>& cameras, const std::string& name) {
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    if (cameras[i].name == name) return i;
  }
  throw Error(ErrorCode::InvalidArgument, "detection references unknown camera '" + name + "'");
}

struct Candidate {
  double x, y, yaw, conf;
};

Candidate keypoint_candidate(const PipelineConfig& config, const DetectionRecord& rec, const CameraModel& camera) {
  const auto it = config.skeletons.find(rec.cls);
  if (it == config.skeletons.end()) throw Error(ErrorCode::NoEstimate, "no skeleton for class " + rec.cls);
  std::vector<pose::KeypointObservation> obs;
  obs.reserve(rec.keypoints.size());
  for (const auto& kp : rec.keypoints) {
    if (kp.visible) obs.push_back({kp.name, kp.uv, kp.conf});
  }
  const auto est = pose::estimate_asset_pose(it->second, obs, camera, config.asset);
  return {est.x, est.y, est.yaw_deg, est.confidence};
}

Candidate bbox_candidate(const PipelineConfig& config, const DetectionRecord& rec, const CameraModel& camera) {
  if (!rec.bbox) throw Error(ErrorCode::NoEstimate, "detection has no bounding box");
  if (!rec.yaw_head) throw Error(ErrorCode::NoEstimate, "detection has no yaw head output");
  const auto xy = locate::locate_bbox_center(camera, *rec.bbox, config.asset.pnp.deck);
  const auto& head = *rec.yaw_head;
  const double yaw_deg = yaw::decode(head, config.bins);
  const double mx = *std::max_element(head.scores.begin(), head.scores.end());
  double z = 0.0;
  for (double s : head.scores) z += std::exp(s - mx);
  return {xy.x(), xy.y(), yaw_deg, 1.0 / z};
}

}  // namespace

std::vector<DetectionGroup> group_detections(std::span<const DetectionRecord> detections,
                                             const std::vector<scene::NamedCamera>& cameras) {
  std::map<std::pair<int, std::string>, DetectionGroup> groups;
  for (const auto& rec : detections) {
    camera_index(cameras, rec.camera);
    auto& g = groups[{rec.frame, rec.object}];
    g.frame = rec.frame;
    g.object = rec.object;
    g.records.push_back(&rec);
  }
  std::vector<DetectionGroup> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) {
    std::stable_sort(g.records.begin(), g.records.end(), [&](const DetectionRecord* a, const DetectionRecord* b) {
      return camera_index(cameras, a->camera) < camera_index(cameras, b->camera);
    });
    out.push_back(std::move(g));
  }
  return out;
}

EstimateRecord estimate_group(const PipelineConfig& config, const DetectionGroup& group) {
  const auto t0 = std::chrono::steady_clock::now();
  EstimateRecord out;
  out.frame = group.frame;
  out.object = group.object;
  out.pipeline = config.label();
  out.missed = true;
  if (!group.records.empty()) out.cls = group.records.front()->cls;

  double best_conf = -1.0;
  for (const DetectionRecord* rec : group.records) {
    const auto& camera = config.cameras[camera_index(config.cameras, rec->camera)].camera;
    try {
      const Candidate c = config.kind == Kind::KeypointPnpSvd ? keypoint_candidate(config, *rec, camera)
                                                             : bbox_candidate(config, *rec, camera);
      if (c.conf > best_conf) {
        best_conf = c.conf;
        out.missed = false;
        out.reason.clear();
        out.camera = rec->camera;
        out.x = c.x;
        out.y = c.y;
        out.yaw = c.yaw;
        out.conf = c.conf;
      }
    } catch (const Error& e) {
      if (out.missed) out.reason = std::string(rec->camera) + ": " + e.what();
    }
  }
  if (config.record_timing) {
    out.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

std::vector<EstimateRecord> estimate_frames(const PipelineConfig& config, std::span<const DetectionRecord> detections) {
  const auto groups = group_detections(detections, config.cameras);
  const int count = static_cast<int>(groups.size());
  std::vector<EstimateRecord> out(groups.size());
  std::vector<std::string> errors(groups.size());

#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      out[idx] = estimate_group(config, groups[idx]);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(ErrorCode::InvalidArgument, e);
  }
  return out;
}

std::vector<EstimateRecord> estimate_frames_reference(const PipelineConfig& config,
                                                      std::span<const DetectionRecord> detections) {
  std::vector<EstimateRecord> out;
  for (const auto& g : group_detections(detections, config.cameras)) out.push_back(estimate_group(config, g));
  return out;
}

}  // namespace decktrack::pipeline
