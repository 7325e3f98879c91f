#pragma once

// The two geometric pipelines run over detection records:
//   keypoint-pnp-svd: keypoints -> PnP -> SVD alignment
//   bbox-dlt-yaw:     box center -> deck intersection, yaw from the bin head

#include "decktrack/pose.hpp"
#include "decktrack/records.hpp"
#include "decktrack/scene.hpp"
#include "decktrack/yawcodec.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace decktrack::pipeline {

enum class Kind { KeypointPnpSvd, BboxDltYaw };

std::string_view to_string(Kind k) noexcept;
Kind kind_from_string(std::string_view s);

struct PipelineConfig {
  Kind kind = Kind::KeypointPnpSvd;
  std::string name;  // label in estimates/results; defaults to the kind
  std::map<std::string, pose::SkeletonModel> skeletons;
  std::vector<scene::NamedCamera> cameras;
  yaw::YawBins bins = yaw::default_bins();
  pose::AssetPoseConfig asset;
  bool record_timing = false;

  std::string label() const { return name.empty() ? std::string(to_string(kind)) : name; }
};

// All detections of one object in one frame, one per camera.
struct DetectionGroup {
  int frame = 0;
  std::string object;
  std::vector<const DetectionRecord*> records;
};

// Grouped by (frame, object), sorted by frame then object id; records inside
// a group follow the configured camera order.
std::vector<DetectionGroup> group_detections(std::span<const DetectionRecord> detections,
                                             const std::vector<scene::NamedCamera>& cameras);

// Best single-camera estimate for one group (highest confidence; earlier
// camera on ties), or a missed record carrying the last failure reason.
EstimateRecord estimate_group(const PipelineConfig& config, const DetectionGroup& group);

// OpenMP over groups; output in group order.
std::vector<EstimateRecord> estimate_frames(const PipelineConfig& config, std::span<const DetectionRecord> detections);
// Serial reference; must match estimate_frames() exactly when timing is off.
std::vector<EstimateRecord> estimate_frames_reference(const PipelineConfig& config,
                                                      std::span<const DetectionRecord> detections);

}  // namespace decktrack::pipeline
