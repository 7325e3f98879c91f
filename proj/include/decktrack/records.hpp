#pragma once

// Interchange records: detection oracle output, ground truth and pipeline
// estimates. Serialized as JSON Lines by io.hpp.

#include "decktrack/geom.hpp"
#include "decktrack/locate.hpp"
#include "decktrack/yawcodec.hpp"

#include <optional>
#include <string>
#include <vector>

namespace decktrack {

struct KeypointDetection {
  std::string name;
  Vec2 uv = Vec2::Zero();
  double conf = 1.0;
  bool visible = true;
};

struct DetectionRecord {
  int frame = 0;
  std::string camera;
  std::string object;
  std::string cls;
  std::vector<KeypointDetection> keypoints;
  std::optional<locate::BoundingBox> bbox;
  std::optional<yaw::YawPrediction> yaw_head;
};

enum class Occlusion { None, Partial, Full };

std::string_view to_string(Occlusion o) noexcept;
Occlusion occlusion_from_string(std::string_view s);

struct TruthRecord {
  int frame = 0;
  std::string object;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // degrees
  Occlusion occlusion = Occlusion::None;
  int visible_max = 0;  // most keypoints visible in any single camera
};

struct EstimateRecord {
  int frame = 0;
  std::string object;
  std::string cls;
  std::string pipeline;
  bool missed = false;
  std::string camera;  // camera whose estimate was kept
  std::string reason;  // why no estimate, when missed
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // degrees, [0, 360)
  double conf = 0.0;
  std::optional<double> time_ms;
};

}  // namespace decktrack
