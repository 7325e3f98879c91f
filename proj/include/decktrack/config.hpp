#pragma once

// Scene and pipeline configuration files. Parsing fills every default;
// the *_to_json functions write the fully resolved ("effective") form, which
// parses back to the same configuration.

#include "decktrack/eval.hpp"
#include "decktrack/io.hpp"
#include "decktrack/pipeline.hpp"
#include "decktrack/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace decktrack::config {

using io::Json;
namespace fs = std::filesystem;

struct SceneFile {
  scene::Scene scene;
  std::map<std::string, fs::path> skeleton_files;  // by class, absolute
};

// Relative skeleton paths resolve against base_dir.
SceneFile scene_from_json(const Json& j, const fs::path& base_dir);
SceneFile read_scene(const fs::path& path);
Json scene_to_json(const SceneFile& s);

struct PipelineFile {
  pipeline::PipelineConfig config;
  std::map<std::string, fs::path> skeleton_files;  // by class
  std::vector<fs::path> camera_files;              // parallel to config.cameras
  eval::SpecThresholds spec;
  std::uint64_t seed = 0;
  std::optional<fs::path> detections;
};

PipelineFile pipeline_from_json(const Json& j, const fs::path& base_dir);
PipelineFile read_pipeline(const fs::path& path);
// Paths are written relative to `relative_to` when given, absolute otherwise.
Json pipeline_to_json(const PipelineFile& p, const std::optional<fs::path>& relative_to = std::nullopt);

Json bins_to_json(const yaw::YawBins& bins);
yaw::YawBins bins_from_json(const Json& j);
Json spec_to_json(const eval::SpecThresholds& spec);
eval::SpecThresholds spec_from_json(const Json& j);

// Absolute, lexically normalized.
fs::path resolve(const fs::path& p, const fs::path& base_dir);

}  // namespace decktrack::config
