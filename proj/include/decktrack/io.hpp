#pragma once

// File formats: camera and skeleton JSON, JSON Lines records, correspondence
// and results CSV. Numbers are written in shortest round-trip form so that a
// re-run produces byte-identical files.

#include "decktrack/calib.hpp"
#include "decktrack/eval.hpp"
#include "decktrack/geom.hpp"
#include "decktrack/pose.hpp"
#include "decktrack/records.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace decktrack::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Throws Io naming the path.
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, std::string_view text);
Json read_json(const fs::path& path);
// Pretty-printed, trailing newline.
void write_json(const fs::path& path, const Json& j);

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s, std::string_view what);

Json camera_to_json(const CameraModel& camera);
CameraModel camera_from_json(const Json& j);
CameraModel read_camera(const fs::path& path);
void write_camera(const fs::path& path, const CameraModel& camera);

Json skeleton_to_json(const pose::SkeletonModel& model);
pose::SkeletonModel skeleton_from_json(const Json& j);
pose::SkeletonModel read_skeleton(const fs::path& path);

Json to_json(const DetectionRecord& r);
Json to_json(const TruthRecord& r);
Json to_json(const EstimateRecord& r);
DetectionRecord detection_from_json(const Json& j);
TruthRecord truth_from_json(const Json& j);
EstimateRecord estimate_from_json(const Json& j);

std::vector<DetectionRecord> read_detections(const fs::path& path);
std::vector<TruthRecord> read_truth(const fs::path& path);
std::vector<EstimateRecord> read_estimates(const fs::path& path);

// One compact JSON object per line.
template <class Record>
std::string to_jsonl(std::span<const Record> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

// Header `name,X,Y,Z,u,v`.
std::vector<calib::Correspondence> parse_correspondences(std::string_view csv, std::string_view source = "csv");
std::vector<calib::Correspondence> read_correspondences(const fs::path& path);

inline constexpr std::string_view kResultsHeader =
    "frame,object,pipeline,x_true,y_true,yaw_true,x_est,y_est,yaw_est,conf,dist_err_m,ang_err_deg,time_ms,in_spec,"
    "missed";

// Estimate and error columns are empty for missed records; time_ms is empty
// when untimed.
std::string results_csv(std::span<const eval::EvalRecord> records);
std::vector<eval::EvalRecord> parse_results_csv(std::string_view csv, std::string_view source = "csv");
std::vector<eval::EvalRecord> read_results(const fs::path& path);

}  // namespace decktrack::io
