#include "decktrack/io.hpp"

#include "decktrack/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace decktrack {

std::string_view to_string(Occlusion o) noexcept {
  switch (o) {
    case Occlusion::None: return "none";
    case Occlusion::Partial: return "partial";
    case Occlusion::Full: return "full";
  }
  return "none";
}

Occlusion occlusion_from_string(std::string_view s) {
  if (s == "none") return Occlusion::None;
  if (s == "partial") return Occlusion::Partial;
  if (s == "full") return Occlusion::Full;
  throw Error(ErrorCode::Parse, "unknown occlusion state '" + std::string(s) + "'");
}

}  // namespace decktrack

namespace decktrack::io {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::Parse, std::string(what) + ": not an integer '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s, std::string_view what) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw Error(ErrorCode::Parse, std::string(what) + ": not a boolean '" + std::string(s) + "'");
}

// Wraps nlohmann's exceptions so that callers see one error type.
template <class F>
auto parsing(std::string_view what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

Json vec_json(const Vec2& v) { return Json::array({v.x(), v.y()}); }
Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec2 vec2_from(const Json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::Parse, std::string(what) + " must be [u, v]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 vec3_from(const Json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Parse, std::string(what) + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <class Record, class F>
std::vector<Record> read_jsonl(const fs::path& path, F&& from_json) {
  const std::string text = read_text(path);
  std::vector<Record> out;
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    out.push_back(parsing(where, [&] { return from_json(Json::parse(line)); }));
  }
  return out;
}

std::string opt_field(bool present, double v) { return present ? format_double(v) : std::string(); }

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

Json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  return parsing(path.string(), [&] { return Json::parse(text); });
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format number");
  return {buf, ptr};
}

double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::Parse, std::string(what) + ": not a number '" + std::string(s) + "'");
  }
  return v;
}

Json camera_to_json(const CameraModel& camera) {
  const auto& in = camera.intrinsics();
  const Mat3& r = camera.rotation().matrix();
  Json rj = Json::array();
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) rj.push_back(r(i, k));
  }
  Json j;
  j["fx"] = in.fx;
  j["fy"] = in.fy;
  j["cx"] = in.cx;
  j["cy"] = in.cy;
  j["width"] = in.width;
  j["height"] = in.height;
  j["R"] = std::move(rj);
  j["t"] = vec_json(camera.translation());
  return j;
}

CameraModel camera_from_json(const Json& j) {
  return parsing("camera", [&] {
    Intrinsics in{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                  j.at("cy").get<double>(),  j.at("width").get<int>(), j.at("height").get<int>()};
    const Json& rj = j.at("R");
    if (!rj.is_array() || rj.size() != 9) throw Error(ErrorCode::Parse, "camera R must hold 9 numbers");
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) r(i, k) = rj[static_cast<std::size_t>(3 * i + k)].get<double>();
    }
    return CameraModel(in, Rotation::from_matrix(r), vec3_from(j.at("t"), "camera t"));
  });
}

CameraModel read_camera(const fs::path& path) {
  try {
    return camera_from_json(read_json(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_camera(const fs::path& path, const CameraModel& camera) { write_json(path, camera_to_json(camera)); }

Json skeleton_to_json(const pose::SkeletonModel& model) {
  Json kps = Json::array();
  for (const auto& kp : model.keypoints()) kps.push_back(Json{{"name", kp.name}, {"xyz", vec_json(kp.xyz)}});
  Json j;
  j["class"] = model.class_name();
  j["keypoints"] = std::move(kps);
  return j;
}

pose::SkeletonModel skeleton_from_json(const Json& j) {
  return parsing("skeleton", [&] {
    std::vector<pose::NamedPoint> pts;
    for (const auto& kp : j.at("keypoints")) {
      pts.push_back({kp.at("name").get<std::string>(), vec3_from(kp.at("xyz"), "keypoint xyz")});
    }
    return pose::SkeletonModel(j.at("class").get<std::string>(), std::move(pts));
  });
}

pose::SkeletonModel read_skeleton(const fs::path& path) {
  try {
    return skeleton_from_json(read_json(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Json to_json(const DetectionRecord& r) {
  Json kps = Json::array();
  for (const auto& kp : r.keypoints) {
    kps.push_back(Json{{"name", kp.name}, {"uv", vec_json(kp.uv)}, {"conf", kp.conf}, {"visible", kp.visible}});
  }
  Json j;
  j["frame"] = r.frame;
  j["camera"] = r.camera;
  j["object"] = r.object;
  j["class"] = r.cls;
  j["keypoints"] = std::move(kps);
  if (r.bbox) j["bbox"] = Json::array({r.bbox->u_min, r.bbox->v_min, r.bbox->u_max, r.bbox->v_max});
  if (r.yaw_head) j["yaw_head"] = Json{{"scores", r.yaw_head->scores}, {"offsets", r.yaw_head->offsets}};
  return j;
}

DetectionRecord detection_from_json(const Json& j) {
  DetectionRecord r;
  r.frame = j.at("frame").get<int>();
  r.camera = j.at("camera").get<std::string>();
  r.object = j.at("object").get<std::string>();
  r.cls = j.at("class").get<std::string>();
  for (const auto& kp : j.at("keypoints")) {
    KeypointDetection d;
    d.name = kp.at("name").get<std::string>();
    d.uv = vec2_from(kp.at("uv"), "keypoint uv");
    d.conf = kp.value("conf", 1.0);
    d.visible = kp.value("visible", true);
    require_finite(d.uv, "keypoint uv");
    r.keypoints.push_back(std::move(d));
  }
  if (const auto it = j.find("bbox"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 4) throw Error(ErrorCode::Parse, "bbox must hold 4 numbers");
    locate::BoundingBox b{(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>(),
                          (*it)[3].get<double>()};
    b.validate();
    r.bbox = b;
  }
  if (const auto it = j.find("yaw_head"); it != j.end() && !it->is_null()) {
    yaw::YawPrediction head;
    head.scores = it->at("scores").get<std::vector<double>>();
    head.offsets = it->at("offsets").get<std::vector<double>>();
    r.yaw_head = std::move(head);
  }
  return r;
}

Json to_json(const TruthRecord& r) {
  Json j;
  j["frame"] = r.frame;
  j["object"] = r.object;
  j["x"] = r.x;
  j["y"] = r.y;
  j["yaw"] = r.yaw;
  j["occlusion"] = std::string(to_string(r.occlusion));
  j["visible_max"] = r.visible_max;
  return j;
}

TruthRecord truth_from_json(const Json& j) {
  TruthRecord r;
  r.frame = j.at("frame").get<int>();
  r.object = j.at("object").get<std::string>();
  r.x = j.at("x").get<double>();
  r.y = j.at("y").get<double>();
  r.yaw = j.at("yaw").get<double>();
  r.occlusion = occlusion_from_string(j.value("occlusion", std::string("none")));
  r.visible_max = j.value("visible_max", 0);
  return r;
}

Json to_json(const EstimateRecord& r) {
  Json j;
  j["frame"] = r.frame;
  j["object"] = r.object;
  j["class"] = r.cls;
  j["pipeline"] = r.pipeline;
  j["missed"] = r.missed;
  if (r.missed) {
    j["reason"] = r.reason;
  } else {
    j["camera"] = r.camera;
    j["x"] = r.x;
    j["y"] = r.y;
    j["yaw"] = r.yaw;
    j["conf"] = r.conf;
  }
  if (r.time_ms) j["time_ms"] = *r.time_ms;
  return j;
}

EstimateRecord estimate_from_json(const Json& j) {
  EstimateRecord r;
  r.frame = j.at("frame").get<int>();
  r.object = j.at("object").get<std::string>();
  r.cls = j.value("class", std::string());
  r.pipeline = j.at("pipeline").get<std::string>();
  r.missed = j.value("missed", false);
  if (r.missed) {
    r.reason = j.value("reason", std::string());
  } else {
    r.camera = j.value("camera", std::string());
    r.x = j.at("x").get<double>();
    r.y = j.at("y").get<double>();
    r.yaw = j.at("yaw").get<double>();
    r.conf = j.value("conf", 0.0);
  }
  if (const auto it = j.find("time_ms"); it != j.end() && !it->is_null()) r.time_ms = it->get<double>();
  return r;
}

std::vector<DetectionRecord> read_detections(const fs::path& path) {
  return read_jsonl<DetectionRecord>(path, detection_from_json);
}

std::vector<TruthRecord> read_truth(const fs::path& path) { return read_jsonl<TruthRecord>(path, truth_from_json); }

std::vector<EstimateRecord> read_estimates(const fs::path& path) {
  return read_jsonl<EstimateRecord>(path, estimate_from_json);
}

std::vector<calib::Correspondence> parse_correspondences(std::string_view csv, std::string_view source) {
  const auto rows = lines(csv);
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, std::string(source) + ": empty correspondence file");
  if (rows.front() != "name,X,Y,Z,u,v") {
    throw Error(ErrorCode::Parse, std::string(source) + ": expected header name,X,Y,Z,u,v");
  }
  std::vector<calib::Correspondence> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cols = split(rows[i], ',');
    const std::string where = std::string(source) + ":" + std::to_string(i + 1);
    if (cols.size() != 6) throw Error(ErrorCode::Parse, where + ": expected 6 columns");
    calib::Correspondence c;
    c.name = std::string(trim(cols[0]));
    c.world = {parse_double(cols[1], where), parse_double(cols[2], where), parse_double(cols[3], where)};
    c.pixel = {parse_double(cols[4], where), parse_double(cols[5], where)};
    require_finite(c.world, where);
    require_finite(c.pixel, where);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<calib::Correspondence> read_correspondences(const fs::path& path) {
  return parse_correspondences(read_text(path), path.string());
}

std::string results_csv(std::span<const eval::EvalRecord> records) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : records) {
    const bool est = !r.missed;
    out += std::to_string(r.frame) + ',' + r.object + ',' + r.pipeline + ',' + format_double(r.x_true) + ',' +
           format_double(r.y_true) + ',' + format_double(r.yaw_true) + ',' + opt_field(est, r.x_est) + ',' +
           opt_field(est, r.y_est) + ',' + opt_field(est, r.yaw_est) + ',' + opt_field(est, r.conf) + ',' +
           opt_field(est, r.dist_err_m) + ',' + opt_field(est, r.ang_err_deg) + ',' +
           opt_field(r.time_ms.has_value(), r.time_ms.value_or(0.0)) + ',' + (r.in_spec ? "1" : "0") + ',' +
           (r.missed ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<eval::EvalRecord> parse_results_csv(std::string_view csv, std::string_view source) {
  const auto rows = lines(csv);
  if (rows.empty() || rows.front() != kResultsHeader) {
    throw Error(ErrorCode::Parse, std::string(source) + ": missing results header");
  }
  std::vector<eval::EvalRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto c = split(rows[i], ',');
    const std::string where = std::string(source) + ":" + std::to_string(i + 1);
    if (c.size() != 15) throw Error(ErrorCode::Parse, where + ": expected 15 columns");
    eval::EvalRecord r;
    r.frame = parse_int(c[0], where);
    r.object = std::string(c[1]);
    r.pipeline = std::string(c[2]);
    r.x_true = parse_double(c[3], where);
    r.y_true = parse_double(c[4], where);
    r.yaw_true = parse_double(c[5], where);
    r.missed = parse_bool(c[14], where);
    r.in_spec = parse_bool(c[13], where);
    if (!r.missed) {
      r.x_est = parse_double(c[6], where);
      r.y_est = parse_double(c[7], where);
      r.yaw_est = parse_double(c[8], where);
      r.conf = parse_double(c[9], where);
      r.dist_err_m = parse_double(c[10], where);
      r.ang_err_deg = parse_double(c[11], where);
    }
    if (!trim(c[12]).empty()) r.time_ms = parse_double(c[12], where);
    if (r.missed && r.in_spec) throw Error(ErrorCode::Parse, where + ": a missed record cannot be in spec");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<eval::EvalRecord> read_results(const fs::path& path) {
  return parse_results_csv(read_text(path), path.string());
}

}  // namespace decktrack::io
