#include "decktrack/config.hpp"

#include "decktrack/error.hpp"

namespace decktrack::config {

namespace {

template <class F>
auto parsing(std::string_view what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

const Json& section(const Json& j, const char* key) {
  static const Json empty = Json::object();
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return empty;
  if (!it->is_object()) throw Error(ErrorCode::Parse, std::string("'") + key + "' must be an object");
  return *it;
}

Vec3 vec3(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Parse, std::string(what) + " must hold 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json vec3_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

std::string path_string(const fs::path& p, const std::optional<fs::path>& relative_to) {
  return (relative_to ? p.lexically_relative(*relative_to) : p).generic_string();
}

}  // namespace

fs::path resolve(const fs::path& p, const fs::path& base_dir) {
  const fs::path joined = p.is_absolute() ? p : base_dir / p;
  return fs::absolute(joined).lexically_normal();
}

Json bins_to_json(const yaw::YawBins& bins) { return Json{{"n", bins.n}, {"half_width", bins.half_width}}; }

yaw::YawBins bins_from_json(const Json& j) {
  const auto d = yaw::default_bins();
  return yaw::make_bins(j.value("n", d.n), j.value("half_width", d.half_width));
}

Json spec_to_json(const eval::SpecThresholds& spec) {
  return Json{{"max_distance_m", spec.max_distance_m}, {"max_angle_deg", spec.max_angle_deg}};
}

eval::SpecThresholds spec_from_json(const Json& j) {
  eval::SpecThresholds s;
  s.max_distance_m = j.value("max_distance_m", s.max_distance_m);
  s.max_angle_deg = j.value("max_angle_deg", s.max_angle_deg);
  s.validate();
  return s;
}

SceneFile scene_from_json(const Json& j, const fs::path& base_dir) {
  return parsing("scene config", [&] {
    SceneFile out;
    auto& sc = out.scene;

    const Json& rig = section(j, "rig");
    auto& rc = sc.rig;
    if (rig.contains("mount")) rc.mount = vec3(rig["mount"], "rig.mount");
    rc.heading_deg = rig.value("heading_deg", rc.heading_deg);
    if (rig.contains("yaw_offsets_deg")) rc.yaw_offsets_deg = rig["yaw_offsets_deg"].get<std::vector<double>>();
    rc.pitch_deg = rig.value("pitch_deg", rc.pitch_deg);
    const Json& in = section(rig, "intrinsics");
    rc.intrinsics.fx = in.value("fx", rc.intrinsics.fx);
    rc.intrinsics.fy = in.value("fy", rc.intrinsics.fy);
    rc.intrinsics.cx = in.value("cx", rc.intrinsics.cx);
    rc.intrinsics.cy = in.value("cy", rc.intrinsics.cy);
    rc.intrinsics.width = in.value("width", rc.intrinsics.width);
    rc.intrinsics.height = in.value("height", rc.intrinsics.height);

    const Json& deck = section(j, "deck");
    sc.deck.z0 = deck.value("z0", sc.deck.z0);
    sc.deck.length = deck.value("length", sc.deck.length);
    sc.deck.width = deck.value("width", sc.deck.width);

    for (const auto& o : j.at("objects")) {
      scene::SceneObject obj;
      obj.id = o.at("id").get<std::string>();
      obj.cls = o.at("class").get<std::string>();
      if (o.contains("occluder")) {
        const Vec3 e = vec3(o["occluder"], "occluder");
        obj.occluder = {e.x(), e.y(), e.z()};
      }
      const fs::path file = resolve(o.at("skeleton").get<std::string>(), base_dir);
      const auto [it, inserted] = out.skeleton_files.emplace(obj.cls, file);
      if (!inserted && it->second != file) {
        throw Error(ErrorCode::InvalidArgument, "class " + obj.cls + " refers to two different skeleton files");
      }
      if (inserted) sc.skeletons.emplace(obj.cls, io::read_skeleton(file));
      sc.objects.push_back(std::move(obj));
    }

    for (const auto& t : j.at("trajectories")) {
      scene::Trajectory traj;
      traj.object = t.at("object").get<std::string>();
      for (const auto& k : t.at("keyframes")) {
        if (!k.is_array() || k.size() != 4) throw Error(ErrorCode::Parse, "keyframe must be [frame, x, y, yaw_deg]");
        traj.keyframes.push_back({k[0].get<int>(), k[1].get<double>(), k[2].get<double>(), k[3].get<double>()});
      }
      sc.trajectories.push_back(std::move(traj));
    }

    const Json& noise = section(j, "noise");
    auto& nc = sc.noise;
    nc.pixel_sigma = noise.value("pixel_sigma", nc.pixel_sigma);
    nc.dropout_prob = noise.value("dropout_prob", nc.dropout_prob);
    nc.confidence_floor = noise.value("confidence_floor", nc.confidence_floor);
    nc.confidence_scale_sigmas = noise.value("confidence_scale_sigmas", nc.confidence_scale_sigmas);
    nc.yaw_sigma_deg = noise.value("yaw_sigma_deg", nc.yaw_sigma_deg);
    nc.yaw_score_sigma = noise.value("yaw_score_sigma", nc.yaw_score_sigma);
    nc.seed = j.value("seed", nc.seed);

    sc.bins = bins_from_json(section(j, "yaw_bins"));
    const Json& frames = section(j, "frames");
    if (frames.contains("first")) sc.first_frame = frames["first"].get<int>();
    if (frames.contains("last")) sc.last_frame = frames["last"].get<int>();

    sc.validate();
    return out;
  });
}

SceneFile read_scene(const fs::path& path) {
  const fs::path abs = resolve(path, fs::current_path());
  try {
    return scene_from_json(io::read_json(abs), abs.parent_path());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), abs.string() + ": " + e.what());
  }
}

Json scene_to_json(const SceneFile& s) {
  const auto& sc = s.scene;
  const auto& in = sc.rig.intrinsics;
  Json j;
  j["rig"] = Json{{"mount", vec3_json(sc.rig.mount)},
                  {"heading_deg", sc.rig.heading_deg},
                  {"yaw_offsets_deg", sc.rig.yaw_offsets_deg},
                  {"pitch_deg", sc.rig.pitch_deg},
                  {"intrinsics",
                   Json{{"fx", in.fx}, {"fy", in.fy}, {"cx", in.cx}, {"cy", in.cy}, {"width", in.width},
                        {"height", in.height}}}};
  j["deck"] = Json{{"z0", sc.deck.z0}, {"length", sc.deck.length}, {"width", sc.deck.width}};
  Json objects = Json::array();
  for (const auto& o : sc.objects) {
    objects.push_back(Json{{"id", o.id},
                           {"class", o.cls},
                           {"skeleton", s.skeleton_files.at(o.cls).generic_string()},
                           {"occluder", Json::array({o.occluder.length, o.occluder.width, o.occluder.height})}});
  }
  j["objects"] = std::move(objects);
  Json trajs = Json::array();
  for (const auto& t : sc.trajectories) {
    Json keys = Json::array();
    for (const auto& k : t.keyframes) keys.push_back(Json::array({k.frame, k.x, k.y, k.yaw_deg}));
    trajs.push_back(Json{{"object", t.object}, {"keyframes", std::move(keys)}});
  }
  j["trajectories"] = std::move(trajs);
  const auto& nc = sc.noise;
  j["noise"] = Json{{"pixel_sigma", nc.pixel_sigma},
                    {"dropout_prob", nc.dropout_prob},
                    {"confidence_floor", nc.confidence_floor},
                    {"confidence_scale_sigmas", nc.confidence_scale_sigmas},
                    {"yaw_sigma_deg", nc.yaw_sigma_deg},
                    {"yaw_score_sigma", nc.yaw_score_sigma}};
  j["seed"] = nc.seed;
  j["yaw_bins"] = bins_to_json(sc.bins);
  const auto [first, last] = sc.frame_span();
  j["frames"] = Json{{"first", first}, {"last", last}};
  return j;
}

PipelineFile pipeline_from_json(const Json& j, const fs::path& base_dir) {
  return parsing("pipeline config", [&] {
    PipelineFile out;
    auto& pc = out.config;
    pc.kind = pipeline::kind_from_string(j.value("kind", std::string(pipeline::to_string(pc.kind))));
    pc.name = j.value("name", std::string());

    for (const auto& [cls, file] : section(j, "skeletons").items()) {
      const fs::path path = resolve(file.get<std::string>(), base_dir);
      auto model = io::read_skeleton(path);
      if (model.class_name() != cls) {
        throw Error(ErrorCode::InvalidArgument,
                    path.string() + ": skeleton class '" + model.class_name() + "' listed under '" + cls + "'");
      }
      pc.skeletons.emplace(cls, std::move(model));
      out.skeleton_files.emplace(cls, path);
    }
    if (pc.kind == pipeline::Kind::KeypointPnpSvd && pc.skeletons.empty()) {
      throw Error(ErrorCode::InvalidArgument, "keypoint-pnp-svd needs at least one skeleton");
    }

    const auto cams = j.find("cameras");
    if (cams == j.end() || !cams->is_array() || cams->empty()) {
      throw Error(ErrorCode::InvalidArgument, "pipeline config needs a non-empty 'cameras' list");
    }
    for (const auto& c : *cams) {
      const fs::path path = resolve(c.at("file").get<std::string>(), base_dir);
      const std::string name = c.at("name").get<std::string>();
      for (const auto& existing : pc.cameras) {
        if (existing.name == name) throw Error(ErrorCode::InvalidArgument, "duplicate camera name " + name);
      }
      pc.cameras.push_back({name, io::read_camera(path)});
      out.camera_files.push_back(path);
    }

    pc.bins = bins_from_json(section(j, "yaw_bins"));
    out.spec = spec_from_json(section(j, "spec"));
    auto& a = pc.asset;
    a.align_with_scale = j.value("align_with_scale", a.align_with_scale);
    a.weighted_alignment = j.value("weighted_alignment", a.weighted_alignment);
    a.confidence_rho_px = j.value("confidence_rho_px", a.confidence_rho_px);
    if (!(a.confidence_rho_px > 0.0)) throw Error(ErrorCode::InvalidArgument, "confidence_rho_px must be positive");
    if (const auto it = j.find("max_deck_offset_m"); it != j.end()) {
      a.max_deck_offset_m = it->is_null() ? std::nullopt : std::optional<double>(it->get<double>());
    }
    a.pnp.deck.z0 = j.value("deck_z0", a.pnp.deck.z0);
    const Json& pnp = section(j, "pnp");
    a.pnp.max_iterations = pnp.value("max_iterations", a.pnp.max_iterations);
    a.pnp.step_tolerance = pnp.value("step_tolerance", a.pnp.step_tolerance);
    a.pnp.yaw_grid_samples = pnp.value("yaw_grid_samples", a.pnp.yaw_grid_samples);
    if (a.pnp.max_iterations < 1 || a.pnp.yaw_grid_samples < 1 || !(a.pnp.step_tolerance > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "invalid pnp options");
    }
    pc.record_timing = j.value("timing", pc.record_timing);
    out.seed = j.value("seed", out.seed);
    if (const auto it = j.find("detections"); it != j.end() && !it->is_null()) {
      out.detections = resolve(it->get<std::string>(), base_dir);
    }
    return out;
  });
}

PipelineFile read_pipeline(const fs::path& path) {
  const fs::path abs = resolve(path, fs::current_path());
  try {
    return pipeline_from_json(io::read_json(abs), abs.parent_path());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), abs.string() + ": " + e.what());
  }
}

Json pipeline_to_json(const PipelineFile& p, const std::optional<fs::path>& relative_to) {
  const auto& pc = p.config;
  const auto& a = pc.asset;
  Json j;
  j["kind"] = std::string(pipeline::to_string(pc.kind));
  j["name"] = pc.name;
  Json skeletons = Json::object();
  for (const auto& [cls, file] : p.skeleton_files) skeletons[cls] = path_string(file, relative_to);
  j["skeletons"] = std::move(skeletons);
  Json cams = Json::array();
  for (std::size_t i = 0; i < pc.cameras.size(); ++i) {
    cams.push_back(Json{{"name", pc.cameras[i].name}, {"file", path_string(p.camera_files.at(i), relative_to)}});
  }
  j["cameras"] = std::move(cams);
  j["yaw_bins"] = bins_to_json(pc.bins);
  j["spec"] = spec_to_json(p.spec);
  j["align_with_scale"] = a.align_with_scale;
  j["weighted_alignment"] = a.weighted_alignment;
  j["confidence_rho_px"] = a.confidence_rho_px;
  j["max_deck_offset_m"] = a.max_deck_offset_m ? Json(*a.max_deck_offset_m) : Json(nullptr);
  j["deck_z0"] = a.pnp.deck.z0;
  j["pnp"] = Json{{"max_iterations", a.pnp.max_iterations},
                  {"step_tolerance", a.pnp.step_tolerance},
                  {"yaw_grid_samples", a.pnp.yaw_grid_samples}};
  j["timing"] = pc.record_timing;
  j["seed"] = p.seed;
  if (p.detections) j["detections"] = path_string(*p.detections, relative_to);
  return j;
}

}  // namespace decktrack::config
