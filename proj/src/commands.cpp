#include "decktrack/commands.hpp"

#include "decktrack/calib.hpp"
#include "decktrack/config.hpp"
#include "decktrack/error.hpp"
#include "decktrack/eval.hpp"
#include "decktrack/io.hpp"
#include "decktrack/pipeline.hpp"
#include "decktrack/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>

namespace decktrack::cli {

using config::Json;
using config::resolve;

namespace {

constexpr const char* kEffective = "effective-config.json";

fs::path require_input(const fs::path& p) {
  const fs::path abs = resolve(p, fs::current_path());
  if (!fs::exists(abs)) throw Error(ErrorCode::Io, "input not found: '" + p.string() + "'");
  return abs;
}

Json load_config(const Options& opt, fs::path& base_dir) {
  base_dir = fs::current_path();
  if (!opt.config) return Json::object();
  const fs::path abs = require_input(*opt.config);
  base_dir = abs.parent_path();
  Json j = io::read_json(abs);
  if (!j.is_object()) throw Error(ErrorCode::Parse, abs.string() + ": config must be a JSON object");
  return j;
}

fs::path config_path(const Json& j, const char* key, const fs::path& base_dir) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return resolve(it->get<std::string>(), base_dir);
}

eval::SpecThresholds apply_spec_flags(eval::SpecThresholds spec, const Options& opt) {
  if (opt.spec_dist) spec.max_distance_m = *opt.spec_dist;
  if (opt.spec_angle) spec.max_angle_deg = *opt.spec_angle;
  spec.validate();
  return spec;
}

std::string fmt(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace

void run_calibrate(const Options& opt, std::ostream& log) {
  fs::path base;
  const Json cfg = load_config(opt, base);
  fs::path csv = config_path(cfg, "correspondences", base);
  if (!opt.inputs.empty()) csv = opt.inputs.front();
  if (csv.empty()) throw Error(ErrorCode::InvalidArgument, "calibrate needs a correspondence CSV");
  csv = require_input(csv);

  const int width = opt.width.value_or(cfg.value("width", 0));
  const int height = opt.height.value_or(cfg.value("height", 0));
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "calibrate needs --width and --height");
  calib::DltOptions dlt;
  dlt.normalize = cfg.value("normalize", dlt.normalize);
  dlt.degenerate_ratio = cfg.value("degenerate_ratio", dlt.degenerate_ratio);

  const auto points = io::read_correspondences(csv);
  const auto p = calib::estimate_projection_dlt(points, dlt);
  const double rmse = calib::reprojection_rmse(p, points);
  const auto camera = calib::to_camera_model(calib::decompose_projection(p), width, height);

  io::write_camera(opt.out / "camera.json", camera);
  Json pj = Json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) pj.push_back(p.matrix()(r, c));
  }
  Json report;
  report["points"] = points.size();
  report["rmse_px"] = rmse;
  report["P"] = std::move(pj);
  io::write_json(opt.out / "calibration.json", report);

  Json eff;
  eff["correspondences"] = csv.generic_string();
  eff["width"] = width;
  eff["height"] = height;
  eff["normalize"] = dlt.normalize;
  eff["degenerate_ratio"] = dlt.degenerate_ratio;
  io::write_json(opt.out / kEffective, eff);
  log << "calibrated from " << points.size() << " points, reprojection RMSE " << fmt(rmse, 6) << " px\n";
}

void run_simulate(const Options& opt, std::ostream& log) {
  if (!opt.config) throw Error(ErrorCode::InvalidArgument, "simulate needs --config scene.json");
  auto file = config::read_scene(require_input(*opt.config));
  if (opt.seed) file.scene.noise.seed = *opt.seed;
  const auto kind = pipeline::kind_from_string(opt.pipeline.value_or("keypoint-pnp-svd"));

  const auto sim = scene::simulate(file.scene);
  io::write_text(opt.out / "detections.jsonl", io::to_jsonl<DetectionRecord>(sim.detections));
  io::write_text(opt.out / "truth.jsonl", io::to_jsonl<TruthRecord>(sim.truth));

  config::PipelineFile pf;
  pf.config.kind = kind;
  pf.config.bins = file.scene.bins;
  pf.config.asset.pnp.deck.z0 = file.scene.deck.z0;
  pf.seed = file.scene.noise.seed;
  pf.spec = apply_spec_flags({}, opt);
  for (const auto& [cls, model] : file.scene.skeletons) {
    const fs::path path = opt.out / "skeletons" / (cls + ".json");
    io::write_json(path, io::skeleton_to_json(model));
    pf.skeleton_files.emplace(cls, path);
  }
  for (const auto& cam : sim.cameras) {
    const fs::path path = opt.out / "cameras" / (cam.name + ".json");
    io::write_camera(path, cam.camera);
    pf.camera_files.push_back(path);
    pf.config.cameras.push_back(cam);
  }
  pf.detections = opt.out / "detections.jsonl";
  io::write_json(opt.out / "pipeline.json", config::pipeline_to_json(pf, opt.out));
  io::write_json(opt.out / kEffective, config::scene_to_json(file));

  const auto [first, last] = file.scene.frame_span();
  log << "simulated frames " << first << ".." << last << ": " << sim.detections.size() << " detection records, "
      << sim.truth.size() << " truth records\n";
}

void run_estimate(const Options& opt, std::ostream& log) {
  if (!opt.config) throw Error(ErrorCode::InvalidArgument, "estimate needs --config pipeline.json");
  auto pf = config::read_pipeline(require_input(*opt.config));
  if (!opt.inputs.empty()) pf.detections = opt.inputs.front();
  if (!pf.detections) throw Error(ErrorCode::InvalidArgument, "estimate needs a detections file");
  pf.detections = require_input(*pf.detections);
  if (opt.pipeline) pf.config.kind = pipeline::kind_from_string(*opt.pipeline);
  if (opt.timing) pf.config.record_timing = true;
  if (opt.seed) pf.seed = *opt.seed;
  pf.spec = apply_spec_flags(pf.spec, opt);

  const auto detections = io::read_detections(*pf.detections);
  const auto estimates = pipeline::estimate_frames(pf.config, detections);
  io::write_text(opt.out / "estimates.jsonl", io::to_jsonl<EstimateRecord>(estimates));
  io::write_json(opt.out / kEffective, config::pipeline_to_json(pf));

  const auto missed = std::count_if(estimates.begin(), estimates.end(), [](const auto& e) { return e.missed; });
  log << pf.config.label() << ": " << estimates.size() << " estimates, " << missed << " missed\n";
}

void run_evaluate(const Options& opt, std::ostream& log) {
  fs::path base;
  const Json cfg = load_config(opt, base);

  std::vector<fs::path> estimates;
  fs::path truth_path;
  if (!opt.inputs.empty()) {
    if (opt.inputs.size() < 2) throw Error(ErrorCode::InvalidArgument, "evaluate needs estimates... truth");
    estimates.assign(opt.inputs.begin(), opt.inputs.end() - 1);
    truth_path = opt.inputs.back();
  } else {
    if (const auto it = cfg.find("estimates"); it != cfg.end()) {
      for (const auto& e : *it) estimates.push_back(resolve(e.get<std::string>(), base));
    }
    truth_path = config_path(cfg, "truth", base);
  }
  if (estimates.empty() || truth_path.empty()) {
    throw Error(ErrorCode::InvalidArgument, "evaluate needs estimates and truth files");
  }
  for (auto& e : estimates) e = require_input(e);
  truth_path = require_input(truth_path);

  const auto spec = apply_spec_flags(
      config::spec_from_json(cfg.contains("spec") ? cfg["spec"] : Json::object()), opt);
  eval::DeckGeometry deck;
  if (const auto it = cfg.find("deck"); it != cfg.end()) {
    deck.length = it->value("length", deck.length);
    deck.width = it->value("width", deck.width);
    deck.footprint_length = it->value("footprint_length", deck.footprint_length);
    deck.footprint_span = it->value("footprint_span", deck.footprint_span);
  }

  const auto truth = io::read_truth(truth_path);
  if (truth.empty()) throw Error(ErrorCode::EmptyInput, truth_path.string() + ": no truth records");
  std::vector<eval::EvalRecord> records;
  for (const auto& e : estimates) {
    const auto est = io::read_estimates(e);
    auto scored = eval::score_all(truth, est, spec);
    std::move(scored.begin(), scored.end(), std::back_inserter(records));
  }

  std::vector<int> frames;
  for (const auto& t : truth) frames.push_back(t.frame);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  const int plot_frame = cfg.value("deck_plot_frame", frames[(frames.size() - 1) / 2]);

  const auto summaries = eval::summarize_by_pipeline(records);
  const auto table = eval::emit_table(summaries);
  io::write_text(opt.out / "results.csv", io::results_csv(records));
  io::write_text(opt.out / "table.txt", table.text);
  io::write_text(opt.out / "table.csv", table.csv);
  io::write_text(opt.out / "error_curves.svg", eval::emit_error_curves(records, truth));
  io::write_text(opt.out / "deck_plot.svg", eval::emit_deck_plot(plot_frame, truth, records, deck));

  Json eff;
  Json est_list = Json::array();
  for (const auto& e : estimates) est_list.push_back(e.generic_string());
  eff["estimates"] = std::move(est_list);
  eff["truth"] = truth_path.generic_string();
  eff["spec"] = config::spec_to_json(spec);
  eff["deck"] = Json{{"length", deck.length},
                     {"width", deck.width},
                     {"footprint_length", deck.footprint_length},
                     {"footprint_span", deck.footprint_span}};
  eff["deck_plot_frame"] = plot_frame;
  io::write_json(opt.out / kEffective, eff);
  log << table.text;
}

void run_report(const Options& opt, std::ostream& log) {
  fs::path base;
  const Json cfg = load_config(opt, base);
  std::vector<fs::path> sources = opt.inputs;
  if (sources.empty()) {
    if (const auto it = cfg.find("results"); it != cfg.end()) {
      for (const auto& r : *it) sources.push_back(resolve(r.get<std::string>(), base));
    }
  }
  if (sources.empty()) throw Error(ErrorCode::InvalidArgument, "report needs result directories");

  std::optional<eval::SpecThresholds> spec;
  if (const auto it = cfg.find("spec"); it != cfg.end() && !it->is_null()) spec = config::spec_from_json(*it);
  if (opt.spec_dist || opt.spec_angle) spec = apply_spec_flags(spec.value_or(eval::SpecThresholds{}), opt);

  std::vector<eval::EvalRecord> records;
  std::set<std::pair<std::string, std::pair<int, std::string>>> seen;
  for (auto& src : sources) {
    src = require_input(src);
    const fs::path csv = fs::is_directory(src) ? src / "results.csv" : src;
    for (auto& r : io::read_results(require_input(csv))) {
      if (!seen.insert({r.pipeline, {r.frame, r.object}}).second) {
        throw Error(ErrorCode::IdMismatch, csv.string() + ": duplicate result for pipeline " + r.pipeline +
                                               ", frame " + std::to_string(r.frame) + ", " + r.object);
      }
      if (spec) r.in_spec = !r.missed && spec->accepts(r.dist_err_m, r.ang_err_deg);
      records.push_back(std::move(r));
    }
  }
  const auto table = eval::emit_table(eval::summarize_by_pipeline(records));
  io::write_text(opt.out / "comparison.txt", table.text);
  io::write_text(opt.out / "comparison.csv", table.csv);

  Json eff;
  Json list = Json::array();
  for (const auto& s : sources) list.push_back(s.generic_string());
  eff["results"] = std::move(list);
  eff["spec"] = spec ? config::spec_to_json(*spec) : Json(nullptr);
  io::write_json(opt.out / kEffective, eff);
  log << table.text;
}

}  // namespace decktrack::cli
