#include "decktrack/commands.hpp"
#include "decktrack/error.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <string>

namespace {

using decktrack::cli::Options;

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Options& opt,
                      const std::string& inputs_help) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("--config", opt.config, "Configuration file");
  sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", opt.seed, "Random seed override");
  sub->add_option("--spec-dist", opt.spec_dist, "In-spec distance threshold (m)");
  sub->add_option("--spec-angle", opt.spec_angle, "In-spec angle threshold (deg)");
  sub->add_option("--pipeline", opt.pipeline, "Pipeline kind: keypoint-pnp-svd or bbox-dlt-yaw");
  sub->add_option("inputs", opt.inputs, inputs_help);
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deck asset pose estimation: calibration, simulation, estimation and evaluation"};
  app.require_subcommand(1);

  Options opt;
  auto* calibrate = add_command(app, "calibrate", "Estimate a camera from 3D/2D correspondences", opt,
                                "Correspondence CSV (name,X,Y,Z,u,v)");
  calibrate->add_option("--width", opt.width, "Image width (px)");
  calibrate->add_option("--height", opt.height, "Image height (px)");
  add_command(app, "simulate", "Render a synthetic scene into detections and ground truth", opt, "unused");
  auto* estimate = add_command(app, "estimate", "Run a pipeline over detections", opt, "Detections JSON Lines");
  estimate->add_flag("--timing", opt.timing, "Record per-frame wall time (output is then not reproducible)");
  add_command(app, "evaluate", "Score estimates against truth", opt, "Estimates JSON Lines..., then truth JSON Lines");
  add_command(app, "report", "Combine result directories into one comparison table", opt, "Result directories");

  CLI11_PARSE(app, argc, argv);

  const std::map<std::string, std::function<void(const Options&, std::ostream&)>> commands = {
      {"calibrate", decktrack::cli::run_calibrate}, {"simulate", decktrack::cli::run_simulate},
      {"estimate", decktrack::cli::run_estimate},   {"evaluate", decktrack::cli::run_evaluate},
      {"report", decktrack::cli::run_report},
  };
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    commands.at(name)(opt, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "decktrack " << name << ": error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
