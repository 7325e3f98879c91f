#pragma once

// The five CLI subcommands as library calls. Each writes its data files and
// an effective-config.json into `out`; diagnostics go to `log`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace decktrack::cli {

namespace fs = std::filesystem;

struct Options {
  std::optional<fs::path> config;
  fs::path out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> spec_dist;
  std::optional<double> spec_angle;
  std::optional<std::string> pipeline;
  bool timing = false;
  std::optional<int> width;
  std::optional<int> height;
  std::vector<fs::path> inputs;
};

// inputs: [correspondences.csv]. Writes camera.json and calibration.json.
void run_calibrate(const Options& opt, std::ostream& log);
// --config scene.json. Writes detections.jsonl, truth.jsonl, cameras/,
// skeletons/ and a ready-to-use pipeline.json.
void run_simulate(const Options& opt, std::ostream& log);
// --config pipeline.json, inputs: [detections.jsonl]. Writes estimates.jsonl.
void run_estimate(const Options& opt, std::ostream& log);
// inputs: estimates.jsonl... truth.jsonl. Writes results.csv, table.txt,
// table.csv, error_curves.svg and deck_plot.svg.
void run_evaluate(const Options& opt, std::ostream& log);
// inputs: result directories (or results.csv files). Writes comparison.txt
// and comparison.csv.
void run_report(const Options& opt, std::ostream& log);

}  // namespace decktrack::cli
