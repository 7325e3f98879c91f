#pragma once

// Accuracy-specification scoring and the comparison reports: per-record
// errors, per-pipeline summaries, the comparison table and SVG figures.

#include "decktrack/records.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace decktrack::eval {

struct SpecThresholds {
  double max_distance_m = 1.0;
  double max_angle_deg = 0.5;

  void validate() const;
  bool accepts(double distance_m, double angle_deg) const {
    return distance_m <= max_distance_m && angle_deg <= max_angle_deg;
  }
};

struct EvalRecord {
  int frame = 0;
  std::string object;
  std::string pipeline;
  double x_true = 0.0;
  double y_true = 0.0;
  double yaw_true = 0.0;
  bool missed = true;
  double x_est = 0.0;
  double y_est = 0.0;
  double yaw_est = 0.0;
  double conf = 0.0;
  double dist_err_m = 0.0;
  double ang_err_deg = 0.0;
  std::optional<double> time_ms;
  bool in_spec = false;
};

// Throws IdMismatch when frame/object differ. A missed estimate (or none)
// yields a missed, out-of-spec record.
EvalRecord score(const TruthRecord& truth, const EstimateRecord* estimate, const SpecThresholds& spec,
                 std::string_view pipeline = {});

// One record per truth entry, in truth order. Throws IdMismatch for an
// estimate with no truth, or for duplicate estimates.
std::vector<EvalRecord> score_all(std::span<const TruthRecord> truth, std::span<const EstimateRecord> estimates,
                                  const SpecThresholds& spec);

// Lower-middle element for even counts; throws EmptyInput.
double median(std::vector<double> values);

struct ObjectSummary {
  std::string object;
  int records = 0;
  int misses = 0;
  int in_spec = 0;
  double pct_in_spec = 0.0;                 // over all records, misses count as out of spec
  std::optional<double> median_distance_m;  // over non-missed records
  std::optional<double> median_angle_deg;
};

struct PipelineSummary {
  std::string pipeline;
  std::vector<ObjectSummary> objects;  // sorted by object id
  std::optional<double> median_time_ms;
  int misses = 0;
};

// Throws EmptyInput.
PipelineSummary summarize(std::span<const EvalRecord> records, std::string pipeline);
// Splits by the records' pipeline column, in first-appearance order.
std::vector<PipelineSummary> summarize_by_pipeline(std::span<const EvalRecord> records);

struct Table {
  std::string text;
  std::string csv;
};

// Columns: name, % in spec per object, median time, then median distance and
// angle error per object.
Table emit_table(std::span<const PipelineSummary> summaries);

// Per object: distance and angle error against frame, one polyline per
// pipeline, partial/full occlusion windows shaded.
std::string emit_error_curves(std::span<const EvalRecord> records, std::span<const TruthRecord> truth);

struct DeckGeometry {
  double length = 330.0;
  double width = 78.0;
  double footprint_length = 17.0;
  double footprint_span = 13.5;
};

// Top-down deck plan for one frame: true footprints solid, estimates dashed.
std::string emit_deck_plot(int frame, std::span<const TruthRecord> truth, std::span<const EvalRecord> records,
                           const DeckGeometry& deck);

}  // namespace decktrack::eval
