#include "decktrack/eval.hpp"

#include "decktrack/error.hpp"
#include "decktrack/geom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace decktrack::eval {

namespace {

std::string num(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string opt_num(const std::optional<double>& v, int precision, std::string_view unit = {}) {
  return v ? num(*v, precision) + std::string(unit) : std::string("n/a");
}

std::vector<std::string> object_ids(std::span<const PipelineSummary> summaries) {
  std::set<std::string> ids;
  for (const auto& s : summaries) {
    for (const auto& o : s.objects) ids.insert(o.object);
  }
  return {ids.begin(), ids.end()};
}

const ObjectSummary* find_object(const PipelineSummary& s, const std::string& id) {
  for (const auto& o : s.objects) {
    if (o.object == id) return &o;
  }
  return nullptr;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

}  // namespace

void SpecThresholds::validate() const {
  if (!(max_distance_m > 0.0 && max_angle_deg > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "spec thresholds must be positive");
  }
}

EvalRecord score(const TruthRecord& truth, const EstimateRecord* estimate, const SpecThresholds& spec,
                 std::string_view pipeline) {
  EvalRecord r;
  r.frame = truth.frame;
  r.object = truth.object;
  r.pipeline = std::string(pipeline);
  r.x_true = truth.x;
  r.y_true = truth.y;
  r.yaw_true = truth.yaw;
  if (estimate == nullptr) return r;
  if (estimate->frame != truth.frame || estimate->object != truth.object) {
    throw Error(ErrorCode::IdMismatch, "estimate (" + std::to_string(estimate->frame) + ", " + estimate->object +
                                           ") scored against truth (" + std::to_string(truth.frame) + ", " +
                                           truth.object + ")");
  }
  if (r.pipeline.empty()) r.pipeline = estimate->pipeline;
  r.time_ms = estimate->time_ms;
  if (estimate->missed) return r;
  r.missed = false;
  r.x_est = estimate->x;
  r.y_est = estimate->y;
  r.yaw_est = estimate->yaw;
  r.conf = estimate->conf;
  r.dist_err_m = std::hypot(estimate->x - truth.x, estimate->y - truth.y);
  r.ang_err_deg = angular_difference_deg(estimate->yaw, truth.yaw);
  r.in_spec = spec.accepts(r.dist_err_m, r.ang_err_deg);
  return r;
}

std::vector<EvalRecord> score_all(std::span<const TruthRecord> truth, std::span<const EstimateRecord> estimates,
                                  const SpecThresholds& spec) {
  spec.validate();
  std::map<std::pair<int, std::string>, const EstimateRecord*> by_key;
  std::string pipeline;
  for (const auto& e : estimates) {
    if (!by_key.emplace(std::make_pair(e.frame, e.object), &e).second) {
      throw Error(ErrorCode::IdMismatch, "duplicate estimate for frame " + std::to_string(e.frame) + " " + e.object);
    }
    if (pipeline.empty()) pipeline = e.pipeline;
  }
  std::vector<EvalRecord> out;
  out.reserve(truth.size());
  std::size_t matched = 0;
  for (const auto& t : truth) {
    const auto it = by_key.find({t.frame, t.object});
    const EstimateRecord* est = it == by_key.end() ? nullptr : it->second;
    if (est) ++matched;
    out.push_back(score(t, est, spec, pipeline));
  }
  if (matched != by_key.size()) throw Error(ErrorCode::IdMismatch, "estimates reference frames/objects with no truth");
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

PipelineSummary summarize(std::span<const EvalRecord> records, std::string pipeline) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to summarize");
  PipelineSummary s;
  s.pipeline = std::move(pipeline);

  struct Acc {
    int n = 0, misses = 0, in_spec = 0;
    std::vector<double> dist, ang;
  };
  std::map<std::string, Acc> acc;
  std::vector<double> times;
  for (const auto& r : records) {
    auto& a = acc[r.object];
    ++a.n;
    if (r.time_ms) times.push_back(*r.time_ms);
    if (r.missed) {
      ++a.misses;
      ++s.misses;
      continue;
    }
    if (r.in_spec) ++a.in_spec;
    a.dist.push_back(r.dist_err_m);
    a.ang.push_back(r.ang_err_deg);
  }
  for (auto& [id, a] : acc) {
    ObjectSummary o;
    o.object = id;
    o.records = a.n;
    o.misses = a.misses;
    o.in_spec = a.in_spec;
    o.pct_in_spec = 100.0 * a.in_spec / a.n;
    if (!a.dist.empty()) {
      o.median_distance_m = median(a.dist);
      o.median_angle_deg = median(a.ang);
    }
    s.objects.push_back(std::move(o));
  }
  if (!times.empty()) s.median_time_ms = median(times);
  return s;
}

std::vector<PipelineSummary> summarize_by_pipeline(std::span<const EvalRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to summarize");
  std::vector<std::string> order;
  std::map<std::string, std::vector<EvalRecord>> split;
  for (const auto& r : records) {
    if (!split.contains(r.pipeline)) order.push_back(r.pipeline);
    split[r.pipeline].push_back(r);
  }
  std::vector<PipelineSummary> out;
  for (const auto& p : order) out.push_back(summarize(split[p], p));
  return out;
}

Table emit_table(std::span<const PipelineSummary> summaries) {
  const auto ids = object_ids(summaries);
  std::ostringstream txt;
  std::ostringstream csv;

  txt << "Name";
  csv << "name";
  for (const auto& id : ids) {
    txt << "\t% In Spec " << id;
    csv << ",pct_in_spec_" << id;
  }
  txt << "\tMedian time";
  csv << ",median_time_ms";
  for (const auto& id : ids) {
    txt << "\tMedian Distance Error " << id << "\tMedian Angle Error " << id;
    csv << ",median_dist_err_m_" << id << ",median_ang_err_deg_" << id;
  }
  txt << '\n';
  csv << '\n';

  for (const auto& s : summaries) {
    txt << s.pipeline;
    csv << s.pipeline;
    for (const auto& id : ids) {
      const auto* o = find_object(s, id);
      txt << '\t' << (o ? num(o->pct_in_spec, 0) + "%" : "n/a");
      csv << ',' << (o ? num(o->pct_in_spec, 2) : "");
    }
    txt << '\t' << opt_num(s.median_time_ms, 2, "ms");
    csv << ',' << (s.median_time_ms ? num(*s.median_time_ms, 4) : "");
    for (const auto& id : ids) {
      const auto* o = find_object(s, id);
      const std::optional<double> d = o ? o->median_distance_m : std::nullopt;
      const std::optional<double> a = o ? o->median_angle_deg : std::nullopt;
      txt << '\t' << opt_num(d, 3, "m") << '\t' << opt_num(a, 3, "°");
      csv << ',' << (d ? num(*d, 6) : "") << ',' << (a ? num(*a, 6) : "");
    }
    txt << '\n';
    csv << '\n';
  }

  txt << "\nMisses count as out of spec in % In Spec and are excluded from the medians.";
  for (const auto& s : summaries) {
    txt << "\n  " << s.pipeline << ": misses";
    for (const auto& o : s.objects) txt << ' ' << o.object << '=' << o.misses << '/' << o.records;
  }
  txt << '\n';
  return {txt.str(), csv.str()};
}

std::string emit_error_curves(std::span<const EvalRecord> records, std::span<const TruthRecord> truth) {
  constexpr double kWidth = 900.0;
  constexpr double kPanel = 170.0;
  constexpr double kLeft = 70.0;
  constexpr double kRight = 20.0;
  constexpr double kTop = 40.0;
  constexpr double kGap = 45.0;

  std::vector<std::string> objects;
  std::vector<std::string> pipelines;
  int fmin = 0;
  int fmax = 1;
  bool first = true;
  auto note_frame = [&](int f) {
    if (first) fmin = fmax = f;
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
    first = false;
  };
  for (const auto& t : truth) {
    if (std::find(objects.begin(), objects.end(), t.object) == objects.end()) objects.push_back(t.object);
    note_frame(t.frame);
  }
  for (const auto& r : records) {
    if (std::find(objects.begin(), objects.end(), r.object) == objects.end()) objects.push_back(r.object);
    if (std::find(pipelines.begin(), pipelines.end(), r.pipeline) == pipelines.end()) pipelines.push_back(r.pipeline);
    note_frame(r.frame);
  }
  std::sort(objects.begin(), objects.end());
  if (fmax == fmin) fmax = fmin + 1;

  const double plot_w = kWidth - kLeft - kRight;
  const double height = kTop + objects.size() * 2 * (kPanel + kGap) + 30.0;
  auto fx = [&](double f) { return kLeft + (f - fmin) / (fmax - fmin) * plot_w; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << num(height, 0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"14\">Error per frame for each pipeline and object</text>\n";
  for (std::size_t p = 0; p < pipelines.size(); ++p) {
    const double lx = kLeft + 420.0 + 140.0 * p;
    svg << "<line x1=\"" << lx << "\" y1=\"16\" x2=\"" << lx + 20 << "\" y2=\"16\" stroke=\"" << color(p)
        << "\" stroke-width=\"2\"/><text x=\"" << lx + 24 << "\" y=\"20\">" << pipelines[p] << "</text>\n";
  }

  double y0 = kTop;
  for (const auto& obj : objects) {
    std::vector<const TruthRecord*> obj_truth;
    for (const auto& t : truth) {
      if (t.object == obj) obj_truth.push_back(&t);
    }
    std::sort(obj_truth.begin(), obj_truth.end(),
              [](const TruthRecord* a, const TruthRecord* b) { return a->frame < b->frame; });

    for (int metric = 0; metric < 2; ++metric) {
      const double top = y0 + kGap * 0.5;
      const double bottom = top + kPanel;
      double ymax = metric == 0 ? 1.0 : 0.5;
      for (const auto& r : records) {
        if (r.object == obj && !r.missed) ymax = std::max(ymax, metric == 0 ? r.dist_err_m : r.ang_err_deg);
      }
      ymax *= 1.05;
      auto fy = [&](double v) { return bottom - std::min(v, ymax) / ymax * kPanel; };

      // Occlusion windows: runs of consecutive frames sharing a non-None state.
      for (std::size_t i = 0; i < obj_truth.size();) {
        const Occlusion state = obj_truth[i]->occlusion;
        std::size_t j = i;
        while (j + 1 < obj_truth.size() && obj_truth[j + 1]->occlusion == state &&
               obj_truth[j + 1]->frame == obj_truth[j]->frame + 1) {
          ++j;
        }
        if (state != Occlusion::None) {
          const double x0 = std::max(kLeft, fx(obj_truth[i]->frame - 0.5));
          const double x1 = std::min(kLeft + plot_w, fx(obj_truth[j]->frame + 0.5));
          const bool full = state == Occlusion::Full;
          svg << "<rect class=\"occlusion-" << to_string(state) << "\" x=\"" << num(x0, 2) << "\" y=\"" << num(top, 2)
              << "\" width=\"" << num(x1 - x0, 2) << "\" height=\"" << num(kPanel, 2) << "\" fill=\""
              << (full ? "#7f7f7f" : "#d9d9d9") << "\" fill-opacity=\"" << (full ? "0.45" : "0.5") << "\"/>\n";
        }
        i = j + 1;
      }

      svg << "<rect x=\"" << kLeft << "\" y=\"" << num(top, 2) << "\" width=\"" << plot_w << "\" height=\"" << kPanel
          << "\" fill=\"none\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << kLeft << "\" y=\"" << num(top - 6, 2) << "\">" << obj << ": "
          << (metric == 0 ? "distance error (m)" : "angle error (deg)") << "</text>\n";
      svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(top + 10, 2) << "\" text-anchor=\"end\">" << num(ymax, 2)
          << "</text>\n";
      svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(bottom, 2) << "\" text-anchor=\"end\">0</text>\n";
      svg << "<text x=\"" << kLeft << "\" y=\"" << num(bottom + 14, 2) << "\">" << fmin << "</text>\n";
      svg << "<text x=\"" << kLeft + plot_w << "\" y=\"" << num(bottom + 14, 2) << "\" text-anchor=\"end\">" << fmax
          << "</text>\n";

      for (std::size_t p = 0; p < pipelines.size(); ++p) {
        std::vector<const EvalRecord*> rs;
        for (const auto& r : records) {
          if (r.object == obj && r.pipeline == pipelines[p]) rs.push_back(&r);
        }
        std::sort(rs.begin(), rs.end(), [](const EvalRecord* a, const EvalRecord* b) { return a->frame < b->frame; });
        std::string pts;
        auto flush = [&] {
          if (!pts.empty()) {
            svg << "<polyline fill=\"none\" stroke=\"" << color(p) << "\" stroke-width=\"1.5\" points=\"" << pts
                << "\"/>\n";
          }
          pts.clear();
        };
        for (const auto* r : rs) {
          if (r->missed) {
            flush();
            svg << "<circle class=\"missed\" cx=\"" << num(fx(r->frame), 2) << "\" cy=\"" << num(bottom - 3, 2)
                << "\" r=\"1.5\" fill=\"" << color(p) << "\"/>\n";
            continue;
          }
          pts += num(fx(r->frame), 2) + "," + num(fy(metric == 0 ? r->dist_err_m : r->ang_err_deg), 2) + " ";
        }
        flush();
      }
      y0 += kPanel + kGap;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string emit_deck_plot(int frame, std::span<const TruthRecord> truth, std::span<const EvalRecord> records,
                           const DeckGeometry& deck) {
  constexpr double kScale = 3.0;
  constexpr double kMargin = 30.0;
  const double w = deck.length * kScale + 2 * kMargin;
  const double h = deck.width * kScale + 2 * kMargin + 20.0;
  auto sx = [&](double x) { return kMargin + (x + 0.5 * deck.length) * kScale; };
  auto sy = [&](double y) { return kMargin + 20.0 + (0.5 * deck.width - y) * kScale; };

  // Planform outline in body coordinates: nose, wingtips, tail.
  const double l = deck.footprint_length;
  const double s = deck.footprint_span;
  const std::vector<Vec2> outline = {{0.5 * l, 0.0},       {-0.05 * l, 0.5 * s},  {-0.2 * l, 0.5 * s},
                                     {-0.3 * l, 0.12 * s}, {-0.5 * l, 0.25 * s}, {-0.5 * l, -0.25 * s},
                                     {-0.3 * l, -0.12 * s}, {-0.2 * l, -0.5 * s}, {-0.05 * l, -0.5 * s}};
  auto footprint = [&](double x, double y, double yaw_deg) {
    const double c = std::cos(deg_to_rad(yaw_deg));
    const double sn = std::sin(deg_to_rad(yaw_deg));
    std::string pts;
    for (const auto& p : outline) {
      pts += num(sx(x + c * p.x() - sn * p.y()), 2) + "," + num(sy(y + sn * p.x() + c * p.y()), 2) + " ";
    }
    return pts;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w, 0) << "\" height=\"" << num(h, 0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kMargin << "\" y=\"18\" font-size=\"14\">Deck plan, frame " << frame
      << " (solid: truth, dashed: estimate)</text>\n";
  svg << "<rect class=\"deck\" x=\"" << num(sx(-0.5 * deck.length), 2) << "\" y=\"" << num(sy(0.5 * deck.width), 2)
      << "\" width=\"" << num(deck.length * kScale, 2) << "\" height=\"" << num(deck.width * kScale, 2)
      << "\" fill=\"#bfbfbf\" stroke=\"#404040\"/>\n";
  for (const auto& t : truth) {
    if (t.frame != frame) continue;
    svg << "<polygon class=\"truth\" points=\"" << footprint(t.x, t.y, t.yaw)
        << "\" fill=\"#2ca02c\" fill-opacity=\"0.6\" stroke=\"#1a661a\"/>\n";
    svg << "<text x=\"" << num(sx(t.x), 2) << "\" y=\"" << num(sy(t.y) - 0.6 * s * kScale, 2)
        << "\" text-anchor=\"middle\">" << t.object << "</text>\n";
  }
  std::size_t p = 0;
  std::vector<std::string> seen;
  for (const auto& r : records) {
    if (r.frame != frame || r.missed) continue;
    auto it = std::find(seen.begin(), seen.end(), r.pipeline);
    if (it == seen.end()) {
      seen.push_back(r.pipeline);
      it = std::prev(seen.end());
    }
    p = static_cast<std::size_t>(it - seen.begin());
    svg << "<polygon class=\"estimate\" points=\"" << footprint(r.x_est, r.y_est, r.yaw_est)
        << "\" fill=\"none\" stroke=\"" << color(p + 1) << "\" stroke-dasharray=\"4 2\" stroke-width=\"1.5\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace decktrack::eval
