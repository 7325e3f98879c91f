#pragma once

// Overlapping yaw-bin head as plain math: bin layout, target encoding,
// prediction decoding and the two training losses with analytic gradients.
// Angles are in degrees throughout.

#include <span>
#include <vector>

namespace decktrack::yaw {

struct YawBins {
  int n = 0;
  double half_width = 0.0;
  std::vector<double> centers;  // c_i = i * 360 / n
};

// Requires n >= 2 and 180/n < half_width <= 180; throws InvalidBinConfig.
YawBins make_bins(int n, double half_width);

inline YawBins default_bins() { return make_bins(12, 30.0); }

struct YawTarget {
  std::vector<int> membership;   // 0/1 per bin
  std::vector<double> offsets;   // wrap(theta - c_i) for members, 0 otherwise

  int member_count() const;
};

struct YawPrediction {
  std::vector<double> scores;
  std::vector<double> offsets;
};

// Bin i holds theta when wrap(theta - c_i) lies in [-half_width, +half_width).
YawTarget encode(double theta_deg, const YawBins& bins);

// argmax score (lowest index on ties), plus that bin's offset; result in [0, 360).
double decode(const YawPrediction& pred, const YawBins& bins);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

enum class TargetDistribution {
  Uniform,          // equal mass on member bins
  DistanceWeighted  // mass proportional to 1 - |offset| / half_width
};

// Cross-entropy between softmax(scores) and the target distribution over member bins.
LossGrad bin_selection_loss(std::span<const double> scores, const YawTarget& target,
                            TargetDistribution dist = TargetDistribution::Uniform,
                            const YawBins* bins = nullptr);

// Mean over member bins of (wrap(theta - c_i) - offset_i)^2.
LossGrad offset_loss(std::span<const double> offsets, double theta_deg, const YawBins& bins);

struct TotalLoss {
  double loss = 0.0;
  std::vector<double> grad_scores;
  std::vector<double> grad_offsets;
};

// w_bin * L_bin + w_off * L_off. There is no reconstruction term.
TotalLoss total_loss(const YawPrediction& pred, double theta_deg, const YawBins& bins, double w_bin, double w_off);

}  // namespace decktrack::yaw
