#include "decktrack/yawcodec.hpp"

#include "decktrack/error.hpp"
#include "decktrack/geom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace decktrack::yaw {

namespace {

void require_size(std::size_t got, const YawBins& bins, const char* what) {
  if (got != static_cast<std::size_t>(bins.n)) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " has " + std::to_string(got) + " entries, expected " + std::to_string(bins.n));
  }
}

}  // namespace

YawBins make_bins(int n, double half_width) {
  if (n < 2) throw Error(ErrorCode::InvalidBinConfig, "need at least 2 bins");
  if (!std::isfinite(half_width) || !(half_width > 180.0 / n) || half_width > 180.0) {
    throw Error(ErrorCode::InvalidBinConfig,
                "half width must satisfy 180/n < half_width <= 180 (got " + std::to_string(half_width) + ")");
  }
  YawBins bins;
  bins.n = n;
  bins.half_width = half_width;
  bins.centers.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) bins.centers[static_cast<std::size_t>(i)] = i * 360.0 / n;
  return bins;
}

int YawTarget::member_count() const {
  int c = 0;
  for (int m : membership) c += m;
  return c;
}

YawTarget encode(double theta_deg, const YawBins& bins) {
  require_finite(theta_deg, "yaw");
  const double theta = wrap_deg_360(theta_deg);
  YawTarget t;
  t.membership.assign(bins.centers.size(), 0);
  t.offsets.assign(bins.centers.size(), 0.0);
  for (std::size_t i = 0; i < bins.centers.size(); ++i) {
    // wrap_deg_180 returns (-180, 180]; half_width = 180 must still admit -180.
    double d = wrap_deg_180(theta - bins.centers[i]);
    if (d >= bins.half_width) d -= 360.0;
    if (d >= -bins.half_width && d < bins.half_width) {
      t.membership[i] = 1;
      t.offsets[i] = d;
    }
  }
  return t;
}

double decode(const YawPrediction& pred, const YawBins& bins) {
  require_size(pred.scores.size(), bins, "scores");
  require_size(pred.offsets.size(), bins, "offsets");
  std::size_t best = 0;
  for (std::size_t i = 0; i < pred.scores.size(); ++i) {
    require_finite(pred.scores[i], "score");
    require_finite(pred.offsets[i], "offset");
    if (pred.scores[i] > pred.scores[best]) best = i;
  }
  return wrap_deg_360(bins.centers[best] + pred.offsets[best]);
}

LossGrad bin_selection_loss(std::span<const double> scores, const YawTarget& target, TargetDistribution dist,
                            const YawBins* bins) {
  const std::size_t n = scores.size();
  if (target.membership.size() != n || target.offsets.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "scores and target differ in size");
  }
  std::vector<double> q(n, 0.0);
  double qsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!target.membership[i]) continue;
    double w = 1.0;
    if (dist == TargetDistribution::DistanceWeighted) {
      if (bins == nullptr) throw Error(ErrorCode::InvalidArgument, "distance-weighted targets need the bin layout");
      w = std::max(0.0, 1.0 - std::abs(target.offsets[i]) / bins->half_width);
    }
    q[i] = w;
    qsum += w;
  }
  if (!(qsum > 0.0)) throw Error(ErrorCode::InvalidArgument, "target has no member bins");
  for (double& v : q) v /= qsum;

  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);
  const double log_z = mx + std::log(z);

  LossGrad out;
  out.grad.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double log_p = scores[i] - log_z;
    out.loss -= q[i] * log_p;
    out.grad[i] = std::exp(log_p) - q[i];
  }
  return out;
}

LossGrad offset_loss(std::span<const double> offsets, double theta_deg, const YawBins& bins) {
  require_size(offsets.size(), bins, "offsets");
  const YawTarget t = encode(theta_deg, bins);
  const double m = t.member_count();
  LossGrad out;
  out.grad.assign(offsets.size(), 0.0);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!t.membership[i]) continue;
    const double e = t.offsets[i] - offsets[i];
    out.loss += e * e / m;
    out.grad[i] = -2.0 * e / m;
  }
  return out;
}

TotalLoss total_loss(const YawPrediction& pred, double theta_deg, const YawBins& bins, double w_bin, double w_off) {
  if (!(w_bin >= 0.0 && w_off >= 0.0)) throw Error(ErrorCode::InvalidArgument, "loss weights must be non-negative");
  require_size(pred.scores.size(), bins, "scores");
  const LossGrad lb = bin_selection_loss(pred.scores, encode(theta_deg, bins));
  const LossGrad lo = offset_loss(pred.offsets, theta_deg, bins);
  TotalLoss out;
  out.loss = w_bin * lb.loss + w_off * lo.loss;
  out.grad_scores.resize(lb.grad.size());
  out.grad_offsets.resize(lo.grad.size());
  for (std::size_t i = 0; i < lb.grad.size(); ++i) out.grad_scores[i] = w_bin * lb.grad[i];
  for (std::size_t i = 0; i < lo.grad.size(); ++i) out.grad_offsets[i] = w_off * lo.grad[i];
  return out;
}

}  // namespace decktrack::yaw
