#include "dcpfl/rdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcpfl/errors.hpp"

namespace dcpfl {

std::optional<double> curvature_radius(double d1, double d2) {
  if (std::abs(d2) < kCurvatureEpsilon) return std::nullopt;
  return std::pow(1.0 + d1 * d1, 1.5) / d2;
}

LossTrace::LossTrace(int window) : window_(window) {
  if (window < 1) throw ConfigError("smoothing window must be at least one round");
}

void LossTrace::push_loss(int round, std::span<const double> per_client_losses) {
  if (per_client_losses.empty()) throw InputError("no client losses reported");
  double total = 0.0;
  for (std::size_t i = 0; i < per_client_losses.size(); ++i) {
    if (!std::isfinite(per_client_losses[i])) {
      throw NumericalError("client " + std::to_string(i) + " reported a non-finite loss", i);
    }
    total += per_client_losses[i];
  }
  push_mean(round, total / static_cast<double>(per_client_losses.size()));
}

void LossTrace::push_mean(int round, double mean_loss) {
  if (round != last_round() + 1) {
    throw StateError("loss trace expects round " + std::to_string(last_round() + 1));
  }
  raw_.push_back(mean_loss);
  const int first = std::max(1, round - window_);
  double sum = 0.0;
  for (int t = first; t <= round; ++t) sum += raw_[idx(t)];
  smoothed_.push_back(sum / static_cast<double>(round - first + 1));

  std::optional<double> d1, d2, r;
  if (round >= 2) d1 = smoothed_[idx(round)] - smoothed_[idx(round - 1)];
  if (round >= 3) d2 = *d1 - *d1_[idx(round - 1)];
  if (d1 && d2) r = curvature_radius(*d1, *d2);
  d1_.push_back(d1);
  d2_.push_back(d2);
  r_.push_back(r);
}

RdpMonitor::RdpMonitor(int t_obv, int window) : t_obv_(t_obv), window_(window) {
  if (t_obv < 1) throw ConfigError("t_obv must be at least one round");
}

void RdpMonitor::reset(int origin_round) {
  origin_ = origin_round;
  phase_ = Phase::warming;
  best_r_.reset();
  t_min_.reset();
  rounds_since_min_ = 0;
}

std::optional<int> RdpMonitor::observe(int round, std::optional<double> radius) {
  if (!warmed_up(round)) throw StateError("RDP check before the warm-up window is complete");
  if (phase_ == Phase::ended) return std::nullopt;
  phase_ = Phase::monitoring;
  if (!radius || *radius <= 0.0) return std::nullopt;
  if (!best_r_ || *radius <= *best_r_) {
    best_r_ = radius;
    t_min_ = round;
    rounds_since_min_ = 0;
    return std::nullopt;
  }
  if (++rounds_since_min_ == t_obv_) {
    phase_ = Phase::ended;
    return t_min_;
  }
  return std::nullopt;
}

std::optional<int> check_rdp_end(RdpMonitor& monitor, const LossTrace& trace, int round) {
  if (round > trace.last_round()) throw StateError("round not yet pushed to the loss trace");
  return monitor.observe(round, trace.curvature(round));
}

}  // namespace dcpfl
