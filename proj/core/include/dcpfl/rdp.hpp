#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dcpfl {

// |l''| below this leaves the radius of curvature undefined.
inline constexpr double kCurvatureEpsilon = 1e-9;

/// (1 + d1^2)^(3/2) / d2, or nullopt when |d2| < kCurvatureEpsilon.
std::optional<double> curvature_radius(double d1, double d2);

// Per-round average training loss with sliding-window smoothing and
// finite-difference derivative estimates. Rounds are 1-based and contiguous.
class LossTrace {
 public:
  explicit LossTrace(int window = 5);

  /// Appends round `round` (must be last_round() + 1). Throws NumericalError
  /// naming the client on a non-finite loss.
  void push_loss(int round, std::span<const double> per_client_losses);
  /// Appends an already averaged loss.
  void push_mean(int round, double mean_loss);

  int window() const noexcept { return window_; }
  int last_round() const noexcept { return static_cast<int>(raw_.size()); }

  double raw(int round) const { return raw_.at(idx(round)); }
  double smoothed(int round) const { return smoothed_.at(idx(round)); }
  std::optional<double> d1(int round) const { return d1_.at(idx(round)); }
  std::optional<double> d2(int round) const { return d2_.at(idx(round)); }
  /// Signed radius from Eq. (1 + d1^2)^1.5 / d2 where defined.
  std::optional<double> curvature(int round) const { return r_.at(idx(round)); }

 private:
  static std::size_t idx(int round) { return static_cast<std::size_t>(round - 1); }

  int window_;
  std::vector<double> raw_;
  std::vector<double> smoothed_;
  std::vector<std::optional<double>> d1_;
  std::vector<std::optional<double>> d2_;
  std::vector<std::optional<double>> r_;
};

// Detects the end of a rapid-decrease period: the round of minimum
// curvature radius followed by t_obv consecutive rounds with a strictly
// larger radius. Undefined and non-positive radii are skipped.
class RdpMonitor {
 public:
  enum class Phase { warming, monitoring, ended };

  RdpMonitor(int t_obv = 3, int window = 5);

  /// Starts a new monitoring phase; rounds <= origin + window are warm-up.
  void reset(int origin_round);

  /// Feeds the radius observed at `round`. Returns t_min when the period ends.
  std::optional<int> observe(int round, std::optional<double> radius);

  Phase phase() const noexcept { return phase_; }
  int origin() const noexcept { return origin_; }
  int t_obv() const noexcept { return t_obv_; }
  int window() const noexcept { return window_; }
  bool warmed_up(int round) const noexcept { return round > origin_ + window_; }
  std::optional<int> t_min() const noexcept { return t_min_; }
  std::optional<double> best_r() const noexcept { return best_r_; }
  int rounds_since_min() const noexcept { return rounds_since_min_; }

 private:
  int t_obv_;
  int window_;
  int origin_ = 0;
  Phase phase_ = Phase::warming;
  std::optional<double> best_r_;
  std::optional<int> t_min_;
  int rounds_since_min_ = 0;
};

/// Checks round `round` of `trace`. Throws StateError before warm-up ends.
std::optional<int> check_rdp_end(RdpMonitor& monitor, const LossTrace& trace, int round);

}  // namespace dcpfl
