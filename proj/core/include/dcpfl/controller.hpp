#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dcpfl/aggregation.hpp"
#include "dcpfl/clustering.hpp"
#include "dcpfl/discrepancy.hpp"

namespace dcpfl {

// A layer whose discrepancy is below this fraction of the group average is
// aggregated on the slow period.
inline constexpr double kLowDiscrepancyRatio = 0.1;

enum class LayerClass { low, high };

struct LayerPlan {
  LayerClass cls = LayerClass::high;
  int period = 1;
};

/// low iff per_layer[l] < 0.1 * model_avg; low layers get period alpha*tau.
std::vector<LayerPlan> classify_layers(const LayerDiscrepancyProfile& profile, int tau, int alpha);

// Per-(group, layer) aggregation periods measured from phase_origin. Every
// alpha*tau rounds all layers of all groups are synchronised.
class LayerSchedule {
 public:
  LayerSchedule() = default;
  LayerSchedule(std::size_t num_groups, std::size_t num_layers, int tau, int alpha,
                int phase_origin = 0);

  /// Back to all-high with a new origin and group count.
  void reset(std::size_t num_groups, int phase_origin);
  void set_group(std::size_t group, std::span<const LayerPlan> plan);

  int tau() const noexcept { return tau_; }
  int alpha() const noexcept { return alpha_; }
  int phase_origin() const noexcept { return phase_origin_; }
  std::size_t num_groups() const noexcept { return plans_.size(); }
  std::size_t num_layers() const noexcept { return num_layers_; }
  LayerClass layer_class(std::size_t g, std::size_t l) const { return plans_.at(g).at(l).cls; }
  int period(std::size_t g, std::size_t l) const { return plans_.at(g).at(l).period; }
  bool is_full_sync(int round) const noexcept;

 private:
  int tau_ = 1;
  int alpha_ = 1;
  int phase_origin_ = 0;
  std::size_t num_layers_ = 0;
  std::vector<std::vector<LayerPlan>> plans_;
};

/// Scheduled (group, layer) pairs for `round`, sorted.
std::vector<GroupLayer> layers_to_aggregate(const LayerSchedule& schedule, int round);

enum class ControllerPhase { training, trial_pending, cooldown };

struct SplitTrial {
  GroupStructure g0;
  GroupStructure g1;
  double gamma_tilde_1 = 0.0;
  int t0 = 0;
};

struct ControllerState {
  double gamma_tilde = 1.0;
  GroupStructure active;
  ControllerPhase phase = ControllerPhase::training;
  int cooldown_remaining = 0;
  std::optional<SplitTrial> trial;
};

struct TrialResult {
  bool adopted = false;
  double loss_g0 = 0.0;
  double loss_g1 = 0.0;
};

// Walks the normalized threshold down the group graph: candidate structures
// are armed at the end of a rapid-decrease period, tried for one round, and
// either adopted or deferred for t_sp rounds.
class Controller {
 public:
  struct Params {
    double lambda = 0.2;
    int t_sp = 6;
  };

  Controller(Params params, std::size_t n_clients);

  const ControllerState& state() const noexcept { return state_; }
  const Params& params() const noexcept { return params_; }

  /// Arms a trial against the next distinct partition below the current
  /// threshold. Returns false (no-op) at gamma_tilde == 0, with a zero step,
  /// or when no lower threshold changes the partition.
  bool on_rdp_end(const GroupGraph& graph, int t0);

  /// Compares mean client losses under G0 and G1 and adopts G1 on strict
  /// improvement; otherwise keeps G0 and enters a t_sp-round cooldown.
  TrialResult run_split_trial(std::span<const double> losses_g0, std::span<const double> losses_g1);

  /// Call once at the end of every round. Returns true on the round the
  /// cooldown finishes.
  bool end_round();

 private:
  Params params_;
  ControllerState state_;
  bool skip_tick_ = false;
};

}  // namespace dcpfl
