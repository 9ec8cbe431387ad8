#include "dcpfl/controller.hpp"

#include <algorithm>
#include <cmath>

#include "dcpfl/errors.hpp"

namespace dcpfl {

std::vector<LayerPlan> classify_layers(const LayerDiscrepancyProfile& profile, int tau, int alpha) {
  if (profile.per_layer.empty()) throw InputError("empty layer discrepancy profile");
  if (tau < 1 || alpha <= 1) throw InputError("classify_layers needs tau >= 1 and alpha > 1");
  std::vector<LayerPlan> plan;
  plan.reserve(profile.per_layer.size());
  for (double d : profile.per_layer) {
    if (d < kLowDiscrepancyRatio * profile.model_avg) {
      plan.push_back({LayerClass::low, alpha * tau});
    } else {
      plan.push_back({LayerClass::high, tau});
    }
  }
  return plan;
}

LayerSchedule::LayerSchedule(std::size_t num_groups, std::size_t num_layers, int tau, int alpha,
                             int phase_origin)
    : tau_(tau), alpha_(alpha), num_layers_(num_layers) {
  if (tau < 1 || alpha < 1) throw ConfigError("tau and alpha must be at least 1");
  reset(num_groups, phase_origin);
}

void LayerSchedule::reset(std::size_t num_groups, int phase_origin) {
  phase_origin_ = phase_origin;
  plans_.assign(num_groups, std::vector<LayerPlan>(num_layers_, LayerPlan{LayerClass::high, tau_}));
}

void LayerSchedule::set_group(std::size_t group, std::span<const LayerPlan> plan) {
  if (plan.size() != num_layers_) throw ConfigError("layer plan size mismatch");
  plans_.at(group).assign(plan.begin(), plan.end());
}

bool LayerSchedule::is_full_sync(int round) const noexcept {
  const int offset = round - phase_origin_;
  return offset >= 0 && offset % (alpha_ * tau_) == 0;
}

std::vector<GroupLayer> layers_to_aggregate(const LayerSchedule& schedule, int round) {
  std::vector<GroupLayer> out;
  const int offset = round - schedule.phase_origin();
  if (offset < 0) return out;
  const bool full = schedule.is_full_sync(round);
  for (std::size_t g = 0; g < schedule.num_groups(); ++g) {
    for (std::size_t l = 0; l < schedule.num_layers(); ++l) {
      if (full || offset % schedule.period(g, l) == 0) out.emplace_back(g, l);
    }
  }
  return out;
}

Controller::Controller(Params params, std::size_t n_clients) : params_(params) {
  if (params.lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (params.t_sp < 0) throw ConfigError("t_sp must be non-negative");
  state_.active = GroupStructure::single_group(n_clients);
  state_.gamma_tilde = 1.0;
}

bool Controller::on_rdp_end(const GroupGraph& graph, int t0) {
  if (state_.phase != ControllerPhase::training) {
    throw StateError("a split trial can only be armed while training");
  }
  if (state_.gamma_tilde <= 0.0 || params_.lambda <= 0.0) return false;
  double candidate = state_.gamma_tilde;
  GroupStructure g1;
  do {
    candidate = candidate - params_.lambda;
    // Accumulated steps like 1 - 5*0.2 land a hair above zero.
    if (candidate < 1e-12) candidate = 0.0;
    g1 = groups_at(graph, candidate);
  } while (g1.same_partition(state_.active) && candidate > 0.0);
  if (g1.same_partition(state_.active)) return false;
  state_.trial = SplitTrial{state_.active, std::move(g1), candidate, t0};
  state_.phase = ControllerPhase::trial_pending;
  return true;
}

TrialResult Controller::run_split_trial(std::span<const double> losses_g0,
                                        std::span<const double> losses_g1) {
  if (state_.phase != ControllerPhase::trial_pending || !state_.trial) {
    throw StateError("no split trial is pending");
  }
  const std::size_t n = state_.active.num_clients();
  if (losses_g0.size() != n || losses_g1.size() != n) {
    throw StateError("split trial is missing client losses");
  }
  TrialResult res;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(losses_g0[i]) || !std::isfinite(losses_g1[i])) {
      throw NumericalError("non-finite trial loss", i);
    }
    res.loss_g0 += losses_g0[i];
    res.loss_g1 += losses_g1[i];
  }
  res.loss_g0 /= static_cast<double>(n);
  res.loss_g1 /= static_cast<double>(n);
  res.adopted = res.loss_g0 > res.loss_g1;
  if (res.adopted) {
    state_.active = std::move(state_.trial->g1);
    state_.gamma_tilde = state_.trial->gamma_tilde_1;
    state_.active.gamma_tilde = state_.gamma_tilde;
    state_.phase = ControllerPhase::training;
    state_.cooldown_remaining = 0;
  } else {
    state_.phase = ControllerPhase::cooldown;
    state_.cooldown_remaining = params_.t_sp;
    // The trial round itself does not count toward the cooldown.
    skip_tick_ = true;
  }
  state_.trial.reset();
  return res;
}

bool Controller::end_round() {
  if (state_.phase != ControllerPhase::cooldown) return false;
  if (skip_tick_) {
    skip_tick_ = false;
  } else {
    --state_.cooldown_remaining;
  }
  if (state_.cooldown_remaining > 0) return false;
  state_.phase = ControllerPhase::training;
  return true;
}

}  // namespace dcpfl
