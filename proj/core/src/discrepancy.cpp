#include "dcpfl/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcpfl/errors.hpp"

namespace dcpfl {

void DistanceMatrix::validate() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (at(i, i) != 0.0) throw InputError("distance matrix diagonal must be zero");
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = at(i, j);
      if (std::isnan(v)) throw InputError("distance matrix contains NaN");
      if (v < 0.0 || !std::isfinite(v)) throw InputError("distance matrix entries must be finite and >= 0");
      if (v != at(j, i)) throw InputError("distance matrix is not symmetric");
    }
  }
}

std::vector<double> scale(std::span<const double> w) {
  if (w.empty()) throw InputError("cannot scale an empty vector");
  const auto [mn, mx] = std::minmax_element(w.begin(), w.end());
  const double lo = *mn;
  const double range = *mx - lo;
  std::vector<double> out(w.size(), 0.0);
  if (range == 0.0) return out;
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = (w[i] - lo) / range;
  return out;
}

namespace {

double scaled_l1_mean(std::span<const double> a, std::span<const double> b) {
  const auto sa = scale(a);
  const auto sb = scale(b);
  double total = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) total += std::abs(sa[i] - sb[i]);
  return total / static_cast<double>(sa.size());
}

}  // namespace

double model_discrepancy(const ModelParams& a, const ModelParams& b) {
  if (!a.same_shape(b)) throw ConfigError("model discrepancy between differently shaped models");
  return scaled_l1_mean(a.flatten(), b.flatten());
}

DistanceMatrix discrepancy_matrix(std::span<const ModelParams> clients) {
  const std::size_t n = clients.size();
  std::vector<std::vector<double>> scaled;
  scaled.reserve(n);
  for (const auto& c : clients) {
    if (!c.same_shape(clients.front())) throw ConfigError("client models differ in shape");
    scaled.push_back(scale(c.flatten()));
  }
  DistanceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double total = 0.0;
      for (std::size_t k = 0; k < scaled[i].size(); ++k) total += std::abs(scaled[i][k] - scaled[j][k]);
      m.set(i, j, total / static_cast<double>(scaled[i].size()));
    }
  }
  return m;
}

void DiscrepancyAccumulator::add_round(std::span<const ModelParams> clients) {
  if (clients.size() != n_) throw StateError("discrepancy round is missing clients");
  const DistanceMatrix m = discrepancy_matrix(clients);
  for (std::size_t k = 0; k < sum_.size(); ++k) sum_[k] += m.values()[k];
  ++rounds_;
}

DiscrepancyMatrix DiscrepancyAccumulator::mean() const {
  if (rounds_ == 0) throw StateError("no discrepancy rounds recorded");
  DiscrepancyMatrix out{DistanceMatrix(n_), rounds_};
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) out.distances.set(i, j, sum_[i * n_ + j] / rounds_);
  }
  return out;
}

DiscrepancyMatrix averaged_discrepancy_matrix(std::span<const std::vector<ModelParams>> history,
                                              int t_start) {
  if (t_start < 1) throw InputError("t_start must be at least 1");
  if (history.size() < static_cast<std::size_t>(t_start)) {
    throw StateError("history covers " + std::to_string(history.size()) + " rounds, need " +
                     std::to_string(t_start));
  }
  DiscrepancyAccumulator acc(history.front().size());
  for (int t = 0; t < t_start; ++t) acc.add_round(history[static_cast<std::size_t>(t)]);
  return acc.mean();
}

LayerDiscrepancyProfile layer_discrepancy(std::span<const ModelParams> group_clients,
                                          const ModelParams& group_model, std::size_t group_id) {
  if (group_clients.empty()) throw InputError("layer discrepancy of an empty group");
  LayerDiscrepancyProfile prof;
  prof.group_id = group_id;
  prof.per_layer.assign(group_model.num_layers(), 0.0);
  for (const auto& c : group_clients) {
    if (!c.same_shape(group_model)) throw ConfigError("client and group model differ in shape");
  }
  for (std::size_t l = 0; l < group_model.num_layers(); ++l) {
    const auto g = group_model.flatten_layer(l);
    double total = 0.0;
    for (const auto& c : group_clients) total += scaled_l1_mean(c.flatten_layer(l), g);
    prof.per_layer[l] = total / static_cast<double>(group_clients.size());
  }
  double sum = 0.0;
  for (double v : prof.per_layer) sum += v;
  prof.model_avg = sum / static_cast<double>(prof.per_layer.size());
  return prof;
}

}  // namespace dcpfl
