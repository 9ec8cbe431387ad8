#include "dcpfl/aggregation.hpp"

#include <algorithm>
#include <numeric>

#include "dcpfl/errors.hpp"

namespace dcpfl {

void aggregate_layer(std::span<const WeightedModel> clients, ModelParams& group_model,
                     std::size_t layer) {
  if (clients.empty()) throw InputError("aggregation over no clients");
  std::size_t total = 0;
  for (const auto& c : clients) {
    if (!c.params->same_shape(group_model)) throw ConfigError("client and group model differ in shape");
    total += c.size;
  }
  if (total == 0) throw InputError("aggregation weights sum to zero");
  auto& out = group_model.layer(layer);
  std::fill(out.weights.begin(), out.weights.end(), 0.0);
  std::fill(out.biases.begin(), out.biases.end(), 0.0);
  for (const auto& c : clients) {
    const double w = static_cast<double>(c.size) / static_cast<double>(total);
    const auto& src = c.params->layer(layer);
    for (std::size_t i = 0; i < out.weights.size(); ++i) out.weights[i] += w * src.weights[i];
    for (std::size_t i = 0; i < out.biases.size(); ++i) out.biases[i] += w * src.biases[i];
  }
}

ModelParams weighted_average(std::span<const WeightedModel> clients) {
  if (clients.empty()) throw InputError("aggregation over no clients");
  ModelParams out(clients.front().params->layer_dims());
  for (std::size_t l = 0; l < out.num_layers(); ++l) aggregate_layer(clients, out, l);
  return out;
}

GroupModelStore GroupModelStore::from_clients(const GroupStructure& structure,
                                              std::vector<ModelParams> client_models,
                                              std::vector<std::size_t> dataset_sizes) {
  if (client_models.size() != dataset_sizes.size() ||
      structure.num_clients() != client_models.size()) {
    throw StateError("group structure does not cover the client set");
  }
  GroupModelStore store;
  store.client_uploads = std::move(client_models);
  store.dataset_sizes = std::move(dataset_sizes);
  for (const auto& members : structure.groups) {
    std::vector<WeightedModel> wm;
    for (std::size_t c : members) wm.push_back({&store.client_uploads[c], store.dataset_sizes[c]});
    store.group_models.push_back(weighted_average(wm));
  }
  return store;
}

std::uint64_t RoundUpload::total() const noexcept {
  return std::accumulate(bytes_per_client.begin(), bytes_per_client.end(), std::uint64_t{0});
}

RoundUpload aggregate_round(GroupModelStore& store, const GroupStructure& structure,
                            std::span<const GroupLayer> to_aggregate) {
  const std::size_t n = store.client_uploads.size();
  if (structure.num_groups() != store.group_models.size() || structure.num_clients() != n ||
      store.dataset_sizes.size() != n) {
    throw StateError("model store does not match the group structure");
  }
  RoundUpload up;
  up.bytes_per_client.assign(n, 0);
  up.bytes_per_group.assign(structure.num_groups(), 0);
  for (const auto& [g, l] : to_aggregate) {
    if (g >= structure.num_groups()) throw StateError("scheduled group does not exist");
    const auto& members = structure.groups[g];
    std::vector<WeightedModel> wm;
    wm.reserve(members.size());
    for (std::size_t c : members) wm.push_back({&store.client_uploads.at(c), store.dataset_sizes[c]});
    aggregate_layer(wm, store.group_models[g], l);
    const std::uint64_t bytes = kBytesPerParam * store.group_models[g].layer(l).size();
    for (std::size_t c : members) up.bytes_per_client[c] += bytes;
    up.bytes_per_group[g] += bytes * members.size();
  }
  return up;
}

}  // namespace dcpfl
