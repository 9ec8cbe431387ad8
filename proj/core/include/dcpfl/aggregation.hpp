#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dcpfl/clustering.hpp"
#include "dcpfl/nn.hpp"

namespace dcpfl {

inline constexpr std::uint64_t kBytesPerParam = 4;

struct WeightedModel {
  const ModelParams* params;
  std::size_t size;
};

/// Replaces `layer` of `group_model` by the size-weighted mean of the
/// clients' copies of that layer. Other layers are left untouched.
void aggregate_layer(std::span<const WeightedModel> clients, ModelParams& group_model,
                     std::size_t layer);

/// Whole-model weighted mean.
ModelParams weighted_average(std::span<const WeightedModel> clients);

// (group index, layer index)
using GroupLayer = std::pair<std::size_t, std::size_t>;

// Server-side model state for one group structure.
struct GroupModelStore {
  std::vector<ModelParams> group_models;
  std::vector<ModelParams> client_uploads;
  std::vector<std::size_t> dataset_sizes;

  /// Every group model initialised from the size-weighted mean of its members.
  static GroupModelStore from_clients(const GroupStructure& structure,
                                      std::vector<ModelParams> client_models,
                                      std::vector<std::size_t> dataset_sizes);
};

struct RoundUpload {
  std::vector<std::uint64_t> bytes_per_client;
  std::vector<std::uint64_t> bytes_per_group;

  std::uint64_t total() const noexcept;
};

/// Aggregates every scheduled (group, layer) from the current client uploads.
/// Throws StateError when the store does not match `structure`.
RoundUpload aggregate_round(GroupModelStore& store, const GroupStructure& structure,
                            std::span<const GroupLayer> to_aggregate);

}  // namespace dcpfl
