#pragma once

#include <cstddef>
#include <vector>

#include "dcpfl/discrepancy.hpp"

namespace dcpfl {

// One agglomeration step. Cluster ids follow the usual dendrogram convention:
// leaves are 0..n-1 and the k-th merge creates cluster n+k.
struct MergeEvent {
  std::size_t cluster_a = 0;
  std::size_t cluster_b = 0;
  double distance = 0.0;   // recorded (monotone) merge height
  std::size_t size = 0;    // members in the merged cluster
};

// Average-linkage dendrogram over n clients.
struct GroupGraph {
  std::size_t n = 0;
  std::vector<MergeEvent> merges;
  double gamma_global = 0.0;
};

// A partition of clients into groups. Groups are ordered by their smallest
// member and members are sorted ascending.
struct GroupStructure {
  std::vector<std::vector<std::size_t>> groups;
  double gamma_tilde = 1.0;

  std::size_t num_groups() const noexcept { return groups.size(); }
  std::size_t num_clients() const noexcept;
  /// Group index of every client.
  std::vector<std::size_t> assignment() const;
  bool same_partition(const GroupStructure& other) const noexcept { return groups == other.groups; }

  static GroupStructure single_group(std::size_t n);
  static GroupStructure singletons(std::size_t n);
};

/// Agglomerative clustering with average linkage. Ties go to the candidate
/// pair whose (smallest member, smallest member) ids are lexicographically
/// least. A merge lower than its predecessor is clamped up to it.
GroupGraph build_group_graph(const DistanceMatrix& d);
inline GroupGraph build_group_graph(const DiscrepancyMatrix& d) {
  return build_group_graph(d.distances);
}

/// Cut at raw threshold gamma_tilde * gamma_global, applying every merge with
/// distance <= threshold.
GroupStructure groups_at(const GroupGraph& graph, double gamma_tilde);

/// True when every group of `fine` lies inside one group of `coarse`.
bool refines(const GroupStructure& fine, const GroupStructure& coarse);

}  // namespace dcpfl
