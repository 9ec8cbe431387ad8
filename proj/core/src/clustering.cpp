#include "dcpfl/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "dcpfl/errors.hpp"

namespace dcpfl {

std::size_t GroupStructure::num_clients() const noexcept {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

std::vector<std::size_t> GroupStructure::assignment() const {
  std::vector<std::size_t> out(num_clients(), 0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t c : groups[g]) out.at(c) = g;
  }
  return out;
}

GroupStructure GroupStructure::single_group(std::size_t n) {
  GroupStructure gs;
  gs.groups.emplace_back(n);
  std::iota(gs.groups[0].begin(), gs.groups[0].end(), std::size_t{0});
  gs.gamma_tilde = 1.0;
  return gs;
}

GroupStructure GroupStructure::singletons(std::size_t n) {
  GroupStructure gs;
  for (std::size_t i = 0; i < n; ++i) gs.groups.push_back({i});
  gs.gamma_tilde = 0.0;
  return gs;
}

namespace {

struct Cluster {
  std::size_t id;
  std::vector<std::size_t> members;  // sorted
};

double average_linkage(const DistanceMatrix& d, const Cluster& a, const Cluster& b) {
  double total = 0.0;
  for (std::size_t i : a.members) {
    for (std::size_t j : b.members) total += d.at(i, j);
  }
  return total / static_cast<double>(a.members.size() * b.members.size());
}

}  // namespace

GroupGraph build_group_graph(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  if (n < 2) throw InputError("group graph needs at least two clients");
  d.validate();

  std::vector<Cluster> active;
  active.reserve(n);
  for (std::size_t i = 0; i < n; ++i) active.push_back({i, {i}});

  GroupGraph graph;
  graph.n = n;
  double running_max = 0.0;
  std::size_t next_id = n;
  while (active.size() > 1) {
    // Active clusters stay sorted by smallest member, so scanning (i < j)
    // visits candidate pairs in lexicographic order of their smallest ids and
    // the strict comparison keeps the first of any tie.
    std::size_t best_i = 0, best_j = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        const double dist = average_linkage(d, active[i], active[j]);
        if (dist < best) {
          best = dist;
          best_i = i;
          best_j = j;
        }
      }
    }
    running_max = std::max(running_max, best);
    Cluster merged{next_id++, {}};
    merged.members = active[best_i].members;
    merged.members.insert(merged.members.end(), active[best_j].members.begin(),
                          active[best_j].members.end());
    std::sort(merged.members.begin(), merged.members.end());
    graph.merges.push_back({active[best_i].id, active[best_j].id, running_max, merged.members.size()});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_j));
    active[best_i] = std::move(merged);
    std::sort(active.begin(), active.end(), [](const Cluster& a, const Cluster& b) {
      return a.members.front() < b.members.front();
    });
  }
  graph.gamma_global = graph.merges.back().distance;
  return graph;
}

GroupStructure groups_at(const GroupGraph& graph, double gamma_tilde) {
  if (!(gamma_tilde >= 0.0 && gamma_tilde <= 1.0)) {
    throw InputError("normalized threshold must lie in [0, 1]");
  }
  const std::size_t n = graph.n;
  const double threshold = gamma_tilde * graph.gamma_global;

  // Union-find over leaves; cluster ids >= n resolve through their merge.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::size_t> representative(n + graph.merges.size());
  std::iota(representative.begin(), representative.begin() + static_cast<std::ptrdiff_t>(n),
            std::size_t{0});
  for (std::size_t k = 0; k < graph.merges.size(); ++k) {
    const auto& m = graph.merges[k];
    const std::size_t ra = find(representative[m.cluster_a]);
    const std::size_t rb = find(representative[m.cluster_b]);
    // gamma_tilde == 1 must always unite everything, independent of rounding.
    if (m.distance <= threshold || gamma_tilde == 1.0) parent[std::max(ra, rb)] = std::min(ra, rb);
    representative[n + k] = std::min(ra, rb);
  }

  std::vector<std::vector<std::size_t>> by_root(n);
  for (std::size_t i = 0; i < n; ++i) by_root[find(i)].push_back(i);
  GroupStructure gs;
  gs.gamma_tilde = gamma_tilde;
  for (auto& g : by_root) {
    if (!g.empty()) gs.groups.push_back(std::move(g));
  }
  std::sort(gs.groups.begin(), gs.groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return gs;
}

bool refines(const GroupStructure& fine, const GroupStructure& coarse) {
  const auto owner = coarse.assignment();
  for (const auto& g : fine.groups) {
    for (std::size_t c : g) {
      if (owner.at(c) != owner.at(g.front())) return false;
    }
  }
  return true;
}

}  // namespace dcpfl
