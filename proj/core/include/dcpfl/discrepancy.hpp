#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dcpfl/nn.hpp"

namespace dcpfl {

// Symmetric n x n matrix of non-negative distances with a zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  /// Sets both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double v) {
    values_[i * n_ + j] = v;
    values_[j * n_ + i] = v;
  }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Throws InputError on NaN, negative, asymmetric or non-zero-diagonal data.
  void validate() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

struct DiscrepancyMatrix {
  DistanceMatrix distances;
  int rounds_averaged = 0;

  std::size_t size() const noexcept { return distances.size(); }
};

struct LayerDiscrepancyProfile {
  std::size_t group_id = 0;
  std::vector<double> per_layer;
  double model_avg = 0.0;
};

/// Linear min-max scaling to [0, 1]; a constant vector maps to zeros.
std::vector<double> scale(std::span<const double> w);

/// Mean absolute difference of the min-max scaled, flattened models.
double model_discrepancy(const ModelParams& a, const ModelParams& b);

/// Pairwise discrepancy of one round's client models.
DistanceMatrix discrepancy_matrix(std::span<const ModelParams> clients);

// Running mean of per-round discrepancy matrices.
class DiscrepancyAccumulator {
 public:
  explicit DiscrepancyAccumulator(std::size_t n) : sum_(n * n, 0.0), n_(n) {}

  void add_round(std::span<const ModelParams> clients);
  int rounds() const noexcept { return rounds_; }
  DiscrepancyMatrix mean() const;

 private:
  std::vector<double> sum_;
  std::size_t n_;
  int rounds_ = 0;
};

/// Mean discrepancy over rounds 1..t_start of `history` (one entry per round,
/// each holding every client's model).
DiscrepancyMatrix averaged_discrepancy_matrix(std::span<const std::vector<ModelParams>> history,
                                              int t_start);

/// Per-layer mean scaled L1 distance between the members and their group model.
LayerDiscrepancyProfile layer_discrepancy(std::span<const ModelParams> group_clients,
                                          const ModelParams& group_model,
                                          std::size_t group_id = 0);

}  // namespace dcpfl
