#pragma once

#include <cstddef>
#include <vector>

#include "dcpfl/matrix.hpp"

namespace dcpfl {

// Labeled samples owned by one client together with the exact (smoothed)
// label distribution they were drawn with.
struct ClientDataset {
  int client_id = 0;
  std::size_t num_classes = 0;
  Matrix features;              // one sample per row
  std::vector<int> labels;      // class index per row
  std::vector<double> label_dist;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }
  bool empty() const noexcept { return labels.empty(); }
};

}  // namespace dcpfl
