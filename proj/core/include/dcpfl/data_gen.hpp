#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dcpfl/dataset.hpp"

namespace dcpfl {

// Floor applied to every label probability before renormalisation.
inline constexpr double kLabelSmoothing = 1e-6;

// Primary/secondary class skew for one client. Percentages.
struct SkewSpec {
  double sigma_p = 50.0;
  double sigma_s = 30.0;
  std::size_t num_classes = 10;
  std::size_t samples_per_client = 100;

  void validate() const;
};

// Class-conditional feature model shared by every client: one Gaussian blob
// per class with unit-variance isotropic noise around a seeded center.
struct FeatureSpace {
  std::size_t dim = 0;
  std::vector<std::vector<double>> centers;

  std::size_t num_classes() const noexcept { return centers.size(); }
};

/// Centers drawn N(0, separation^2) per coordinate.
FeatureSpace make_feature_space(std::size_t num_classes, std::size_t dim, double separation,
                                std::uint64_t seed);

/// Per-class sample counts for a skew: the primary class gets sigma_p% of
/// samples, the secondary sigma_s%, and the rest is split evenly over the
/// remaining classes (leftover samples go to the lowest-index classes).
std::vector<std::size_t> skew_class_counts(const SkewSpec& spec, std::size_t primary,
                                           std::size_t secondary);

/// Generates one client's samples. Primary and secondary classes are drawn
/// from `seed`, as are the features; deterministic per seed.
ClientDataset make_client_dataset(const SkewSpec& spec, const FeatureSpace& space, int client_id,
                                  std::uint64_t seed);

/// Floors every entry at kLabelSmoothing and renormalises.
std::vector<double> smooth_distribution(std::span<const double> p);

/// Empirical label frequencies of `labels`, smoothed.
std::vector<double> label_distribution(std::span<const int> labels, std::size_t num_classes);

/// KL(p || q) in nats. Both must be strictly positive and sum to one.
double pairwise_kld(std::span<const double> p, std::span<const double> q);

double symmetric_kld(std::span<const double> p, std::span<const double> q);
double symmetric_kld(const ClientDataset& a, const ClientDataset& b);

/// Mean symmetric KLD over all unordered client pairs.
double group_kld(std::span<const ClientDataset> clients);
double group_kld(std::span<const std::vector<double>> distributions);

/// Stratified split: the first `fraction` of each class (rounded) becomes
/// the test set. Both halves keep the client's label distribution.
struct TrainTestSplit {
  ClientDataset train;
  ClientDataset test;
};
TrainTestSplit split_holdout(const ClientDataset& data, double fraction);

// Heterogeneity bands from sampled group-KLD values: the observed range is
// divided into three equal-length sub-intervals.
struct HeterogeneityBands {
  double lo = 0.0;
  double hi = 0.0;

  enum class Level { low, mid, high };
  Level classify(double group_kld) const noexcept;
};
HeterogeneityBands heterogeneity_bands(std::span<const double> group_klds);
const char* to_string(HeterogeneityBands::Level level) noexcept;

/// Columnar CSV: client_id,label,f0,f1,...
void write_datasets_csv(std::ostream& out, std::span<const ClientDataset> clients);
std::vector<ClientDataset> read_datasets_csv(std::istream& in, std::size_t num_classes);

}  // namespace dcpfl
