#pragma once

#include <optional>
#include <span>
#include <vector>

namespace dcpfl {

/// Pearson correlation; nullopt when either side has zero variance or the
/// inputs hold fewer than two points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Ranks starting at 1, ties get their average rank.
std::vector<double> average_ranks(std::span<const double> x);

/// Spearman rank correlation (Pearson over average ranks).
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);

}  // namespace dcpfl
