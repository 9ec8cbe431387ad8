#include "dcpfl/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "dcpfl/errors.hpp"

namespace dcpfl {

void SkewSpec::validate() const {
  if (num_classes < 2) throw InputError("need at least two classes");
  if (samples_per_client == 0) throw InputError("samples_per_client must be positive");
  if (sigma_p < 0.0 || sigma_s < 0.0) throw InputError("skew percentages must be non-negative");
  if (sigma_p + sigma_s > 100.0) {
    throw InputError("sigma_p + sigma_s exceeds 100 percent");
  }
}

FeatureSpace make_feature_space(std::size_t num_classes, std::size_t dim, double separation,
                                std::uint64_t seed) {
  if (num_classes < 2 || dim == 0) throw InputError("feature space needs >= 2 classes, dim >= 1");
  FeatureSpace fs;
  fs.dim = dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, separation);
  fs.centers.assign(num_classes, std::vector<double>(dim));
  for (auto& c : fs.centers) {
    for (double& v : c) v = normal(rng);
  }
  return fs;
}

std::vector<std::size_t> skew_class_counts(const SkewSpec& spec, std::size_t primary,
                                           std::size_t secondary) {
  spec.validate();
  const std::size_t c = spec.num_classes;
  const std::size_t n = spec.samples_per_client;
  if (primary >= c || secondary >= c || primary == secondary) {
    throw InputError("primary and secondary classes must be distinct valid classes");
  }
  std::vector<std::size_t> counts(c, 0);
  const auto pct = [n](double p) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) * p / 100.0));
  };
  counts[primary] = std::min(n, pct(spec.sigma_p));
  counts[secondary] = std::min(n - counts[primary], pct(spec.sigma_s));
  std::size_t rest = n - counts[primary] - counts[secondary];
  if (c == 2) {
    counts[primary] += rest;
    return counts;
  }
  const std::size_t base = rest / (c - 2);
  std::size_t extra = rest % (c - 2);
  for (std::size_t k = 0; k < c; ++k) {
    if (k == primary || k == secondary) continue;
    counts[k] = base + (extra > 0 ? 1 : 0);
    if (extra > 0) --extra;
  }
  return counts;
}

ClientDataset make_client_dataset(const SkewSpec& spec, const FeatureSpace& space, int client_id,
                                  std::uint64_t seed) {
  spec.validate();
  if (space.num_classes() != spec.num_classes) {
    throw InputError("feature space class count differs from skew spec");
  }
  std::mt19937_64 rng(seed);
  const std::size_t c = spec.num_classes;
  std::uniform_int_distribution<std::size_t> pick(0, c - 1);
  const std::size_t primary = pick(rng);
  std::uniform_int_distribution<std::size_t> pick_other(0, c - 2);
  std::size_t secondary = pick_other(rng);
  if (secondary >= primary) ++secondary;

  const auto counts = skew_class_counts(spec, primary, secondary);
  std::vector<int> labels;
  labels.reserve(spec.samples_per_client);
  for (std::size_t k = 0; k < c; ++k) labels.insert(labels.end(), counts[k], static_cast<int>(k));
  std::shuffle(labels.begin(), labels.end(), rng);

  ClientDataset ds;
  ds.client_id = client_id;
  ds.num_classes = c;
  ds.features = Matrix(labels.size(), space.dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto& center = space.centers[static_cast<std::size_t>(labels[r])];
    auto row = ds.features.row(r);
    for (std::size_t d = 0; d < space.dim; ++d) row[d] = center[d] + noise(rng);
  }
  ds.label_dist = label_distribution(labels, c);
  ds.labels = std::move(labels);
  return ds;
}

std::vector<double> smooth_distribution(std::span<const double> p) {
  std::vector<double> out(p.begin(), p.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::max(v, kLabelSmoothing);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> label_distribution(std::span<const int> labels, std::size_t num_classes) {
  if (labels.empty()) throw InputError("label distribution of an empty set");
  std::vector<double> freq(num_classes, 0.0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw InputError("label out of range");
    freq[static_cast<std::size_t>(y)] += 1.0;
  }
  for (double& v : freq) v /= static_cast<double>(labels.size());
  return smooth_distribution(freq);
}

namespace {

void check_distribution(std::span<const double> p, const char* name) {
  double total = 0.0;
  for (double v : p) {
    if (!(v > 0.0)) {
      throw InputError(std::string(name) + " has a non-positive entry; smooth it first");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError(std::string(name) + " does not sum to 1");
}

}  // namespace

double pairwise_kld(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw InputError("distributions differ in length");
  check_distribution(p, "p");
  check_distribution(q, "q");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
  return std::max(0.0, kl);
}

double symmetric_kld(std::span<const double> p, std::span<const double> q) {
  return 0.5 * (pairwise_kld(p, q) + pairwise_kld(q, p));
}

double symmetric_kld(const ClientDataset& a, const ClientDataset& b) {
  if (a.num_classes != b.num_classes) throw InputError("datasets differ in class count");
  return symmetric_kld(a.label_dist, b.label_dist);
}

double group_kld(std::span<const std::vector<double>> distributions) {
  const std::size_t n = distributions.size();
  if (n < 2) throw InputError("group KLD needs at least two clients");
  double total = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) total += symmetric_kld(distributions[i], distributions[j]);
  }
  return total / (static_cast<double>(n * (n - 1)) / 2.0);
}

double group_kld(std::span<const ClientDataset> clients) {
  std::vector<std::vector<double>> dists;
  dists.reserve(clients.size());
  for (const auto& c : clients) {
    if (!clients.empty() && c.num_classes != clients.front().num_classes) {
      throw InputError("datasets differ in class count");
    }
    dists.push_back(c.label_dist);
  }
  return group_kld(std::span<const std::vector<double>>(dists));
}

TrainTestSplit split_holdout(const ClientDataset& data, double fraction) {
  if (fraction < 0.0 || fraction >= 1.0) throw InputError("holdout fraction must be in [0, 1)");
  std::vector<std::size_t> per_class(data.num_classes, 0);
  for (int y : data.labels) ++per_class[static_cast<std::size_t>(y)];
  std::vector<std::size_t> test_quota(data.num_classes);
  for (std::size_t k = 0; k < data.num_classes; ++k) {
    test_quota[k] = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(per_class[k])));
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t r = 0; r < data.size(); ++r) {
    auto& quota = test_quota[static_cast<std::size_t>(data.labels[r])];
    if (quota > 0) {
      test_rows.push_back(r);
      --quota;
    } else {
      train_rows.push_back(r);
    }
  }
  const auto take = [&](const std::vector<std::size_t>& rows) {
    ClientDataset out;
    out.client_id = data.client_id;
    out.num_classes = data.num_classes;
    out.features = Matrix(rows.size(), data.feature_dim());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto src = data.features.row(rows[i]);
      std::copy(src.begin(), src.end(), out.features.row(i).begin());
      out.labels.push_back(data.labels[rows[i]]);
    }
    out.label_dist = rows.empty() ? data.label_dist : label_distribution(out.labels, data.num_classes);
    return out;
  };
  return {take(train_rows), take(test_rows)};
}

HeterogeneityBands::Level HeterogeneityBands::classify(double value) const noexcept {
  const double width = (hi - lo) / 3.0;
  if (value < lo + width) return Level::low;
  if (value < lo + 2.0 * width) return Level::mid;
  return Level::high;
}

HeterogeneityBands heterogeneity_bands(std::span<const double> group_klds) {
  if (group_klds.empty()) throw InputError("no heterogeneity samples");
  const auto [mn, mx] = std::minmax_element(group_klds.begin(), group_klds.end());
  return {*mn, *mx};
}

const char* to_string(HeterogeneityBands::Level level) noexcept {
  switch (level) {
    case HeterogeneityBands::Level::low: return "Low";
    case HeterogeneityBands::Level::mid: return "Mid";
    case HeterogeneityBands::Level::high: return "High";
  }
  return "?";
}

void write_datasets_csv(std::ostream& out, std::span<const ClientDataset> clients) {
  const std::size_t dim = clients.empty() ? 0 : clients.front().feature_dim();
  out << "client_id,label";
  for (std::size_t d = 0; d < dim; ++d) out << ",f" << d;
  out << '\n';
  out.precision(17);
  for (const auto& c : clients) {
    for (std::size_t r = 0; r < c.size(); ++r) {
      out << c.client_id << ',' << c.labels[r];
      for (double v : c.features.row(r)) out << ',' << v;
      out << '\n';
    }
  }
}

std::vector<ClientDataset> read_datasets_csv(std::istream& in, std::size_t num_classes) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty dataset CSV");
  const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;
  std::map<int, std::pair<std::vector<double>, std::vector<int>>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError("malformed number on dataset CSV line " + std::to_string(lineno));
      }
    }
    if (vals.size() != dim + 2) {
      throw InputError("wrong column count on dataset CSV line " + std::to_string(lineno));
    }
    auto& [feats, labels] = rows[static_cast<int>(vals[0])];
    labels.push_back(static_cast<int>(vals[1]));
    feats.insert(feats.end(), vals.begin() + 2, vals.end());
  }
  std::vector<ClientDataset> out;
  for (auto& [id, fl] : rows) {
    ClientDataset ds;
    ds.client_id = id;
    ds.num_classes = num_classes;
    ds.features = Matrix(fl.second.size(), dim);
    ds.features.data() = std::move(fl.first);
    ds.label_dist = label_distribution(fl.second, num_classes);
    ds.labels = std::move(fl.second);
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace dcpfl
