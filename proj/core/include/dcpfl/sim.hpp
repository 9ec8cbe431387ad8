#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcpfl/clustering.hpp"
#include "dcpfl/data_gen.hpp"
#include "dcpfl/discrepancy.hpp"
#include "dcpfl/nn.hpp"
#include "dcpfl/rdp.hpp"

namespace dcpfl {

enum class Algorithm { dcpfl, fedavg, standalone, fixed_group, naive_dynamic };

// Where fixed_group / naive_dynamic take their dendrogram from: the true
// dataset KLD (known up front) or the model discrepancy frozen after t_start.
enum class GroupSource { kld, discrepancy };

const char* to_string(Algorithm a) noexcept;
const char* to_string(GroupSource g) noexcept;
std::optional<Algorithm> parse_algorithm(const std::string& s);
std::optional<GroupSource> parse_group_source(const std::string& s);

struct RunConfig {
  std::string name = "run";
  Algorithm algorithm = Algorithm::dcpfl;
  std::size_t n_clients = 30;
  std::vector<std::size_t> layer_dims{16, 32, 10};

  // Data skew: each client draws sigma_p and sigma_s uniformly from these ranges.
  double sigma_p_min = 40.0;
  double sigma_p_max = 60.0;
  double sigma_s_min = 20.0;
  double sigma_s_max = 40.0;
  std::size_t samples_per_client = 100;
  double class_separation = 0.8;
  double holdout_fraction = 0.2;

  double lr = 0.05;
  int local_epochs = 1;
  std::size_t batch_size = 32;

  int tau = 5;
  int alpha = 3;
  bool layerwise = true;
  double lambda = 0.2;
  int t_obv = 3;
  int t_sp = 6;
  int window = 5;
  int t_start = 5;
  bool capture_discrepancy = true;

  int max_rounds = 100;
  double converge_tol = 1e-4;
  int converge_rounds = 10;

  double link_rate = 2e6;             // bits per second
  double comp_time_per_sample = 1e-4; // seconds

  std::uint64_t seed = 1;
  std::uint64_t task_seed = 0;        // 0: derive the class centers from `seed`

  double gamma_tilde = 0.8;           // fixed_group / naive_dynamic cut
  int split_round = 50;               // naive_dynamic
  GroupSource group_source = GroupSource::kld;

  int threads = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// splitmix64 over (seed, stream, a, b); the per-purpose seed derivation used
/// everywhere in a run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a = 0,
                          std::uint64_t b = 0);

enum SeedStream : std::uint64_t {
  kStreamFeatures = 1,
  kStreamSkew = 2,
  kStreamData = 3,
  kStreamInit = 4,
  kStreamTrain = 5,
};

// Generated client population for a config.
struct ClientPopulation {
  std::vector<ClientDataset> full;
  std::vector<ClientDataset> train;
  std::vector<ClientDataset> test;
  DistanceMatrix kld;  // symmetric dataset KLD between clients
  double group_kld = 0.0;

  std::vector<std::size_t> train_sizes() const;
};

ClientPopulation make_population(const RunConfig& cfg);
ModelParams initial_model(const RunConfig& cfg);

/// Per-client accuracy of `models[i]` on `test_sets[i]`.
std::vector<double> evaluate(std::span<const ModelParams> models,
                             std::span<const ClientDataset> test_sets);

struct SimClock {
  double comp_time = 0.0;
  double comm_time = 0.0;
  int communication_rounds = 0;

  double total_time() const noexcept { return comp_time + comm_time; }
};

struct ControllerEvent {
  int round = 0;
  std::string type;
  std::string detail_json;  // JSON object with event-specific fields
};

struct RoundRecord {
  int round = 0;
  std::vector<double> train_loss;
  std::vector<double> accuracy;
  double mean_loss = 0.0;
  double mean_accuracy = 0.0;
  GroupStructure groups;
  double gamma_tilde = 1.0;
  std::vector<std::uint64_t> bytes_up;
  std::vector<std::uint64_t> bytes_down;
  std::vector<std::uint64_t> bytes_per_group;
  double comp_time = 0.0;
  double comm_time = 0.0;
  bool communication_round = false;
  bool trial_round = false;
  std::size_t layers_aggregated = 0;
  std::vector<ControllerEvent> events;

  std::uint64_t total_bytes_up() const noexcept;
  std::uint64_t total_bytes_down() const noexcept;
};

struct RunSummary {
  std::string name;
  Algorithm algorithm = Algorithm::dcpfl;
  std::size_t n_clients = 0;
  std::uint64_t seed = 0;
  int rounds_run = 0;
  bool converged_early = false;
  double final_mean_accuracy = 0.0;
  double final_mean_loss = 0.0;
  double final_gamma_tilde = 1.0;
  std::size_t final_num_groups = 1;
  std::uint64_t total_bytes_up = 0;
  std::uint64_t total_bytes_down = 0;
  SimClock clock;
  double group_kld = 0.0;
  std::optional<double> discrepancy_kld_pearson;
  int splits_adopted = 0;
  int trials_rejected = 0;
  std::vector<double> final_accuracy;
};

struct RunResult {
  RunConfig config;
  std::vector<RoundRecord> records;
  RunSummary summary;
  LossTrace trace;
  std::optional<DiscrepancyMatrix> discrepancy;
  std::optional<GroupGraph> graph;
  DistanceMatrix kld;
  std::vector<ClientDataset> datasets;  // full per-client data
};

struct RunObserver {
  // Called after each round with every client's current model.
  std::function<void(int round, std::span<const ModelParams> models)> on_round;
};

/// Executes a full simulation. ConfigError before round 1 for invalid
/// configs; NumericalError messages carry the failing round.
RunResult run(const RunConfig& config, const RunObserver* observer = nullptr);

/// run() for algorithm = naive_dynamic; checks split_round <= max_rounds.
RunResult run_naive_dynamic(RunConfig config, const RunObserver* observer = nullptr);

}  // namespace dcpfl
