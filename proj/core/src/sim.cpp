#include "dcpfl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <random>
#include <thread>

#include "dcpfl/aggregation.hpp"
#include "dcpfl/controller.hpp"
#include "dcpfl/errors.hpp"
#include "dcpfl/stats.hpp"

namespace dcpfl {

using nlohmann::json;

const char* to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::dcpfl: return "dcpfl";
    case Algorithm::fedavg: return "fedavg";
    case Algorithm::standalone: return "standalone";
    case Algorithm::fixed_group: return "fixed_group";
    case Algorithm::naive_dynamic: return "naive_dynamic";
  }
  return "?";
}

const char* to_string(GroupSource g) noexcept {
  return g == GroupSource::kld ? "kld" : "discrepancy";
}

std::optional<Algorithm> parse_algorithm(const std::string& s) {
  for (auto a : {Algorithm::dcpfl, Algorithm::fedavg, Algorithm::standalone, Algorithm::fixed_group,
                 Algorithm::naive_dynamic}) {
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

std::optional<GroupSource> parse_group_source(const std::string& s) {
  if (s == "kld") return GroupSource::kld;
  if (s == "discrepancy") return GroupSource::discrepancy;
  return std::nullopt;
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError(field + ": " + why);
  };
  if (n_clients < 1) fail("n_clients", "must be at least 1");
  if (layer_dims.size() < 2) fail("layer_dims", "needs an input and an output width");
  for (auto w : layer_dims) {
    if (w == 0) fail("layer_dims", "widths must be positive");
  }
  if (layer_dims.back() < 2) fail("layer_dims", "output width (class count) must be >= 2");
  if (sigma_p_min > sigma_p_max) fail("sigma_p_min", "exceeds sigma_p_max");
  if (sigma_s_min > sigma_s_max) fail("sigma_s_min", "exceeds sigma_s_max");
  if (sigma_p_min < 0.0 || sigma_s_min < 0.0) fail("sigma_p_min", "skew percentages must be >= 0");
  if (sigma_p_max + sigma_s_max > 100.0) fail("sigma_p_max", "sigma_p_max + sigma_s_max exceeds 100");
  if (samples_per_client < 2) fail("samples_per_client", "must be at least 2");
  if (!(class_separation >= 0.0)) fail("class_separation", "must be >= 0");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) fail("holdout_fraction", "must be in (0, 1)");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr", "must be finite and >= 0");
  if (local_epochs < 1) fail("local_epochs", "must be at least 1");
  if (batch_size < 1) fail("batch_size", "must be at least 1");
  if (tau < 1) fail("tau", "must be at least 1");
  if (alpha < 1) fail("alpha", "must be at least 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda", "must be in [0, 1]");
  if (t_obv < 1) fail("t_obv", "must be at least 1");
  if (t_sp < 0) fail("t_sp", "must be >= 0");
  if (window < 1) fail("window", "must be at least 1");
  if (t_start < 1) fail("t_start", "must be at least 1");
  if (max_rounds < 1) fail("max_rounds", "must be at least 1");
  if (converge_rounds < 1) fail("converge_rounds", "must be at least 1");
  if (!(link_rate > 0.0)) fail("link_rate", "must be positive");
  if (!(comp_time_per_sample >= 0.0)) fail("comp_time_per_sample", "must be >= 0");
  if (!(gamma_tilde >= 0.0 && gamma_tilde <= 1.0)) fail("gamma_tilde", "must be in [0, 1]");
  if (split_round < 0) fail("split_round", "must be >= 0");
  if (threads < 1) fail("threads", "must be at least 1");
  if (algorithm == Algorithm::dcpfl && n_clients < 2) fail("n_clients", "dcpfl needs at least 2 clients");
  const bool needs_graph = algorithm == Algorithm::fixed_group || algorithm == Algorithm::naive_dynamic;
  if (needs_graph && n_clients < 2) fail("n_clients", "grouping needs at least 2 clients");
  if (needs_graph && group_source == GroupSource::discrepancy) {
    if (!capture_discrepancy) fail("capture_discrepancy", "required when group_source = discrepancy");
    if (algorithm == Algorithm::naive_dynamic && split_round < t_start) {
      fail("split_round", "must be >= t_start when group_source = discrepancy");
    }
  }
  if (algorithm == Algorithm::dcpfl && !capture_discrepancy) {
    fail("capture_discrepancy", "dcpfl needs the discrepancy matrix");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) {
  const auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ stream);
  h = mix(h ^ a);
  h = mix(h ^ b);
  return h;
}

std::vector<std::size_t> ClientPopulation::train_sizes() const {
  std::vector<std::size_t> out;
  out.reserve(train.size());
  for (const auto& d : train) out.push_back(d.size());
  return out;
}

ClientPopulation make_population(const RunConfig& cfg) {
  cfg.validate();
  const std::size_t classes = cfg.layer_dims.back();
  const std::uint64_t task = cfg.task_seed != 0 ? cfg.task_seed : cfg.seed;
  const FeatureSpace space = make_feature_space(classes, cfg.layer_dims.front(), cfg.class_separation,
                                                derive_seed(task, kStreamFeatures));
  ClientPopulation pop;
  for (std::size_t i = 0; i < cfg.n_clients; ++i) {
    std::mt19937_64 rng(derive_seed(cfg.seed, kStreamSkew, i));
    std::uniform_real_distribution<double> sp(cfg.sigma_p_min, cfg.sigma_p_max);
    std::uniform_real_distribution<double> ss(cfg.sigma_s_min, cfg.sigma_s_max);
    SkewSpec spec;
    spec.sigma_p = cfg.sigma_p_min == cfg.sigma_p_max ? cfg.sigma_p_min : sp(rng);
    spec.sigma_s = cfg.sigma_s_min == cfg.sigma_s_max ? cfg.sigma_s_min : ss(rng);
    spec.num_classes = classes;
    spec.samples_per_client = cfg.samples_per_client;
    pop.full.push_back(make_client_dataset(spec, space, static_cast<int>(i),
                                           derive_seed(cfg.seed, kStreamData, i)));
    auto split = split_holdout(pop.full.back(), cfg.holdout_fraction);
    if (split.train.empty() || split.test.empty()) {
      throw ConfigError("samples_per_client: too few samples for the holdout split");
    }
    pop.train.push_back(std::move(split.train));
    pop.test.push_back(std::move(split.test));
  }
  const std::size_t n = cfg.n_clients;
  pop.kld = DistanceMatrix(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = symmetric_kld(pop.full[i], pop.full[j]);
      pop.kld.set(i, j, v);
      total += v;
    }
  }
  pop.group_kld = n >= 2 ? total / (static_cast<double>(n * (n - 1)) / 2.0) : 0.0;
  return pop;
}

ModelParams initial_model(const RunConfig& cfg) {
  return ModelParams::glorot_uniform(cfg.layer_dims, derive_seed(cfg.seed, kStreamInit));
}

std::vector<double> evaluate(std::span<const ModelParams> models,
                             std::span<const ClientDataset> test_sets) {
  if (models.size() != test_sets.size()) throw InputError("one test set per model required");
  std::vector<double> out;
  out.reserve(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (test_sets[i].empty()) throw InputError("client " + std::to_string(i) + " has an empty test set");
    out.push_back(accuracy(models[i], test_sets[i].features, test_sets[i].labels));
  }
  return out;
}

std::uint64_t RoundRecord::total_bytes_up() const noexcept {
  std::uint64_t s = 0;
  for (auto b : bytes_up) s += b;
  return s;
}

std::uint64_t RoundRecord::total_bytes_down() const noexcept {
  std::uint64_t s = 0;
  for (auto b : bytes_down) s += b;
  return s;
}

namespace {

// Runs fn(i) for i in [0, n) over `threads` workers. Each index writes only
// its own slot, so the result does not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<ModelParams> group_averages(const GroupStructure& gs, std::span<const ModelParams> models,
                                        std::span<const std::size_t> sizes) {
  std::vector<ModelParams> out;
  out.reserve(gs.num_groups());
  for (const auto& members : gs.groups) {
    std::vector<WeightedModel> wm;
    for (std::size_t c : members) wm.push_back({&models[c], sizes[c]});
    out.push_back(weighted_average(wm));
  }
  return out;
}

json groups_json(const GroupStructure& gs) {
  json arr = json::array();
  for (const auto& g : gs.groups) arr.push_back(g);
  return arr;
}

class Simulation {
 public:
  Simulation(const RunConfig& cfg, const RunObserver* observer)
      : cfg_(cfg), observer_(observer), pop_(make_population(cfg)), trace_(cfg.window),
        monitor_(cfg.t_obv, cfg.window), controller_({cfg.lambda, cfg.t_sp}, cfg.n_clients),
        acc_(cfg.n_clients) {
    n_ = cfg.n_clients;
    sizes_ = pop_.train_sizes();
    full_bytes_ = kBytesPerParam * ModelParams(cfg.layer_dims).dim();
    models_.assign(n_, initial_model(cfg));
    layerwise_ = cfg.algorithm == Algorithm::dcpfl && cfg.layerwise && cfg.alpha > 1;
    capture_ = cfg.capture_discrepancy && cfg.algorithm != Algorithm::standalone && n_ >= 2;

    switch (cfg.algorithm) {
      case Algorithm::standalone:
        structure_ = GroupStructure::singletons(n_);
        break;
      case Algorithm::fixed_group:
        structure_ = GroupStructure::single_group(n_);
        if (cfg.group_source == GroupSource::kld) adopt_fixed_cut(0, build_group_graph(pop_.kld));
        break;
      case Algorithm::naive_dynamic:
        structure_ = GroupStructure::single_group(n_);
        if (cfg.split_round == 0) adopt_fixed_cut(0, build_group_graph(pop_.kld));
        break;
      default:
        structure_ = GroupStructure::single_group(n_);
    }
    store_ = GroupModelStore::from_clients(structure_, models_, sizes_);
    schedule_ = LayerSchedule(structure_.num_groups(), cfg.layer_dims.size() - 1, cfg.tau,
                              layerwise_ ? cfg.alpha : 1, 0);
    monitor_.reset(0);
  }

  RunResult execute() {
    for (int t = 1; t <= cfg_.max_rounds; ++t) {
      try {
        step(t);
      } catch (const NumericalError& e) {
        throw NumericalError("round " + std::to_string(t) + ": " + e.what(), e.index());
      }
      if (converged()) {
        converged_early_ = true;
        break;
      }
    }
    return finish();
  }

 private:
  void event(int round, const std::string& type, json detail = json::object()) {
    round_events_.push_back({round, type, detail.dump()});
  }

  // Replaces the active structure by a fixed graph cut and rebuilds the
  // server store from the clients' current models.
  void adopt_fixed_cut(int round, GroupGraph graph) {
    graph_ = std::move(graph);
    structure_ = groups_at(*graph_, cfg_.gamma_tilde);
    store_ = GroupModelStore::from_clients(structure_, models_, sizes_);
    schedule_.reset(structure_.num_groups(), schedule_.phase_origin());
    event(round, "structure_fixed",
          {{"gamma_tilde", cfg_.gamma_tilde}, {"num_groups", structure_.num_groups()},
           {"groups", groups_json(structure_)}});
  }

  std::uint64_t train_seed(std::size_t client, int round) const {
    return derive_seed(cfg_.seed, kStreamTrain, client, static_cast<std::uint64_t>(round));
  }

  ModelParams train_client(const ModelParams& start, std::size_t i, int round) const {
    return local_train(start, pop_.train[i], cfg_.local_epochs, cfg_.batch_size, cfg_.lr,
                       train_seed(i, round));
  }

  double train_loss(const ModelParams& m, std::size_t i) const {
    return mean_loss(m, pop_.train[i].features, pop_.train[i].labels);
  }

  void run_trial_round(int t, std::vector<std::uint64_t>& up, std::vector<std::uint64_t>& down) {
    const SplitTrial trial = *controller_.state().trial;
    // Full upload, then both candidate group models go back to every client.
    const auto m0 = group_averages(trial.g0, models_, sizes_);
    const auto m1 = group_averages(trial.g1, models_, sizes_);
    const auto a0 = trial.g0.assignment();
    const auto a1 = trial.g1.assignment();
    std::vector<ModelParams> w0(n_), w1(n_);
    std::vector<double> l0(n_), l1(n_);
    parallel_for(n_, cfg_.threads, [&](std::size_t i) {
      w0[i] = train_client(m0[a0[i]], i, t);
      w1[i] = train_client(m1[a1[i]], i, t);
      l0[i] = train_loss(w0[i], i);
      l1[i] = train_loss(w1[i], i);
    });
    for (std::size_t i = 0; i < n_; ++i) {
      up[i] += full_bytes_;
      down[i] += 2 * full_bytes_;
    }
    const TrialResult res = controller_.run_split_trial(l0, l1);
    event(t, "trial_result",
          {{"adopted", res.adopted}, {"loss_g0", res.loss_g0}, {"loss_g1", res.loss_g1},
           {"gamma_tilde_1", trial.gamma_tilde_1}, {"t0", trial.t0}});
    if (res.adopted) {
      models_ = std::move(w1);
      structure_ = controller_.state().active;
      store_.group_models = m1;
      schedule_.reset(structure_.num_groups(), t);
      monitor_.reset(t);
      ++splits_adopted_;
      event(t, "gamma_change",
            {{"gamma_tilde", structure_.gamma_tilde}, {"num_groups", structure_.num_groups()},
             {"groups", groups_json(structure_)}});
      event(t, "schedule_reset", {{"phase_origin", t}});
    } else {
      models_ = std::move(w0);
      store_.group_models = m0;
      ++trials_rejected_;
    }
  }

  void step(int t) {
    std::vector<std::uint64_t> up(n_, 0), down(n_, 0);
    std::vector<std::uint64_t> per_group;
    bool trial_round = false;
    std::size_t layers_aggregated = 0;

    if (cfg_.algorithm == Algorithm::dcpfl &&
        controller_.state().phase == ControllerPhase::trial_pending) {
      trial_round = true;
      run_trial_round(t, up, down);
    } else {
      std::vector<ModelParams> next(n_);
      parallel_for(n_, cfg_.threads, [&](std::size_t i) { next[i] = train_client(models_[i], i, t); });
      models_ = std::move(next);
    }

    const bool capture_round = capture_ && t <= cfg_.t_start;
    if (capture_round) acc_.add_round(models_);

    if (cfg_.algorithm != Algorithm::standalone) {
      const auto scheduled = layers_to_aggregate(schedule_, t);
      store_.client_uploads = models_;
      const RoundUpload ru = aggregate_round(store_, structure_, scheduled);
      for (const auto& [g, l] : scheduled) {
        for (std::size_t c : structure_.groups[g]) {
          models_[c].layer(l) = store_.group_models[g].layer(l);
          down[c] += kBytesPerParam * models_[c].layer(l).size();
        }
      }
      for (std::size_t i = 0; i < n_; ++i) up[i] += ru.bytes_per_client[i];
      per_group = ru.bytes_per_group;
      layers_aggregated = scheduled.size();
      if (layerwise_ && schedule_.is_full_sync(t)) reclassify_layers(t);
    }
    if (capture_round) {
      // The server needs every model in the discrepancy phase.
      for (auto& b : up) b = std::max(b, full_bytes_);
    }
    if (capture_ && t == cfg_.t_start) freeze_discrepancy(t);

    std::vector<double> losses(n_), accs(n_);
    parallel_for(n_, cfg_.threads, [&](std::size_t i) {
      losses[i] = train_loss(models_[i], i);
      accs[i] = accuracy(models_[i], pop_.test[i].features, pop_.test[i].labels);
    });
    trace_.push_loss(t, losses);

    if (cfg_.algorithm == Algorithm::dcpfl) drive_controller(t);

    RoundRecord rec;
    rec.round = t;
    rec.train_loss = losses;
    rec.accuracy = accs;
    rec.mean_loss = mean(losses);
    rec.mean_accuracy = mean(accs);
    rec.groups = structure_;
    rec.gamma_tilde = cfg_.algorithm == Algorithm::dcpfl ? controller_.state().gamma_tilde
                                                         : structure_.gamma_tilde;
    rec.bytes_up = up;
    rec.bytes_down = down;
    rec.bytes_per_group = per_group;
    rec.trial_round = trial_round;
    rec.layers_aggregated = layers_aggregated;
    std::size_t max_samples = 0;
    double max_comm = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      max_samples = std::max(max_samples, sizes_[i]);
      max_comm = std::max(max_comm, static_cast<double>(up[i] + down[i]) * 8.0 / cfg_.link_rate);
    }
    rec.comp_time = static_cast<double>(max_samples) * cfg_.local_epochs * (trial_round ? 2 : 1) *
                    cfg_.comp_time_per_sample;
    rec.comm_time = max_comm;
    rec.communication_round = rec.total_bytes_up() > 0;
    clock_.comp_time += rec.comp_time;
    clock_.comm_time += rec.comm_time;
    if (rec.communication_round) ++clock_.communication_rounds;

    if (cfg_.algorithm == Algorithm::naive_dynamic && t == cfg_.split_round) {
      if (cfg_.group_source == GroupSource::kld) {
        adopt_fixed_cut(t, build_group_graph(pop_.kld));
      } else {
        adopt_fixed_cut(t, *graph_);
      }
    }
    rec.events = std::move(round_events_);
    round_events_.clear();
    records_.push_back(std::move(rec));
    if (observer_ && observer_->on_round) observer_->on_round(t, models_);
  }

  void reclassify_layers(int t) {
    json lows = json::array();
    for (std::size_t g = 0; g < structure_.num_groups(); ++g) {
      std::vector<ModelParams> members;
      for (std::size_t c : structure_.groups[g]) members.push_back(store_.client_uploads[c]);
      const auto profile = layer_discrepancy(members, store_.group_models[g], g);
      const auto plan = classify_layers(profile, cfg_.tau, cfg_.alpha);
      schedule_.set_group(g, plan);
      json low = json::array();
      for (std::size_t l = 0; l < plan.size(); ++l) {
        if (plan[l].cls == LayerClass::low) low.push_back(l);
      }
      lows.push_back({{"group", g}, {"per_layer", profile.per_layer},
                      {"model_avg", profile.model_avg}, {"low_layers", low}});
    }
    event(t, "layers_classified", {{"groups", lows}});
  }

  void freeze_discrepancy(int t) {
    discrepancy_ = acc_.mean();
    event(t, "discrepancy_frozen", {{"rounds_averaged", discrepancy_->rounds_averaged}});
    const bool uses_graph =
        cfg_.algorithm == Algorithm::dcpfl ||
        (cfg_.group_source == GroupSource::discrepancy &&
         (cfg_.algorithm == Algorithm::fixed_group || cfg_.algorithm == Algorithm::naive_dynamic));
    if (!uses_graph) return;
    GroupGraph g = build_group_graph(*discrepancy_);
    event(t, "group_graph_built", {{"gamma_global", g.gamma_global}});
    if (cfg_.algorithm == Algorithm::fixed_group) {
      adopt_fixed_cut(t, std::move(g));
    } else {
      graph_ = std::move(g);
    }
  }

  void drive_controller(int t) {
    if (graph_ && controller_.state().phase == ControllerPhase::training && monitor_.warmed_up(t)) {
      if (const auto t_min = check_rdp_end(monitor_, trace_, t)) {
        event(t, "rdp_end", {{"t_min", *t_min}, {"r_min", *monitor_.best_r()}});
        if (controller_.on_rdp_end(*graph_, t)) {
          const auto& trial = *controller_.state().trial;
          event(t, "trial_armed",
                {{"gamma_tilde_0", controller_.state().gamma_tilde},
                 {"gamma_tilde_1", trial.gamma_tilde_1}, {"num_groups_1", trial.g1.num_groups()}});
        }
      }
    }
    if (controller_.end_round()) {
      monitor_.reset(t);
      event(t, "cooldown_end");
    }
  }

  bool converged() const {
    if (cfg_.algorithm != Algorithm::dcpfl || controller_.state().gamma_tilde > 0.0) return false;
    const int t = trace_.last_round();
    if (t <= cfg_.converge_rounds) return false;
    return trace_.smoothed(t - cfg_.converge_rounds) - trace_.smoothed(t) < cfg_.converge_tol;
  }

  RunResult finish() {
    RunResult res;
    res.config = cfg_;
    res.trace = trace_;
    res.discrepancy = discrepancy_;
    res.graph = graph_;
    res.kld = pop_.kld;
    res.datasets = pop_.full;

    RunSummary& s = res.summary;
    s.name = cfg_.name;
    s.algorithm = cfg_.algorithm;
    s.n_clients = n_;
    s.seed = cfg_.seed;
    s.rounds_run = static_cast<int>(records_.size());
    s.converged_early = converged_early_;
    const RoundRecord& last = records_.back();
    s.final_mean_accuracy = last.mean_accuracy;
    s.final_mean_loss = last.mean_loss;
    s.final_gamma_tilde = last.gamma_tilde;
    s.final_num_groups = last.groups.num_groups();
    s.final_accuracy = last.accuracy;
    for (const auto& r : records_) {
      s.total_bytes_up += r.total_bytes_up();
      s.total_bytes_down += r.total_bytes_down();
    }
    s.clock = clock_;
    s.group_kld = pop_.group_kld;
    s.splits_adopted = splits_adopted_;
    s.trials_rejected = trials_rejected_;
    if (discrepancy_) {
      std::vector<double> d, k;
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) {
          d.push_back(discrepancy_->distances.at(i, j));
          k.push_back(pop_.kld.at(i, j));
        }
      }
      s.discrepancy_kld_pearson = pearson(d, k);
    }
    res.records = std::move(records_);
    return res;
  }

  RunConfig cfg_;
  const RunObserver* observer_;
  ClientPopulation pop_;
  std::size_t n_ = 0;
  std::vector<std::size_t> sizes_;
  std::uint64_t full_bytes_ = 0;
  std::vector<ModelParams> models_;
  bool layerwise_ = false;
  bool capture_ = false;

  GroupStructure structure_;
  GroupModelStore store_;
  LayerSchedule schedule_;
  LossTrace trace_;
  RdpMonitor monitor_;
  Controller controller_;
  DiscrepancyAccumulator acc_;
  std::optional<DiscrepancyMatrix> discrepancy_;
  std::optional<GroupGraph> graph_;

  std::vector<ControllerEvent> round_events_;
  std::vector<RoundRecord> records_;
  SimClock clock_;
  bool converged_early_ = false;
  int splits_adopted_ = 0;
  int trials_rejected_ = 0;
};

}  // namespace

RunResult run(const RunConfig& config, const RunObserver* observer) {
  config.validate();
  Simulation sim(config, observer);
  return sim.execute();
}

RunResult run_naive_dynamic(RunConfig config, const RunObserver* observer) {
  config.algorithm = Algorithm::naive_dynamic;
  if (config.split_round > config.max_rounds) {
    throw ConfigError("split_round: must not exceed max_rounds");
  }
  return run(config, observer);
}

}  // namespace dcpfl
