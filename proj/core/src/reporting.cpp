#include "dcpfl/reporting.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unistd.h>

#include "dcpfl/errors.hpp"
#include "dcpfl/stats.hpp"

namespace dcpfl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": cannot parse '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> parse_dims(const std::string& key, const std::string& v) {
  std::vector<std::size_t> dims;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) dims.push_back(parse_number<std::size_t>(key, trim(item)));
  return dims;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number_field(T RunConfig::*m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_number<T>(k, v); },
          [m](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*m);
            } else {
              return std::to_string(c.*m);
            }
          }};
}

Field bool_field(bool RunConfig::*m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_bool(k, v); },
          [m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

const std::vector<std::pair<std::string, Field>>& field_table() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("name", Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                                   if (v.empty() || v.find('/') != std::string::npos) {
                                     throw ConfigError(k + ": must be a non-empty name without '/'");
                                   }
                                   c.name = v;
                                 },
                                 [](const RunConfig& c) { return c.name; }});
    t.emplace_back("algorithm", Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                                        auto a = parse_algorithm(v);
                                        if (!a) throw ConfigError(k + ": unknown algorithm '" + v + "'");
                                        c.algorithm = *a;
                                      },
                                      [](const RunConfig& c) { return std::string(to_string(c.algorithm)); }});
    t.emplace_back("n_clients", number_field(&RunConfig::n_clients));
    t.emplace_back("layer_dims", Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                                         c.layer_dims = parse_dims(k, v);
                                       },
                                       [](const RunConfig& c) {
                                         std::string s;
                                         for (std::size_t i = 0; i < c.layer_dims.size(); ++i) {
                                           if (i) s += ",";
                                           s += std::to_string(c.layer_dims[i]);
                                         }
                                         return s;
                                       }});
    t.emplace_back("sigma_p_min", number_field(&RunConfig::sigma_p_min));
    t.emplace_back("sigma_p_max", number_field(&RunConfig::sigma_p_max));
    t.emplace_back("sigma_s_min", number_field(&RunConfig::sigma_s_min));
    t.emplace_back("sigma_s_max", number_field(&RunConfig::sigma_s_max));
    t.emplace_back("samples_per_client", number_field(&RunConfig::samples_per_client));
    t.emplace_back("class_separation", number_field(&RunConfig::class_separation));
    t.emplace_back("holdout_fraction", number_field(&RunConfig::holdout_fraction));
    t.emplace_back("lr", number_field(&RunConfig::lr));
    t.emplace_back("local_epochs", number_field(&RunConfig::local_epochs));
    t.emplace_back("batch_size", number_field(&RunConfig::batch_size));
    t.emplace_back("tau", number_field(&RunConfig::tau));
    t.emplace_back("alpha", number_field(&RunConfig::alpha));
    t.emplace_back("layerwise", bool_field(&RunConfig::layerwise));
    t.emplace_back("lambda", number_field(&RunConfig::lambda));
    t.emplace_back("t_obv", number_field(&RunConfig::t_obv));
    t.emplace_back("t_sp", number_field(&RunConfig::t_sp));
    t.emplace_back("window", number_field(&RunConfig::window));
    t.emplace_back("t_start", number_field(&RunConfig::t_start));
    t.emplace_back("capture_discrepancy", bool_field(&RunConfig::capture_discrepancy));
    t.emplace_back("max_rounds", number_field(&RunConfig::max_rounds));
    t.emplace_back("converge_tol", number_field(&RunConfig::converge_tol));
    t.emplace_back("converge_rounds", number_field(&RunConfig::converge_rounds));
    t.emplace_back("link_rate", number_field(&RunConfig::link_rate));
    t.emplace_back("comp_time_per_sample", number_field(&RunConfig::comp_time_per_sample));
    t.emplace_back("seed", number_field(&RunConfig::seed));
    t.emplace_back("task_seed", number_field(&RunConfig::task_seed));
    t.emplace_back("gamma_tilde", number_field(&RunConfig::gamma_tilde));
    t.emplace_back("split_round", number_field(&RunConfig::split_round));
    t.emplace_back("group_source", Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                                           auto g = parse_group_source(v);
                                           if (!g) throw ConfigError(k + ": expected kld or discrepancy");
                                           c.group_source = *g;
                                         },
                                         [](const RunConfig& c) { return std::string(to_string(c.group_source)); }});
    t.emplace_back("threads", number_field(&RunConfig::threads));
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [k, f] : field_table()) {
    if (k == key) return &f;
  }
  return nullptr;
}

std::string join_groups(const GroupStructure& g) {
  std::string s;
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    if (i) s += '|';
    for (std::size_t j = 0; j < g.groups[i].size(); ++j) {
      if (j) s += ' ';
      s += std::to_string(g.groups[i][j]);
    }
  }
  return s;
}

template <class T>
std::string join(const std::vector<T>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_file(const fs::path& p, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  fn(out);
  out.flush();
  if (!out) throw InputError("write failed for " + p.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string c;
  while (std::getline(ss, c, ',')) cells.push_back(c);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : field_table()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key '" + key + "'");
  f->set(cfg, key, value);
}

std::string config_value(const RunConfig& cfg, const std::string& key) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key '" + key + "'");
  return f->get(cfg);
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    for (const auto& [k, v] : kv) {
      if (k == key) throw ConfigError(key + ": set twice (line " + std::to_string(lineno) + ")");
    }
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

RunConfig parse_config(const std::string& text) {
  const auto kv = parse_key_values(text);
  for (const auto& req : kRequiredConfigKeys) {
    bool found = false;
    for (const auto& [k, v] : kv) found = found || k == req;
    if (!found) throw ConfigError(req + ": required field is missing");
  }
  RunConfig cfg;
  for (const auto& [k, v] : kv) apply_config_value(cfg, k, v);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : field_table()) out += k + " = " + f.get(cfg) + "\n";
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_rounds_csv(std::ostream& out, const RunResult& r) {
  const std::size_t n = r.config.n_clients;
  out << "round,mean_loss,mean_accuracy,gamma_tilde,num_groups,bytes_up,bytes_down,comp_time,"
         "comm_time,communication_round,trial_round,layers_aggregated,groups,bytes_per_group";
  for (std::size_t i = 0; i < n; ++i) out << ",loss_" << i;
  for (std::size_t i = 0; i < n; ++i) out << ",acc_" << i;
  for (std::size_t i = 0; i < n; ++i) out << ",up_" << i;
  out << "\n";
  for (const auto& rec : r.records) {
    out << rec.round << ',' << format_double(rec.mean_loss) << ',' << format_double(rec.mean_accuracy)
        << ',' << format_double(rec.gamma_tilde) << ',' << rec.groups.num_groups() << ','
        << rec.total_bytes_up() << ',' << rec.total_bytes_down() << ',' << format_double(rec.comp_time)
        << ',' << format_double(rec.comm_time) << ',' << (rec.communication_round ? 1 : 0) << ','
        << (rec.trial_round ? 1 : 0) << ',' << rec.layers_aggregated << ',' << join_groups(rec.groups)
        << ',' << join(rec.bytes_per_group, '|');
    for (double l : rec.train_loss) out << ',' << format_double(l);
    for (double a : rec.accuracy) out << ',' << format_double(a);
    for (auto b : rec.bytes_up) out << ',' << b;
    out << "\n";
  }
}

void write_trace_csv(std::ostream& out, const LossTrace& trace) {
  out << "round,raw,smoothed,d1,d2,r\n";
  for (int t = 1; t <= trace.last_round(); ++t) {
    out << t << ',' << format_double(trace.raw(t)) << ',' << format_double(trace.smoothed(t)) << ','
        << opt(trace.d1(t)) << ',' << opt(trace.d2(t)) << ',' << opt(trace.curvature(t)) << "\n";
  }
}

void write_events_jsonl(std::ostream& out, const RunResult& r) {
  for (const auto& rec : r.records) {
    for (const auto& e : rec.events) {
      json line{{"round", e.round}, {"type", e.type},
                {"detail", e.detail_json.empty() ? json::object() : json::parse(e.detail_json)}};
      out << line.dump() << "\n";
    }
  }
}

void write_discrepancy_csv(std::ostream& out, const RunResult& r) {
  out << "i,j,discrepancy,kld\n";
  const std::size_t n = r.kld.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out << i << ',' << j << ',';
      if (r.discrepancy) out << format_double(r.discrepancy->distances.at(i, j));
      out << ',' << format_double(r.kld.at(i, j)) << "\n";
    }
  }
}

std::string summary_json(const RunResult& r) {
  const RunSummary& s = r.summary;
  json cfg = json::object();
  for (const auto& k : config_keys()) cfg[k] = config_value(r.config, k);
  json j{{"name", s.name},
         {"algorithm", to_string(s.algorithm)},
         {"n_clients", s.n_clients},
         {"seed", s.seed},
         {"rounds_run", s.rounds_run},
         {"converged_early", s.converged_early},
         {"final_mean_accuracy", s.final_mean_accuracy},
         {"final_mean_loss", s.final_mean_loss},
         {"final_accuracy", s.final_accuracy},
         {"final_gamma_tilde", s.final_gamma_tilde},
         {"final_num_groups", s.final_num_groups},
         {"total_bytes_up", s.total_bytes_up},
         {"total_bytes_down", s.total_bytes_down},
         {"comp_time", s.clock.comp_time},
         {"comm_time", s.clock.comm_time},
         {"total_time", s.clock.total_time()},
         {"communication_rounds", s.clock.communication_rounds},
         {"group_kld", s.group_kld},
         {"discrepancy_kld_pearson", opt_json(s.discrepancy_kld_pearson)},
         {"splits_adopted", s.splits_adopted},
         {"trials_rejected", s.trials_rejected},
         {"config", cfg}};
  return j.dump(2) + "\n";
}

std::string dendrogram_json(const std::optional<GroupGraph>& graph) {
  if (!graph) return "null\n";
  json merges = json::array();
  for (const auto& m : graph->merges) {
    merges.push_back({{"a", m.cluster_a}, {"b", m.cluster_b}, {"distance", m.distance}, {"size", m.size}});
  }
  json j{{"n", graph->n}, {"gamma_global", graph->gamma_global}, {"merges", merges}};
  return j.dump(2) + "\n";
}

void write_run_artifacts(const RunResult& r, const fs::path& dir, const ArtifactOptions& options) {
  static std::atomic<unsigned> counter{0};
  const fs::path parent = dir.parent_path().empty() ? fs::path(".") : dir.parent_path();
  fs::create_directories(parent);
  const fs::path tmp = parent / ("." + dir.filename().string() + ".tmp-" + std::to_string(::getpid()) +
                                 "-" + std::to_string(counter++));
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  try {
    write_file(tmp / "rounds.csv", [&](std::ostream& o) { write_rounds_csv(o, r); });
    write_file(tmp / "summary.json", [&](std::ostream& o) { o << summary_json(r); });
    write_file(tmp / "events.jsonl", [&](std::ostream& o) { write_events_jsonl(o, r); });
    write_file(tmp / "trace.csv", [&](std::ostream& o) { write_trace_csv(o, r.trace); });
    write_file(tmp / "discrepancy.csv", [&](std::ostream& o) { write_discrepancy_csv(o, r); });
    write_file(tmp / "dendrogram.json", [&](std::ostream& o) { o << dendrogram_json(r.graph); });
    write_file(tmp / "config.txt", [&](std::ostream& o) { o << format_config(r.config); });
    if (options.export_data) {
      write_file(tmp / "data.csv", [&](std::ostream& o) { write_datasets_csv(o, r.datasets); });
    }
    fs::remove_all(dir);
    fs::rename(tmp, dir);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
}

CorrelationReport correlate(const fs::path& run_dir) {
  const fs::path src = run_dir / "discrepancy.csv";
  std::ifstream in(src);
  if (!in) throw InputError("no discrepancy.csv in " + run_dir.string());
  std::string line;
  std::getline(in, line);
  if (trim(line) != "i,j,discrepancy,kld") throw InputError(src.string() + ": unexpected header");
  std::vector<std::size_t> is, js;
  std::vector<double> d, k;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4) throw InputError(src.string() + ": malformed row '" + line + "'");
    if (cells[2].empty()) throw InputError("run has no discrepancy matrix: " + run_dir.string());
    is.push_back(parse_number<std::size_t>("i", cells[0]));
    js.push_back(parse_number<std::size_t>("j", cells[1]));
    d.push_back(std::stod(cells[2]));
    k.push_back(std::stod(cells[3]));
  }
  if (d.empty()) throw InputError("run has no discrepancy matrix: " + run_dir.string());

  write_file(run_dir / "correlation.csv", [&](std::ostream& o) {
    o << "i,j,kld,discrepancy\n";
    for (std::size_t p = 0; p < d.size(); ++p) {
      o << is[p] << ',' << js[p] << ',' << format_double(k[p]) << ',' << format_double(d[p]) << "\n";
    }
  });
  return {d.size(), pearson(d, k)};
}

fs::path default_output_root() {
  if (const char* env = std::getenv("DCPFL_OUT_ROOT"); env && *env) return env;
  return "out";
}

}  // namespace dcpfl
