#include "dcpfl/sweep.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "dcpfl/errors.hpp"
#include "dcpfl/reporting.hpp"

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

// Splits on `sep` outside of braces.
std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '{') ++depth;
    if (c == '}') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (depth != 0) throw ConfigError("sweep.values: unbalanced braces");
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

SweepPoint parse_variant(const std::string& v) {
  const auto open = v.find('{');
  if (open == std::string::npos || v.back() != '}') {
    throw ConfigError("sweep.values: variant '" + v + "' must look like label{key=value;...}");
  }
  SweepPoint p;
  p.label = trim(v.substr(0, open));
  if (p.label.empty()) throw ConfigError("sweep.values: variant without a label");
  const std::string body = v.substr(open + 1, v.size() - open - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("sweep.values: '" + item + "' in " + p.label);
    p.overrides.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
  return p;
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

SweepRow row_from_summary(const json& j) {
  SweepRow r;
  r.final_mean_accuracy = j.at("final_mean_accuracy").get<double>();
  r.final_mean_loss = j.at("final_mean_loss").get<double>();
  r.group_kld = j.at("group_kld").get<double>();
  r.rounds_run = j.at("rounds_run").get<double>();
  r.final_num_groups = j.at("final_num_groups").get<double>();
  r.final_gamma_tilde = j.at("final_gamma_tilde").get<double>();
  r.total_bytes_up = j.at("total_bytes_up").get<double>();
  r.total_bytes_down = j.at("total_bytes_down").get<double>();
  r.comp_time = j.at("comp_time").get<double>();
  r.comm_time = j.at("comm_time").get<double>();
  return r;
}

}  // namespace

std::vector<SweepPoint> SweepSpec::points() const {
  std::vector<SweepPoint> out;
  for (const auto& v : values) {
    if (axis == "variant") {
      out.push_back(parse_variant(v));
    } else {
      out.push_back(SweepPoint{v, {{axis, v}}});
    }
  }
  return out;
}

RunConfig SweepSpec::config_for(std::size_t p, int k) const {
  const auto pts = points();
  RunConfig cfg = base;
  for (const auto& [key, value] : pts.at(p).overrides) apply_config_value(cfg, key, value);
  cfg.seed = base.seed + static_cast<std::uint64_t>(k) * seed_stride;
  cfg.name = name + "_p" + std::to_string(p) + "_s" + std::to_string(k);
  cfg.validate();
  return cfg;
}

SweepSpec parse_sweep(const std::string& text) {
  SweepSpec spec;
  std::vector<std::pair<std::string, std::string>> base_kv;
  bool have_axis = false, have_values = false;
  for (auto& [k, v] : parse_key_values(text)) {
    if (k.rfind("sweep.", 0) != 0) {
      base_kv.emplace_back(k, v);
      continue;
    }
    if (k == "sweep.name") {
      if (v.empty() || v.find('/') != std::string::npos) throw ConfigError("sweep.name: invalid name");
      spec.name = v;
    } else if (k == "sweep.axis") {
      spec.axis = v;
      have_axis = true;
    } else if (k == "sweep.values") {
      spec.values = split_top(v, ',');
      have_values = true;
    } else if (k == "sweep.repeats") {
      try {
        spec.repeats = std::stoi(v);
      } catch (const std::exception&) {
        throw ConfigError("sweep.repeats: cannot parse '" + v + "'");
      }
    } else if (k == "sweep.seed_stride") {
      try {
        spec.seed_stride = std::stoull(v);
      } catch (const std::exception&) {
        throw ConfigError("sweep.seed_stride: cannot parse '" + v + "'");
      }
    } else {
      throw ConfigError("unknown sweep key '" + k + "'");
    }
  }
  if (!have_axis) throw ConfigError("sweep.axis: required field is missing");
  if (!have_values || spec.values.empty()) throw ConfigError("sweep.values: required field is missing");
  if (spec.repeats < 1) throw ConfigError("sweep.repeats: must be at least 1");
  if (spec.seed_stride < 1) throw ConfigError("sweep.seed_stride: must be at least 1");
  if (spec.axis != "variant") {
    bool known = false;
    for (const auto& k : config_keys()) known = known || k == spec.axis;
    if (!known) throw ConfigError("sweep.axis: '" + spec.axis + "' is not a config field");
    if (spec.axis == "seed") throw ConfigError("sweep.axis: seeds come from sweep.repeats");
  }
  for (const auto& req : kRequiredConfigKeys) {
    bool found = req == spec.axis;
    for (const auto& [k, v] : base_kv) found = found || k == req;
    if (!found) throw ConfigError(req + ": required field is missing");
  }
  for (const auto& [k, v] : base_kv) apply_config_value(spec.base, k, v);
  // Every point has to be a valid config before anything runs.
  for (std::size_t p = 0; p < spec.values.size(); ++p) spec.config_for(p, 0);
  return spec;
}

SweepSpec load_sweep(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read sweep file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep(ss.str());
}

std::vector<SweepRow> with_mean_rows(std::vector<SweepRow> rows) {
  std::map<std::size_t, std::vector<const SweepRow*>> by_point;
  for (const auto& r : rows) {
    if (!r.mean_row) by_point[r.point].push_back(&r);
  }
  std::vector<SweepRow> means;
  for (const auto& [p, members] : by_point) {
    SweepRow m;
    m.point = p;
    m.label = members.front()->label;
    m.mean_row = true;
    for (const SweepRow* r : members) {
      if (!r->ok) continue;
      ++m.seeds_ok;
      m.final_mean_accuracy += r->final_mean_accuracy;
      m.final_mean_loss += r->final_mean_loss;
      m.group_kld += r->group_kld;
      m.rounds_run += r->rounds_run;
      m.final_num_groups += r->final_num_groups;
      m.final_gamma_tilde += r->final_gamma_tilde;
      m.total_bytes_up += r->total_bytes_up;
      m.total_bytes_down += r->total_bytes_down;
      m.comp_time += r->comp_time;
      m.comm_time += r->comm_time;
    }
    m.ok = m.seeds_ok > 0;
    if (m.ok) {
      const double n = m.seeds_ok;
      for (double* f : {&m.final_mean_accuracy, &m.final_mean_loss, &m.group_kld, &m.rounds_run,
                        &m.final_num_groups, &m.final_gamma_tilde, &m.total_bytes_up,
                        &m.total_bytes_down, &m.comp_time, &m.comm_time}) {
        *f /= n;
      }
    } else {
      m.error = "no seed finished";
    }
    means.push_back(m);
  }
  rows.insert(rows.end(), means.begin(), means.end());
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "point,label,seed,kind,status,seeds_ok,final_mean_accuracy,final_mean_loss,group_kld,"
         "rounds_run,final_num_groups,final_gamma_tilde,total_bytes_up,total_bytes_down,comp_time,"
         "comm_time,error\n";
  for (const auto& r : rows) {
    out << r.point << ',' << csv_safe(r.label) << ',' << (r.seed ? std::to_string(*r.seed) : "") << ','
        << (r.mean_row ? "mean" : "seed") << ',' << (r.ok ? "ok" : "failed") << ','
        << (r.mean_row ? r.seeds_ok : (r.ok ? 1 : 0));
    if (r.ok) {
      for (double v : {r.final_mean_accuracy, r.final_mean_loss, r.group_kld, r.rounds_run,
                       r.final_num_groups, r.final_gamma_tilde, r.total_bytes_up, r.total_bytes_down,
                       r.comp_time, r.comm_time}) {
        out << ',' << format_double(v);
      }
    } else {
      for (int i = 0; i < 10; ++i) out << ',';
    }
    out << ',' << csv_safe(r.error) << "\n";
  }
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec_in, const fs::path& out_root,
                                const SweepOptions& options) {
  SweepSpec spec = spec_in;
  if (options.seed_override) spec.base.seed = *options.seed_override;
  const auto pts = spec.points();
  const fs::path root = out_root / spec.name;
  fs::create_directories(root);

  struct Job {
    std::size_t point;
    int repeat;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < pts.size(); ++p) {
    for (int k = 0; k < spec.repeats; ++k) jobs.push_back({p, k});
  }
  std::vector<SweepRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mu;

  const auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job job = jobs[i];
      SweepRow& row = rows[i];
      row.point = job.point;
      row.label = pts[job.point].label;
      const fs::path dir =
          root / ("point_" + std::to_string(job.point)) / ("seed_" + std::to_string(job.repeat));
      try {
        const RunConfig cfg = spec.config_for(job.point, job.repeat);
        row.seed = cfg.seed;
        const fs::path summary = dir / "summary.json";
        if (fs::exists(summary)) {
          std::ifstream in(summary);
          SweepRow done = row_from_summary(json::parse(in));
          done.point = row.point;
          done.label = row.label;
          done.seed = row.seed;
          done.resumed = true;
          row = done;
        } else {
          const RunResult res = run(cfg);
          write_run_artifacts(res, dir);
          std::ifstream in(summary);
          SweepRow done = row_from_summary(json::parse(in));
          done.point = row.point;
          done.label = row.label;
          done.seed = row.seed;
          row = done;
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      if (options.on_seed_done) {
        std::lock_guard lock(report_mu);
        options.on_seed_done(row);
      }
    }
  };

  const int threads = std::max(1, options.parallel);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  }

  auto all = with_mean_rows(std::move(rows));
  const fs::path csv = root / "sweep.csv";
  const fs::path tmp = root / ".sweep.csv.tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw InputError("cannot write " + tmp.string());
    write_sweep_csv(out, all);
  }
  fs::rename(tmp, csv);
  return all;
}

}  // namespace dcpfl
