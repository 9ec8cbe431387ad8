#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcpfl/sim.hpp"

namespace dcpfl {

// One sweep point: a label plus the config overrides it applies to the base.
struct SweepPoint {
  std::string label;
  std::vector<std::pair<std::string, std::string>> overrides;
};

// axis is a RunConfig key, or "variant" where each value reads
// label{key=value;key=value}.
struct SweepSpec {
  std::string name = "sweep";
  RunConfig base;
  std::string axis;
  std::vector<std::string> values;
  int repeats = 1;
  std::uint64_t seed_stride = 1;

  std::vector<SweepPoint> points() const;
  /// Config for point `p`, repeat `k`. Throws ConfigError when invalid.
  RunConfig config_for(std::size_t p, int k) const;
};

/// Sweep file: sweep.name, sweep.axis, sweep.values (comma separated),
/// sweep.repeats, optional sweep.seed_stride, plus base config keys.
SweepSpec parse_sweep(const std::string& text);
SweepSpec load_sweep(const std::filesystem::path& path);

struct SweepRow {
  std::size_t point = 0;
  std::string label;
  std::optional<std::uint64_t> seed;  // empty on mean rows
  bool mean_row = false;
  bool ok = true;
  bool resumed = false;               // taken from an existing summary.json
  std::string error;
  int seeds_ok = 0;                   // mean rows: how many seeds were averaged
  double final_mean_accuracy = 0.0;
  double final_mean_loss = 0.0;
  double group_kld = 0.0;
  double rounds_run = 0.0;
  double final_num_groups = 0.0;
  double final_gamma_tilde = 0.0;
  double total_bytes_up = 0.0;
  double total_bytes_down = 0.0;
  double comp_time = 0.0;
  double comm_time = 0.0;
};

struct SweepOptions {
  int parallel = 1;
  std::optional<std::uint64_t> seed_override;  // replaces the base seed
  std::function<void(const SweepRow&)> on_seed_done;
};

/// Runs every (point, repeat) under out_root/<name>/point_<i>/seed_<k>/ and
/// writes out_root/<name>/sweep.csv. Seeds whose summary.json already exists
/// are not rerun. Failing seeds are recorded, the sweep carries on.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::filesystem::path& out_root,
                                const SweepOptions& options = {});

/// Per-seed rows followed by one mean row per point.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Mean rows appended after the seed rows, one per point.
std::vector<SweepRow> with_mean_rows(std::vector<SweepRow> seed_rows);

}  // namespace dcpfl
