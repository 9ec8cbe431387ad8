#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dcpfl/sim.hpp"

namespace dcpfl {

// Config files are `key = value` lines; '#' starts a comment. Keys match the
// RunConfig field names. These must always be present.
inline const std::vector<std::string> kRequiredConfigKeys{"algorithm", "n_clients", "max_rounds",
                                                          "seed"};

/// Every accepted config key, in a stable order.
const std::vector<std::string>& config_keys();

/// Sets one field from its textual value. ConfigError names the key on an
/// unknown key or an unparsable value.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Current value of a field formatted the way the parser reads it back.
std::string config_value(const RunConfig& cfg, const std::string& key);

/// Splits config text into ordered (key, value) pairs. Duplicate keys and
/// malformed lines are ConfigErrors carrying the line number.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

/// Parses and validates a full run config.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical `key = value` dump; parse_config(format_config(c)) round-trips.
std::string format_config(const RunConfig& cfg);

std::string format_double(double v);

void write_rounds_csv(std::ostream& out, const RunResult& result);
void write_trace_csv(std::ostream& out, const LossTrace& trace);
void write_events_jsonl(std::ostream& out, const RunResult& result);
void write_discrepancy_csv(std::ostream& out, const RunResult& result);
std::string summary_json(const RunResult& result);
std::string dendrogram_json(const std::optional<GroupGraph>& graph);

struct ArtifactOptions {
  bool export_data = false;  // also write data.csv with every client's samples
};

/// Writes the run directory atomically: everything goes to a sibling temp
/// directory that is renamed onto `dir` once complete.
void write_run_artifacts(const RunResult& result, const std::filesystem::path& dir,
                         const ArtifactOptions& options = {});

struct CorrelationReport {
  std::size_t pairs = 0;
  std::optional<double> pearson;  // nullopt: degenerate (zero variance)
};

/// Reads discrepancy.csv in `run_dir`, writes correlation.csv next to it.
/// InputError when the run has no discrepancy matrix.
CorrelationReport correlate(const std::filesystem::path& run_dir);

/// Output root: $DCPFL_OUT_ROOT when set, else "out".
std::filesystem::path default_output_root();

}  // namespace dcpfl
