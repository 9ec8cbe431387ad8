// dcpfl: run single simulations, parameter sweeps and correlation reports.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dcpfl/errors.hpp"
#include "dcpfl/reporting.hpp"
#include "dcpfl/sim.hpp"
#include "dcpfl/sweep.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitBadConfig = 2;
constexpr int kExitRuntime = 3;

int cmd_run(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
            bool export_data) {
  dcpfl::RunConfig cfg;
  try {
    cfg = dcpfl::load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.validate();
    }
  } catch (const dcpfl::Error& e) {
    std::cerr << "dcpfl run: " << e.what() << "\n";
    return kExitBadConfig;
  }
  const fs::path root = out.empty() ? dcpfl::default_output_root() : fs::path(out);
  const fs::path dir = root / cfg.name;
  try {
    const auto result = dcpfl::run(cfg);
    dcpfl::write_run_artifacts(result, dir, {export_data});
    const auto& s = result.summary;
    std::printf("%s: %s, %d rounds, final mean accuracy %.4f, %zu groups -> %s\n", s.name.c_str(),
                dcpfl::to_string(s.algorithm), s.rounds_run, s.final_mean_accuracy, s.final_num_groups,
                dir.string().c_str());
  } catch (const dcpfl::ConfigError& e) {
    std::cerr << "dcpfl run: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "dcpfl run: aborted: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& out, std::optional<std::uint64_t> seed,
              int parallel) {
  dcpfl::SweepSpec spec;
  try {
    spec = dcpfl::load_sweep(path);
  } catch (const dcpfl::Error& e) {
    std::cerr << "dcpfl sweep: " << e.what() << "\n";
    return kExitBadConfig;
  }
  const fs::path root = out.empty() ? dcpfl::default_output_root() : fs::path(out);
  dcpfl::SweepOptions opts;
  opts.parallel = parallel;
  opts.seed_override = seed;
  opts.on_seed_done = [](const dcpfl::SweepRow& r) {
    if (!r.ok) {
      std::fprintf(stderr, "  point %zu (%s) seed %llu failed: %s\n", r.point, r.label.c_str(),
                   static_cast<unsigned long long>(r.seed.value_or(0)), r.error.c_str());
      return;
    }
    std::printf("  point %zu (%s) seed %llu: accuracy %.4f%s\n", r.point, r.label.c_str(),
                static_cast<unsigned long long>(r.seed.value_or(0)), r.final_mean_accuracy,
                r.resumed ? " (existing)" : "");
    std::fflush(stdout);
  };
  try {
    const auto rows = dcpfl::run_sweep(spec, root, opts);
    bool any_failed = false;
    for (const auto& r : rows) {
      if (!r.mean_row) continue;
      any_failed = any_failed || r.seeds_ok < spec.repeats;
      if (r.ok) {
        std::printf("%s = %s: mean accuracy %.4f over %d seeds\n", spec.axis.c_str(), r.label.c_str(),
                    r.final_mean_accuracy, r.seeds_ok);
      } else {
        std::printf("%s = %s: failed\n", spec.axis.c_str(), r.label.c_str());
      }
    }
    std::printf("wrote %s\n", (root / spec.name / "sweep.csv").string().c_str());
    return any_failed ? kExitRuntime : 0;
  } catch (const std::exception& e) {
    std::cerr << "dcpfl sweep: aborted: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_correlate(const std::string& run_dir) {
  try {
    const auto rep = dcpfl::correlate(run_dir);
    if (rep.pearson) {
      std::printf("pearson %.6f over %zu pairs\n", *rep.pearson, rep.pairs);
    } else {
      std::printf("degenerate (%zu pairs, zero variance)\n", rep.pairs);
    }
    return 0;
  } catch (const dcpfl::Error& e) {
    std::cerr << "dcpfl correlate: " << e.what() << "\n";
    return kExitBadConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DC-PFL federated learning simulator"};
  app.require_subcommand(1);

  std::string config, out, run_dir;
  std::optional<std::uint64_t> seed;
  int parallel = 1;
  bool export_data = false;

  auto* run = app.add_subcommand("run", "run one simulation");
  run->add_option("--config", config, "config file")->required();
  run->add_option("--out", out, "output root (default $DCPFL_OUT_ROOT or ./out)");
  run->add_option("--seed-override", seed, "replace the config seed");
  run->add_flag("--export-data", export_data, "also write data.csv");

  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  sweep->add_option("--config", config, "sweep file")->required();
  sweep->add_option("--out", out, "output root (default $DCPFL_OUT_ROOT or ./out)");
  sweep->add_option("--seed-override", seed, "replace the base seed");
  sweep->add_option("--parallel", parallel, "concurrent runs")->check(CLI::PositiveNumber);

  auto* corr = app.add_subcommand("correlate", "discrepancy vs KLD for a finished run");
  corr->add_option("run_dir", run_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadConfig;
  }

  if (*run) return cmd_run(config, out, seed, export_data);
  if (*sweep) return cmd_sweep(config, out, seed, parallel);
  return cmd_correlate(run_dir);
}
