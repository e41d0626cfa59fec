#pragma once

#include "optexec/config.hpp"
#include "optexec/execution_simulator.hpp"
#include "optexec/grid_io.hpp"
#include "optexec/policy_analysis.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace optexec {

inline constexpr const char* kToolVersion = "0.3.0";

/// Command-line overrides applied on top of a config file.
struct Overrides {
  std::optional<double> dt;
  std::optional<std::int64_t> n_paths;
  std::optional<std::uint64_t> seed;
  bool no_mm = false;
  std::int64_t event_log_paths = 0;  // simulate: dump the first N paths' events
};

struct OutputFile {
  std::string name;
  std::string sha256;
  std::uint64_t bytes;
};

struct RunManifest {
  std::string command;
  std::string config_echo;
  std::int64_t n_time_steps = 0;
  double dt = 0.0;
  std::vector<OutputFile> outputs;
  double elapsed_seconds = 0.0;
};

/// Applies overrides; a dt that does not divide T into whole steps is a ConfigError.
[[nodiscard]] ExperimentConfig apply_overrides(ExperimentConfig cfg, const Overrides& o);

[[nodiscard]] std::string sha256_hex(const std::string& bytes);

/// Writes policy.bin, policy.csv and manifest.json.
RunManifest cmd_solve(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                      const Overrides& o = {});

/// Writes table1..4.csv, figure2.csv, figure3.csv from a binary policy file.
/// `reference_path` supplies the LO/MO timing row.
RunManifest cmd_tables(const std::filesystem::path& policy_path, const std::filesystem::path& out_dir,
                       const std::optional<std::filesystem::path>& reference_path = std::nullopt);

/// Runs the configured strategies and writes sim_stats.json.
RunManifest cmd_simulate(const std::filesystem::path& config_path,
                         const std::optional<std::filesystem::path>& policy_path,
                         const std::filesystem::path& out_dir, const Overrides& o = {});

/// solve (both solved strategies) + tables + simulate into one directory.
RunManifest cmd_all(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                    const Overrides& o = {});

// Pieces used by the commands, exposed for tests.
[[nodiscard]] std::string table1_csv(const SolvedModel& primary, const SolvedModel* reference);
[[nodiscard]] std::string table2_csv(const SolvedModel& m);
[[nodiscard]] std::string depth_table_csv(const SolvedModel& m, PolicyQuantity quantity);
[[nodiscard]] std::string figure2_csv(const SolvedModel& primary, const SolvedModel* reference);
[[nodiscard]] std::string figure3_csv(const SolvedModel& m);
[[nodiscard]] std::string sim_stats_json(const ExperimentConfig& cfg, const ExperimentResult& r);

/// Report times k*T/6, k = 1..5 (10..50 for T = 60).
[[nodiscard]] std::vector<double> report_times(const GridSpec& grid);
/// Odd inventories 1, 3, ... up to min(9, Q0).
[[nodiscard]] std::vector<std::int64_t> report_inventories(const ModelParams& p);

}  // namespace optexec
