#pragma once

#include "optexec/core_model.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace optexec {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

enum class Strategy {
  LoMoMm,      // LO + MO + internal MM, solved on the configured model
  LoMo,        // LO + MO baseline without impact terms in the policy model
  LoMoImpact,  // LO + MO, MM switched off, impacts kept
  AlmgrenChriss,
};

[[nodiscard]] std::string_view to_string(Strategy s);
[[nodiscard]] Strategy strategy_from_string(std::string_view name);

/// Model the policy for `s` is solved on, derived from the market model.
/// AlmgrenChriss returns the market unchanged (it needs no solve).
[[nodiscard]] ModelParams policy_model(const ModelParams& market, Strategy s);

struct SimConfig {
  std::int64_t n_paths = 100000;
  std::uint64_t seed = 20240601;
  double initial_mid = 100.0;
  std::vector<Strategy> strategies{Strategy::LoMoMm, Strategy::LoMo, Strategy::AlmgrenChriss};
};

struct ExperimentConfig {
  ModelParams model;
  std::int64_t n_time_steps = 6000;
  SimConfig sim;

  [[nodiscard]] GridSpec grid() const { return GridSpec(model.horizon, n_time_steps); }
};

/// Parses `name = value` lines; `#` starts a comment. Keys absent from the
/// text keep their defaults. Unknown keys, duplicates, malformed values and
/// model invariant violations raise ConfigError with the offending line.
[[nodiscard]] ExperimentConfig parse_config(std::string_view text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical `name = value` rendering, doubles at round-trip precision.
[[nodiscard]] std::string render_model(const ModelParams& p);
[[nodiscard]] std::string render_config(const ExperimentConfig& c);

/// Round-trip formatting of a double (shortest form that parses back exactly).
[[nodiscard]] std::string format_double(double v);

}  // namespace optexec
