#pragma once

#include "optexec/config.hpp"
#include "optexec/core_model.hpp"
#include "optexec/grid_io.hpp"
#include "optexec/qvi_solver.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace optexec {

class SimConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Channel { LO = 0, MM = 1, MO = 2 };

[[nodiscard]] std::string_view to_string(Channel c);

struct FillEvent {
  Channel channel;
  double t;
  double price;     // per-unit execution price net of impact
  std::int64_t size;
  double cash;      // cash credited by the event
};

struct PathPoint {
  double t;
  double mid;
  std::int64_t inventory;
  double cash;
};

/// Objective pieces of one path. Cash is reported net of the initial
/// mark-to-mid Q0 * S0, so the expected objective is comparable with h(0, Q0).
struct ObjectiveParts {
  double cash = 0.0;         // X_T - Q0 S0
  double terminal = 0.0;     // Q_T (S_T - xi - alpha Q_T) - alpha_M Q_T^beta_M
  double penalty = 0.0;      // phi * sum (Q - qbar)^2 dt, subtracted
  [[nodiscard]] double objective() const { return cash + terminal - penalty; }
};

struct SimPath {
  std::vector<PathPoint> series;  // one point per grid time
  std::vector<FillEvent> events;
  ObjectiveParts parts;
  std::int64_t terminal_inventory = 0;
  [[nodiscard]] double objective() const { return parts.objective(); }
};

/// Lightweight per-path result used by the Monte Carlo driver.
struct PathOutcome {
  ObjectiveParts parts;
  std::array<std::int64_t, 3> fills{};  // indexed by Channel
  std::vector<std::int64_t> mo_sizes;
  std::int64_t terminal_inventory = 0;
};

struct SimStats {
  std::int64_t n_paths = 0;
  double mean_objective = 0.0;
  double standard_error = 0.0;
  double mean_cash = 0.0;
  double mean_terminal = 0.0;
  double mean_penalty = 0.0;
  std::array<std::int64_t, 3> fill_counts{};
  std::int64_t mo_count = 0;
  std::map<std::int64_t, std::int64_t> mo_size_histogram;
  double mean_terminal_inventory = 0.0;
};

/// Market the strategies trade in plus simulation settings.
struct SimSetup {
  ModelParams market;
  GridSpec grid;
  double initial_mid = 100.0;
};

/// Simulates the controlled dynamics under a solved policy, deterministic in
/// (seed, path). Fill channels use the market's parameters; quotes and MO
/// decisions come from the policy. MM fills require market.mm_enabled and a
/// policy solved with MM. Throws SimConfigError when grid or inventory shapes
/// differ between the policy and the setup.
[[nodiscard]] SimPath simulate_path(const SolvedModel& policy, const SimSetup& setup,
                                    std::uint64_t seed, std::uint64_t path = 0);

/// Static Almgren-Chriss benchmark executed with market orders: at each grid
/// time, sells round(Q - qbar_t) units when that is positive.
[[nodiscard]] SimPath simulate_ac_benchmark(const SimSetup& setup, std::uint64_t seed,
                                            std::uint64_t path = 0);

[[nodiscard]] PathOutcome run_policy_path(const SolvedModel& policy, const SimSetup& setup,
                                          std::uint64_t seed, std::uint64_t path);
[[nodiscard]] PathOutcome run_ac_path(const SimSetup& setup, std::uint64_t seed,
                                      std::uint64_t path);

/// Aggregates in path-index order regardless of thread count.
[[nodiscard]] SimStats aggregate(const std::vector<PathOutcome>& outcomes);

struct StrategyRun {
  Strategy strategy;
  SimStats stats;
  std::vector<double> objectives;  // per path, index-aligned across strategies
  std::optional<double> model_value;  // h(0, Q0) when the policy model equals the market
};

struct ExperimentResult {
  std::vector<StrategyRun> runs;
  [[nodiscard]] const StrategyRun& get(Strategy s) const;
};

/// Runs every configured strategy on common random numbers. Policies missing
/// from `policies` are solved on policy_model(market, strategy).
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& config,
                                              std::map<Strategy, SolvedModel> policies = {},
                                              unsigned threads = 0);

struct PairedDifference {
  double mean;
  double standard_error;
};

/// Mean and standard error of a[k] - b[k].
[[nodiscard]] PairedDifference paired_difference(const std::vector<double>& a,
                                                 const std::vector<double>& b);

}  // namespace optexec
