#pragma once

#include "optexec/core_model.hpp"
#include "optexec/qvi_solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace optexec {

struct MoEvent {
  double tau;
  std::int64_t q_before;
  std::int64_t zeta;
};

/// Market orders placed when no LO or MM fill ever arrives.
struct MoSchedule {
  std::vector<MoEvent> entries;
  std::int64_t terminal_residual = 0;  // liquidated at T by the terminal term
};

/// Walks forward from (0, Q0) on the grid; at every node where the obstacle
/// binds, records an MO of size mo_size and continues with the reduced inventory.
[[nodiscard]] MoSchedule no_fill_mo_schedule(const PolicyGrid& policy, const GridSpec& grid);

/// First grid time at which the obstacle binds, per inventory level.
struct FirstBinding {
  double tau;
  bool from_obstacle;  // false: never binds before T, tau = T
};

[[nodiscard]] std::vector<FirstBinding> first_binding_times(const PolicyGrid& policy,
                                                            const GridSpec& grid);

struct SampleSummary {
  std::int64_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // divisor count - 1
  double min = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

/// Summary with linearly interpolated quantiles between order statistics.
[[nodiscard]] SampleSummary summarize(std::span<const double> sample);

struct MoSizeStats {
  double t;
  SampleSummary summary;
};

/// Statistics of mo_size(t, q) over q = 0..Q0 at each requested grid time.
[[nodiscard]] std::vector<MoSizeStats> mo_size_stats(const PolicyGrid& policy, const GridSpec& grid,
                                                     std::span<const double> times);

enum class PolicyQuantity { LoDepth, MmSpread, MoSize };

[[nodiscard]] std::string_view to_string(PolicyQuantity q);

struct PolicySlice {
  std::vector<double> times;
  std::vector<std::int64_t> inventories;
  Eigen::MatrixXd values;  // times x inventories
};

/// Exact node lookup; times must be grid nodes.
[[nodiscard]] PolicySlice policy_slice(const PolicyGrid& policy, const GridSpec& grid,
                                       PolicyQuantity quantity, std::span<const double> times,
                                       std::span<const std::int64_t> inventories);

}  // namespace optexec
