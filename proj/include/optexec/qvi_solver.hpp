#pragma once

#include "optexec/core_model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace optexec {

/// Numerical failure inside the solver (root not bracketed, unstable grid).
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Explicit step would be unstable: dt times the total fill intensity >= 1.
class CflViolation : public SolverFailure {
 public:
  using SolverFailure::SolverFailure;
};

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXi = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXb = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Reduced value function h(t_i, q); rows are time steps 0..N, columns q = 0..Q0.
struct ValueGrid {
  RowMatrixXd h;
  GridSpec grid;
};

/// Per-node controls. Depth and spread at (i, q) are the optimizers evaluated
/// on row i's own differences h(t_i, q-1) - h(t_i, q). Entries that carry no
/// quote (q = 0, or the MM spread when MM is disabled) are NaN.
struct PolicyGrid {
  RowMatrixXd lo_depth;
  RowMatrixXd mm_spread;
  RowMatrixXb impulse_active;
  RowMatrixXi mo_size;
};

template <typename Scalar>
struct ChannelOptimum {
  Scalar quote;         // depth (LO) or spread (MM) relative to mid
  Scalar running_gain;  // supremum of the channel's generator term
};

/// Closed-form internal market-making optimum for delta_h = h(t,q) - h(t,q-1):
/// spread = 1/kappa_I + delta_h, gain = (lambda_I/kappa_I) exp(-1 - kappa_I delta_h).
template <typename Scalar>
[[nodiscard]] ChannelOptimum<Scalar> mm_spread_and_value(Scalar delta_h, const ModelParams& p) {
  using std::exp;
  using std::isfinite;
  if (!isfinite(delta_h)) throw DomainError("mm_spread_and_value: non-finite delta_h");
  const Scalar kappa = static_cast<Scalar>(p.decay_mm);
  const Scalar lambda = static_cast<Scalar>(p.fill_scale_mm);
  return {Scalar(1) / kappa + delta_h, lambda / kappa * exp(Scalar(-1) - kappa * delta_h)};
}

struct RootDiagnostics {
  int newton_iterations = 0;
  int bisection_iterations = 0;
  bool used_bisection = false;
};

/// Depth solving 1 - k d + 2 k aL lL e^{-k d} - k D = 0 with D = h(t,q-1) - h(t,q),
/// and the LO gain (d - aL lL e^{-k d} + D) lL e^{-k d} at that depth.
/// Newton from d = 1/k, bisection fallback on [-10, 10].
[[nodiscard]] ChannelOptimum<double> lo_depth_and_value(double delta_big, const ModelParams& p,
                                                        RootDiagnostics* diag = nullptr);

/// LO first-order-condition function; strictly decreasing in depth.
[[nodiscard]] inline double lo_foc(double depth, double delta_big, const ModelParams& p) {
  const double k = p.decay_lo;
  return 1.0 - k * depth + 2.0 * k * p.lo_impact * p.fill_scale_lo * std::exp(-k * depth) -
         k * delta_big;
}

/// LO objective (d - aL lL e^{-k d} + D) lL e^{-k d}.
[[nodiscard]] inline double lo_objective(double depth, double delta_big, const ModelParams& p) {
  const double intensity = p.fill_scale_lo * std::exp(-p.decay_lo * depth);
  return (depth - p.lo_impact * intensity + delta_big) * intensity;
}

struct Intervention {
  std::int64_t best_size = 0;
  double best_value = 0.0;
};

/// max over zeta in {0..q} of h_row[q - zeta] - mo_cost(zeta); smallest maximizer wins ties.
[[nodiscard]] Intervention intervention(const Eigen::Ref<const Eigen::VectorXd>& h_row,
                                        std::int64_t q, const ModelParams& p);

/// Continuation controls for one row (entries for q >= 1; q = 0 is NaN / 0 gain).
struct RowControls {
  Eigen::VectorXd lo_depth;
  Eigen::VectorXd lo_gain;
  Eigen::VectorXd mm_spread;
  Eigen::VectorXd mm_gain;
};

[[nodiscard]] RowControls row_controls(const Eigen::Ref<const Eigen::VectorXd>& h_row,
                                       const ModelParams& p);

struct StepResult {
  Eigen::VectorXd h;                      // row at time t
  Eigen::Matrix<bool, Eigen::Dynamic, 1> impulse_active;
  Eigen::VectorXi mo_size;
  RowControls next_controls;              // controls on h_next, used for the continuation
};

/// Equality within this tolerance counts as the obstacle binding.
inline constexpr double kBindingTolerance = 1e-12;

/// One explicit backward step from t + dt to t followed by an upward sweep in
/// q projecting onto the same-time intervention value. h(t, 0) is set from
/// boundary_h_zero. Throws CflViolation when dt * (LO + MM intensity) >= 1.
[[nodiscard]] StepResult step_backward(const Eigen::Ref<const Eigen::VectorXd>& h_next, double t,
                                       const ModelParams& p, const GridSpec& grid);

struct Solution {
  ValueGrid values;
  PolicyGrid policy;
};

/// Backward induction over the whole grid.
[[nodiscard]] Solution solve(const ModelParams& p, const GridSpec& grid);

/// Most negative h(i,q) - intervention(i,q) over rows 0..N-1 (terminal row is prescribed).
[[nodiscard]] double min_feasibility_margin(const ValueGrid& v, const ModelParams& p);

}  // namespace optexec
