#include "optexec/core_model.hpp"

#include <cmath>
#include <string>

namespace optexec {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(std::string("invalid model parameter: ") + what);
}

}  // namespace

void ModelParams::validate() const {
  require(std::isfinite(horizon) && horizon > 0.0, "horizon must be > 0");
  require(initial_inventory >= 0, "initial_inventory must be >= 0");
  require(std::isfinite(volatility) && volatility >= 0.0, "volatility must be >= 0");
  require(std::isfinite(fill_scale_lo) && fill_scale_lo >= 0.0, "fill_scale_lo must be >= 0");
  require(std::isfinite(fill_scale_mm) && fill_scale_mm >= 0.0, "fill_scale_mm must be >= 0");
  require(std::isfinite(decay_lo) && decay_lo > 0.0, "decay_lo must be > 0");
  require(std::isfinite(decay_mm) && decay_mm > 0.0, "decay_mm must be > 0");
  require(std::isfinite(lo_impact) && lo_impact >= 0.0, "lo_impact must be >= 0");
  require(std::isfinite(mo_impact) && mo_impact >= 0.0, "mo_impact must be >= 0");
  require(std::isfinite(mo_impact_exponent) && mo_impact_exponent >= 1.0,
          "mo_impact_exponent must be >= 1");
  require(std::isfinite(bid_spread) && bid_spread >= 0.0, "bid_spread must be >= 0");
  require(std::isfinite(terminal_impact) && terminal_impact >= 0.0,
          "terminal_impact must be >= 0");
  require(std::isfinite(penalty) && penalty >= 0.0, "penalty must be >= 0");
  require(std::isfinite(ac_urgency) && ac_urgency > 0.0, "ac_urgency must be > 0");
  // sinh(gamma T) overflows beyond ~710.
  require(ac_urgency * horizon < 350.0, "ac_urgency * horizon too large");
}

ModelParams reference_params() { return ModelParams{}; }

GridSpec::GridSpec(double horizon, std::int64_t n_time_steps)
    : horizon_(horizon), n_steps_(n_time_steps) {
  if (!(std::isfinite(horizon) && horizon > 0.0))
    throw DomainError("grid: horizon must be > 0");
  if (n_time_steps < 1) throw DomainError("grid: n_time_steps must be >= 1");
}

std::int64_t GridSpec::index_of(double t) const {
  if (!(t >= 0.0 && t <= horizon_)) throw DomainError("time outside [0, T]");
  const double x = t / dt();
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9) throw DomainError("time is not a grid node");
  return static_cast<std::int64_t>(r);
}

double ac_schedule(const ModelParams& p, double t) {
  if (!(t >= 0.0 && t <= p.horizon)) throw DomainError("ac_schedule: time outside [0, T]");
  const double q0 = static_cast<double>(p.initial_inventory);
  return q0 * std::sinh(p.ac_urgency * (p.horizon - t)) / std::sinh(p.ac_urgency * p.horizon);
}

double terminal_h(const ModelParams& p, std::int64_t q) {
  if (q < 0 || q > p.initial_inventory) throw DomainError("terminal_h: q outside [0, Q0]");
  const double x = static_cast<double>(q);
  return -x * (p.bid_spread + p.terminal_impact * x) -
         p.mo_impact * std::pow(x, p.mo_impact_exponent);
}

Eigen::VectorXd terminal_row(const ModelParams& p) {
  Eigen::VectorXd row(p.initial_inventory + 1);
  for (std::int64_t q = 0; q <= p.initial_inventory; ++q) row(q) = terminal_h(p, q);
  return row;
}

double boundary_h_zero(const ModelParams& p, double t) {
  if (!(t >= 0.0 && t <= p.horizon)) throw DomainError("boundary_h_zero: time outside [0, T]");
  // int_t^T sinh^2(gamma(T-s)) ds = (sinh(2 gamma r) - 2 gamma r) / (4 gamma), r = T - t
  const double g = p.ac_urgency;
  const double r = p.horizon - t;
  const double q0 = static_cast<double>(p.initial_inventory);
  const double s = std::sinh(g * p.horizon);
  return -p.penalty * q0 * q0 / (s * s) * (std::sinh(2.0 * g * r) - 2.0 * g * r) / (4.0 * g);
}

}  // namespace optexec
