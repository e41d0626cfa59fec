#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace optexec {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Market and objective constants for a sell-side liquidation.
///
/// Construct through ModelParams::validated() (or assign fields and call
/// validate()); every consumer assumes the invariants already hold.
struct ModelParams {
  double horizon = 60.0;             // T
  std::int64_t initial_inventory = 10;  // Q0
  double volatility = 0.01;          // sigma
  double fill_scale_lo = 50.0 / 60.0;   // lambda_L
  double fill_scale_mm = 60.0 / 60.0;   // lambda_I
  double decay_lo = 100.0;           // kappa_L
  double decay_mm = 100.0;           // kappa_I
  double lo_impact = 0.005;          // alpha_L
  double mo_impact = 0.0001;         // alpha_M
  double mo_impact_exponent = 1.5;   // beta_M
  double bid_spread = 0.01;          // xi
  double terminal_impact = 0.0001;   // alpha
  double penalty = 0.001;            // phi
  double ac_urgency = 0.1;           // gamma
  bool mm_enabled = true;

  /// Throws DomainError naming the first violated invariant.
  void validate() const;

  [[nodiscard]] static ModelParams validated(ModelParams p) {
    p.validate();
    return p;
  }

  /// Cost of one market order of `size` units: xi*size + alpha_M*size^beta_M.
  [[nodiscard]] double mo_cost(std::int64_t size) const {
    if (size <= 0) return 0.0;
    const double z = static_cast<double>(size);
    return bid_spread * z + mo_impact * std::pow(z, mo_impact_exponent);
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Reference parameter block: 10 units over 60 time units, MM enabled.
[[nodiscard]] ModelParams reference_params();

/// Uniform time grid over [0, T].
class GridSpec {
 public:
  GridSpec(double horizon, std::int64_t n_time_steps);

  [[nodiscard]] std::int64_t n_time_steps() const { return n_steps_; }
  [[nodiscard]] double horizon() const { return horizon_; }
  [[nodiscard]] double dt() const { return horizon_ / static_cast<double>(n_steps_); }
  [[nodiscard]] double time(std::int64_t i) const {
    return horizon_ * static_cast<double>(i) / static_cast<double>(n_steps_);
  }
  /// Grid index of t; throws DomainError if t is not within 1e-9*dt of a node.
  [[nodiscard]] std::int64_t index_of(double t) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  double horizon_;
  std::int64_t n_steps_;
};

/// Almgren-Chriss static schedule Q0 sinh(gamma(T-t)) / sinh(gamma T).
[[nodiscard]] double ac_schedule(const ModelParams& p, double t);

template <typename Derived>
[[nodiscard]] Eigen::ArrayXd ac_schedule(const ModelParams& p,
                                         const Eigen::ArrayBase<Derived>& t) {
  if ((t < 0.0).any() || (t > p.horizon).any())
    throw DomainError("ac_schedule: time outside [0, T]");
  const double q0 = static_cast<double>(p.initial_inventory);
  return q0 * (p.ac_urgency * (p.horizon - t)).sinh() / std::sinh(p.ac_urgency * p.horizon);
}

/// h(T, q) = -q(xi + alpha q) - alpha_M q^beta_M.
[[nodiscard]] double terminal_h(const ModelParams& p, std::int64_t q);

/// terminal_h for q = 0..Q0.
[[nodiscard]] Eigen::VectorXd terminal_row(const ModelParams& p);

/// h(t, 0) = -phi * int_t^T qbar_s^2 ds, closed form.
[[nodiscard]] double boundary_h_zero(const ModelParams& p, double t);

}  // namespace optexec
