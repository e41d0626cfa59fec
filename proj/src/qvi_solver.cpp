#include "optexec/qvi_solver.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace optexec {

namespace {

constexpr double kRootTolerance = 1e-12;
constexpr int kMaxIterations = 200;
constexpr double kBracketLimit = 10.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double lo_foc_slope(double depth, const ModelParams& p) {
  const double k = p.decay_lo;
  return -k - 2.0 * k * k * p.lo_impact * p.fill_scale_lo * std::exp(-k * depth);
}

}  // namespace

ChannelOptimum<double> lo_depth_and_value(double delta_big, const ModelParams& p,
                                          RootDiagnostics* diag) {
  if (!std::isfinite(delta_big)) throw DomainError("lo_depth_and_value: non-finite delta_big");
  RootDiagnostics local;
  RootDiagnostics& d = diag ? *diag : local;
  d = {};

  const auto finish = [&](double depth) {
    return ChannelOptimum<double>{depth, lo_objective(depth, delta_big, p)};
  };

  double x = 1.0 / p.decay_lo;
  for (int it = 0; it < kMaxIterations; ++it) {
    ++d.newton_iterations;
    const double step = lo_foc(x, delta_big, p) / lo_foc_slope(x, p);
    x -= step;
    if (!std::isfinite(x) || std::abs(x) > kBracketLimit) break;
    if (std::abs(step) <= kRootTolerance) return finish(x);
  }

  // g is strictly decreasing, so a sign change on [lo, hi] brackets the unique root.
  d.used_bisection = true;
  double lo = 1.0 / p.decay_lo - 0.5;
  double hi = 1.0 / p.decay_lo + 0.5;
  while (lo_foc(lo, delta_big, p) <= 0.0 && lo > -kBracketLimit) lo = std::max(-kBracketLimit, 2.0 * lo - hi);
  while (lo_foc(hi, delta_big, p) >= 0.0 && hi < kBracketLimit) hi = std::min(kBracketLimit, 2.0 * hi - lo);
  const double g_lo = lo_foc(lo, delta_big, p);
  const double g_hi = lo_foc(hi, delta_big, p);
  if (!(g_lo > 0.0 && g_hi < 0.0)) {
    std::ostringstream msg;
    msg << "lo_depth_and_value: root not bracketed on [" << lo << ", " << hi
        << "] (g=" << g_lo << ", " << g_hi << ") for delta_big=" << delta_big
        << " after " << d.newton_iterations << " Newton iterations";
    throw SolverFailure(msg.str());
  }
  for (int it = 0; it < kMaxIterations && hi - lo > kRootTolerance; ++it) {
    ++d.bisection_iterations;
    const double mid = 0.5 * (lo + hi);
    (lo_foc(mid, delta_big, p) > 0.0 ? lo : hi) = mid;
  }
  return finish(0.5 * (lo + hi));
}

Intervention intervention(const Eigen::Ref<const Eigen::VectorXd>& h_row, std::int64_t q,
                          const ModelParams& p) {
  if (q < 0 || q >= h_row.size()) throw DomainError("intervention: q outside row");
  Intervention best{0, h_row(q)};
  for (std::int64_t z = 1; z <= q; ++z) {
    const double v = h_row(q - z) - p.mo_cost(z);
    if (v > best.best_value) best = {z, v};
  }
  return best;
}

RowControls row_controls(const Eigen::Ref<const Eigen::VectorXd>& h_row, const ModelParams& p) {
  const auto n = h_row.size();
  RowControls c{Eigen::VectorXd::Constant(n, kNaN), Eigen::VectorXd::Zero(n),
                Eigen::VectorXd::Constant(n, kNaN), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index q = 1; q < n; ++q) {
    const double delta_big = h_row(q - 1) - h_row(q);
    const auto lo = lo_depth_and_value(delta_big, p);
    c.lo_depth(q) = lo.quote;
    c.lo_gain(q) = lo.running_gain;
    if (p.mm_enabled) {
      const auto mm = mm_spread_and_value(-delta_big, p);
      c.mm_spread(q) = mm.quote;
      c.mm_gain(q) = mm.running_gain;
    }
  }
  return c;
}

StepResult step_backward(const Eigen::Ref<const Eigen::VectorXd>& h_next, double t,
                         const ModelParams& p, const GridSpec& grid) {
  const auto n = h_next.size();
  if (n != p.initial_inventory + 1) throw DomainError("step_backward: row size != Q0 + 1");
  const double dt = grid.dt();
  const double qbar = ac_schedule(p, t);

  StepResult r;
  r.next_controls = row_controls(h_next, p);
  r.h.resize(n);
  r.impulse_active = Eigen::Matrix<bool, Eigen::Dynamic, 1>::Constant(n, false);
  r.mo_size = Eigen::VectorXi::Zero(n);

  const auto& c = r.next_controls;
  for (Eigen::Index q = 1; q < n; ++q) {
    double intensity = p.fill_scale_lo * std::exp(-p.decay_lo * c.lo_depth(q));
    if (p.mm_enabled) intensity += p.fill_scale_mm * std::exp(-p.decay_mm * c.mm_spread(q));
    if (!(dt * intensity < 1.0)) {
      std::ostringstream msg;
      msg << "CFL violation at t=" << t << ", q=" << q << ": dt*intensity = " << dt * intensity
          << " >= 1 (dt=" << dt << ", intensity=" << intensity << "). Refine the grid: "
          << "n_time_steps must exceed " << static_cast<std::int64_t>(std::ceil(grid.horizon() * intensity));
      throw CflViolation(msg.str());
    }
  }

  r.h(0) = boundary_h_zero(p, t);
  for (Eigen::Index q = 1; q < n; ++q) {
    const double dev = static_cast<double>(q) - qbar;
    const double candidate =
        h_next(q) + dt * (-p.penalty * dev * dev + c.lo_gain(q) + c.mm_gain(q));
    // Same-time intervention: rows 0..q-1 at time t are already final.
    std::int32_t best_z = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (Eigen::Index z = 1; z <= q; ++z) {
      const double v = r.h(q - z) - p.mo_cost(z);
      if (v > best_v) {
        best_v = v;
        best_z = static_cast<std::int32_t>(z);
      }
    }
    if (best_v >= candidate - kBindingTolerance) {
      r.h(q) = std::max(candidate, best_v);
      r.impulse_active(q) = true;
      r.mo_size(q) = best_z;
    } else {
      r.h(q) = candidate;
    }
  }
  return r;
}

Solution solve(const ModelParams& p, const GridSpec& grid) {
  p.validate();
  if (grid.horizon() != p.horizon) throw DomainError("solve: grid horizon differs from model horizon");
  const auto n_t = grid.n_time_steps();
  const auto n_q = p.initial_inventory + 1;

  Solution s{ValueGrid{RowMatrixXd(n_t + 1, n_q), grid},
             PolicyGrid{RowMatrixXd(n_t + 1, n_q), RowMatrixXd(n_t + 1, n_q),
                        RowMatrixXb::Constant(n_t + 1, n_q, false), RowMatrixXi::Zero(n_t + 1, n_q)}};
  auto& h = s.values.h;
  auto& pol = s.policy;

  h.row(n_t) = terminal_row(p).transpose();
  for (std::int64_t i = n_t - 1; i >= 0; --i) {
    const Eigen::VectorXd next = h.row(i + 1).transpose();
    auto step = step_backward(next, grid.time(i), p, grid);
    h.row(i) = step.h.transpose();
    pol.impulse_active.row(i) = step.impulse_active.transpose();
    pol.mo_size.row(i) = step.mo_size.transpose();
    pol.lo_depth.row(i + 1) = step.next_controls.lo_depth.transpose();
    pol.mm_spread.row(i + 1) = step.next_controls.mm_spread.transpose();
  }
  const Eigen::VectorXd first = h.row(0).transpose();
  const auto c0 = row_controls(first, p);
  pol.lo_depth.row(0) = c0.lo_depth.transpose();
  pol.mm_spread.row(0) = c0.mm_spread.transpose();
  return s;
}

double min_feasibility_margin(const ValueGrid& v, const ModelParams& p) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i + 1 < v.h.rows(); ++i) {
    const Eigen::VectorXd row = v.h.row(i).transpose();
    for (Eigen::Index q = 1; q < row.size(); ++q)
      worst = std::min(worst, row(q) - intervention(row, q, p).best_value);
  }
  return worst;
}

}  // namespace optexec
