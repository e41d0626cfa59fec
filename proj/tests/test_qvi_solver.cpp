#include "oracles.hpp"

#include "optexec/qvi_solver.hpp"

#include <doctest.h>

#include <random>

using namespace optexec;

namespace {

const Solution& reference_solution() {
  static const Solution s = solve(reference_params(), GridSpec(60.0, 6000));
  return s;
}

}  // namespace

TEST_CASE("mm closed form") {
  const auto p = reference_params();
  const auto pinned = mm_spread_and_value(-0.0101, p);
  CHECK(pinned.quote == doctest::Approx(-0.0001).epsilon(1e-12));
  const auto flat = mm_spread_and_value(0.0, p);
  CHECK(flat.quote == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(flat.running_gain == doctest::Approx(0.01 * std::exp(-1.0)).epsilon(1e-14));
  CHECK_THROWS_AS((void)mm_spread_and_value(std::nan(""), p), DomainError);
}

TEST_CASE("mm closed form against brute-force grid search") {
  const auto p = reference_params();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.03, 0.15);
  for (int k = 0; k < 8; ++k) {
    const double dh = u(rng);
    const auto cf = mm_spread_and_value(dh, p);
    const auto gs = oracle::mm_grid_search(dh, p);
    CHECK(std::abs(cf.running_gain - gs.value) <= 1e-9);
    CHECK(std::abs(cf.quote - gs.arg) <= 1e-6);
  }
}

TEST_CASE("mm kernel is scalar-generic") {
  const auto p = reference_params();
  const auto f = mm_spread_and_value(0.02f, p);
  const auto d = mm_spread_and_value(0.02, p);
  CHECK(static_cast<double>(f.running_gain) == doctest::Approx(d.running_gain).epsilon(1e-6));
  const auto ld = mm_spread_and_value<long double>(0.02L, p);
  CHECK(static_cast<double>(ld.running_gain) == doctest::Approx(d.running_gain).epsilon(1e-15));
}

TEST_CASE("lo root at the pinned difference") {
  const auto p = reference_params();
  const auto r = lo_depth_and_value(0.0101, p);
  CHECK(r.quote == doctest::Approx(0.004944).epsilon(1e-3));
  CHECK(std::abs(r.quote - 0.004944) <= 1e-4);
  CHECK(std::abs(lo_foc(r.quote, 0.0101, p)) <= 1e-10);
}

TEST_CASE("lo root without impact is 1/kappa at zero difference") {
  auto p = reference_params();
  p.lo_impact = 0.0;
  CHECK(lo_depth_and_value(0.0, p).quote == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("lo root against bisection, FOC and residual") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-0.05, 0.2);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  for (int k = 0; k < 200; ++k) {
    auto p = reference_params();
    p.lo_impact *= scale(rng);
    p.fill_scale_lo *= scale(rng);
    p.decay_lo *= scale(rng);
    const double D = ud(rng);
    RootDiagnostics diag;
    const auto r = lo_depth_and_value(D, p, &diag);
    CHECK(std::abs(r.quote - oracle::lo_depth_bisection(D, p)) <= 1e-9);
    CHECK(std::abs(lo_foc(r.quote, D, p)) <= 1e-10);
    CHECK(r.running_gain == doctest::Approx(oracle::lo_value(r.quote, D, p)).epsilon(1e-14));
    // stationarity of the objective by central differences
    const double h = 1e-7;
    const double fd = (oracle::lo_value(r.quote + h, D, p) - oracle::lo_value(r.quote - h, D, p)) / (2 * h);
    CHECK(std::abs(fd) <= 1e-6);
    CHECK(diag.newton_iterations <= 200);
  }
}

TEST_CASE("lo root falls back to bisection when Newton leaves the bracket") {
  auto p = reference_params();
  p.lo_impact = 2.0;
  p.fill_scale_lo = 5.0;
  RootDiagnostics diag;
  const auto r = lo_depth_and_value(-0.2, p, &diag);
  CHECK(std::abs(lo_foc(r.quote, -0.2, p)) <= 1e-8);
  CHECK(std::abs(r.quote - oracle::lo_depth_bisection(-0.2, p)) <= 1e-9);
}

TEST_CASE("intervention hand case and enumeration") {
  const auto p = reference_params();
  Eigen::VectorXd row(2);
  row << 0.0, -0.02;
  const auto c = intervention(row, 1, p);
  CHECK(c.best_size == 1);
  CHECK(c.best_value == doctest::Approx(-0.0101).epsilon(1e-14));
  const auto z = intervention(row, 0, p);
  CHECK(z.best_size == 0);
  CHECK(z.best_value == 0.0);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.2, 0.05);
  for (int k = 0; k < 500; ++k) {
    Eigen::VectorXd h(11);
    for (Eigen::Index q = 0; q < 11; ++q) h(q) = u(rng);
    for (std::int64_t q = 0; q <= 10; ++q) {
      const auto a = intervention(h, q, p);
      const auto b = oracle::enumerate_intervention(h, q, p);
      CHECK(a.best_size == b.size);
      CHECK(a.best_value == b.value);
    }
  }
}

TEST_CASE("single step from T against hand computation") {
  const auto p = reference_params();
  const GridSpec g(60.0, 6000);
  const Eigen::VectorXd next = terminal_row(p);
  const double t = g.time(5999);
  const auto step = step_backward(next, t, p, g);
  const double qb = oracle::qbar(p, t);
  CHECK(step.h(0) == doctest::Approx(oracle::boundary(p, t)).epsilon(1e-9));
  for (std::int64_t q = 1; q <= 10; ++q) {
    const double D = next(q - 1) - next(q);
    const double d = oracle::lo_depth_bisection(D, p);
    const double gain = oracle::lo_value(d, D, p) + p.fill_scale_mm / p.decay_mm * std::exp(-1.0 + p.decay_mm * D);
    const double dev = static_cast<double>(q) - qb;
    const double candidate = next(q) + g.dt() * (gain - p.penalty * dev * dev);
    double obstacle = -1e300;
    for (std::int64_t z = 1; z <= q; ++z) obstacle = std::max(obstacle, step.h(q - z) - oracle::mo_cost(p, z));
    CHECK(step.h(q) == doctest::Approx(std::max(candidate, obstacle)).epsilon(1e-12));
    CHECK(step.h(q) >= next(q) - g.dt() * p.penalty * dev * dev - 1e-12);
  }
}

TEST_CASE("penalty vanishes where qbar equals q") {
  const auto p = reference_params();
  const GridSpec g(60.0, 6000);
  // qbar(0) = Q0, so at t = 0 the penalty term for q = Q0 is zero.
  const Eigen::VectorXd next = reference_solution().values.h.row(1).transpose();
  auto no_penalty = p;
  no_penalty.penalty = 0.0;
  const auto with = step_backward(next, 0.0, p, g);
  const auto without = step_backward(next, 0.0, no_penalty, g);
  REQUIRE_FALSE(with.impulse_active(10));
  REQUIRE_FALSE(without.impulse_active(10));
  CHECK(with.h(10) == without.h(10));
  CHECK(with.h(9) < without.h(9));
}

TEST_CASE("CFL violation is raised with guidance") {
  auto p = reference_params();
  p.fill_scale_mm = 200.0;
  try {
    (void)solve(p, GridSpec(60.0, 6000));
    FAIL("expected CflViolation");
  } catch (const CflViolation& e) {
    CHECK(std::string(e.what()).find("n_time_steps") != std::string::npos);
  }
}

TEST_CASE("zero inventory gives the boundary column") {
  auto p = reference_params();
  p.initial_inventory = 0;
  const GridSpec g(60.0, 600);
  const auto s = solve(p, g);
  REQUIRE(s.values.h.cols() == 1);
  for (std::int64_t i = 0; i <= 600; ++i) CHECK(s.values.h(i, 0) == boundary_h_zero(p, g.time(i)));
  CHECK_FALSE(s.policy.impulse_active.any());
}

TEST_CASE("solver matches the stand-alone reference scheme") {
  const auto p = reference_params();
  const auto s = solve(p, GridSpec(60.0, 600));
  const auto ref = oracle::reference_solve(p, 600);
  CHECK((s.values.h - ref).cwiseAbs().maxCoeff() <= 1e-9);
  auto lomo = p;
  lomo.mm_enabled = false;
  const auto s2 = solve(lomo, GridSpec(60.0, 600));
  CHECK((s2.values.h - oracle::reference_solve(lomo, 600)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("feasibility, monotonicity and pinned-region identities") {
  const auto p = reference_params();
  const auto& s = reference_solution();
  CHECK(min_feasibility_margin(s.values, p) >= -1e-12);
  const auto& h = s.values.h;
  double worst_gap = -1.0;
  for (Eigen::Index i = 0; i + 1 < h.rows(); ++i)
    for (Eigen::Index q = 1; q < h.cols(); ++q) worst_gap = std::max(worst_gap, h(i, q - 1) - h(i, q));
  CHECK(worst_gap <= p.bid_spread + p.mo_impact + 1e-12);
  const auto pinned = lo_depth_and_value(0.0101, p).quote;
  int binding = 0;
  for (Eigen::Index i = 0; i + 1 < h.rows(); ++i) {
    for (Eigen::Index q = 1; q < h.cols(); ++q) {
      if (!s.policy.impulse_active(i, q) || s.policy.mo_size(i, q) != 1) continue;
      ++binding;
      CHECK(std::abs(s.policy.mm_spread(i, q) + 0.0001) <= 1e-9);
      CHECK(std::abs(s.policy.lo_depth(i, q) - pinned) <= 1e-9);
    }
  }
  CHECK(binding > 0);
  CHECK(std::isnan(s.policy.lo_depth(0, 0)));
}

TEST_CASE("impulse region persists in time (reported, not asserted)") {
  const auto& pol = reference_solution().policy;
  int reentries = 0;
  for (Eigen::Index q = 1; q < pol.impulse_active.cols(); ++q) {
    bool seen = false;
    for (Eigen::Index i = 0; i + 1 < pol.impulse_active.rows(); ++i) {
      if (pol.impulse_active(i, q)) seen = true;
      else if (seen) ++reentries;
    }
  }
  MESSAGE("nodes leaving the impulse region after entering it: " << reentries);
}

TEST_CASE("terminal row itself is infeasible") {
  const auto p = reference_params();
  const Eigen::VectorXd row = terminal_row(p);
  CHECK(row(1) - intervention(row, 1, p).best_value < 0.0);
}

TEST_CASE("mm switched off leaves spreads unset") {
  auto p = reference_params();
  p.mm_enabled = false;
  const auto s = solve(p, GridSpec(60.0, 600));
  CHECK(s.policy.mm_spread.array().isNaN().all());
  CHECK(s.values.h(0, 10) < solve(reference_params(), GridSpec(60.0, 600)).values.h(0, 10));
}

TEST_CASE("self-convergence is first order") {
  const auto p = reference_params();
  std::vector<Eigen::MatrixXd> coarse;
  for (std::int64_t n : {600, 1200, 2400}) {
    const auto s = solve(p, GridSpec(60.0, n));
    // restrict to the common coarse grid
    Eigen::MatrixXd r(601, 11);
    for (std::int64_t i = 0; i <= 600; ++i) r.row(i) = s.values.h.row(i * (n / 600));
    coarse.push_back(r);
  }
  const double e1 = (coarse[0] - coarse[1]).cwiseAbs().maxCoeff();
  const double e2 = (coarse[1] - coarse[2]).cwiseAbs().maxCoeff();
  CHECK(std::log2(e1 / e2) >= 0.8);
}
