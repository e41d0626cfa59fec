// Acceptance suite. Run with a criterion number (1-7) or "all"; prints one
// PASS/FAIL line per criterion and exits non-zero if any selected one fails.

#include "oracles.hpp"

#include "optexec/config.hpp"
#include "optexec/execution_simulator.hpp"
#include "optexec/policy_analysis.hpp"
#include "optexec/qvi_solver.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace optexec;

namespace {

// Tolerances.
constexpr double kSpreadIdentityTol = 1e-9;
constexpr double kFocResidualTol = 1e-10;
constexpr double kPinnedTableTol = 1e-4;
constexpr double kInteriorTol = 2e-3;
constexpr double kTimingTol = 0.5;
constexpr double kSizeMeanTol = 0.1;
constexpr double kStandardErrors = 3.0;
constexpr std::int64_t kPaths = 100000;
constexpr double kFeasibilityTol = -1e-12;
constexpr double kFiniteDiffTol = 1e-6;
constexpr double kFiniteDiffStep = 1e-7;
constexpr double kGridSearchTol = 1e-9;
constexpr double kQuadratureTol = 1e-10;
constexpr double kMinOrder = 0.8;

constexpr std::int64_t kSteps = 6000;

// Reference values.
constexpr std::array<double, 11> kTauLoMo{1.47, 2.86, 4.51, 6.54, 9.17, 12.87, 19.07, 39.12, 59.19, 59.99, 60.00};
constexpr std::array<double, 11> kTauLoMoMm{2.96, 4.71, 6.87, 9.69, 13.70, 20.74, 48.63, 58.50, 59.83, 60.00, 60.00};
constexpr std::array<double, 5> kSizeMean{0.545455, 0.909091, 1.272727, 1.272727, 1.545455};
constexpr std::array<double, 5> kSizeMax{2, 3, 4, 4, 4};
constexpr double kPinnedDepth = 0.004944;
constexpr double kPinnedSpread = -0.000100;
constexpr double kDepthT10Q1 = 0.081970;
constexpr double kSpreadT10Q1 = 0.081992;

struct Report {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string& what) {
    detail << "    " << (ok ? "ok   " : "FAIL ") << what << '\n';
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const GridSpec& grid() {
  static const GridSpec g(60.0, kSteps);
  return g;
}

const Solution& solved(Strategy s) {
  static std::map<Strategy, Solution> cache;
  auto it = cache.find(s);
  if (it == cache.end()) it = cache.emplace(s, solve(policy_model(reference_params(), s), grid())).first;
  return it->second;
}

void criterion1(Report& r) {
  const auto p = reference_params();
  const auto& s = solved(Strategy::LoMoMm);
  double spread_err = 0.0, residual = 0.0, depth_dev = 0.0, spread_dev = 0.0;
  int nodes = 0;
  for (std::int64_t i = 0; i < kSteps; ++i) {
    for (std::int64_t q = 1; q <= p.initial_inventory; ++q) {
      if (!s.policy.impulse_active(i, q) || s.policy.mo_size(i, q) != 1) continue;
      ++nodes;
      const double spread = s.policy.mm_spread(i, q);
      const double depth = s.policy.lo_depth(i, q);
      spread_err = std::max(spread_err, std::abs(spread - (1.0 / p.decay_mm - (p.bid_spread + p.mo_impact))));
      residual = std::max(residual, std::abs(lo_foc(depth, p.bid_spread + p.mo_impact, p)));
      depth_dev = std::max(depth_dev, std::abs(depth - kPinnedDepth));
      spread_dev = std::max(spread_dev, std::abs(spread - kPinnedSpread));
    }
  }
  r.check(nodes > 0, fmt("%.0f binding nodes with zeta = 1", nodes));
  r.check(spread_err <= kSpreadIdentityTol, fmt("max |spread - (1/kappa - xi - alpha_M)| = %.3e", spread_err));
  r.check(residual <= kFocResidualTol, fmt("max LO first-order residual at D = 0.0101: %.3e", residual));
  r.check(depth_dev <= kPinnedTableTol, fmt("max |depth - 0.004944| = %.3e", depth_dev));
  r.check(spread_dev <= kPinnedTableTol, fmt("max |spread + 0.000100| = %.3e", spread_dev));
}

void criterion2(Report& r) {
  const auto& s = solved(Strategy::LoMoMm);
  const auto i = grid().index_of(10.0);
  const double lo = s.policy.lo_depth(i, 1);
  const double mm = s.policy.mm_spread(i, 1);
  r.check(std::abs(lo - kDepthT10Q1) <= kInteriorTol, fmt("LO depth (10, 1) = %.6f vs %.6f", lo, kDepthT10Q1));
  r.check(std::abs(mm - kSpreadT10Q1) <= kInteriorTol, fmt("MM spread (10, 1) = %.6f vs %.6f", mm, kSpreadT10Q1));
}

void criterion3(Report& r) {
  const auto with_mm = first_binding_times(solved(Strategy::LoMoMm).policy, grid());
  const auto base = first_binding_times(solved(Strategy::LoMo).policy, grid());
  bool ordered = true;
  for (std::int64_t q = 10; q >= 0; --q) {
    const auto k = static_cast<std::size_t>(10 - q);
    const double a = base[q].tau, b = with_mm[q].tau;
    r.check(std::abs(a - kTauLoMo[k]) <= kTimingTol, fmt("q=%2.0f  LO/MO     %6.2f vs %6.2f", q, a, kTauLoMo[k]));
    r.check(std::abs(b - kTauLoMoMm[k]) <= kTimingTol, fmt("q=%2.0f  LO/MO/MM  %6.2f vs %6.2f", q, b, kTauLoMoMm[k]));
    ordered = ordered && b >= a;
  }
  r.check(ordered, "tau with MM >= tau without MM for every q");
}

void criterion4(Report& r) {
  const std::array<double, 5> times{10, 20, 30, 40, 50};
  const auto stats = mo_size_stats(solved(Strategy::LoMoMm).policy, grid(), times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto& s = stats[k].summary;
    r.check(s.count == 11, fmt("t=%2.0f count %.0f", times[k], s.count));
    r.check(std::abs(s.mean - kSizeMean[k]) <= kSizeMeanTol,
            fmt("t=%2.0f mean %.6f vs %.6f", times[k], s.mean, kSizeMean[k]));
    r.check(s.max == kSizeMax[k], fmt("t=%2.0f max %.0f vs %.0f", times[k], s.max, kSizeMax[k]));
  }
}

struct DpCase {
  std::string label;
  ModelParams model;
};

void criterion5(Report& r) {
  std::vector<DpCase> cases;
  cases.push_back({"reference", reference_params()});
  auto off = reference_params();
  off.mm_enabled = false;
  cases.push_back({"mm off", off});
  std::mt19937_64 rng(20240601);
  const auto factor = [&] { return 0.5 + static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int k = 0; k < 3; ++k) {
    auto p = reference_params();
    p.penalty *= factor();
    p.lo_impact *= factor();
    p.mo_impact *= factor();
    cases.push_back({fmt("random %.0f (phi %.6f, alpha_L %.6f, alpha_M %.7f)", k + 1, p.penalty, p.lo_impact, p.mo_impact), p});
  }
  for (const auto& c : cases) {
    ExperimentConfig cfg;
    cfg.model = c.model;
    cfg.n_time_steps = kSteps;
    cfg.sim.n_paths = kPaths;
    cfg.sim.strategies = {Strategy::LoMoMm};
    const auto res = run_experiment(cfg);
    const auto& run = res.get(Strategy::LoMoMm);
    const double h0 = run.model_value.value_or(std::nan(""));
    const double gap = std::abs(run.stats.mean_objective - h0);
    r.check(gap <= kStandardErrors * run.stats.standard_error,
            c.label + fmt(": mean %.6f, h0 %.6f, SE %.6f, %.2f SE", run.stats.mean_objective, h0,
                          run.stats.standard_error, gap / run.stats.standard_error));
  }
}

void criterion6(Report& r) {
  const auto p = reference_params();
  for (auto s : {Strategy::LoMoMm, Strategy::LoMo}) {
    const double margin = min_feasibility_margin(solved(s).values, policy_model(p, s));
    r.check(margin >= kFeasibilityTol, std::string(to_string(s)) + fmt(" min feasibility margin %.3e", margin));
  }

  double fd_worst = 0.0;
  const auto& pol = solved(Strategy::LoMoMm);
  for (std::int64_t i = 0; i <= kSteps; i += 50) {
    for (std::int64_t q = 1; q <= 10; ++q) {
      const double D = pol.values.h(i, q - 1) - pol.values.h(i, q);
      const double d = lo_depth_and_value(D, p).quote;
      const double fd = (oracle::lo_value(d + kFiniteDiffStep, D, p) - oracle::lo_value(d - kFiniteDiffStep, D, p)) /
                        (2.0 * kFiniteDiffStep);
      fd_worst = std::max(fd_worst, std::abs(fd));
    }
  }
  r.check(fd_worst <= kFiniteDiffTol, fmt("LO objective derivative at optimum, max %.3e", fd_worst));

  double mm_worst = 0.0;
  std::mt19937_64 rng(17);
  for (int k = 0; k < 10; ++k) {
    const double dh = -0.03 + 0.18 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    mm_worst = std::max(mm_worst, std::abs(mm_spread_and_value(dh, p).running_gain - oracle::mm_grid_search(dh, p).value));
  }
  r.check(mm_worst <= kGridSearchTol, fmt("MM closed form vs grid search, max %.3e", mm_worst));

  double quad_worst = 0.0;
  for (int k = 0; k <= 60; ++k) quad_worst = std::max(quad_worst, std::abs(boundary_h_zero(p, k) - oracle::boundary(p, k)));
  r.check(quad_worst <= kQuadratureTol, fmt("boundary closed form vs quadrature, max %.3e", quad_worst));

  std::vector<RowMatrixXd> rows;
  for (std::int64_t n : {750, 1500, 3000, 6000}) {
    const auto s = solve(p, GridSpec(60.0, n));
    RowMatrixXd c(751, 11);
    for (std::int64_t i = 0; i <= 750; ++i) c.row(i) = s.values.h.row(i * (n / 750));
    rows.push_back(c);
  }
  for (std::size_t k = 0; k + 2 < rows.size(); ++k) {
    const double e1 = (rows[k] - rows[k + 1]).cwiseAbs().maxCoeff();
    const double e2 = (rows[k + 1] - rows[k + 2]).cwiseAbs().maxCoeff();
    const double order = std::log2(e1 / e2);
    r.check(order >= kMinOrder, fmt("observed order %.3f (differences %.3e, %.3e)", order, e1, e2));
  }
}

void criterion7(Report& r) {
  ExperimentConfig cfg;
  cfg.n_time_steps = kSteps;
  cfg.sim.n_paths = kPaths;
  cfg.sim.strategies = {Strategy::LoMoMm, Strategy::LoMo, Strategy::AlmgrenChriss};
  const auto res = run_experiment(cfg);
  const auto& a = res.get(Strategy::LoMoMm);
  const auto& b = res.get(Strategy::LoMo);
  const auto& c = res.get(Strategy::AlmgrenChriss);
  r.detail << fmt("    means: LO/MO/MM %.6f, LO/MO %.6f, AC %.6f\n", a.stats.mean_objective,
                  b.stats.mean_objective, c.stats.mean_objective);
  const auto ab = paired_difference(a.objectives, b.objectives);
  const auto bc = paired_difference(b.objectives, c.objectives);
  r.check(ab.mean > kStandardErrors * ab.standard_error,
          fmt("LO/MO/MM - LO/MO = %.6f (SE %.6f, %.1f SE)", ab.mean, ab.standard_error, ab.mean / ab.standard_error));
  r.check(bc.mean > kStandardErrors * bc.standard_error,
          fmt("LO/MO - AC = %.6f (SE %.6f, %.1f SE)", bc.mean, bc.standard_error, bc.mean / bc.standard_error));
}

struct Criterion {
  const char* title;
  std::function<void(Report&)> run;
};

const std::array<Criterion, 7> kCriteria{{
    {"pinned-region analytics", criterion1},
    {"LO depth / MM spread interior entries", criterion2},
    {"MO timing rows and ordering", criterion3},
    {"MO size statistics", criterion4},
    {"dynamic-programming consistency", criterion5},
    {"invariant suites", criterion6},
    {"strategy ordering", criterion7},
}};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  const std::string arg = argc > 1 ? argv[1] : "all";
  if (arg == "all") {
    for (int k = 1; k <= 7; ++k) selected.push_back(k);
  } else {
    const int k = std::atoi(arg.c_str());
    if (k < 1 || k > 7) {
      std::fprintf(stderr, "usage: acceptance [1-7|all]\n");
      return 2;
    }
    selected.push_back(k);
  }
  bool all_pass = true;
  for (int k : selected) {
    Report r;
    try {
      kCriteria[k - 1].run(r);
    } catch (const std::exception& e) {
      r.check(false, std::string("exception: ") + e.what());
    }
    std::printf("%s", r.detail.str().c_str());
    std::printf("[%s] criterion %d: %s\n", r.pass ? "PASS" : "FAIL", k, kCriteria[k - 1].title);
    std::fflush(stdout);
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}
