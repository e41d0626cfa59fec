#include "optexec/execution_simulator.hpp"

#include "optexec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace optexec {

namespace {

// Stream channels per path. The mid-price stream is shared by every strategy.
constexpr std::uint64_t kMidStream = 0;
constexpr std::uint64_t kFillStream = 1;

struct NullRecorder {
  void point(double, double, std::int64_t, double) {}
  void event(const FillEvent&) {}
};

struct FullRecorder {
  SimPath* path;
  void point(double t, double s, std::int64_t q, double x) { path->series.push_back({t, s, q, x}); }
  void event(const FillEvent& e) { path->events.push_back(e); }
};

struct PathState {
  double mid;
  std::int64_t inventory;
  double cash = 0.0;  // X, the sum of event cash flows
  double penalty = 0.0;
  PathOutcome out;
};

template <typename Recorder>
void market_order(PathState& st, const ModelParams& m, double t, std::int64_t size, Recorder& rec) {
  const double cash = (st.mid - m.bid_spread) * static_cast<double>(size) -
                      m.mo_impact * std::pow(static_cast<double>(size), m.mo_impact_exponent);
  st.cash += cash;
  st.inventory -= size;
  ++st.out.fills[static_cast<int>(Channel::MO)];
  st.out.mo_sizes.push_back(size);
  rec.event({Channel::MO, t, cash / static_cast<double>(size), size, cash});
}

template <typename Recorder>
void finish(PathState& st, const ModelParams& m, const GridSpec& grid, double s0, Recorder& rec) {
  const double q = static_cast<double>(st.inventory);
  st.out.parts.cash = st.cash - static_cast<double>(m.initial_inventory) * s0;
  st.out.parts.terminal = q * (st.mid - m.bid_spread - m.terminal_impact * q) -
                          m.mo_impact * std::pow(q, m.mo_impact_exponent);
  st.out.parts.penalty = st.penalty;
  st.out.terminal_inventory = st.inventory;
  rec.point(grid.horizon(), st.mid, st.inventory, st.cash);
}

void check_shapes(const SolvedModel& policy, const SimSetup& setup) {
  if (!(policy.solution.values.grid == setup.grid))
    throw SimConfigError("policy grid does not match the simulation grid");
  if (policy.params.initial_inventory != setup.market.initial_inventory)
    throw SimConfigError("policy inventory range does not match the market's initial inventory");
  if (policy.params.horizon != setup.market.horizon)
    throw SimConfigError("policy horizon does not match the market horizon");
}

/// Per-node fill probabilities and cash premia, computed once per policy.
struct PolicyTables {
  const SolvedModel* policy;
  bool mm;
  RowMatrixXd lo_prob, lo_premium, mm_prob, mm_premium;
};

/// qbar at each grid time and phi * dt * sum_{j >= i} qbar_j^2 (the penalty
/// still to accrue once inventory is exhausted).
struct ScheduleTables {
  std::vector<double> qbar;
  std::vector<double> empty_penalty;
};

ScheduleTables schedule_tables(const SimSetup& setup) {
  const auto& g = setup.grid;
  ScheduleTables t{std::vector<double>(g.n_time_steps() + 1), std::vector<double>(g.n_time_steps() + 1, 0.0)};
  for (std::int64_t i = 0; i <= g.n_time_steps(); ++i) t.qbar[i] = ac_schedule(setup.market, g.time(i));
  for (std::int64_t i = g.n_time_steps() - 1; i >= 0; --i)
    t.empty_penalty[i] = t.empty_penalty[i + 1] + setup.market.penalty * t.qbar[i] * t.qbar[i] * g.dt();
  return t;
}

PolicyTables policy_tables(const SolvedModel& policy, const SimSetup& setup) {
  check_shapes(policy, setup);
  const auto& m = setup.market;
  const auto& pol = policy.solution.policy;
  const double dt = setup.grid.dt();
  const auto rows = pol.lo_depth.rows();
  const auto cols = pol.lo_depth.cols();
  PolicyTables t{&policy, m.mm_enabled && policy.params.mm_enabled,
                 RowMatrixXd::Zero(rows, cols), RowMatrixXd::Zero(rows, cols),
                 RowMatrixXd::Zero(rows, cols), RowMatrixXd::Zero(rows, cols)};
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index q = 1; q < cols; ++q) {
      const double depth = pol.lo_depth(i, q);
      const double lo_intensity = m.fill_scale_lo * std::exp(-m.decay_lo * depth);
      t.lo_prob(i, q) = -std::expm1(-lo_intensity * dt);
      t.lo_premium(i, q) = depth - m.lo_impact * lo_intensity;
      if (t.mm) {
        const double spread = pol.mm_spread(i, q);
        t.mm_prob(i, q) = -std::expm1(-m.fill_scale_mm * std::exp(-m.decay_mm * spread) * dt);
        t.mm_premium(i, q) = spread;
      }
    }
  }
  return t;
}

template <typename Recorder>
PathOutcome policy_path(const PolicyTables& tab, const ScheduleTables& sched, const SimSetup& setup,
                        std::uint64_t seed, std::uint64_t path, Recorder& rec) {
  const auto& m = setup.market;
  const auto& g = setup.grid;
  const auto& pol = tab.policy->solution.policy;
  const double dt = g.dt();
  const double vol_step = m.volatility * std::sqrt(dt);

  CounterStream mid_rng(seed, path, kMidStream);
  CounterStream fill_rng(seed, path, kFillStream);
  PathState st{setup.initial_mid, m.initial_inventory, 0.0, 0.0, {}};

  for (std::int64_t i = 0; i < g.n_time_steps(); ++i) {
    const double t = g.time(i);
    rec.point(t, st.mid, st.inventory, st.cash);
    while (st.inventory > 0 && pol.impulse_active(i, st.inventory))
      market_order(st, m, t, pol.mo_size(i, st.inventory), rec);
    if (st.inventory == 0) {
      // nothing left to trade: S no longer enters the objective
      st.penalty += sched.empty_penalty[i];
      break;
    }

    const double dev = static_cast<double>(st.inventory) - sched.qbar[i];
    st.penalty += m.penalty * dev * dev * dt;

    const double u_lo = fill_rng.uniform();
    const double u_mm = fill_rng.uniform();
    // Quotes live over (t_i, t_i+1]; they are the controls the backward step
    // from t_i+1 priced, i.e. policy row i+1.
    if (u_lo < tab.lo_prob(i + 1, st.inventory)) {
      const double price = st.mid + tab.lo_premium(i + 1, st.inventory);
      st.cash += price;
      st.inventory -= 1;
      ++st.out.fills[static_cast<int>(Channel::LO)];
      rec.event({Channel::LO, t, price, 1, price});
    }
    if (tab.mm && st.inventory > 0 && u_mm < tab.mm_prob(i + 1, st.inventory)) {
      const double price = st.mid + tab.mm_premium(i + 1, st.inventory);
      st.cash += price;
      st.inventory -= 1;
      ++st.out.fills[static_cast<int>(Channel::MM)];
      rec.event({Channel::MM, t, price, 1, price});
    }
    st.mid += vol_step * mid_rng.normal();
  }
  finish(st, m, g, setup.initial_mid, rec);
  return std::move(st.out);
}

template <typename Recorder>
PathOutcome ac_path(const ScheduleTables& sched, const SimSetup& setup, std::uint64_t seed,
                    std::uint64_t path, Recorder& rec) {
  const auto& m = setup.market;
  const auto& g = setup.grid;
  const double dt = g.dt();
  const double vol_step = m.volatility * std::sqrt(dt);

  CounterStream mid_rng(seed, path, kMidStream);
  PathState st{setup.initial_mid, m.initial_inventory, 0.0, 0.0, {}};

  for (std::int64_t i = 0; i <= g.n_time_steps(); ++i) {
    const double t = g.time(i);
    const double target = sched.qbar[i];
    const auto size = static_cast<std::int64_t>(std::llround(static_cast<double>(st.inventory) - target));
    if (i < g.n_time_steps()) rec.point(t, st.mid, st.inventory, st.cash);
    if (size > 0) market_order(st, m, t, size, rec);
    if (i == g.n_time_steps()) break;
    if (st.inventory == 0) {
      st.penalty += sched.empty_penalty[i];
      break;
    }
    const double dev = static_cast<double>(st.inventory) - target;
    st.penalty += m.penalty * dev * dev * dt;
    st.mid += vol_step * mid_rng.normal();
  }
  finish(st, m, g, setup.initial_mid, rec);
  return std::move(st.out);
}

SimPath to_sim_path(PathOutcome&& out, SimPath&& p) {
  p.parts = out.parts;
  p.terminal_inventory = out.terminal_inventory;
  return std::move(p);
}

}  // namespace

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::LO: return "LO";
    case Channel::MM: return "MM";
    case Channel::MO: return "MO";
  }
  return "?";
}

SimPath simulate_path(const SolvedModel& policy, const SimSetup& setup, std::uint64_t seed,
                      std::uint64_t path) {
  SimPath p;
  FullRecorder rec{&p};
  auto out = policy_path(policy_tables(policy, setup), schedule_tables(setup), setup, seed, path, rec);
  return to_sim_path(std::move(out), std::move(p));
}

SimPath simulate_ac_benchmark(const SimSetup& setup, std::uint64_t seed, std::uint64_t path) {
  SimPath p;
  FullRecorder rec{&p};
  auto out = ac_path(schedule_tables(setup), setup, seed, path, rec);
  return to_sim_path(std::move(out), std::move(p));
}

PathOutcome run_policy_path(const SolvedModel& policy, const SimSetup& setup, std::uint64_t seed,
                            std::uint64_t path) {
  NullRecorder rec;
  return policy_path(policy_tables(policy, setup), schedule_tables(setup), setup, seed, path, rec);
}

PathOutcome run_ac_path(const SimSetup& setup, std::uint64_t seed, std::uint64_t path) {
  NullRecorder rec;
  return ac_path(schedule_tables(setup), setup, seed, path, rec);
}

SimStats aggregate(const std::vector<PathOutcome>& outcomes) {
  SimStats s;
  s.n_paths = static_cast<std::int64_t>(outcomes.size());
  if (outcomes.empty()) return s;
  const double n = static_cast<double>(outcomes.size());
  for (const auto& o : outcomes) {
    s.mean_objective += o.parts.objective();
    s.mean_cash += o.parts.cash;
    s.mean_terminal += o.parts.terminal;
    s.mean_penalty += o.parts.penalty;
    s.mean_terminal_inventory += static_cast<double>(o.terminal_inventory);
    for (int c = 0; c < 3; ++c) s.fill_counts[c] += o.fills[c];
    for (auto z : o.mo_sizes) ++s.mo_size_histogram[z];
  }
  s.mean_objective /= n;
  s.mean_cash /= n;
  s.mean_terminal /= n;
  s.mean_penalty /= n;
  s.mean_terminal_inventory /= n;
  s.mo_count = s.fill_counts[static_cast<int>(Channel::MO)];
  if (outcomes.size() > 1) {
    double ss = 0.0;
    for (const auto& o : outcomes) {
      const double d = o.parts.objective() - s.mean_objective;
      ss += d * d;
    }
    s.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

const StrategyRun& ExperimentResult::get(Strategy s) const {
  for (const auto& r : runs)
    if (r.strategy == s) return r;
  throw std::out_of_range("strategy not in experiment: " + std::string(to_string(s)));
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::map<Strategy, SolvedModel> policies, unsigned threads) {
  const SimSetup setup{config.model, config.grid(), config.sim.initial_mid};
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto n = static_cast<std::size_t>(config.sim.n_paths);

  const auto sched = schedule_tables(setup);
  ExperimentResult result;
  for (const auto strategy : config.sim.strategies) {
    const SolvedModel* policy = nullptr;
    if (strategy != Strategy::AlmgrenChriss) {
      auto it = policies.find(strategy);
      if (it == policies.end()) {
        const auto model = policy_model(config.model, strategy);
        it = policies.emplace(strategy, SolvedModel{model, solve(model, setup.grid)}).first;
      }
      policy = &it->second;
    }

    std::optional<PolicyTables> tab;
    if (policy) tab = policy_tables(*policy, setup);
    std::vector<PathOutcome> outcomes(n);
    std::vector<std::jthread> workers;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      workers.emplace_back([&, begin, end] {
        NullRecorder rec;
        for (std::size_t k = begin; k < end; ++k)
          outcomes[k] = tab ? policy_path(*tab, sched, setup, config.sim.seed, k, rec)
                            : ac_path(sched, setup, config.sim.seed, k, rec);
      });
    }
    workers.clear();

    StrategyRun run{strategy, aggregate(outcomes), {}, std::nullopt};
    run.objectives.reserve(n);
    for (const auto& o : outcomes) run.objectives.push_back(o.parts.objective());
    if (policy && policy->params == config.model)
      run.model_value = policy->solution.values.h(0, config.model.initial_inventory);
    result.runs.push_back(std::move(run));
  }
  return result;
}

PairedDifference paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired_difference: size mismatch");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) mean += a[k] - b[k];
  mean /= n;
  double ss = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k] - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

}  // namespace optexec
