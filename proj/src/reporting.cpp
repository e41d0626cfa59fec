#include "optexec/reporting.hpp"

#include "optexec/policy_analysis.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace optexec {

namespace fs = std::filesystem;

namespace {

std::string fixed6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  // "-0.000000" reads as a sign error in a table
  if (std::string_view(buf) == "-0.000000") return "0.000000";
  return buf;
}

class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& bytes) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    files_.push_back({name, sha256_hex(bytes), bytes.size()});
  }

  void write_binary(const std::string& name, const std::vector<std::uint8_t>& bytes) {
    write(name, std::string(bytes.begin(), bytes.end()));
  }

  [[nodiscard]] const std::vector<OutputFile>& files() const { return files_; }
  [[nodiscard]] const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<OutputFile> files_;
};

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest finish_manifest(OutputSet& out, std::string command, const std::string& config_echo,
                            const GridSpec& grid, Clock::time_point start) {
  RunManifest m;
  m.command = std::move(command);
  m.config_echo = config_echo;
  m.n_time_steps = grid.n_time_steps();
  m.dt = grid.dt();
  m.outputs = out.files();
  m.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();

  nlohmann::ordered_json j;
  j["tool"] = "optexec";
  j["tool_version"] = kToolVersion;
  j["command"] = m.command;
  j["config"] = m.config_echo;
  j["grid"] = {{"horizon", grid.horizon()}, {"n_time_steps", m.n_time_steps}, {"dt", m.dt}};
  j["wall_clock"] = {{"finished_utc", utc_now()}, {"elapsed_seconds", m.elapsed_seconds}};
  auto files = nlohmann::ordered_json::array();
  for (const auto& f : m.outputs)
    files.push_back({{"file", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["outputs"] = files;
  const std::string text = j.dump(2) + "\n";
  std::ofstream mf(out.dir() / "manifest.json", std::ios::binary | std::ios::trunc);
  mf << text;
  return m;
}

std::string quoted_args(const std::string& cmd, const Overrides& o) {
  std::ostringstream s;
  s << cmd;
  if (o.dt) s << " --dt " << format_double(*o.dt);
  if (o.n_paths) s << " --n-paths " << *o.n_paths;
  if (o.seed) s << " --seed " << *o.seed;
  if (o.no_mm) s << " --no-mm";
  if (o.event_log_paths > 0) s << " --event-log " << o.event_log_paths;
  return s.str();
}

std::string event_log_csv(const SolvedModel* policy, const SimSetup& setup, std::uint64_t seed,
                          std::int64_t n_paths, Strategy strategy) {
  std::ostringstream o;
  o << "# units: t [time], price [price per unit], size [inventory units], cash [cash]\n"
    << "strategy,path,channel,t,price,size,cash\n";
  for (std::int64_t k = 0; k < n_paths; ++k) {
    const auto p = policy ? simulate_path(*policy, setup, seed, k) : simulate_ac_benchmark(setup, seed, k);
    for (const auto& e : p.events)
      o << to_string(strategy) << ',' << k << ',' << to_string(e.channel) << ',' << format_double(e.t)
        << ',' << format_double(e.price) << ',' << e.size << ',' << format_double(e.cash) << '\n';
  }
  return o.str();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const Overrides& o) {
  if (o.dt) {
    if (!(*o.dt > 0.0)) throw ConfigError(0, "--dt must be > 0");
    const double steps = cfg.model.horizon / *o.dt;
    const double rounded = std::round(steps);
    if (rounded < 1.0 || std::abs(steps - rounded) > 1e-9 * steps)
      throw ConfigError(0, "--dt must divide the horizon into a whole number of steps");
    cfg.n_time_steps = static_cast<std::int64_t>(rounded);
  }
  if (o.n_paths) {
    if (*o.n_paths < 1) throw ConfigError(0, "--n-paths must be >= 1");
    cfg.sim.n_paths = *o.n_paths;
  }
  if (o.seed) cfg.sim.seed = *o.seed;
  if (o.no_mm) cfg.model.mm_enabled = false;
  return cfg;
}

std::vector<double> report_times(const GridSpec& grid) {
  std::vector<double> t;
  for (int k = 1; k <= 5; ++k)
    t.push_back(grid.time(static_cast<std::int64_t>(std::llround(k * grid.n_time_steps() / 6.0))));
  return t;
}

std::vector<std::int64_t> report_inventories(const ModelParams& p) {
  std::vector<std::int64_t> q;
  for (std::int64_t v = 1; v <= std::min<std::int64_t>(9, p.initial_inventory); v += 2) q.push_back(v);
  return q;
}

std::string table1_csv(const SolvedModel& primary, const SolvedModel* reference) {
  const auto& grid = primary.solution.values.grid;
  const auto q0 = primary.params.initial_inventory;
  std::ostringstream o;
  o << "# Optimal MO execution timing without LO/MM fills\n"
    << "# units: q [inventory units], tau [time]; source: obstacle (binding QVI obstacle) or "
       "terminal (never binds, liquidated at T)\n"
    << "q";
  for (auto q = q0; q >= 0; --q) o << ',' << q;
  o << '\n';
  const auto emit = [&](const SolvedModel& m) {
    const auto taus = first_binding_times(m.solution.policy, m.solution.values.grid);
    const std::string tag = m.params.mm_enabled ? "lo_mo_mm" : "lo_mo";
    o << "tau_" << tag;
    for (auto q = q0; q >= 0; --q) o << ',' << fixed6(taus[q].tau);
    o << "\nsource_" << tag;
    for (auto q = q0; q >= 0; --q) o << ',' << (taus[q].from_obstacle ? "obstacle" : "terminal");
    o << '\n';
  };
  if (reference) {
    if (reference->params.initial_inventory != q0 || !(reference->solution.values.grid == grid))
      throw FormatError("reference policy grid differs from the primary policy grid");
    emit(*reference);
  }
  emit(primary);
  return o.str();
}

std::string table2_csv(const SolvedModel& m) {
  const auto& grid = m.solution.values.grid;
  const auto times = report_times(grid);
  std::ostringstream o;
  o << "# Statistics of optimal market order size over q = 0.."
    << m.params.initial_inventory << "\n"
    << "# units: Time [time], count [nodes], mean/std/min/25%/50%/75%/max [inventory units]\n"
    << "Time,count,mean,std,min,25%,50%,75%,max\n";
  for (const auto& row : mo_size_stats(m.solution.policy, grid, times)) {
    const auto& s = row.summary;
    o << fixed6(row.t) << ',' << s.count << ',' << fixed6(s.mean) << ',' << fixed6(s.std) << ','
      << fixed6(s.min) << ',' << fixed6(s.q25) << ',' << fixed6(s.q50) << ',' << fixed6(s.q75)
      << ',' << fixed6(s.max) << '\n';
  }
  return o.str();
}

std::string depth_table_csv(const SolvedModel& m, PolicyQuantity quantity) {
  const auto& grid = m.solution.values.grid;
  const auto times = report_times(grid);
  const auto inv = report_inventories(m.params);
  const auto slice = policy_slice(m.solution.policy, grid, quantity, times, inv);
  std::ostringstream o;
  o << (quantity == PolicyQuantity::LoDepth ? "# LO depth" : "# MM spread") << '\n'
    << "# units: t [time], values [price units relative to mid]\n"
    << "t";
  for (auto q : inv) o << ',' << to_string(quantity) << "_q" << q;
  o << '\n';
  for (std::size_t a = 0; a < times.size(); ++a) {
    o << fixed6(times[a]);
    for (std::size_t b = 0; b < inv.size(); ++b) o << ',' << fixed6(slice.values(a, b));
    o << '\n';
  }
  return o.str();
}

std::string figure2_csv(const SolvedModel& primary, const SolvedModel* reference) {
  const auto& grid = primary.solution.values.grid;
  const auto stride = std::max<std::int64_t>(1, grid.n_time_steps() / 600);
  std::ostringstream o;
  o << "# units: t [time], value [inventory units]\nseries,t,value\n";
  for (std::int64_t i = 0; i <= grid.n_time_steps(); i += stride)
    o << "ac_schedule," << fixed6(grid.time(i)) << ',' << fixed6(ac_schedule(primary.params, grid.time(i)))
      << '\n';
  const auto dots = [&](const SolvedModel& m) {
    const std::string tag = m.params.mm_enabled ? "mo_lo_mo_mm" : "mo_lo_mo";
    const auto s = no_fill_mo_schedule(m.solution.policy, m.solution.values.grid);
    for (const auto& e : s.entries)
      o << tag << ',' << fixed6(e.tau) << ',' << fixed6(static_cast<double>(e.q_before)) << '\n';
  };
  if (reference) dots(*reference);
  dots(primary);
  return o.str();
}

std::string figure3_csv(const SolvedModel& m) {
  const auto& grid = m.solution.values.grid;
  const auto& pol = m.solution.policy;
  const auto stride = std::max<std::int64_t>(1, grid.n_time_steps() / 600);
  std::ostringstream o;
  o << "# units: t [time], value [price units relative to mid]\nseries,t,value\n";
  for (auto q : report_inventories(m.params)) {
    for (std::int64_t i = 0; i <= grid.n_time_steps(); i += stride)
      o << "lo_depth_q" << q << ',' << fixed6(grid.time(i)) << ',' << fixed6(pol.lo_depth(i, q)) << '\n';
    if (m.params.mm_enabled)
      for (std::int64_t i = 0; i <= grid.n_time_steps(); i += stride)
        o << "mm_spread_q" << q << ',' << fixed6(grid.time(i)) << ',' << fixed6(pol.mm_spread(i, q)) << '\n';
  }
  return o.str();
}

std::string sim_stats_json(const ExperimentConfig& cfg, const ExperimentResult& r) {
  nlohmann::ordered_json j;
  j["config"] = render_config(cfg);
  j["objective_convention"] = "realized objective minus initial mark-to-mid Q0*S0";
  auto runs = nlohmann::ordered_json::array();
  for (const auto& run : r.runs) {
    const auto& s = run.stats;
    nlohmann::ordered_json e;
    e["strategy"] = std::string(to_string(run.strategy));
    e["n_paths"] = s.n_paths;
    e["mean_objective"] = s.mean_objective;
    e["standard_error"] = s.standard_error;
    e["decomposition"] = {{"cash", s.mean_cash}, {"terminal_liquidation", s.mean_terminal},
                          {"penalty", -s.mean_penalty}};
    e["fills"] = {{"LO", s.fill_counts[0]}, {"MM", s.fill_counts[1]}, {"MO", s.fill_counts[2]}};
    nlohmann::ordered_json hist = nlohmann::ordered_json::object();
    for (const auto& [size, count] : s.mo_size_histogram) hist[std::to_string(size)] = count;
    e["mo_size_histogram"] = hist;
    e["mean_terminal_inventory"] = s.mean_terminal_inventory;
    if (run.model_value) {
      const double err = std::abs(s.mean_objective - *run.model_value);
      e["dp_consistency"] = {{"h0", *run.model_value},
                             {"abs_error", err},
                             {"standard_errors", s.standard_error > 0 ? err / s.standard_error : 0.0},
                             {"within_3se", err <= 3.0 * s.standard_error}};
    }
    if (run.strategy == Strategy::AlmgrenChriss)
      e["note"] = "continuous schedule executed as market orders of size round(Q - qbar_t)";
    runs.push_back(e);
  }
  j["strategies"] = runs;
  auto cmp = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < r.runs.size(); ++a)
    for (std::size_t b = a + 1; b < r.runs.size(); ++b) {
      const auto d = paired_difference(r.runs[a].objectives, r.runs[b].objectives);
      cmp.push_back({{"minuend", std::string(to_string(r.runs[a].strategy))},
                     {"subtrahend", std::string(to_string(r.runs[b].strategy))},
                     {"mean_difference", d.mean},
                     {"standard_error", d.standard_error}});
    }
  j["paired_differences"] = cmp;
  return j.dump(2) + "\n";
}

RunManifest cmd_solve(const fs::path& config_path, const fs::path& out_dir, const Overrides& o) {
  const auto start = Clock::now();
  const auto cfg = apply_overrides(load_config(config_path), o);
  const auto grid = cfg.grid();
  const SolvedModel m{cfg.model, solve(cfg.model, grid)};
  OutputSet out(out_dir);
  out.write_binary("policy.bin", encode_binary(m));
  out.write("policy.csv", encode_csv(m));
  return finish_manifest(out, quoted_args("solve --config " + config_path.string(), o),
                         render_config(cfg), grid, start);
}

RunManifest cmd_tables(const fs::path& policy_path, const fs::path& out_dir,
                       const std::optional<fs::path>& reference_path) {
  const auto start = Clock::now();
  const auto primary = read_binary(policy_path);
  std::optional<SolvedModel> reference;
  if (reference_path) reference = read_binary(*reference_path);
  const SolvedModel* ref = reference ? &*reference : nullptr;
  OutputSet out(out_dir);
  out.write("table1.csv", table1_csv(primary, ref));
  out.write("table2.csv", table2_csv(primary));
  out.write("table3.csv", depth_table_csv(primary, PolicyQuantity::LoDepth));
  if (primary.params.mm_enabled) out.write("table4.csv", depth_table_csv(primary, PolicyQuantity::MmSpread));
  out.write("figure2.csv", figure2_csv(primary, ref));
  out.write("figure3.csv", figure3_csv(primary));
  std::string cmd = "tables --policy " + policy_path.string();
  if (reference_path) cmd += " --reference " + reference_path->string();
  return finish_manifest(out, cmd, render_model(primary.params), primary.solution.values.grid, start);
}

namespace {

ExperimentResult simulate_into(const ExperimentConfig& cfg, std::map<Strategy, SolvedModel> policies,
                               OutputSet& out, const Overrides& o) {
  auto result = run_experiment(cfg, policies);
  out.write("sim_stats.json", sim_stats_json(cfg, result));
  if (o.event_log_paths > 0) {
    const SimSetup setup{cfg.model, cfg.grid(), cfg.sim.initial_mid};
    std::string log;
    for (const auto s : cfg.sim.strategies) {
      const SolvedModel* p = nullptr;
      std::optional<SolvedModel> solved;
      if (s != Strategy::AlmgrenChriss) {
        if (auto it = policies.find(s); it != policies.end()) {
          p = &it->second;
        } else {
          const auto model = policy_model(cfg.model, s);
          solved = SolvedModel{model, solve(model, setup.grid)};
          p = &*solved;
        }
      }
      auto part = event_log_csv(p, setup, cfg.sim.seed, std::min(o.event_log_paths, cfg.sim.n_paths), s);
      if (!log.empty()) part = part.substr(part.find('\n', part.find('\n') + 1) + 1);
      log += part;
    }
    out.write("events.csv", log);
  }
  return result;
}

}  // namespace

RunManifest cmd_simulate(const fs::path& config_path, const std::optional<fs::path>& policy_path,
                         const fs::path& out_dir, const Overrides& o) {
  const auto start = Clock::now();
  const auto cfg = apply_overrides(load_config(config_path), o);
  std::map<Strategy, SolvedModel> policies;
  if (policy_path) {
    auto m = read_binary(*policy_path);
    bool matched = false;
    for (const auto s : cfg.sim.strategies) {
      if (s != Strategy::AlmgrenChriss && m.params == policy_model(cfg.model, s) &&
          m.solution.values.grid == cfg.grid()) {
        policies.emplace(s, m);
        matched = true;
        break;
      }
    }
    if (!matched)
      throw SimConfigError("policy file does not belong to any configured strategy on this grid");
  }
  OutputSet out(out_dir);
  simulate_into(cfg, std::move(policies), out, o);
  std::string cmd = "simulate --config " + config_path.string();
  if (policy_path) cmd += " --policy " + policy_path->string();
  return finish_manifest(out, quoted_args(cmd, o), render_config(cfg), cfg.grid(), start);
}

RunManifest cmd_all(const fs::path& config_path, const fs::path& out_dir, const Overrides& o) {
  const auto start = Clock::now();
  const auto cfg = apply_overrides(load_config(config_path), o);
  const auto grid = cfg.grid();
  OutputSet out(out_dir);

  std::map<Strategy, SolvedModel> policies;
  const auto primary_strategy = cfg.model.mm_enabled ? Strategy::LoMoMm : Strategy::LoMoImpact;
  for (const auto s : {primary_strategy, Strategy::LoMo}) {
    const auto model = policy_model(cfg.model, s);
    policies.emplace(s, SolvedModel{model, solve(model, grid)});
  }
  const auto& primary = policies.at(primary_strategy);
  const auto& reference = policies.at(Strategy::LoMo);
  out.write_binary("policy_" + std::string(to_string(primary_strategy)) + ".bin", encode_binary(primary));
  out.write_binary("policy_lo_mo.bin", encode_binary(reference));
  out.write("table1.csv", table1_csv(primary, &reference));
  out.write("table2.csv", table2_csv(primary));
  out.write("table3.csv", depth_table_csv(primary, PolicyQuantity::LoDepth));
  if (primary.params.mm_enabled) out.write("table4.csv", depth_table_csv(primary, PolicyQuantity::MmSpread));
  out.write("figure2.csv", figure2_csv(primary, &reference));
  out.write("figure3.csv", figure3_csv(primary));
  simulate_into(cfg, policies, out, o);
  return finish_manifest(out, quoted_args("all --config " + config_path.string(), o),
                         render_config(cfg), grid, start);
}

}  // namespace optexec
