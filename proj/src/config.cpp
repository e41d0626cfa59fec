#include "optexec/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace optexec {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Accepts a plain number or a ratio "a/b" (the fill scales are quoted per minute).
double parse_double(std::string_view v, int line, std::string_view key) {
  if (const auto slash = v.find('/'); slash != std::string_view::npos) {
    const double num = parse_double(trim(v.substr(0, slash)), line, key);
    const double den = parse_double(trim(v.substr(slash + 1)), line, key);
    if (den == 0.0) throw ConfigError(line, "key '" + std::string(key) + "': zero denominator");
    return num / den;
  }
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(line, "key '" + std::string(key) + "': expected a number, got '" +
                                std::string(v) + "'");
  return out;
}

std::int64_t parse_int(std::string_view v, int line, std::string_view key) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(line, "key '" + std::string(key) + "': expected an integer, got '" +
                                std::string(v) + "'");
  return out;
}

std::uint64_t parse_uint(std::string_view v, int line, std::string_view key) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(line, "key '" + std::string(key) + "': expected an unsigned integer, got '" +
                                std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view v, int line, std::string_view key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(line, "key '" + std::string(key) + "': expected true/false, got '" +
                              std::string(v) + "'");
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, int)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto real = [&t](const char* name, double ModelParams::*field) {
      t.emplace(name, [field, name](ExperimentConfig& c, std::string_view v, int line) {
        c.model.*field = parse_double(v, line, name);
      });
    };
    real("horizon", &ModelParams::horizon);
    real("volatility", &ModelParams::volatility);
    real("fill_scale_lo", &ModelParams::fill_scale_lo);
    real("fill_scale_mm", &ModelParams::fill_scale_mm);
    real("decay_lo", &ModelParams::decay_lo);
    real("decay_mm", &ModelParams::decay_mm);
    real("lo_impact", &ModelParams::lo_impact);
    real("mo_impact", &ModelParams::mo_impact);
    real("mo_impact_exponent", &ModelParams::mo_impact_exponent);
    real("bid_spread", &ModelParams::bid_spread);
    real("terminal_impact", &ModelParams::terminal_impact);
    real("penalty", &ModelParams::penalty);
    real("ac_urgency", &ModelParams::ac_urgency);
    t.emplace("initial_inventory", [](ExperimentConfig& c, std::string_view v, int line) {
      c.model.initial_inventory = parse_int(v, line, "initial_inventory");
    });
    t.emplace("mm_enabled", [](ExperimentConfig& c, std::string_view v, int line) {
      c.model.mm_enabled = parse_bool(v, line, "mm_enabled");
    });
    t.emplace("n_time_steps", [](ExperimentConfig& c, std::string_view v, int line) {
      c.n_time_steps = parse_int(v, line, "n_time_steps");
      if (c.n_time_steps < 1) throw ConfigError(line, "n_time_steps must be >= 1");
    });
    t.emplace("n_paths", [](ExperimentConfig& c, std::string_view v, int line) {
      c.sim.n_paths = parse_int(v, line, "n_paths");
      if (c.sim.n_paths < 1) throw ConfigError(line, "n_paths must be >= 1");
    });
    t.emplace("seed", [](ExperimentConfig& c, std::string_view v, int line) {
      c.sim.seed = parse_uint(v, line, "seed");
    });
    t.emplace("initial_mid", [](ExperimentConfig& c, std::string_view v, int line) {
      c.sim.initial_mid = parse_double(v, line, "initial_mid");
      if (!(c.sim.initial_mid > 0.0)) throw ConfigError(line, "initial_mid must be > 0");
    });
    t.emplace("strategies", [](ExperimentConfig& c, std::string_view v, int line) {
      c.sim.strategies.clear();
      std::string_view rest = v;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = trim(rest.substr(0, comma));
        try {
          c.sim.strategies.push_back(strategy_from_string(item));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(line, e.what());
        }
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
      if (c.sim.strategies.empty()) throw ConfigError(line, "strategies must not be empty");
    });
    return t;
  }();
  return table;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::LoMoMm: return "lo_mo_mm";
    case Strategy::LoMo: return "lo_mo";
    case Strategy::LoMoImpact: return "lo_mo_impact";
    case Strategy::AlmgrenChriss: return "ac";
  }
  return "unknown";
}

Strategy strategy_from_string(std::string_view name) {
  for (auto s : {Strategy::LoMoMm, Strategy::LoMo, Strategy::LoMoImpact, Strategy::AlmgrenChriss})
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

ModelParams policy_model(const ModelParams& market, Strategy s) {
  ModelParams p = market;
  switch (s) {
    case Strategy::LoMoMm:
    case Strategy::AlmgrenChriss:
      break;
    case Strategy::LoMo:
      p.mm_enabled = false;
      p.lo_impact = 0.0;
      p.mo_impact = 0.0;
      break;
    case Strategy::LoMoImpact:
      p.mm_enabled = false;
      break;
  }
  return p;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'name = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "missing key name");
    if (value.empty()) throw ConfigError(line_no, "key '" + std::string(key) + "' has no value");
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(line_no, "unknown key '" + std::string(key) + "'");
    if (!seen.emplace(key, line_no).second)
      throw ConfigError(line_no, "duplicate key '" + std::string(key) + "'");
    it->second(cfg, value, line_no);
  }
  try {
    cfg.model.validate();
  } catch (const DomainError& e) {
    // point at the line that set the offending parameter, if any
    const std::string_view msg = e.what();
    int where = 0;
    for (const auto& [key, line] : seen)
      if (msg.find(": " + key + " ") != std::string_view::npos) where = line;
    throw ConfigError(where, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string render_model(const ModelParams& p) {
  std::ostringstream o;
  o << "horizon = " << format_double(p.horizon) << '\n'
    << "initial_inventory = " << p.initial_inventory << '\n'
    << "volatility = " << format_double(p.volatility) << '\n'
    << "fill_scale_lo = " << format_double(p.fill_scale_lo) << '\n'
    << "fill_scale_mm = " << format_double(p.fill_scale_mm) << '\n'
    << "decay_lo = " << format_double(p.decay_lo) << '\n'
    << "decay_mm = " << format_double(p.decay_mm) << '\n'
    << "lo_impact = " << format_double(p.lo_impact) << '\n'
    << "mo_impact = " << format_double(p.mo_impact) << '\n'
    << "mo_impact_exponent = " << format_double(p.mo_impact_exponent) << '\n'
    << "bid_spread = " << format_double(p.bid_spread) << '\n'
    << "terminal_impact = " << format_double(p.terminal_impact) << '\n'
    << "penalty = " << format_double(p.penalty) << '\n'
    << "ac_urgency = " << format_double(p.ac_urgency) << '\n'
    << "mm_enabled = " << (p.mm_enabled ? "true" : "false") << '\n';
  return o.str();
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << render_model(c.model) << "n_time_steps = " << c.n_time_steps << '\n'
    << "n_paths = " << c.sim.n_paths << '\n'
    << "seed = " << c.sim.seed << '\n'
    << "initial_mid = " << format_double(c.sim.initial_mid) << '\n'
    << "strategies = ";
  for (std::size_t i = 0; i < c.sim.strategies.size(); ++i)
    o << (i ? ", " : "") << to_string(c.sim.strategies[i]);
  o << '\n';
  return o.str();
}

}  // namespace optexec
