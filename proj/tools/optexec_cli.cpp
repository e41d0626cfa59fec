#include "optexec/config.hpp"
#include "optexec/execution_simulator.hpp"
#include "optexec/grid_io.hpp"
#include "optexec/qvi_solver.hpp"
#include "optexec/reporting.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void print_manifest(const optexec::RunManifest& m) {
  for (const auto& f : m.outputs) std::cout << f.name << "  " << f.sha256 << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal liquidation with limit orders, market orders and internal market making"};
  app.set_version_flag("--version", optexec::kToolVersion);
  app.require_subcommand(1);

  std::string config = "configs/reference.cfg";
  std::string out = "out";
  std::string policy;
  std::string reference;
  std::optional<double> dt;
  std::optional<std::int64_t> n_paths;
  std::optional<std::uint64_t> seed;
  bool no_mm = false;
  std::int64_t event_log = 0;

  const auto common = [&](CLI::App* c) {
    c->add_option("--config", config, "key = value configuration file")->check(CLI::ExistingFile);
    c->add_option("--out", out, "output directory");
    c->add_option("--dt", dt, "time step (overrides n_time_steps)");
    c->add_flag("--no-mm", no_mm, "disable the internal market-making channel");
  };
  const auto sim_flags = [&](CLI::App* c) {
    c->add_option("--n-paths", n_paths, "Monte Carlo paths");
    c->add_option("--seed", seed, "master seed");
    c->add_option("--event-log", event_log, "write events.csv for the first N paths");
  };

  auto* solve = app.add_subcommand("solve", "solve the QVI and write the policy grid");
  common(solve);
  auto* tables = app.add_subcommand("tables", "emit table and figure CSVs from a policy file");
  tables->add_option("--policy", policy, "binary policy file")->required()->check(CLI::ExistingFile);
  tables->add_option("--reference", reference, "LO/MO policy file for the second timing row")
      ->check(CLI::ExistingFile);
  tables->add_option("--out", out, "output directory");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo comparison of the strategies");
  common(simulate);
  sim_flags(simulate);
  simulate->add_option("--policy", policy, "pre-solved policy for one configured strategy")
      ->check(CLI::ExistingFile);
  auto* all = app.add_subcommand("all", "solve, tables and simulate in one run");
  common(all);
  sim_flags(all);

  CLI11_PARSE(app, argc, argv);

  const optexec::Overrides o{dt, n_paths, seed, no_mm, event_log};
  try {
    optexec::RunManifest m;
    if (*solve) {
      m = optexec::cmd_solve(config, out, o);
    } else if (*tables) {
      m = optexec::cmd_tables(policy, out,
                              reference.empty() ? std::nullopt : std::optional<std::filesystem::path>(reference));
    } else if (*simulate) {
      m = optexec::cmd_simulate(config,
                                policy.empty() ? std::nullopt : std::optional<std::filesystem::path>(policy),
                                out, o);
    } else {
      m = optexec::cmd_all(config, out, o);
    }
    print_manifest(m);
    return 0;
  } catch (const optexec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const optexec::FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const optexec::SimConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const optexec::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const optexec::SolverFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
