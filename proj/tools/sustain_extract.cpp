#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sustain/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Constant-consumption extraction schedules for interacting "
               "natural resources"};
  app.require_subcommand(1);

  std::string config;
  std::string out = ".";
  std::string data;
  std::string convention;
  double max_gap = 0.02;

  auto* solve = app.add_subcommand(
      "solve", "Solve the constant-consumption schedule and write "
               "trajectory.csv, residuals.csv, summary.json");
  solve->add_option("--config", config, "Run configuration (JSON)")
      ->required();
  solve->add_option("--out", out, "Output directory");

  auto* audit = app.add_subcommand(
      "audit", "Recompute rule residuals for an external trajectory "
               "(columns t, resource, price, quantity, stock)");
  audit->add_option("--config", config, "Run configuration (JSON)")
      ->required();
  audit->add_option("--data", data, "Trajectory CSV to audit")->required();
  audit->add_option("--out", out, "Output directory");
  audit->add_option("--margin-convention", convention,
                    "inverse_elasticity or reciprocal_elasticity");

  auto* oracle = app.add_subcommand(
      "oracle-check", "Solve, enumerate the grid oracle, and compare");
  oracle->add_option("--config", config, "Run configuration (JSON)")
      ->required();
  oracle->add_option("--out", out, "Output directory");
  oracle->add_option("--max-gap", max_gap,
                     "Largest tolerated |relative consumption gap|");

  auto* sweep = app.add_subcommand(
      "sweep", "Solve over a parameter grid and tabulate the results");
  sweep->add_option("--config", config, "Run configuration (JSON)")
      ->required();
  sweep->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return sustain::cli::kExitConfig;
  }

  if (solve->parsed()) return sustain::cli::cmd_solve(config, out);
  if (audit->parsed())
    return sustain::cli::cmd_audit(config, data, out, convention);
  if (oracle->parsed())
    return sustain::cli::cmd_oracle_check(config, out, max_gap);
  if (sweep->parsed()) return sustain::cli::cmd_sweep(config, out);
  return sustain::cli::kExitConfig;
}
