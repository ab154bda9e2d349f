#pragma once

#include <string>

namespace sustain::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitGap = 3;

// Subcommand bodies. Each catches its own errors, writes a JSON error
// report {"error":{"code","message"}} to stderr, and returns the exit
// status. Output files land in out_dir (created if missing).

int cmd_solve(const std::string& config_path, const std::string& out_dir);

// margin_convention: empty = take it from the config (default
// inverse_elasticity).
int cmd_audit(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir,
              const std::string& margin_convention = {});

int cmd_oracle_check(const std::string& config_path,
                     const std::string& out_dir, double max_gap = 0.02);

int cmd_sweep(const std::string& config_path, const std::string& out_dir);

}  // namespace sustain::cli
