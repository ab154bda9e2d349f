#pragma once

#include <string>
#include <vector>

#include "sustain/rules.hpp"

namespace sustain::cli {

// printf %.17g: enough digits that reading the text back restores the
// exact double.
std::string format_double(double v);

// Plain comma-separated text, no quoting; CRLF tolerated on input.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;          // -1 when absent
  int require_column(const std::string& name) const;  // ConfigError when absent
};

CsvTable read_csv(const std::string& path);

// One row per (t, resource), t = 0..T. Economy-level series repeat across
// the resource rows of a period.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

// One row per (t, resource), t = 0..T-1.
void write_residuals_csv(const Trajectory& traj,
                         const RuleResidualReport& report,
                         const std::string& path);

}  // namespace sustain::cli
