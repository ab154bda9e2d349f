#pragma once

#include <optional>
#include <string>

#include "sustain/oracle.hpp"

namespace sustain::cli {

// One swept scalar, addressed by path:
//   interest_rate            capital0
//   stock0:<resource name>
//   demand.scale:<j>         demand.intercept:<j>
//   demand.exponent:<j>,<k>  demand.slope:<j>,<k>
struct SweepParameter {
  std::string path;
  Vec values;
};

struct SweepSpec {
  std::vector<SweepParameter> parameters;  // last parameter varies fastest
};

struct RunConfig {
  EconomySpec econ;
  std::vector<ResourceSpec> resources;
  DemandSystem demand;
  SolverConfig solver;
  std::optional<OracleConfig> oracle;
  std::optional<SweepSpec> sweep;
  MarginConvention margin_convention = MarginConvention::inverse_elasticity;

  void validate() const;
};

// Strict: unknown keys anywhere in the document are configuration errors.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

MarginConvention parse_margin_convention(const std::string& name);

void apply_parameter(RunConfig& cfg, const std::string& path, double value);

}  // namespace sustain::cli
