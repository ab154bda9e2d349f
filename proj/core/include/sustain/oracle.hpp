#pragma once

#include <array>
#include <optional>

#include "sustain/solver.hpp"

namespace sustain {

// Brute-force reference: enumerate extraction schedules on a grid and keep
// the one with the largest feasible constant consumption. Deliberately
// independent of the price-rule machinery the solver uses.
struct OracleConfig {
  int periods = 3;      // <= 5, must equal econ.horizon_steps
  int grid_points = 9;  // <= 80 per period and resource
  std::vector<std::array<double, 2>> grid_bounds;  // per resource;
                                                   // empty = [0, stock0]
  double cbar_tolerance = 1e-6;  // relative bisection tolerance on cbar

  void validate(int n_resources) const;  // includes the enumeration guard
};

// Largest constant consumption the schedule supports: capital rolls as
// K(t+1) = K(t) + (Y(t) - cbar) dt and must stay >= 0 through K(T).
// Returns nullopt when the schedule itself is infeasible (stocks go
// negative or prices are undefined along it). Investment here is implied
// by the capital dynamics, never by the investment rule under test.
std::optional<double> feasible_cbar(const std::vector<Vec>& extraction,
                                    const EconomySpec& econ,
                                    const std::vector<ResourceSpec>& res,
                                    const DemandSystem& demand,
                                    double rel_tolerance = 1e-6);

struct OracleResult {
  OracleConfig config;
  std::vector<Vec> best_sequence;  // [t][j]
  double best_cbar = 0.0;
  Trajectory trajectory;           // best sequence priced through the model
  std::vector<Vec> adjusted_price_factor;  // P_hat(t+1)/P_hat(t), t < T-1
  long long enumerated = 0;
  long long feasible = 0;
};

// Full enumeration with stock-feasibility pruning; ties on cbar keep the
// lexicographically earliest schedule (time-major, then resource).
OracleResult enumerate_maxmin(const OracleConfig& cfg,
                              const EconomySpec& econ,
                              const std::vector<ResourceSpec>& res,
                              const DemandSystem& demand);

struct GapReport {
  double solver_cbar_hartwick = 0.0;  // solver's investment-rule level
  double solver_cbar_feasible = 0.0;  // solver schedule under the oracle's
                                      // feasibility convention
  double oracle_cbar = 0.0;
  double cbar_gap_rel = 0.0;  // (solver_cbar_feasible - oracle_cbar)/oracle
  std::vector<Vec> extraction_gap;  // |solver - oracle| per period/resource
  double max_extraction_gap = 0.0;
  double grid_cell = 0.0;           // widest grid cell across resources
  // Does the enumerated schedule obey the discrete price rule on adjusted
  // prices, within half the adjusted-price change across one grid cell?
  bool hotelling_within_grid_tol = true;
  double max_hotelling_excess = 0.0;  // max(|residual| - tolerance, 0)
};

// Requires both runs to come from the same economy. The consumption gap is
// measured under the oracle's feasibility convention on both sides.
GapReport compare(const SolveResult& solved, const OracleResult& oracle);

}  // namespace sustain
