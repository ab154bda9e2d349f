#pragma once

#include <optional>

#include "sustain/externality.hpp"

namespace sustain {

// Time-indexed record of a constant-consumption run. Every series has
// horizon_steps + 1 entries; the final entry is the continuation point at
// the terminal grid time (stocks and capital are genuine terminal state,
// flow fields describe the market state that would clear there).
struct Trajectory {
  EconomySpec econ;
  std::vector<ResourceSpec> resources;
  DemandSystem demand;

  std::vector<Vec> price;           // [t][j]
  std::vector<Vec> adjusted_price;  // [t][j]
  std::vector<Vec> margin;          // [t][j]
  std::vector<Vec> extraction;      // [t][j]
  std::vector<Vec> stock;           // [t][j]
  Vec capital;      // [t]
  Vec income;       // [t]
  Vec investment;   // [t]
  Vec consumption;  // [t]
  double cbar = 0.0;

  int steps() const { return econ.horizon_steps; }
  int n_resources() const { return static_cast<int>(resources.size()); }
};

// G_j and G'_j at the stored stock (clamped at zero: converged paths may
// carry stocks a few ulp below zero).
double growth_of(const Trajectory& traj, int t, int j);
double growth_slope_of(const Trajectory& traj, int t, int j);

// Relative deviation from the discrete price rule over one period:
//   [P(t+1)(1 + G' dt)/(1 + r dt) - P(t)] / P(t)
// on adjusted prices, with G' at the start-of-period stock.
double hotelling_residual(const Trajectory& traj, int t, int j);

// Rule-implied investment I*(t) = sum_j P_hat_j(t) (Q_j(t) - G_j(X_j(t))).
double hartwick_investment(const Trajectory& traj, int t);

// P(t) Q(t) (1 + r dt) - P(t+1)(1 + G' dt)(X(t) - Q(t)), in currency units.
double user_cost_rule_residual(const Trajectory& traj, int t, int j);

// P(t+1)(1 + G' dt)/(1 + r dt) - P(t), the level form of the price rule.
double present_value_residual(const Trajectory& traj, int t, int j);

struct ConsumptionSeries {
  Vec consumption;  // C(t) = Y(t) - I(t)
  double drift;     // max_t |C(t) - C(0)| / max(1, |C(0)|)
};
ConsumptionSeries consumption_series(const Trajectory& traj);

struct CostateSeries {
  Vec beta;                       // discount factors, beta(0) = 1
  Vec pi;                         // capital costate, pi(t) = beta(t)
  std::vector<Vec> psi;           // resource costates pi(t) P_hat_j(t)
  std::vector<Vec> psi_residual;  // discrete costate-equation residual, t < T
};
// psi_residual(t,j) = (1+G'dt)/(1+r dt) * (psi(t+1)(1+G'dt) - psi(t)),
// which equals (1+G'dt) * hotelling_residual * pi(t) P_hat_j(t) / (1+r dt)
// identically; the two are compared in tests as a consistency check.
CostateSeries costates(const Trajectory& traj);

struct RuleResidualReport {
  std::vector<Vec> hotelling;      // [t][j], t < T, relative
  std::vector<Vec> present_value;  // [t][j]
  std::vector<Vec> user_cost;      // [t][j]
  Vec hartwick;                    // [t] = I(t) - I*(t)
  double consumption_drift = 0.0;
  double max_hotelling = 0.0;
  double max_present_value = 0.0;
  double max_user_cost = 0.0;
  double max_hartwick = 0.0;
};
RuleResidualReport build_residual_report(const Trajectory& traj);

// Max deviation from the stock and capital update identities; test hook.
double trajectory_identity_error(const Trajectory& traj);

// Assembles a trajectory from a per-period extraction schedule (T rows),
// pricing it through the demand system. cbar defaults to the first-period
// investment-rule level Y_0 - I*_0. Rows where some Q_j = 0 get NaN
// price/margin fields (income still uses the zero-extension revenue).
Trajectory trajectory_from_extraction(const EconomySpec& econ,
                                      const std::vector<ResourceSpec>& res,
                                      const DemandSystem& demand,
                                      const std::vector<Vec>& extraction,
                                      std::optional<double> cbar = {});

}  // namespace sustain
