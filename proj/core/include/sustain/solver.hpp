#pragma once

#include "sustain/rules.hpp"

namespace sustain {

struct SolverConfig {
  double shooting_tolerance = 1e-8;  // terminal stock, relative to stock0
  int max_outer_iterations = 200;
  double bracket_lo = 0.0;        // initial bracket for P_hat_0; 0 = auto
  double bracket_hi = 0.0;
  double damping = 0.5;           // multi-resource fixed point
  double inner_tolerance = 1e-12; // market-state recovery, relative
  bool verify_monotonicity = false;  // sample the bracket before bisecting
};

struct MarketState {
  Vec extraction;
  Vec price;
  Vec margin;
  Vec adjusted_price;  // realized p_j (1 + m_j), equals the target to tol
};

// One period of the user-cost split: extraction that balances the value of
// selling now against holding (with growth) one more period,
//   Q = P(t+1)(1+G'dt) X / (P(t)(1+r dt) + P(t+1)(1+G'dt)).
double step_user_cost(double stock, double price_now, double price_next,
                      double r, double growth_slope, double dt);

// Inverts the adjusted-price map: finds Q > 0 with p(Q)(1 + m(Q)) equal to
// the target. Closed forms for diagonal isoelastic (needs eta_jj < -1) and
// linear systems; damped Newton in log Q otherwise. Perfectly elastic
// demand reduces to the plain demand map at p = target.
MarketState recover_market_state(const DemandSystem& d,
                                 const Vec& adjusted_target,
                                 double inner_tolerance = 1e-12);

// Forward simulation from an initial adjusted price vector: the adjusted
// price compounds by (1 + r dt)/(1 + G' dt) each period, extraction is
// recovered from it, stocks and capital roll forward, and consumption is
// pinned at cbar = Y_0 - I*_0. Throws SolverError("stock_infeasible") when
// a stock is driven below -tolerance relative to stock0.
Trajectory propagate(const EconomySpec& econ,
                     const std::vector<ResourceSpec>& res,
                     const DemandSystem& demand,
                     const Vec& initial_adjusted_price,
                     double inner_tolerance = 1e-12);

struct SolveResult {
  Trajectory trajectory;
  RuleResidualReport residuals;
  double cbar = 0.0;
  Vec initial_adjusted_price;
  int iterations = 0;          // bisection / fixed-point iterations
  double terminal_mismatch = 0.0;  // max_j |X_j(T) - target_j| / stock0_j
  bool converged = false;
};

// Shooting on the initial adjusted price: scalar bisection for one
// resource, damped per-coordinate fixed point for up to three. Throws
// SolverError on bracket failure, divergence, or iteration exhaustion;
// results are only returned converged.
SolveResult solve_constant_consumption(const EconomySpec& econ,
                                       const std::vector<ResourceSpec>& res,
                                       const DemandSystem& demand,
                                       const SolverConfig& cfg = {});

// Diagnostic mode: extraction stepped by step_user_cost along an exogenous
// adjusted price path (horizon_steps + 1 rows). Prices and margins in the
// result come from the demand system at the stepped extraction; the stored
// adjusted prices are the exogenous path itself.
Trajectory solve_user_cost_mode(const EconomySpec& econ,
                                const std::vector<ResourceSpec>& res,
                                const DemandSystem& demand,
                                const std::vector<Vec>& adjusted_price_path);

}  // namespace sustain
