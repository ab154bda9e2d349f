#pragma once

#include <string>
#include <vector>

#include "sustain/linalg.hpp"

namespace sustain {

enum class GrowthKind { zero, exponential, logistic };

// Natural growth G(x) of a resource stock; the zero kind is a nonrenewable.
struct GrowthFunction {
  GrowthKind kind = GrowthKind::zero;
  double rate = 0.0;               // exponential g
  double intrinsic_rate = 0.0;     // logistic rho
  double carrying_capacity = 0.0;  // logistic kappa

  static GrowthFunction none();
  static GrowthFunction exponential(double g);
  static GrowthFunction logistic(double rho, double kappa);
};

// G(x) and G'(x). Negative stocks are rejected.
double growth_eval(const GrowthFunction& g, double x);
double growth_derivative(const GrowthFunction& g, double x);

struct ResourceSpec {
  std::string name;
  double stock0 = 0.0;
  GrowthFunction growth;
};

struct TerminalCondition {
  enum class Kind { exhaust, stock_target };
  Kind kind = Kind::exhaust;
  Vec target_stocks;        // required iff kind == stock_target
  double tolerance = 1e-8;  // relative to each resource's stock0

  // Target per resource; exhaust means zeros.
  Vec targets(int n_resources) const;
};

struct EconomySpec {
  int horizon_steps = 0;  // number of periods T; the grid has T+1 points
  double dt = 1.0;
  Vec interest_rate;  // size 1 (constant) or horizon_steps (per period)
  double capital0 = 0.0;
  TerminalCondition terminal;

  // Interest rate for period t; indices past the schedule clamp to the
  // last entry (used only for the terminal display row).
  double rate_at(int t) const;
  void validate(int n_resources) const;
};

// beta(t) = prod_{s<t} 1/(1 + r_s dt), so beta(0) = 1.
double discount_factor(const EconomySpec& econ, int t);

enum class DemandKind { isoelastic, linear };

// Parametric inverse demand p(Q). Isoelastic systems are declared through
// the demand map q_j = A_j prod_k p_k^{eta_jk} and inverted; linear systems
// are p = a - B Q directly. perfectly_elastic marks the price-taking limit:
// margins vanish and adjusted prices coincide with market prices.
struct DemandSystem {
  DemandKind kind = DemandKind::linear;
  int n = 0;
  Vec scale;      // isoelastic A_j > 0
  Mat exponent;   // isoelastic eta[j][k]
  Vec intercept;  // linear a_j > 0
  Mat slope;      // linear B[j][k], B_jj > 0
  bool perfectly_elastic = false;

  static DemandSystem isoelastic(Vec scale, Mat exponent,
                                 bool perfectly_elastic = false);
  static DemandSystem linear(Vec intercept, Mat slope,
                             bool perfectly_elastic = false);

  bool isoelastic_diagonal() const;
  void validate() const;
};

// Market prices clearing extraction Q. Throws ModelError on nonpositive
// prices, failed inversion, or an own-price monotonicity violation
// (dp_j/dQ_j must stay < 0 at every evaluated point).
Vec inverse_demand(const DemandSystem& d, const Vec& extraction);

// Jacobian of the inverse demand in the fixed orientation
//   result[j][k] = dp_k / dQ_j
// (rows indexed by the differentiation variable). For linear demand this is
// -B^T; for isoelastic demand it is the inverse of the transposed demand
// Jacobian dq/dp.
Mat demand_jacobian(const DemandSystem& d, const Vec& extraction);

// Central-difference version of demand_jacobian with step
// max(1e-6, 1e-6 Q_j); kept as an independent cross-check.
Mat demand_jacobian_fd(const DemandSystem& d, const Vec& extraction);

// Forward demand map q(p).
Vec demand_quantities(const DemandSystem& d, const Vec& price);

// sum_k p_k(Q) Q_k. Diagonal isoelastic systems get the continuous
// zero-extraction extension (a resource with Q_k = 0 contributes 0,
// valid for eta_kk < -1); other systems require Q > 0 elementwise.
double total_revenue(const DemandSystem& d, const Vec& extraction);

// r K + sum_j p_j Q_j, accumulated in resource order (kept in one place so
// solver and audit agree bit for bit).
double period_income(double r, double capital, const Vec& price,
                     const Vec& extraction);

// Snapshot of the economy at one grid time.
struct EconomyState {
  int t = 0;
  Vec stocks;
  double capital = 0.0;
  Vec extraction;
  Vec prices;
  double income = 0.0;
};

}  // namespace sustain
