#include "sustain/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sustain/errors.hpp"

namespace sustain {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_step(const Trajectory& traj, int t, int j, bool needs_next) {
  if (j < 0 || j >= traj.n_resources())
    throw ModelError("resource index out of range");
  int last = needs_next ? traj.steps() - 1 : traj.steps();
  if (t < 0 || t > last) throw ModelError("time index out of range");
}

double adjusted_at(const Trajectory& traj, int t, int j) {
  double p = traj.adjusted_price[t][j];
  if (!(p > 0.0))
    throw ModelError("adjusted price must be > 0 for rule residuals",
                     "nonpositive_price");
  return p;
}

}  // namespace

double growth_of(const Trajectory& traj, int t, int j) {
  return growth_eval(traj.resources[j].growth,
                     std::max(traj.stock[t][j], 0.0));
}

double growth_slope_of(const Trajectory& traj, int t, int j) {
  return growth_derivative(traj.resources[j].growth,
                           std::max(traj.stock[t][j], 0.0));
}

double hotelling_residual(const Trajectory& traj, int t, int j) {
  check_step(traj, t, j, true);
  double p_now = adjusted_at(traj, t, j);
  double p_next = traj.adjusted_price[t + 1][j];
  double dt = traj.econ.dt;
  double grow = 1.0 + growth_slope_of(traj, t, j) * dt;
  double disc = 1.0 + traj.econ.rate_at(t) * dt;
  return (p_next * grow / disc - p_now) / p_now;
}

double hartwick_investment(const Trajectory& traj, int t) {
  if (t < 0 || t > traj.steps()) throw ModelError("time index out of range");
  double inv = 0.0;
  for (int j = 0; j < traj.n_resources(); ++j)
    inv += traj.adjusted_price[t][j] *
           (traj.extraction[t][j] - growth_of(traj, t, j));
  return inv;
}

double user_cost_rule_residual(const Trajectory& traj, int t, int j) {
  check_step(traj, t, j, true);
  double dt = traj.econ.dt;
  double grow = 1.0 + growth_slope_of(traj, t, j) * dt;
  double disc = 1.0 + traj.econ.rate_at(t) * dt;
  return traj.adjusted_price[t][j] * traj.extraction[t][j] * disc -
         traj.adjusted_price[t + 1][j] * grow *
             (traj.stock[t][j] - traj.extraction[t][j]);
}

double present_value_residual(const Trajectory& traj, int t, int j) {
  check_step(traj, t, j, true);
  double dt = traj.econ.dt;
  double grow = 1.0 + growth_slope_of(traj, t, j) * dt;
  double disc = 1.0 + traj.econ.rate_at(t) * dt;
  return traj.adjusted_price[t + 1][j] * grow / disc -
         traj.adjusted_price[t][j];
}

ConsumptionSeries consumption_series(const Trajectory& traj) {
  ConsumptionSeries series;
  int points = traj.steps() + 1;
  series.consumption.assign(points, 0.0);
  for (int t = 0; t < points; ++t)
    series.consumption[t] = traj.income[t] - traj.investment[t];
  double c0 = series.consumption[0];
  double drift = 0.0;
  for (double c : series.consumption)
    drift = std::max(drift, std::fabs(c - c0));
  series.drift = drift / std::max(1.0, std::fabs(c0));
  return series;
}

CostateSeries costates(const Trajectory& traj) {
  const int T = traj.steps();
  const int n = traj.n_resources();
  const double dt = traj.econ.dt;
  CostateSeries cs;
  cs.beta.assign(T + 1, 1.0);
  for (int t = 0; t < T; ++t)
    cs.beta[t + 1] = cs.beta[t] / (1.0 + traj.econ.rate_at(t) * dt);
  cs.pi = cs.beta;
  cs.psi.assign(T + 1, Vec(n, 0.0));
  for (int t = 0; t <= T; ++t)
    for (int j = 0; j < n; ++j)
      cs.psi[t][j] = cs.pi[t] * traj.adjusted_price[t][j];
  cs.psi_residual.assign(T, Vec(n, 0.0));
  for (int t = 0; t < T; ++t) {
    double disc = 1.0 + traj.econ.rate_at(t) * dt;
    for (int j = 0; j < n; ++j) {
      double grow = 1.0 + growth_slope_of(traj, t, j) * dt;
      cs.psi_residual[t][j] =
          grow / disc * (cs.psi[t + 1][j] * grow - cs.psi[t][j]);
    }
  }
  return cs;
}

RuleResidualReport build_residual_report(const Trajectory& traj) {
  const int T = traj.steps();
  const int n = traj.n_resources();
  RuleResidualReport report;
  report.hotelling.assign(T, Vec(n, 0.0));
  report.present_value.assign(T, Vec(n, 0.0));
  report.user_cost.assign(T, Vec(n, 0.0));
  report.hartwick.assign(T, 0.0);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < n; ++j) {
      report.hotelling[t][j] = hotelling_residual(traj, t, j);
      report.present_value[t][j] = present_value_residual(traj, t, j);
      report.user_cost[t][j] = user_cost_rule_residual(traj, t, j);
      report.max_hotelling =
          std::max(report.max_hotelling, std::fabs(report.hotelling[t][j]));
      report.max_present_value = std::max(
          report.max_present_value, std::fabs(report.present_value[t][j]));
      report.max_user_cost =
          std::max(report.max_user_cost, std::fabs(report.user_cost[t][j]));
    }
    report.hartwick[t] = traj.investment[t] - hartwick_investment(traj, t);
    report.max_hartwick =
        std::max(report.max_hartwick, std::fabs(report.hartwick[t]));
  }
  report.consumption_drift = consumption_series(traj).drift;
  return report;
}

double trajectory_identity_error(const Trajectory& traj) {
  const int T = traj.steps();
  const double dt = traj.econ.dt;
  double worst = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < traj.n_resources(); ++j) {
      double predicted = traj.stock[t][j] +
                         (growth_of(traj, t, j) - traj.extraction[t][j]) * dt;
      worst = std::max(worst, std::fabs(traj.stock[t + 1][j] - predicted));
    }
    double k_pred =
        traj.capital[t] + (traj.income[t] - traj.consumption[t]) * dt;
    worst = std::max(worst, std::fabs(traj.capital[t + 1] - k_pred));
  }
  return worst;
}

Trajectory trajectory_from_extraction(const EconomySpec& econ,
                                      const std::vector<ResourceSpec>& res,
                                      const DemandSystem& demand,
                                      const std::vector<Vec>& extraction,
                                      std::optional<double> cbar) {
  const int T = econ.horizon_steps;
  const int n = static_cast<int>(res.size());
  if (extraction.size() != static_cast<size_t>(T))
    throw ModelError("extraction schedule needs one row per period");

  Trajectory traj;
  traj.econ = econ;
  traj.resources = res;
  traj.demand = demand;
  traj.price.assign(T + 1, Vec(n, kNaN));
  traj.adjusted_price.assign(T + 1, Vec(n, kNaN));
  traj.margin.assign(T + 1, Vec(n, kNaN));
  traj.extraction.assign(T + 1, Vec(n, 0.0));
  traj.stock.assign(T + 1, Vec(n, 0.0));
  traj.capital.assign(T + 1, 0.0);
  traj.income.assign(T + 1, 0.0);
  traj.investment.assign(T + 1, 0.0);
  traj.consumption.assign(T + 1, 0.0);

  for (int j = 0; j < n; ++j) traj.stock[0][j] = res[j].stock0;
  traj.capital[0] = econ.capital0;

  for (int t = 0; t < T; ++t) {
    traj.extraction[t] = extraction[t];
    bool interior = true;
    for (double q : extraction[t])
      if (!(q > 0.0)) interior = false;
    if (interior) {
      MarginReport mr = externality_margin(demand, extraction[t]);
      traj.price[t] = mr.market_price;
      traj.margin[t] = mr.margin;
      for (int j = 0; j < n; ++j)
        traj.adjusted_price[t][j] =
            mr.market_price[j] * (1.0 + mr.margin[j]);
      traj.income[t] = period_income(econ.rate_at(t), traj.capital[t],
                                     traj.price[t], traj.extraction[t]);
    } else {
      traj.income[t] = econ.rate_at(t) * traj.capital[t] +
                       total_revenue(demand, extraction[t]);
    }
    for (int j = 0; j < n; ++j) {
      double g = growth_eval(res[j].growth, std::max(traj.stock[t][j], 0.0));
      traj.stock[t + 1][j] =
          traj.stock[t][j] + (g - extraction[t][j]) * econ.dt;
    }
    if (t == 0) {
      if (!cbar) {
        if (!interior)
          throw ModelError(
              "cannot infer the consumption level from a corner first period");
        cbar = traj.income[0] - hartwick_investment(traj, 0);
      }
      traj.cbar = *cbar;
    }
    traj.investment[t] = traj.income[t] - traj.cbar;
    traj.consumption[t] = traj.income[t] - traj.investment[t];
    traj.capital[t + 1] =
        traj.capital[t] + (traj.income[t] - traj.cbar) * econ.dt;
  }

  // Terminal display row: no extraction, continuation income from capital.
  traj.income[T] = econ.rate_at(T) * traj.capital[T];
  traj.investment[T] = traj.income[T] - traj.cbar;
  traj.consumption[T] = traj.income[T] - traj.investment[T];
  return traj;
}

}  // namespace sustain
