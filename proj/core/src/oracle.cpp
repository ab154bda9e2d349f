#include "sustain/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sustain/errors.hpp"

namespace sustain {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Capital feasibility for a given constant consumption, revenues fixed.
bool cbar_feasible(const Vec& revenue, const EconomySpec& econ, double c) {
  double k = econ.capital0;
  if (k < 0.0) return false;
  for (size_t t = 0; t < revenue.size(); ++t) {
    double y = econ.rate_at(static_cast<int>(t)) * k + revenue[t];
    k += (y - c) * econ.dt;
    if (k < 0.0) return false;
  }
  return true;
}

// Largest feasible constant consumption by bisection; nullopt when even
// zero consumption breaks the capital floor.
std::optional<double> cbar_from_revenue(const Vec& revenue,
                                        const EconomySpec& econ,
                                        double rel_tolerance) {
  if (!cbar_feasible(revenue, econ, 0.0)) return std::nullopt;
  double lo = 0.0;
  double hi = 1.0;
  int guard = 0;
  while (cbar_feasible(revenue, econ, hi)) {
    hi *= 2.0;
    if (++guard > 200) return hi;  // unbounded in practice never happens
  }
  while (hi - lo > rel_tolerance * std::max(1.0, hi)) {
    double mid = 0.5 * (lo + hi);
    (cbar_feasible(revenue, econ, mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

void OracleConfig::validate(int n_resources) const {
  if (periods < 1 || periods > 5)
    throw ConfigError("oracle periods must be between 1 and 5");
  if (grid_points < 2 || grid_points > 80)
    throw ConfigError("oracle grid_points must be between 2 and 80");
  if (!(cbar_tolerance > 0.0))
    throw ConfigError("oracle cbar_tolerance must be > 0");
  if (!grid_bounds.empty() &&
      grid_bounds.size() != static_cast<size_t>(n_resources))
    throw ConfigError("oracle grid_bounds must cover every resource");
  for (const auto& b : grid_bounds) {
    if (!std::isfinite(b[0]) || !std::isfinite(b[1]) || b[0] < 0.0 ||
        !(b[1] > b[0]))
      throw ConfigError("oracle grid bounds must satisfy 0 <= lo < hi");
  }
  double log_total =
      static_cast<double>(periods) * n_resources * std::log(grid_points);
  if (log_total > std::log(1e7))
    throw ConfigError(
        "oracle enumeration too large: grid_points^(periods*resources) "
        "must stay within 1e7");
}

std::optional<double> feasible_cbar(const std::vector<Vec>& extraction,
                                    const EconomySpec& econ,
                                    const std::vector<ResourceSpec>& res,
                                    const DemandSystem& demand,
                                    double rel_tolerance) {
  const int T = econ.horizon_steps;
  const int n = static_cast<int>(res.size());
  if (extraction.size() != static_cast<size_t>(T))
    throw ModelError("extraction schedule needs horizon_steps rows");

  Vec revenue(T, 0.0);
  Vec stock(n);
  for (int j = 0; j < n; ++j) stock[j] = res[j].stock0;
  for (int t = 0; t < T; ++t) {
    if (extraction[t].size() != static_cast<size_t>(n))
      throw ModelError("extraction schedule has a row of wrong length");
    for (int j = 0; j < n; ++j)
      if (!(extraction[t][j] >= 0.0)) return std::nullopt;
    try {
      revenue[t] = total_revenue(demand, extraction[t]);
    } catch (const ModelError&) {
      return std::nullopt;  // prices undefined along the schedule
    }
    for (int j = 0; j < n; ++j) {
      double g = growth_eval(res[j].growth, std::max(stock[j], 0.0));
      stock[j] += (g - extraction[t][j]) * econ.dt;
      if (stock[j] < -1e-9 * res[j].stock0) return std::nullopt;
    }
  }
  return cbar_from_revenue(revenue, econ, rel_tolerance);
}

OracleResult enumerate_maxmin(const OracleConfig& cfg,
                              const EconomySpec& econ,
                              const std::vector<ResourceSpec>& res,
                              const DemandSystem& demand) {
  const int n = static_cast<int>(res.size());
  cfg.validate(n);
  econ.validate(n);
  demand.validate();
  if (demand.n != n)
    throw ConfigError("demand system size must match the resource count");
  if (cfg.periods != econ.horizon_steps)
    throw ConfigError("oracle periods must equal horizon_steps");

  const int T = cfg.periods;
  const int g = cfg.grid_points;

  std::vector<Vec> grid(n);
  for (int j = 0; j < n; ++j) {
    double lo = cfg.grid_bounds.empty() ? 0.0 : cfg.grid_bounds[j][0];
    double hi = cfg.grid_bounds.empty() ? res[j].stock0 : cfg.grid_bounds[j][1];
    grid[j].resize(g);
    for (int i = 0; i < g; ++i)
      grid[j][i] = lo + i * (hi - lo) / (g - 1);
  }

  // One period offers the same extraction menu every time; precompute the
  // revenue of each grid combination once.
  long long combos = 1;
  for (int j = 0; j < n; ++j) combos *= g;
  std::vector<Vec> combo_q(combos, Vec(n));
  Vec combo_rev(combos, 0.0);
  std::vector<char> combo_ok(combos, 1);
  for (long long c = 0; c < combos; ++c) {
    long long rem = c;
    for (int j = n - 1; j >= 0; --j) {
      combo_q[c][j] = grid[j][rem % g];
      rem /= g;
    }
    try {
      combo_rev[c] = total_revenue(demand, combo_q[c]);
    } catch (const ModelError&) {
      combo_ok[c] = 0;
    }
  }

  Vec targets = econ.terminal.targets(n);

  OracleResult result;
  result.config = cfg;
  result.best_cbar = -std::numeric_limits<double>::infinity();

  std::vector<long long> choice(T, 0);
  std::vector<Vec> stocks(T + 1, Vec(n));
  for (int j = 0; j < n; ++j) stocks[0][j] = res[j].stock0;
  Vec revs(T, 0.0);

  // Depth-first over periods in combo-index order, which is lexicographic
  // over the flattened schedule; strict improvement keeps the earliest tie.
  std::vector<long long> best_choice;
  auto dfs = [&](auto&& self, int t) -> void {
    if (t == T) {
      ++result.enumerated;
      for (int j = 0; j < n; ++j)
        if (stocks[T][j] < targets[j] - 1e-9 * res[j].stock0) return;
      auto c = cbar_from_revenue(revs, econ, cfg.cbar_tolerance);
      if (!c) return;
      ++result.feasible;
      if (*c > result.best_cbar) {
        result.best_cbar = *c;
        best_choice = choice;
      }
      return;
    }
    for (long long c = 0; c < combos; ++c) {
      if (!combo_ok[c]) continue;
      bool ok = true;
      for (int j = 0; j < n && ok; ++j) {
        double x = stocks[t][j];
        double growth = growth_eval(res[j].growth, std::max(x, 0.0));
        double next = x + (growth - combo_q[c][j]) * econ.dt;
        if (next < -1e-9 * res[j].stock0)
          ok = false;
        else
          stocks[t + 1][j] = next;
      }
      if (!ok) continue;
      choice[t] = c;
      revs[t] = combo_rev[c];
      self(self, t + 1);
    }
  };
  dfs(dfs, 0);

  if (best_choice.empty() && result.feasible == 0)
    throw SolverError("oracle_infeasible",
                      "no grid schedule satisfies the stock and capital "
                      "constraints");

  result.best_sequence.assign(T, Vec(n));
  for (int t = 0; t < T; ++t) result.best_sequence[t] = combo_q[best_choice[t]];
  result.trajectory = trajectory_from_extraction(econ, res, demand,
                                                 result.best_sequence,
                                                 result.best_cbar);
  if (T >= 2) {
    result.adjusted_price_factor.assign(T - 1, Vec(n, kNaN));
    for (int t = 0; t + 1 < T; ++t)
      for (int j = 0; j < n; ++j) {
        double a = result.trajectory.adjusted_price[t][j];
        double b = result.trajectory.adjusted_price[t + 1][j];
        if (a > 0.0 && std::isfinite(a) && std::isfinite(b))
          result.adjusted_price_factor[t][j] = b / a;
      }
  }
  return result;
}

namespace {

// Adjusted price of resource j when its extraction in the row is nudged.
std::optional<double> adjusted_at(const DemandSystem& demand, Vec q, int j,
                                  double value) {
  if (!(value > 0.0)) return std::nullopt;
  q[j] = value;
  try {
    return externality_margin(demand, q).adjusted_price[j];
  } catch (const ModelError&) {
    return std::nullopt;
  }
}

}  // namespace

GapReport compare(const SolveResult& solved, const OracleResult& oracle) {
  const Trajectory& st = solved.trajectory;
  const Trajectory& ot = oracle.trajectory;
  const int T = st.steps();
  const int n = st.n_resources();
  if (ot.steps() != T || ot.n_resources() != n ||
      ot.econ.dt != st.econ.dt)
    throw ConfigError("gap comparison needs runs from the same economy");

  GapReport report;
  report.solver_cbar_hartwick = solved.cbar;
  report.oracle_cbar = oracle.best_cbar;

  std::vector<Vec> schedule(st.extraction.begin(),
                            st.extraction.begin() + T);
  auto fc = feasible_cbar(schedule, st.econ, st.resources, st.demand,
                          oracle.config.cbar_tolerance);
  report.solver_cbar_feasible = fc ? *fc : kNaN;
  double denom = std::max(std::fabs(report.oracle_cbar), 1e-12);
  report.cbar_gap_rel = (report.solver_cbar_feasible - report.oracle_cbar) /
                        denom;

  report.extraction_gap.assign(T, Vec(n, 0.0));
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < n; ++j) {
      double gap = std::fabs(st.extraction[t][j] -
                             oracle.best_sequence[t][j]);
      report.extraction_gap[t][j] = gap;
      report.max_extraction_gap = std::max(report.max_extraction_gap, gap);
    }

  Vec cell(n);
  for (int j = 0; j < n; ++j) {
    double lo = oracle.config.grid_bounds.empty()
                    ? 0.0
                    : oracle.config.grid_bounds[j][0];
    double hi = oracle.config.grid_bounds.empty()
                    ? st.resources[j].stock0
                    : oracle.config.grid_bounds[j][1];
    cell[j] = (hi - lo) / (oracle.config.grid_points - 1);
    report.grid_cell = std::max(report.grid_cell, cell[j]);
  }

  // The enumerated schedule cannot resolve prices finer than one grid cell;
  // check the discrete price rule against that resolution.
  double max_excess = 0.0;
  bool within = true;
  for (int t = 0; t + 1 < T; ++t) {
    for (int j = 0; j < n; ++j) {
      double a = ot.adjusted_price[t][j];
      double b = ot.adjusted_price[t + 1][j];
      if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) continue;
      double disc = 1.0 + ot.econ.rate_at(t) * ot.econ.dt;
      double grow = 1.0 + growth_slope_of(ot, t, j) * ot.econ.dt;
      double factor = disc / grow;

      auto slack = [&](int tt) {
        double q = ot.extraction[tt][j];
        auto up = adjusted_at(st.demand, ot.extraction[tt], j, q + cell[j]);
        auto dn = adjusted_at(st.demand, ot.extraction[tt], j, q - cell[j]);
        if (up && dn) return 0.5 * std::fabs(*up - *dn);
        double base = ot.adjusted_price[tt][j];
        if (up) return std::fabs(*up - base);
        if (dn) return std::fabs(*dn - base);
        return std::numeric_limits<double>::infinity();
      };
      double allowed = slack(t) * factor + slack(t + 1);
      double excess = std::fabs(b - factor * a) - allowed;
      if (excess > 0.0) {
        within = false;
        max_excess = std::max(max_excess, excess);
      }
    }
  }
  report.hotelling_within_grid_tol = within;
  report.max_hotelling_excess = max_excess;
  return report;
}

}  // namespace sustain
