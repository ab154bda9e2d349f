#include "sustain/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sustain/errors.hpp"

namespace sustain {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Thrown by propagate; the shooting loop turns it into a "price too low"
// verdict for the offending resource.
struct StockInfeasible : SolverError {
  int resource;
  int step;
  StockInfeasible(int j, int t, const std::string& msg)
      : SolverError("stock_infeasible", msg), resource(j), step(t) {}
};

void require_positive_target(const Vec& target) {
  for (double v : target)
    if (!(v > 0.0) || !std::isfinite(v))
      throw SolverError("price_out_of_range_low",
                        "adjusted price target must be > 0");
}

MarketState finish_state(const DemandSystem& d, const Vec& q,
                         const Vec& target, double tol) {
  MarketState ms;
  ms.extraction = q;
  MarginReport mr = externality_margin(d, q);
  ms.price = mr.market_price;
  ms.margin = mr.margin;
  ms.adjusted_price = mr.adjusted_price;
  for (size_t j = 0; j < q.size(); ++j) {
    double err = std::fabs(ms.adjusted_price[j] - target[j]);
    if (!(err <= 10.0 * tol * std::max(1.0, std::fabs(target[j]))))
      throw SolverError("recovery_failure",
                        "market-state recovery missed the adjusted price");
  }
  return ms;
}

MarketState recover_newton(const DemandSystem& d, const Vec& target,
                           double tol) {
  const int n = d.n;
  // Work in u = log Q so iterates stay positive.
  Vec u(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double kj = 1.0 + 1.0 / d.exponent[j][j];
    double q0 = 1.0;
    if (kj > 0.0 && target[j] > 0.0)
      q0 = d.scale[j] * std::pow(target[j] / kj, d.exponent[j][j]);
    u[j] = std::log(std::max(q0, 1e-12));
  }

  auto adjusted = [&](const Vec& uu) {
    Vec q(n);
    for (int j = 0; j < n; ++j) q[j] = std::exp(uu[j]);
    return externality_margin(d, q).adjusted_price;
  };

  Vec f(n);
  double worst = 0.0;
  auto residual = [&](const Vec& uu, Vec& out) {
    Vec adj = adjusted(uu);
    double w = 0.0;
    for (int j = 0; j < n; ++j) {
      out[j] = adj[j] - target[j];
      w = std::max(w, std::fabs(out[j]));
    }
    return w;
  };
  worst = residual(u, f);
  double scale = std::max(1.0, max_abs(target));

  for (int it = 0; it < 100 && worst > tol * scale; ++it) {
    // Finite-difference Jacobian in u; own entries must stay negative
    // (marginal revenue decreasing in own extraction).
    Mat jac(n, Vec(n, 0.0));
    const double h = 1e-6;
    for (int k = 0; k < n; ++k) {
      Vec up = u, dn = u;
      up[k] += h;
      dn[k] -= h;
      Vec a_up = adjusted(up);
      Vec a_dn = adjusted(dn);
      for (int j = 0; j < n; ++j) jac[k][j] = (a_up[j] - a_dn[j]) / (2.0 * h);
    }
    // jac[k][j] = d adj_j / d u_k; transpose into row = equation.
    Mat J = transpose(jac);
    for (int j = 0; j < n; ++j)
      if (!(J[j][j] < 0.0))
        throw SolverError("marginal_revenue_nonmonotone",
                          "adjusted price is not decreasing in own extraction");
    Vec rhs(n);
    for (int j = 0; j < n; ++j) rhs[j] = -f[j];
    Vec delta = solve_linear(J, rhs);
    double lambda = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 40; ++bt) {
      Vec trial(n);
      for (int k = 0; k < n; ++k) trial[k] = u[k] + lambda * delta[k];
      Vec ft(n);
      double wt;
      try {
        wt = residual(trial, ft);
      } catch (const ModelError&) {
        lambda *= 0.5;
        continue;
      }
      if (wt < worst) {
        u = trial;
        f = ft;
        worst = wt;
        moved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!moved)
      throw SolverError("recovery_failure",
                        "market-state recovery stalled");
  }
  if (!(worst <= tol * scale))
    throw SolverError("recovery_failure",
                      "market-state recovery did not converge");
  Vec q(n);
  for (int j = 0; j < n; ++j) q[j] = std::exp(u[j]);
  return finish_state(d, q, target, tol);
}

}  // namespace

double step_user_cost(double stock, double price_now, double price_next,
                      double r, double growth_slope, double dt) {
  if (!(stock > 0.0)) throw ModelError("stock must be > 0");
  if (!(price_now > 0.0) || !(price_next > 0.0))
    throw ModelError("adjusted prices must be > 0", "nonpositive_price");
  double hold = price_next * (1.0 + growth_slope * dt);
  double sell = price_now * (1.0 + r * dt);
  if (!(hold > 0.0) || !(sell > 0.0))
    throw ModelError("compounding factors must stay positive");
  return hold * stock / (sell + hold);
}

MarketState recover_market_state(const DemandSystem& d,
                                 const Vec& adjusted_target,
                                 double inner_tolerance) {
  if (adjusted_target.size() != static_cast<size_t>(d.n))
    throw ModelError("adjusted price target has wrong length");
  const double tol = inner_tolerance;

  if (d.perfectly_elastic) {
    require_positive_target(adjusted_target);
    Vec q = demand_quantities(d, adjusted_target);
    for (double x : q)
      if (x < 0.0)
        throw SolverError("price_out_of_range_high",
                          "no nonnegative extraction clears this price");
    MarketState ms;
    ms.extraction = q;
    MarginReport mr = externality_margin(d, q);
    ms.price = mr.market_price;
    ms.margin = mr.margin;
    ms.adjusted_price = mr.adjusted_price;
    return ms;
  }

  if (d.kind == DemandKind::isoelastic && d.isoelastic_diagonal()) {
    require_positive_target(adjusted_target);
    Vec q(d.n);
    for (int j = 0; j < d.n; ++j) {
      double kj = 1.0 + 1.0 / d.exponent[j][j];
      if (!(kj > 0.0))
        throw SolverError(
            "recovery_failure",
            "diagonal isoelastic recovery requires own exponents < -1");
      double p = adjusted_target[j] / kj;
      q[j] = d.scale[j] * std::pow(p, d.exponent[j][j]);
    }
    return finish_state(d, q, adjusted_target, tol);
  }

  if (d.kind == DemandKind::linear) {
    require_positive_target(adjusted_target);
    // Adjusted price is a - (B + B^T) Q, linear in Q.
    const int n = d.n;
    Mat m(n, Vec(n, 0.0));
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) m[j][k] = d.slope[j][k] + d.slope[k][j];
    Vec rhs(n);
    for (int j = 0; j < n; ++j) rhs[j] = d.intercept[j] - adjusted_target[j];
    Vec q = solve_linear(m, rhs);
    for (double x : q)
      if (!(x > 0.0))
        throw SolverError("price_out_of_range_high",
                          "adjusted price at or above the choke level");
    try {
      return finish_state(d, q, adjusted_target, tol);
    } catch (const ModelError& e) {
      // Market price went nonpositive: the target is too low to clear.
      throw SolverError("price_out_of_range_low", e.what());
    }
  }

  require_positive_target(adjusted_target);
  return recover_newton(d, adjusted_target, tol);
}

Trajectory propagate(const EconomySpec& econ,
                     const std::vector<ResourceSpec>& res,
                     const DemandSystem& demand,
                     const Vec& initial_adjusted_price,
                     double inner_tolerance) {
  const int T = econ.horizon_steps;
  const int n = static_cast<int>(res.size());
  if (initial_adjusted_price.size() != static_cast<size_t>(n))
    throw ModelError("initial adjusted price has wrong length");

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

  Vec target = initial_adjusted_price;
  for (int t = 0; t <= T; ++t) {
    MarketState ms = recover_market_state(demand, target, inner_tolerance);
    traj.extraction[t] = ms.extraction;
    traj.price[t] = ms.price;
    traj.margin[t] = ms.margin;
    traj.adjusted_price[t] = ms.adjusted_price;
    traj.income[t] = period_income(econ.rate_at(t), traj.capital[t],
                                   traj.price[t], traj.extraction[t]);
    if (t == 0) traj.cbar = traj.income[0] - hartwick_investment(traj, 0);
    traj.investment[t] = traj.income[t] - traj.cbar;
    traj.consumption[t] = traj.income[t] - traj.investment[t];
    if (t == T) break;

    traj.capital[t + 1] =
        traj.capital[t] + (traj.income[t] - traj.cbar) * econ.dt;
    double disc = 1.0 + econ.rate_at(t) * econ.dt;
    for (int j = 0; j < n; ++j) {
      double x = traj.stock[t][j];
      double g = growth_eval(res[j].growth, std::max(x, 0.0));
      double next = x + (g - traj.extraction[t][j]) * econ.dt;
      if (next < -econ.terminal.tolerance * res[j].stock0) {
        std::ostringstream msg;
        msg << "stock of " << res[j].name << " driven below zero at step "
            << t + 1;
        throw StockInfeasible(j, t + 1, msg.str());
      }
      traj.stock[t + 1][j] = next;
      double grow =
          1.0 + growth_derivative(res[j].growth, std::max(x, 0.0)) * econ.dt;
      if (!(grow > 0.0))
        throw SolverError("invalid_growth_factor",
                          "1 + G' dt must stay positive along the path");
      target[j] *= disc / grow;
    }
  }
  return traj;
}

namespace {

struct Shot {
  enum class Kind { ok, too_low, too_high };
  Kind kind = Kind::ok;
  int resource = -1;        // offending resource for too_low
  Vec mismatch;             // X_T - target per resource (ok only)
  double mismatch_rel = 0;  // max_j |mismatch_j| / stock0_j
  Trajectory traj;
};

Shot shoot(const EconomySpec& econ, const std::vector<ResourceSpec>& res,
           const DemandSystem& demand, const Vec& p0, const Vec& targets,
           double inner_tol) {
  Shot shot;
  try {
    shot.traj = propagate(econ, res, demand, p0, inner_tol);
  } catch (const StockInfeasible& e) {
    shot.kind = Shot::Kind::too_low;
    shot.resource = e.resource;
    return shot;
  } catch (const SolverError& e) {
    if (e.code() == "price_out_of_range_low") {
      shot.kind = Shot::Kind::too_low;
      return shot;
    }
    if (e.code() == "price_out_of_range_high") {
      shot.kind = Shot::Kind::too_high;
      return shot;
    }
    throw;
  }
  const int T = econ.horizon_steps;
  shot.mismatch.assign(res.size(), 0.0);
  for (size_t j = 0; j < res.size(); ++j) {
    shot.mismatch[j] = shot.traj.stock[T][j] - targets[j];
    shot.mismatch_rel = std::max(
        shot.mismatch_rel, std::fabs(shot.mismatch[j]) / res[j].stock0);
  }
  return shot;
}

Vec initial_guess(const EconomySpec& econ,
                  const std::vector<ResourceSpec>& res,
                  const DemandSystem& demand, const Vec& targets) {
  const int n = static_cast<int>(res.size());
  Vec q(n);
  for (int j = 0; j < n; ++j) {
    double base = (res[j].stock0 - targets[j]) / (econ.horizon_steps * econ.dt);
    base += growth_eval(res[j].growth, res[j].stock0);
    if (!(base > 0.0))
      base = std::max(res[j].stock0 / (10.0 * econ.horizon_steps * econ.dt),
                      1e-6);
    q[j] = base;
  }
  try {
    return externality_margin(demand, q).adjusted_price;
  } catch (const Error&) {
    return Vec(n, 1.0);
  }
}

SolveResult finish(const EconomySpec& econ, Shot&& shot, const Vec& p0,
                   int iterations) {
  SolveResult result;
  result.trajectory = std::move(shot.traj);
  result.residuals = build_residual_report(result.trajectory);
  result.cbar = result.trajectory.cbar;
  result.initial_adjusted_price = p0;
  result.iterations = iterations;
  result.terminal_mismatch = shot.mismatch_rel;
  result.converged = true;
  return result;
}

SolveResult solve_single(const EconomySpec& econ,
                         const std::vector<ResourceSpec>& res,
                         const DemandSystem& demand, const SolverConfig& cfg,
                         const Vec& targets) {
  auto eval = [&](double p) {
    return shoot(econ, res, demand, Vec{p}, targets, cfg.inner_tolerance);
  };
  // A shot is "high" when it leaves too much stock behind; raise extraction
  // by lowering the initial adjusted price.
  auto is_high = [](const Shot& s) {
    return s.kind == Shot::Kind::too_high ||
           (s.kind == Shot::Kind::ok && s.mismatch[0] >= 0.0);
  };

  double lo = 0.0, hi = 0.0;
  Shot shot_lo, shot_hi;
  bool have_lo = false, have_hi = false;

  double guess = cfg.bracket_lo > 0.0 && cfg.bracket_hi > 0.0
                     ? std::sqrt(cfg.bracket_lo * cfg.bracket_hi)
                     : initial_guess(econ, res, demand, targets)[0];
  if (!(guess > 0.0)) guess = 1.0;

  Shot s = eval(guess);
  if (is_high(s)) {
    hi = guess;
    shot_hi = s;
    have_hi = true;
  } else {
    lo = guess;
    shot_lo = s;
    have_lo = true;
  }

  // Expand downward: find a price that over-extracts.
  double p = guess;
  for (int i = 0; i < 60 && !have_lo; ++i) {
    p *= 0.5;
    Shot trial = eval(p);
    if (!is_high(trial)) {
      lo = p;
      shot_lo = trial;
      have_lo = true;
    } else {
      hi = p;
      shot_hi = trial;
      have_hi = true;
    }
  }
  // Expand upward: find a price that leaves at least the target behind.
  p = guess;
  for (int i = 0; i < 60 && !have_hi; ++i) {
    p *= 2.0;
    Shot trial = eval(p);
    if (trial.kind == Shot::Kind::ok &&
        trial.traj.extraction[0][0] < 1e-14 * res[0].stock0)
      break;  // extraction numerically zero and still not high: hopeless
    if (is_high(trial)) {
      hi = p;
      shot_hi = trial;
      have_hi = true;
    } else {
      lo = p;
      shot_lo = trial;
      have_lo = true;
    }
  }
  if (!have_lo || !have_hi)
    throw SolverError("bracket_failure",
                      "no initial-price bracket encloses the terminal target");

  if (cfg.verify_monotonicity) {
    // Terminal stock must not decrease as the initial price rises.
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 8; ++i) {
      double x = lo * std::pow(hi / lo, (i + 0.5) / 8.0);
      Shot trial = eval(x);
      double value = trial.kind == Shot::Kind::too_low
                         ? -std::numeric_limits<double>::infinity()
                     : trial.kind == Shot::Kind::too_high
                         ? std::numeric_limits<double>::infinity()
                         : trial.mismatch[0];
      if (value < prev - 1e-9 * res[0].stock0)
        throw SolverError("monotonicity_violation",
                          "terminal stock is not monotone in the initial "
                          "adjusted price over the bracket");
      prev = std::max(prev, value);
    }
  }

  if (shot_hi.kind == Shot::Kind::ok &&
      shot_hi.mismatch_rel <= cfg.shooting_tolerance)
    return finish(econ, std::move(shot_hi), Vec{hi}, 0);
  if (shot_lo.kind == Shot::Kind::ok &&
      shot_lo.mismatch_rel <= cfg.shooting_tolerance)
    return finish(econ, std::move(shot_lo), Vec{lo}, 0);

  for (int it = 1; it <= cfg.max_outer_iterations; ++it) {
    double mid = std::sqrt(lo * hi);
    Shot trial = eval(mid);
    if (trial.kind == Shot::Kind::ok &&
        trial.mismatch_rel <= cfg.shooting_tolerance)
      return finish(econ, std::move(trial), Vec{mid}, it);
    if (is_high(trial))
      hi = mid;
    else
      lo = mid;
  }
  throw SolverError("max_iterations",
                    "bisection exhausted max_outer_iterations");
}

SolveResult solve_multi(const EconomySpec& econ,
                        const std::vector<ResourceSpec>& res,
                        const DemandSystem& demand, const SolverConfig& cfg,
                        const Vec& targets) {
  const int n = static_cast<int>(res.size());
  Vec logp(n);
  {
    Vec guess = initial_guess(econ, res, demand, targets);
    for (int j = 0; j < n; ++j)
      logp[j] = std::log(std::max(guess[j], 1e-8));
  }

  // Damped per-coordinate fixed point: each initial price moves against its
  // own terminal mismatch, with a secant slope estimate once history exists.
  Vec prev_logp, prev_mu;
  double best = std::numeric_limits<double>::infinity();
  bool improved = false;

  for (int it = 1; it <= cfg.max_outer_iterations; ++it) {
    Vec p0(n);
    for (int j = 0; j < n; ++j) p0[j] = std::exp(logp[j]);
    Shot shot = shoot(econ, res, demand, p0, targets, cfg.inner_tolerance);

    if (shot.kind == Shot::Kind::too_high) {
      for (int j = 0; j < n; ++j) logp[j] += std::log(0.8);
      prev_logp.clear();
      continue;
    }
    if (shot.kind == Shot::Kind::too_low) {
      if (shot.resource >= 0)
        logp[shot.resource] += cfg.damping * 0.5;
      else
        for (int j = 0; j < n; ++j) logp[j] += cfg.damping * 0.25;
      prev_logp.clear();
      continue;
    }

    Vec mu(n);
    for (int j = 0; j < n; ++j)
      mu[j] = shot.mismatch[j] / res[j].stock0;
    if (shot.mismatch_rel <= cfg.shooting_tolerance)
      return finish(econ, std::move(shot), p0, it);
    if (shot.mismatch_rel < best) {
      best = shot.mismatch_rel;
      improved = true;
    }

    Vec step(n, 0.0);
    for (int j = 0; j < n; ++j) {
      double slope = 0.0;
      if (!prev_logp.empty()) {
        double dl = logp[j] - prev_logp[j];
        double dm = mu[j] - prev_mu[j];
        if (std::fabs(dl) > 1e-14) slope = dm / dl;
      }
      // Terminal stock rises with the own initial price, so slope > 0.
      double s = slope > 1e-6 ? slope : 1.0;
      step[j] = -cfg.damping * mu[j] / s;
      step[j] = std::clamp(step[j], -0.7, 0.7);
    }
    prev_logp = logp;
    prev_mu = mu;
    for (int j = 0; j < n; ++j) logp[j] += step[j];
  }
  throw SolverError(improved ? "max_iterations" : "fixed_point_divergence",
                    "multi-resource fixed point did not converge");
}

}  // namespace

SolveResult solve_constant_consumption(const EconomySpec& econ,
                                       const std::vector<ResourceSpec>& res,
                                       const DemandSystem& demand,
                                       const SolverConfig& cfg) {
  const int n = static_cast<int>(res.size());
  if (n < 1 || n > 3)
    throw ConfigError("solver handles 1 to 3 resources");
  econ.validate(n);
  demand.validate();
  if (demand.n != n)
    throw ConfigError("demand system size must match the resource count");

  Vec targets = econ.terminal.targets(n);
  for (int j = 0; j < n; ++j) {
    if (econ.terminal.kind == TerminalCondition::Kind::stock_target &&
        res[j].growth.kind == GrowthKind::zero &&
        targets[j] >= res[j].stock0)
      throw SolverError("bracket_failure",
                        "terminal stock target is unreachable for "
                        "nonrenewable resource " +
                            res[j].name);
  }

  if (n == 1) return solve_single(econ, res, demand, cfg, targets);
  return solve_multi(econ, res, demand, cfg, targets);
}

Trajectory solve_user_cost_mode(const EconomySpec& econ,
                                const std::vector<ResourceSpec>& res,
                                const DemandSystem& demand,
                                const std::vector<Vec>& path) {
  const int T = econ.horizon_steps;
  const int n = static_cast<int>(res.size());
  econ.validate(n);
  if (path.size() != static_cast<size_t>(T + 1))
    throw ModelError("adjusted price path needs horizon_steps + 1 rows");
  for (const auto& row : path) {
    if (row.size() != static_cast<size_t>(n))
      throw ModelError("adjusted price path has a row of wrong length");
    for (double v : row)
      if (!(v > 0.0) || !std::isfinite(v))
        throw ModelError("adjusted price path must be positive",
                         "nonpositive_price");
  }

  Trajectory traj;
  traj.econ = econ;
  traj.resources = res;
  traj.demand = demand;
  traj.price.assign(T + 1, Vec(n, kNaN));
  traj.adjusted_price = path;
  traj.margin.assign(T + 1, Vec(n, kNaN));
  traj.extraction.assign(T + 1, Vec(n, 0.0));
  traj.stock.assign(T + 1, Vec(n, 0.0));
  traj.capital.assign(T + 1, 0.0);
  traj.income.assign(T + 1, 0.0);
  traj.investment.assign(T + 1, 0.0);
  traj.consumption.assign(T + 1, 0.0);

  for (int j = 0; j < n; ++j) traj.stock[0][j] = res[j].stock0;
  traj.capital[0] = econ.capital0;

  for (int t = 0; t <= T; ++t) {
    if (t < T) {
      for (int j = 0; j < n; ++j) {
        double x = traj.stock[t][j];
        if (x <= 0.0) {
          traj.extraction[t][j] = 0.0;
          continue;
        }
        double gs =
            growth_derivative(res[j].growth, std::max(x, 0.0));
        traj.extraction[t][j] = step_user_cost(
            x, path[t][j], path[t + 1][j], econ.rate_at(t), gs, econ.dt);
      }
    }
    bool interior = t < T;
    for (int j = 0; j < n && interior; ++j)
      if (!(traj.extraction[t][j] > 0.0)) interior = false;
    if (interior) {
      MarginReport mr = externality_margin(demand, traj.extraction[t]);
      traj.price[t] = mr.market_price;
      traj.margin[t] = mr.margin;
      traj.income[t] = period_income(econ.rate_at(t), traj.capital[t],
                                     traj.price[t], traj.extraction[t]);
    } else {
      traj.income[t] = econ.rate_at(t) * traj.capital[t] +
                       total_revenue(demand, traj.extraction[t]);
    }
    if (t == 0) traj.cbar = traj.income[0] - hartwick_investment(traj, 0);
    traj.investment[t] = traj.income[t] - traj.cbar;
    traj.consumption[t] = traj.income[t] - traj.investment[t];
    if (t == T) break;
    traj.capital[t + 1] =
        traj.capital[t] + (traj.income[t] - traj.cbar) * econ.dt;
    for (int j = 0; j < n; ++j) {
      double x = traj.stock[t][j];
      double g = growth_eval(res[j].growth, std::max(x, 0.0));
      double next = x + (g - traj.extraction[t][j]) * econ.dt;
      if (next < -econ.terminal.tolerance * res[j].stock0)
        throw StockInfeasible(j, t + 1, "stock driven below zero");
      traj.stock[t + 1][j] = next;
    }
  }
  return traj;
}

}  // namespace sustain
