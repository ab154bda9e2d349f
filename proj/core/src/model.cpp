#include "sustain/model.hpp"

#include <algorithm>
#include <cmath>

#include "sustain/errors.hpp"

namespace sustain {

namespace {

bool finite(double x) { return std::isfinite(x); }

void require_finite(double x, const char* what) {
  if (!finite(x)) throw ModelError(std::string(what) + " is not finite");
}

}  // namespace

GrowthFunction GrowthFunction::none() { return {}; }

GrowthFunction GrowthFunction::exponential(double g) {
  GrowthFunction f;
  f.kind = GrowthKind::exponential;
  f.rate = g;
  return f;
}

GrowthFunction GrowthFunction::logistic(double rho, double kappa) {
  if (!(kappa > 0.0))
    throw ConfigError("logistic growth needs carrying_capacity > 0");
  GrowthFunction f;
  f.kind = GrowthKind::logistic;
  f.intrinsic_rate = rho;
  f.carrying_capacity = kappa;
  return f;
}

double growth_eval(const GrowthFunction& g, double x) {
  if (x < 0.0) throw ModelError("negative stock", "negative_stock");
  switch (g.kind) {
    case GrowthKind::zero:
      return 0.0;
    case GrowthKind::exponential:
      return g.rate * x;
    case GrowthKind::logistic:
      return g.intrinsic_rate * x * (1.0 - x / g.carrying_capacity);
  }
  throw ModelError("unknown growth kind");
}

double growth_derivative(const GrowthFunction& g, double x) {
  if (x < 0.0) throw ModelError("negative stock", "negative_stock");
  switch (g.kind) {
    case GrowthKind::zero:
      return 0.0;
    case GrowthKind::exponential:
      return g.rate;
    case GrowthKind::logistic:
      return g.intrinsic_rate * (1.0 - 2.0 * x / g.carrying_capacity);
  }
  throw ModelError("unknown growth kind");
}

Vec TerminalCondition::targets(int n_resources) const {
  if (kind == Kind::exhaust) return Vec(n_resources, 0.0);
  return target_stocks;
}

double EconomySpec::rate_at(int t) const {
  if (t < 0) throw ModelError("negative time index");
  if (interest_rate.size() == 1) return interest_rate[0];
  int last = static_cast<int>(interest_rate.size()) - 1;
  return interest_rate[std::min(t, last)];
}

void EconomySpec::validate(int n_resources) const {
  if (horizon_steps < 2) throw ConfigError("horizon_steps must be >= 2");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (interest_rate.empty())
    throw ConfigError("interest_rate missing");
  if (interest_rate.size() != 1 &&
      interest_rate.size() != static_cast<size_t>(horizon_steps))
    throw ConfigError(
        "interest_rate must be a scalar or one entry per period");
  for (double r : interest_rate) {
    if (!finite(r)) throw ConfigError("interest_rate is not finite");
    if (!(1.0 + r * dt > 0.0))
      throw ConfigError("interest_rate must satisfy 1 + r dt > 0");
  }
  if (!(capital0 >= 0.0) || !finite(capital0))
    throw ConfigError("capital0 must be >= 0");
  if (!(terminal.tolerance > 0.0))
    throw ConfigError("terminal tolerance must be > 0");
  if (terminal.kind == TerminalCondition::Kind::stock_target) {
    if (terminal.target_stocks.size() != static_cast<size_t>(n_resources))
      throw ConfigError("terminal target_stocks needs one entry per resource");
    for (double x : terminal.target_stocks)
      if (!(x >= 0.0) || !finite(x))
        throw ConfigError("terminal target_stocks must be >= 0");
  }
}

double discount_factor(const EconomySpec& econ, int t) {
  if (t < 0 || t > econ.horizon_steps)
    throw ModelError("discount_factor index out of range");
  double beta = 1.0;
  for (int s = 0; s < t; ++s) beta /= 1.0 + econ.rate_at(s) * econ.dt;
  return beta;
}

DemandSystem DemandSystem::isoelastic(Vec scale, Mat exponent,
                                      bool perfectly_elastic) {
  DemandSystem d;
  d.kind = DemandKind::isoelastic;
  d.n = static_cast<int>(scale.size());
  d.scale = std::move(scale);
  d.exponent = std::move(exponent);
  d.perfectly_elastic = perfectly_elastic;
  d.validate();
  return d;
}

DemandSystem DemandSystem::linear(Vec intercept, Mat slope,
                                  bool perfectly_elastic) {
  DemandSystem d;
  d.kind = DemandKind::linear;
  d.n = static_cast<int>(intercept.size());
  d.intercept = std::move(intercept);
  d.slope = std::move(slope);
  d.perfectly_elastic = perfectly_elastic;
  d.validate();
  return d;
}

bool DemandSystem::isoelastic_diagonal() const {
  if (kind != DemandKind::isoelastic) return false;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (j != k && exponent[j][k] != 0.0) return false;
  return true;
}

void DemandSystem::validate() const {
  if (n < 1) throw ConfigError("demand system needs at least one resource");
  auto check_square = [&](const Mat& m, const char* name) {
    if (m.size() != static_cast<size_t>(n))
      throw ConfigError(std::string(name) + " must be n x n");
    for (const auto& row : m) {
      if (row.size() != static_cast<size_t>(n))
        throw ConfigError(std::string(name) + " must be n x n");
      for (double v : row)
        if (!finite(v))
          throw ConfigError(std::string(name) + " has a non-finite entry");
    }
  };
  if (kind == DemandKind::isoelastic) {
    if (scale.size() != static_cast<size_t>(n))
      throw ConfigError("scale needs one entry per resource");
    for (double a : scale)
      if (!(a > 0.0) || !finite(a))
        throw ConfigError("isoelastic scale entries must be > 0");
    check_square(exponent, "exponent");
    for (int j = 0; j < n; ++j)
      if (!(exponent[j][j] < 0.0))
        throw ConfigError("own-price exponents must be < 0");
  } else {
    if (intercept.size() != static_cast<size_t>(n))
      throw ConfigError("intercept needs one entry per resource");
    for (double a : intercept)
      if (!(a > 0.0) || !finite(a))
        throw ConfigError("linear intercepts must be > 0");
    check_square(slope, "slope");
    for (int j = 0; j < n; ++j)
      if (!(slope[j][j] > 0.0))
        throw ConfigError("own slopes B_jj must be > 0");
  }
}

namespace {

struct EvalPoint {
  Vec price;
  Mat jac;  // [j][k] = dp_k/dQ_j
};

void check_extraction(const DemandSystem& d, const Vec& q,
                      bool require_positive) {
  if (q.size() != static_cast<size_t>(d.n))
    throw ModelError("extraction vector has wrong length");
  for (double x : q) {
    require_finite(x, "extraction");
    if (require_positive) {
      if (!(x > 0.0))
        throw ModelError("isoelastic demand needs extraction > 0",
                         "nonpositive_extraction");
    } else if (x < 0.0) {
      throw ModelError("extraction must be >= 0", "nonpositive_extraction");
    }
  }
}

Vec isoelastic_prices(const DemandSystem& d, const Vec& q) {
  const int n = d.n;
  Vec logp(n, 0.0);
  if (d.isoelastic_diagonal()) {
    for (int j = 0; j < n; ++j)
      logp[j] = std::log(q[j] / d.scale[j]) / d.exponent[j][j];
  } else {
    // log q = log A + eta log p is linear in log p; the damped Newton
    // below lands in one step and the loop only polishes.
    Vec y(n);
    for (int j = 0; j < n; ++j) y[j] = std::log(q[j] / d.scale[j]);
    logp = solve_linear(d.exponent, y);
    for (int it = 0; it < 100; ++it) {
      Vec resid(n);
      double worst = 0.0;
      for (int j = 0; j < n; ++j) {
        double lq = std::log(d.scale[j]);
        for (int k = 0; k < n; ++k) lq += d.exponent[j][k] * logp[k];
        resid[j] = std::exp(lq) - q[j];
        worst = std::max(worst, std::fabs(resid[j]));
      }
      if (worst <= 1e-12) break;
      Vec f(n);
      for (int j = 0; j < n; ++j) f[j] = resid[j] / q[j];  // d log q space
      Vec delta = solve_linear(d.exponent, f);
      double lambda = 1.0;
      for (int bt = 0; bt < 40; ++bt) {
        Vec trial(n);
        for (int k = 0; k < n; ++k) trial[k] = logp[k] - lambda * delta[k];
        double w = 0.0;
        for (int j = 0; j < n; ++j) {
          double lq = std::log(d.scale[j]);
          for (int k = 0; k < n; ++k) lq += d.exponent[j][k] * trial[k];
          w = std::max(w, std::fabs(std::exp(lq) - q[j]));
        }
        if (w < worst || lambda < 1e-8) {
          logp = trial;
          break;
        }
        lambda *= 0.5;
      }
      if (it == 99)
        throw ModelError("isoelastic inversion did not converge",
                         "demand_inversion_failed");
    }
  }
  Vec p(n);
  for (int j = 0; j < n; ++j) {
    p[j] = std::exp(logp[j]);
    if (!(p[j] > 0.0) || !finite(p[j]))
      throw ModelError("inverse demand produced a nonpositive price",
                       "nonpositive_price");
  }
  return p;
}

EvalPoint eval_point(const DemandSystem& d, const Vec& q) {
  const int n = d.n;
  EvalPoint ev;
  if (d.kind == DemandKind::linear) {
    check_extraction(d, q, false);
    ev.price.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
      double p = d.intercept[k];
      for (int i = 0; i < n; ++i) p -= d.slope[k][i] * q[i];
      if (!(p > 0.0))
        throw ModelError("inverse demand produced a nonpositive price",
                         "nonpositive_price");
      ev.price[k] = p;
    }
    ev.jac.assign(n, Vec(n, 0.0));
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) ev.jac[j][k] = -d.slope[k][j];
  } else {
    check_extraction(d, q, true);
    ev.price = isoelastic_prices(d, q);
    // dq_j/dp_k = eta_jk q_j / p_k; invert and transpose into the
    // dp_k/dQ_j orientation.
    Mat dqdp(n, Vec(n, 0.0));
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        dqdp[j][k] = d.exponent[j][k] * q[j] / ev.price[k];
    try {
      ev.jac = invert(transpose(dqdp));
    } catch (const ModelError&) {
      throw ModelError("demand Jacobian is singular at this point",
                       "singular_demand_jacobian");
    }
  }
  for (int j = 0; j < d.n; ++j) {
    require_finite(ev.jac[j][j], "inverse-demand Jacobian");
    if (!(ev.jac[j][j] < 0.0))
      throw ModelError("own-price monotonicity violated: dp_j/dQ_j >= 0",
                       "monotonicity_violation");
  }
  return ev;
}

}  // namespace

Vec inverse_demand(const DemandSystem& d, const Vec& extraction) {
  return eval_point(d, extraction).price;
}

Mat demand_jacobian(const DemandSystem& d, const Vec& extraction) {
  return eval_point(d, extraction).jac;
}

Mat demand_jacobian_fd(const DemandSystem& d, const Vec& extraction) {
  const int n = d.n;
  Mat jac(n, Vec(n, 0.0));
  for (int j = 0; j < n; ++j) {
    double h = std::max(1e-6, 1e-6 * extraction[j]);
    Vec hi = extraction, lo = extraction;
    hi[j] += h;
    lo[j] -= h;
    Vec p_hi = inverse_demand(d, hi);
    Vec p_lo = inverse_demand(d, lo);
    for (int k = 0; k < n; ++k) jac[j][k] = (p_hi[k] - p_lo[k]) / (2.0 * h);
  }
  return jac;
}

Vec demand_quantities(const DemandSystem& d, const Vec& price) {
  const int n = d.n;
  if (price.size() != static_cast<size_t>(n))
    throw ModelError("price vector has wrong length");
  for (double p : price) {
    require_finite(p, "price");
    if (!(p > 0.0)) throw ModelError("prices must be > 0", "nonpositive_price");
  }
  Vec q(n, 0.0);
  if (d.kind == DemandKind::isoelastic) {
    for (int j = 0; j < n; ++j) {
      double lq = std::log(d.scale[j]);
      for (int k = 0; k < n; ++k) lq += d.exponent[j][k] * std::log(price[k]);
      q[j] = std::exp(lq);
    }
  } else {
    Vec rhs(n);
    for (int j = 0; j < n; ++j) rhs[j] = d.intercept[j] - price[j];
    q = solve_linear(d.slope, rhs);
  }
  return q;
}

double total_revenue(const DemandSystem& d, const Vec& extraction) {
  const int n = d.n;
  if (extraction.size() != static_cast<size_t>(n))
    throw ModelError("extraction vector has wrong length");
  bool any_zero = false;
  for (double x : extraction) {
    require_finite(x, "extraction");
    if (x < 0.0) throw ModelError("extraction must be >= 0");
    if (x == 0.0) any_zero = true;
  }
  if (d.kind == DemandKind::isoelastic && any_zero) {
    if (!d.isoelastic_diagonal())
      throw ModelError(
          "zero extraction is ill-defined for coupled isoelastic demand",
          "corner_point");
    double rev = 0.0;
    for (int k = 0; k < n; ++k) {
      if (extraction[k] == 0.0) {
        // p Q ~ Q^{1+1/eta} -> 0 needs eta < -1.
        if (!(d.exponent[k][k] < -1.0))
          throw ModelError("revenue does not vanish at zero extraction",
                           "corner_point");
        continue;
      }
      double p = std::pow(extraction[k] / d.scale[k], 1.0 / d.exponent[k][k]);
      rev += p * extraction[k];
    }
    return rev;
  }
  Vec p = inverse_demand(d, extraction);
  double rev = 0.0;
  for (int k = 0; k < n; ++k) rev += p[k] * extraction[k];
  return rev;
}

double period_income(double r, double capital, const Vec& price,
                     const Vec& extraction) {
  double y = r * capital;
  for (size_t j = 0; j < price.size(); ++j) y += price[j] * extraction[j];
  return y;
}

}  // namespace sustain
