#include "sustain/externality.hpp"

#include <cmath>

#include "sustain/errors.hpp"

namespace sustain {

ElasticityReport demand_elasticities(const DemandSystem& d,
                                     const Vec& extraction) {
  const int n = d.n;
  Mat jac = demand_jacobian(d, extraction);
  Vec price = inverse_demand(d, extraction);
  for (int j = 0; j < n; ++j) {
    if (extraction[j] == 0.0)
      throw ModelError("elasticities undefined at zero extraction",
                       "corner_point");
    if (!(price[j] > 0.0))
      throw ModelError("elasticities undefined at nonpositive price",
                       "nonpositive_price");
  }

  ElasticityReport report;
  report.price = price;
  report.extraction = extraction;
  report.inverse_elasticity.assign(n, Vec(n, 0.0));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      report.inverse_elasticity[j][k] = jac[j][k] * extraction[j] / price[k];

  // dq/dp is the matrix inverse of dp/dQ (transposed into row = q_j).
  Mat dqdp;
  try {
    dqdp = transpose(invert(jac));
  } catch (const ModelError&) {
    throw ModelError("inverse-demand Jacobian is singular",
                     "singular_demand_jacobian");
  }
  report.epsilon.assign(n, Vec(n, 0.0));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      report.epsilon[j][k] = dqdp[j][k] * price[k] / extraction[j];
  return report;
}

MarginReport margin_from_jacobian(const Mat& price_impact, const Vec& price,
                                  const Vec& extraction) {
  const int n = static_cast<int>(price.size());
  MarginReport report;
  report.market_price = price;
  report.margin.assign(n, 0.0);
  report.adjusted_price.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    if (!(price[j] > 0.0))
      throw ModelError("margin undefined at nonpositive price",
                       "nonpositive_price");
    double cross = 0.0;
    for (int k = 0; k < n; ++k) cross += price_impact[j][k] * extraction[k];
    report.margin[j] = cross / price[j];
    report.adjusted_price[j] = price[j] * (1.0 + report.margin[j]);
  }
  return report;
}

MarginReport externality_margin(const DemandSystem& d, const Vec& extraction,
                                MarginConvention convention) {
  const int n = d.n;
  if (d.perfectly_elastic) {
    MarginReport report;
    report.market_price = inverse_demand(d, extraction);
    report.margin.assign(n, 0.0);
    report.adjusted_price = report.market_price;
    return report;
  }
  for (double q : extraction)
    if (q == 0.0)
      throw ModelError("margins at corner points are refused", "corner_point");

  if (convention == MarginConvention::inverse_elasticity) {
    Mat jac = demand_jacobian(d, extraction);
    Vec price = inverse_demand(d, extraction);
    return margin_from_jacobian(jac, price, extraction);
  }

  // Reciprocal reading: divide by the demand elasticities elementwise.
  // Structural zeros survive the double inversion only up to rounding, so
  // treat anything below 1e-12 as a zero cross term.
  ElasticityReport el = demand_elasticities(d, extraction);
  MarginReport report;
  report.market_price = el.price;
  report.margin.assign(n, 0.0);
  report.adjusted_price.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double own_value = el.price[j] * extraction[j];
    double m = 0.0;
    for (int k = 0; k < n; ++k) {
      double eps = el.epsilon[j][k];
      if (std::fabs(eps) <= 1e-12) continue;
      m += (1.0 / eps) * (el.price[k] * extraction[k]) / own_value;
    }
    report.margin[j] = m;
    report.adjusted_price[j] = el.price[j] * (1.0 + m);
  }
  return report;
}

double marginal_revenue_check(const DemandSystem& d, const Vec& extraction,
                              int j) {
  if (j < 0 || j >= d.n) throw ModelError("resource index out of range");
  MarginReport report = externality_margin(d, extraction);
  double h = std::max(1e-6, 1e-6 * extraction[j]);
  Vec hi = extraction, lo = extraction;
  hi[j] += h;
  lo[j] -= h;
  double mr =
      (total_revenue(d, hi) - total_revenue(d, lo)) / (2.0 * h);
  return report.adjusted_price[j] - mr;
}

}  // namespace sustain
