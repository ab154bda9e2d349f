#pragma once

#include "sustain/model.hpp"

namespace sustain {

// Demand-side and inverse elasticities at an evaluation point.
struct ElasticityReport {
  Mat epsilon;             // eps[j][k] = (dq_j/dp_k) p_k / Q_j
  Mat inverse_elasticity;  // e[j][k]   = (dp_k/dQ_j) Q_j / p_k
  Vec price;
  Vec extraction;
};

struct MarginReport {
  Vec margin;          // m_j
  Vec adjusted_price;  // p_j (1 + m_j)
  Vec market_price;    // p_j
};

// Reading of the per-resource margin sum. inverse_elasticity takes the
// cross terms straight from the inverse-demand Jacobian, which makes the
// adjusted price equal to marginal total revenue. reciprocal_elasticity
// divides by the demand elasticities elementwise instead; it coincides with
// the former only for a single resource and is kept for audit comparison.
enum class MarginConvention { inverse_elasticity, reciprocal_elasticity };

// Requires Q_j > 0 and p_k > 0 at the evaluation point.
ElasticityReport demand_elasticities(const DemandSystem& d,
                                     const Vec& extraction);

// m_j = (1/p_j) sum_k price_impact[j][k] Q_k with price_impact[j][k]
// = dp_k/dQ_j. Exposed so scaled or synthetic Jacobians can be priced.
MarginReport margin_from_jacobian(const Mat& price_impact, const Vec& price,
                                  const Vec& extraction);

// Externality margins and adjusted prices at extraction Q. Corner points
// (some Q_j = 0) are refused rather than extrapolated. Under
// perfectly_elastic demand the margins are exactly zero.
MarginReport externality_margin(
    const DemandSystem& d, const Vec& extraction,
    MarginConvention convention = MarginConvention::inverse_elasticity);

// P_hat_j minus a central-difference marginal total revenue; diagnostic,
// returned as-is.
double marginal_revenue_check(const DemandSystem& d, const Vec& extraction,
                              int j);

}  // namespace sustain
