#include <doctest.h>

#include <cmath>

#include "sustain/errors.hpp"
#include "sustain/externality.hpp"

using namespace sustain;

TEST_CASE("single resource margin is the inverse demand elasticity") {
  // Q = 12 p^-2 at Q = 3: p = 2, m = 1/eta = -0.5, adjusted = 1.
  auto d = DemandSystem::isoelastic({12.0}, {{-2.0}});
  auto r = externality_margin(d, {3.0});
  CHECK(r.market_price[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.margin[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(r.adjusted_price[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear substitutes: margins stack own and cross losses") {
  // p = a - B Q with a = (10, 8), B = ((1, 0.5), (0.2, 1)) at Q = (2, 2):
  // p = (7, 5.6). dp_k/dQ_j = -B[k][j], so
  //   m_1 = (-1*2 - 0.2*2)/7   = -2.4/7
  //   m_2 = (-0.5*2 - 1*2)/5.6 = -3/5.6
  auto d = DemandSystem::linear({10.0, 8.0}, {{1.0, 0.5}, {0.2, 1.0}});
  auto r = externality_margin(d, {2.0, 2.0});
  CHECK(r.market_price[0] == doctest::Approx(7.0));
  CHECK(r.market_price[1] == doctest::Approx(5.6));
  CHECK(r.margin[0] == doctest::Approx(-2.4 / 7.0).epsilon(1e-12));
  CHECK(r.margin[1] == doctest::Approx(-3.0 / 5.6).epsilon(1e-12));
  CHECK(r.adjusted_price[0] == doctest::Approx(4.6).epsilon(1e-12));
  CHECK(r.adjusted_price[1] == doctest::Approx(2.6).epsilon(1e-12));
}

TEST_CASE("adjusted price equals marginal total revenue") {
  auto check_mr = [](const DemandSystem& d, const Vec& q) {
    for (size_t j = 0; j < q.size(); ++j)
      CHECK(std::fabs(marginal_revenue_check(d, q, static_cast<int>(j))) <
            1e-6);
  };
  check_mr(DemandSystem::linear({10.0, 8.0}, {{1.0, 0.5}, {0.2, 1.0}}),
           {2.0, 2.0});
  check_mr(DemandSystem::isoelastic({12.0}, {{-2.0}}), {3.0});
  check_mr(DemandSystem::isoelastic({5.0, 8.0}, {{-2.0, 0.3}, {0.4, -2.5}}),
           {2.0, 3.0});
}

TEST_CASE("elasticity report inverts cleanly for one resource") {
  auto d = DemandSystem::isoelastic({12.0}, {{-2.0}});
  auto er = demand_elasticities(d, {3.0});
  CHECK(er.epsilon[0][0] == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(er.inverse_elasticity[0][0] == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("margin conventions coincide only for one resource") {
  auto one = DemandSystem::isoelastic({12.0}, {{-2.0}});
  auto a = externality_margin(one, {3.0}, MarginConvention::inverse_elasticity);
  auto b =
      externality_margin(one, {3.0}, MarginConvention::reciprocal_elasticity);
  CHECK(a.margin[0] == doctest::Approx(b.margin[0]).epsilon(1e-10));

  auto two = DemandSystem::isoelastic({5.0, 8.0}, {{-2.0, 0.3}, {0.4, -2.5}});
  auto c = externality_margin(two, {2.0, 3.0},
                              MarginConvention::inverse_elasticity);
  auto d2 = externality_margin(two, {2.0, 3.0},
                               MarginConvention::reciprocal_elasticity);
  CHECK(std::fabs(c.margin[0] - d2.margin[0]) > 1e-4);
}

TEST_CASE("perfectly elastic demand has zero margins") {
  auto d = DemandSystem::isoelastic({12.0}, {{-2.0}}, true);
  auto r = externality_margin(d, {3.0});
  CHECK(r.margin[0] == 0.0);
  CHECK(r.adjusted_price[0] == r.market_price[0]);
}

TEST_CASE("corner points are refused") {
  auto d = DemandSystem::isoelastic({12.0}, {{-2.0}});
  CHECK_THROWS_AS(static_cast<void>(externality_margin(d, {0.0})), ModelError);
  auto lin = DemandSystem::linear({10.0}, {{1.0}});
  CHECK_THROWS_AS(static_cast<void>(externality_margin(lin, {0.0})),
                  ModelError);
}

TEST_CASE("margin from a synthetic jacobian") {
  // Two resources, price impact only on the own market.
  Mat impact{{-0.5, 0.0}, {0.0, -0.25}};
  auto r = margin_from_jacobian(impact, {2.0, 1.0}, {1.0, 2.0});
  CHECK(r.margin[0] == doctest::Approx(-0.25));   // -0.5*1/2
  CHECK(r.margin[1] == doctest::Approx(-0.5));    // -0.25*2/1
  CHECK(r.adjusted_price[0] == doctest::Approx(1.5));
  CHECK(r.adjusted_price[1] == doctest::Approx(0.5));
}

TEST_CASE("complements raise the adjusted price above the market price") {
  // Negative cross slopes: extracting resource 2 lifts the price of 1.
  auto d = DemandSystem::linear({10.0, 10.0}, {{1.0, -0.8}, {-0.8, 1.0}});
  auto r = externality_margin(d, {1.0, 6.0});
  // p_1 = 10 - 1 + 4.8 = 13.8; m_1 = (-1*1 + 0.8*6)/13.8 > 0.
  CHECK(r.market_price[0] == doctest::Approx(13.8));
  CHECK(r.margin[0] > 0.0);
  CHECK(r.adjusted_price[0] > r.market_price[0]);
}
