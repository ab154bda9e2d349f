#include <doctest.h>

#include <cmath>

#include "sustain/errors.hpp"
#include "sustain/rules.hpp"
#include "sustain/solver.hpp"

using namespace sustain;

namespace {

// Two resources, T = 2, r = 0.05: one nonrenewable, one exponential grower.
// Adjusted prices follow the discrete price rule by construction, flows are
// integers so the capital identity holds exactly.
Trajectory hand_built() {
  Trajectory traj;
  traj.econ.horizon_steps = 2;
  traj.econ.dt = 1.0;
  traj.econ.interest_rate = {0.05};
  traj.econ.capital0 = 10.0;

  ResourceSpec a;
  a.name = "a";
  a.stock0 = 100.0;
  a.growth = GrowthFunction::none();
  ResourceSpec b;
  b.name = "b";
  b.stock0 = 10.0;
  b.growth = GrowthFunction::exponential(0.2);
  traj.resources = {a, b};
  traj.demand = DemandSystem::linear({20.0, 20.0}, {{1.0, 0.0}, {0.0, 1.0}});

  const double disc = 1.05;
  const double grow_b = 1.2;
  Vec p0{4.6, 5.0};
  Vec p1{p0[0] * disc, p0[1] * disc / grow_b};
  Vec p2{p1[0] * disc, p1[1] * disc / grow_b};
  traj.adjusted_price = {p0, p1, p2};
  traj.price = traj.adjusted_price;
  traj.margin = {{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};

  traj.extraction = {{2.0, 1.0}, {3.0, 1.0}, {0.0, 0.0}};
  double xb1 = 10.0 + (growth_eval(b.growth, 10.0) - 1.0) * 1.0;
  double xb2 = xb1 + (growth_eval(b.growth, xb1) - 1.0) * 1.0;
  traj.stock = {{100.0, 10.0}, {98.0, xb1}, {95.0, xb2}};

  traj.income = {20.0, 20.0, 20.0};
  traj.consumption = {16.0, 17.0, 16.5};
  traj.investment = {4.0, 3.0, 3.5};
  traj.capital = {10.0, 14.0, 17.0};
  traj.cbar = 16.0;
  return traj;
}

}  // namespace

TEST_CASE("growth accessors read the stored stocks") {
  auto traj = hand_built();
  CHECK(growth_of(traj, 0, 0) == 0.0);
  CHECK(growth_of(traj, 0, 1) == doctest::Approx(2.0));
  CHECK(growth_slope_of(traj, 0, 1) == doctest::Approx(0.2));
  CHECK(growth_of(traj, 1, 1) == doctest::Approx(0.2 * (10.0 + 1.0)));
}

TEST_CASE("price rule residuals vanish on a compliant path") {
  auto traj = hand_built();
  for (int t = 0; t < 2; ++t)
    for (int j = 0; j < 2; ++j) {
      CHECK(std::fabs(hotelling_residual(traj, t, j)) < 1e-12);
      CHECK(std::fabs(present_value_residual(traj, t, j)) < 1e-12);
    }
}

TEST_CASE("price rule residual detects a tampered price") {
  auto traj = hand_built();
  traj.adjusted_price[1][0] *= 1.01;
  CHECK(hotelling_residual(traj, 0, 0) == doctest::Approx(0.01).epsilon(1e-9));
  // The costate residual is the same information in present-value form.
  auto cs = costates(traj);
  double grow = 1.0;  // resource a does not grow
  double identity = grow * hotelling_residual(traj, 0, 0) * cs.pi[0] *
                    traj.adjusted_price[0][0] / 1.05;
  CHECK(cs.psi_residual[0][0] ==
        doctest::Approx(identity).epsilon(1e-13));
}

TEST_CASE("investment rule level") {
  auto traj = hand_built();
  // I*(0) = 4.6 (2 - 0) + 5.0 (1 - 2) = 4.2.
  CHECK(hartwick_investment(traj, 0) == doctest::Approx(4.2).epsilon(1e-12));
}

TEST_CASE("user cost rule residual in currency units") {
  auto traj = hand_built();
  double lhs = 4.6 * 2.0 * 1.05;
  double rhs = traj.adjusted_price[1][0] * (100.0 - 2.0) * 1.0;
  CHECK(user_cost_rule_residual(traj, 0, 0) ==
        doctest::Approx(lhs - rhs).epsilon(1e-12));
}

TEST_CASE("consumption series drift") {
  auto traj = hand_built();
  auto cs = consumption_series(traj);
  CHECK(cs.consumption[1] == 17.0);
  CHECK(cs.drift == doctest::Approx(0.0625));
}

TEST_CASE("costate series") {
  auto traj = hand_built();
  auto cs = costates(traj);
  CHECK(cs.beta[0] == 1.0);
  CHECK(cs.beta[1] == doctest::Approx(1.0 / 1.05).epsilon(1e-15));
  CHECK(cs.pi[1] == cs.beta[1]);
  CHECK(cs.psi[0][0] == doctest::Approx(4.6));
  CHECK(cs.psi[1][0] ==
        doctest::Approx(traj.adjusted_price[1][0] / 1.05).epsilon(1e-14));
  for (int t = 0; t < 2; ++t)
    for (int j = 0; j < 2; ++j)
      CHECK(std::fabs(cs.psi_residual[t][j]) < 1e-12);
}

TEST_CASE("residual report aggregates") {
  auto traj = hand_built();
  auto rep = build_residual_report(traj);
  CHECK(rep.max_hotelling < 1e-12);
  CHECK(rep.max_present_value < 1e-12);
  CHECK(rep.consumption_drift == doctest::Approx(0.0625));
  CHECK(rep.hartwick[0] == doctest::Approx(4.0 - 4.2).epsilon(1e-12));
  // I*(1) = 4.83 (3 - 0) + 4.375 (1 - 2.2) = 9.24.
  CHECK(rep.hartwick[1] == doctest::Approx(3.0 - 9.24).epsilon(1e-9));
  CHECK(rep.max_hartwick == doctest::Approx(6.24).epsilon(1e-9));
  CHECK(rep.max_user_cost > 100.0);  // the hand path ignores the split rule
}

TEST_CASE("identity error is zero for a consistent path and flags breaks") {
  auto traj = hand_built();
  CHECK(trajectory_identity_error(traj) == 0.0);
  traj.stock[1][0] = 97.0;  // extraction said 98
  CHECK(trajectory_identity_error(traj) > 0.5);
}

TEST_CASE("user cost split balances sell-now against hold") {
  CHECK(step_user_cost(100.0, 1.0, 1.0, 0.0, 0.0, 1.0) == 50.0);
  CHECK(step_user_cost(21.0, 1.0, 1.0, 0.1, 0.0, 1.0) ==
        doctest::Approx(10.0).epsilon(1e-14));
  CHECK(step_user_cost(10.0, 1.0, 1.0, 0.0, 0.1, 1.0) ==
        doctest::Approx(11.0 / 2.1).epsilon(1e-14));
  CHECK_THROWS_AS(step_user_cost(0.0, 1.0, 1.0, 0.0, 0.0, 1.0), ModelError);
  CHECK_THROWS_AS(step_user_cost(1.0, -1.0, 1.0, 0.0, 0.0, 1.0), ModelError);
}

TEST_CASE("trajectory assembly from an extraction schedule") {
  EconomySpec econ;
  econ.horizon_steps = 3;
  econ.dt = 1.0;
  econ.interest_rate = {0.0};
  econ.capital0 = 0.0;
  ResourceSpec ore;
  ore.name = "ore";
  ore.stock0 = 12.0;
  auto d = DemandSystem::isoelastic({1.0}, {{-2.0}});

  std::vector<Vec> sched{{4.0}, {4.0}, {4.0}};
  auto traj = trajectory_from_extraction(econ, {ore}, d, sched);
  CHECK(traj.stock[3][0] == doctest::Approx(0.0));
  // p = Q^-1/2 = 0.5, m = -0.5, adjusted 0.25, revenue 2 each period.
  CHECK(traj.adjusted_price[1][0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(traj.income[0] == doctest::Approx(2.0).epsilon(1e-12));
  // Default cbar = Y_0 - I*_0 = 2 - 0.25*4 = 1.
  CHECK(traj.cbar == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(trajectory_identity_error(traj) < 1e-12);

  SUBCASE("explicit cbar overrides the investment-rule level") {
    auto t2 = trajectory_from_extraction(econ, {ore}, d, sched, 2.0);
    CHECK(t2.cbar == 2.0);
    CHECK(t2.consumption[0] == doctest::Approx(2.0));
    // Income is unchanged, so investment absorbs the difference.
    CHECK(t2.investment[0] == doctest::Approx(0.0));
  }

  SUBCASE("corner periods keep income but drop prices") {
    std::vector<Vec> with_zero{{6.0}, {6.0}, {0.0}};
    auto t3 = trajectory_from_extraction(econ, {ore}, d, with_zero, 1.0);
    CHECK(std::isnan(t3.price[2][0]));
    CHECK(std::isnan(t3.adjusted_price[2][0]));
    CHECK(t3.income[2] == 0.0);
    CHECK(t3.stock[3][0] == doctest::Approx(0.0));
  }

  SUBCASE("schedules must match the horizon") {
    std::vector<Vec> stubby{{4.0}, {4.0}};
    CHECK_THROWS_AS(
        trajectory_from_extraction(econ, {ore}, d, stubby), ModelError);
  }
}
