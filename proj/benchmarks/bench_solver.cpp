#include <benchmark/benchmark.h>

#include "sustain/oracle.hpp"
#include "sustain/solver.hpp"

using namespace sustain;

namespace {

EconomySpec econ_basic(int T, double r) {
  EconomySpec e;
  e.horizon_steps = T;
  e.dt = 1.0;
  e.interest_rate = {r};
  e.capital0 = 0.0;
  e.terminal.tolerance = 1e-9;
  return e;
}

ResourceSpec ore(const char* name, double stock0) {
  ResourceSpec r;
  r.name = name;
  r.stock0 = stock0;
  r.growth = GrowthFunction::none();
  return r;
}

const DemandSystem kCoupled =
    DemandSystem::isoelastic({5.0, 8.0}, {{-2.0, 0.3}, {0.4, -2.5}});

}  // namespace

static void BM_InverseDemand(benchmark::State& state) {
  Vec q{2.0, 3.0};
  for (auto _ : state) benchmark::DoNotOptimize(inverse_demand(kCoupled, q));
}
BENCHMARK(BM_InverseDemand);

static void BM_DemandJacobian(benchmark::State& state) {
  Vec q{2.0, 3.0};
  for (auto _ : state) benchmark::DoNotOptimize(demand_jacobian(kCoupled, q));
}
BENCHMARK(BM_DemandJacobian);

static void BM_RecoverMarketState(benchmark::State& state) {
  auto target = externality_margin(kCoupled, {2.0, 3.0}).adjusted_price;
  for (auto _ : state)
    benchmark::DoNotOptimize(recover_market_state(kCoupled, target));
}
BENCHMARK(BM_RecoverMarketState);

static void BM_SolveSingleResourceT40(benchmark::State& state) {
  auto econ = econ_basic(40, 0.05);
  auto d = DemandSystem::isoelastic({1.0}, {{-2.0}});
  std::vector<ResourceSpec> rs{ore("ore", 100.0)};
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_constant_consumption(econ, rs, d));
}
BENCHMARK(BM_SolveSingleResourceT40);

static void BM_OracleFixtureT3(benchmark::State& state) {
  auto econ = econ_basic(3, 0.0);
  auto d = DemandSystem::isoelastic({1.0}, {{-2.0}});
  std::vector<ResourceSpec> rs{ore("ore", 12.0)};
  OracleConfig cfg;
  cfg.periods = 3;
  cfg.grid_points = 49;
  for (auto _ : state)
    benchmark::DoNotOptimize(enumerate_maxmin(cfg, econ, rs, d));
}
BENCHMARK(BM_OracleFixtureT3);

BENCHMARK_MAIN();
