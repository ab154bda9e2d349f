#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "sustain/cli/commands.hpp"
#include "sustain/cli/config.hpp"
#include "sustain/cli/csv.hpp"
#include "sustain/errors.hpp"

using namespace sustain;
using namespace sustain::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::current_path() / "scratch_unit" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const char* kSmallConfig = R"({
  "economy": {
    "horizon_steps": 6,
    "dt": 1.0,
    "interest_rate": 0.05,
    "capital0": 0.0,
    "terminal": {"kind": "exhaust", "tolerance": 1e-9}
  },
  "resources": [
    {"name": "ore", "stock0": 20.0, "growth": {"kind": "zero"}}
  ],
  "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]}
})";

std::string fixture(const std::string& name) {
  return std::string(TEST_FIXTURE_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("config parsing covers every section") {
  const char* text = R"({
    "economy": {
      "horizon_steps": 4,
      "dt": 0.5,
      "interest_rate": [0.01, 0.02, 0.03, 0.04],
      "capital0": 2.0,
      "terminal": {"kind": "stock_target", "stocks": [5.0], "tolerance": 1e-8}
    },
    "resources": [
      {"name": "fish", "stock0": 50.0,
       "growth": {"kind": "logistic", "intrinsic_rate": 0.3,
                  "carrying_capacity": 100.0}}
    ],
    "demand": {"kind": "isoelastic", "scale": [2.0], "exponent": [[-1.5]],
               "perfectly_elastic": false},
    "solver": {"shooting_tolerance": 1e-9, "max_outer_iterations": 50,
               "bracket_lo": 0.1, "bracket_hi": 2.0, "damping": 0.4,
               "inner_tolerance": 1e-11, "verify_monotonicity": true},
    "oracle": {"periods": 4, "grid_points": 7,
               "grid_bounds": [[0.0, 10.0]], "cbar_tolerance": 1e-5},
    "sweep": {"parameters": [
      {"path": "interest_rate", "values": [0.0, 0.05]}
    ]},
    "margin_convention": "reciprocal_elasticity"
  })";
  auto cfg = parse_config(text);
  CHECK(cfg.econ.horizon_steps == 4);
  CHECK(cfg.econ.dt == 0.5);
  CHECK(cfg.econ.interest_rate.size() == 4);
  CHECK(cfg.econ.terminal.kind == TerminalCondition::Kind::stock_target);
  CHECK(cfg.resources[0].growth.kind == GrowthKind::logistic);
  CHECK(cfg.demand.kind == DemandKind::isoelastic);
  CHECK(cfg.solver.max_outer_iterations == 50);
  CHECK(cfg.solver.verify_monotonicity);
  REQUIRE(cfg.oracle.has_value());
  CHECK(cfg.oracle->grid_points == 7);
  REQUIRE(cfg.sweep.has_value());
  CHECK(cfg.sweep->parameters.size() == 1);
  CHECK(cfg.margin_convention == MarginConvention::reciprocal_elasticity);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config parsing is strict") {
  auto expect_reject = [](const std::string& text) {
    CHECK_THROWS_AS(static_cast<void>(parse_config(text)), ConfigError);
  };

  expect_reject("not json at all {");
  expect_reject("[1, 2, 3]");

  // Unknown keys at any level.
  expect_reject(R"({"economy": {"horizon_steps": 4, "dt": 1.0,
    "interest_rate": 0.0, "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "a", "stock0": 1.0, "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]},
    "surprise": 1})");
  expect_reject(R"({"economy": {"horizon_steps": 4, "dt": 1.0, "spread": 2,
    "interest_rate": 0.0, "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "a", "stock0": 1.0, "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]}})");

  // Type errors.
  expect_reject(R"({"economy": {"horizon_steps": 4.5, "dt": 1.0,
    "interest_rate": 0.0, "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "a", "stock0": 1.0, "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]}})");
  expect_reject(R"({"economy": {"horizon_steps": 4, "dt": 1.0,
    "interest_rate": "five percent", "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "a", "stock0": 1.0, "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]}})");

  // Domain errors.
  expect_reject(R"({"economy": {"horizon_steps": 4, "dt": 1.0,
    "interest_rate": 0.0, "terminal": {"kind": "exhaust",
    "stocks": [1.0]}},
    "resources": [{"name": "a", "stock0": 1.0, "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]}})");
  expect_reject(R"({"economy": {"horizon_steps": 4, "dt": 1.0,
    "interest_rate": 0.0, "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "a", "stock0": 1.0,
                   "growth": {"kind": "sideways"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]}})");
  // Duplicate names pass the parse but fail semantic validation.
  auto dup = parse_config(R"({"economy": {"horizon_steps": 4, "dt": 1.0,
    "interest_rate": 0.0, "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "a", "stock0": 1.0, "growth": {"kind": "zero"}},
                  {"name": "a", "stock0": 2.0, "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0, 1.0],
               "exponent": [[-2.0, 0.0], [0.0, -2.0]]}})");
  CHECK_THROWS_AS(dup.validate(), ConfigError);
  expect_reject(R"({"economy": {"horizon_steps": 4, "dt": 1.0,
    "interest_rate": 0.0, "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "a", "stock0": 1.0, "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]},
    "sweep": {"parameters": [{"path": "interest_rate", "values": []}]}})");
}

TEST_CASE("margin convention names") {
  CHECK(parse_margin_convention("inverse_elasticity") ==
        MarginConvention::inverse_elasticity);
  CHECK(parse_margin_convention("reciprocal_elasticity") ==
        MarginConvention::reciprocal_elasticity);
  CHECK_THROWS_AS(static_cast<void>(parse_margin_convention("harmonic")),
                  ConfigError);
}

TEST_CASE("sweep parameters address the config") {
  auto cfg = parse_config(kSmallConfig);
  apply_parameter(cfg, "interest_rate", 0.07);
  CHECK(cfg.econ.interest_rate == Vec{0.07});
  apply_parameter(cfg, "capital0", 3.0);
  CHECK(cfg.econ.capital0 == 3.0);
  apply_parameter(cfg, "stock0:ore", 55.0);
  CHECK(cfg.resources[0].stock0 == 55.0);
  apply_parameter(cfg, "demand.scale:0", 2.5);
  CHECK(cfg.demand.scale[0] == 2.5);
  apply_parameter(cfg, "demand.exponent:0,0", -1.8);
  CHECK(cfg.demand.exponent[0][0] == -1.8);

  CHECK_THROWS_AS(apply_parameter(cfg, "volatility", 1.0), ConfigError);
  CHECK_THROWS_AS(apply_parameter(cfg, "stock0:coal", 1.0), ConfigError);
  CHECK_THROWS_AS(apply_parameter(cfg, "demand.scale:4", 1.0), ConfigError);
  CHECK_THROWS_AS(apply_parameter(cfg, "demand.slope:0,0", 1.0), ConfigError);

  auto lin = parse_config(R"({
    "economy": {"horizon_steps": 4, "dt": 1.0, "interest_rate": 0.0,
                "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "a", "stock0": 8.0, "growth": {"kind": "zero"}}],
    "demand": {"kind": "linear", "intercept": [10.0], "slope": [[1.0]]}})");
  apply_parameter(lin, "demand.intercept:0", 12.0);
  CHECK(lin.demand.intercept[0] == 12.0);
  apply_parameter(lin, "demand.slope:0,0", 1.5);
  CHECK(lin.demand.slope[0][0] == 1.5);
}

TEST_CASE("doubles survive the text round trip") {
  for (double v : {1.0 / 3.0, 0.1, 12345.6789, 1e300, 5e-324, -2.5e-7}) {
    auto s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("csv reading") {
  auto dir = scratch("csv");
  spit(dir / "ok.csv", "a,b\r\n1,2\r\n3,4\n");
  auto t = read_csv((dir / "ok.csv").string());
  REQUIRE(t.header.size() == 2);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "2");
  CHECK(t.column("b") == 1);
  CHECK(t.column("zzz") == -1);
  CHECK(t.require_column("a") == 0);
  CHECK_THROWS_AS(static_cast<void>(t.require_column("zzz")), ConfigError);

  spit(dir / "ragged.csv", "a,b\n1\n");
  CHECK_THROWS_AS(static_cast<void>(read_csv((dir / "ragged.csv").string())),
                  ConfigError);
  CHECK_THROWS_AS(static_cast<void>(read_csv((dir / "absent.csv").string())),
                  ConfigError);
}

TEST_CASE("solve command writes the run bundle") {
  auto dir = scratch("solve");
  spit(dir / "config.json", kSmallConfig);
  int rc = cmd_solve((dir / "config.json").string(), (dir / "out").string());
  REQUIRE(rc == kExitOk);

  auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(summary["command"] == "solve");
  CHECK(summary["converged"] == true);
  CHECK(summary["cbar"].get<double>() > 0.0);
  CHECK(summary["residuals"]["max_hotelling"].get<double>() < 1e-10);
  CHECK(summary["residuals"]["consumption_drift"].get<double>() == 0.0);

  auto traj = read_csv((dir / "out" / "trajectory.csv").string());
  CHECK(traj.rows.size() == 7);  // T + 1 rows, one resource
  auto resid = read_csv((dir / "out" / "residuals.csv").string());
  CHECK(resid.rows.size() == 6);

  SUBCASE("reruns are byte identical") {
    int rc2 =
        cmd_solve((dir / "config.json").string(), (dir / "out2").string());
    REQUIRE(rc2 == kExitOk);
    CHECK(slurp(dir / "out" / "trajectory.csv") ==
          slurp(dir / "out2" / "trajectory.csv"));
    CHECK(slurp(dir / "out" / "residuals.csv") ==
          slurp(dir / "out2" / "residuals.csv"));
    CHECK(slurp(dir / "out" / "summary.json") ==
          slurp(dir / "out2" / "summary.json"));
  }
}

TEST_CASE("audit command reproduces the solver verdict") {
  auto dir = scratch("audit");
  spit(dir / "config.json", kSmallConfig);
  REQUIRE(cmd_solve((dir / "config.json").string(),
                    (dir / "solved").string()) == kExitOk);

  SUBCASE("round trip is byte identical") {
    int rc = cmd_audit((dir / "config.json").string(),
                       (dir / "solved" / "trajectory.csv").string(),
                       (dir / "audited").string());
    REQUIRE(rc == kExitOk);
    CHECK(slurp(dir / "audited" / "residuals.csv") ==
          slurp(dir / "solved" / "residuals.csv"));
    auto audit = nlohmann::json::parse(slurp(dir / "audited" / "audit.json"));
    CHECK(audit["identity_error"].get<double>() == 0.0);
    CHECK(audit["margin_convention"] == "inverse_elasticity");
  }

  SUBCASE("quantity is accepted as a column alias") {
    auto text = slurp(dir / "solved" / "trajectory.csv");
    auto pos = text.find("extraction");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("extraction").size(), "quantity");
    spit(dir / "renamed.csv", text);
    int rc = cmd_audit((dir / "config.json").string(),
                       (dir / "renamed.csv").string(),
                       (dir / "audited_alias").string());
    REQUIRE(rc == kExitOk);
    CHECK(slurp(dir / "audited_alias" / "residuals.csv") ==
          slurp(dir / "solved" / "residuals.csv"));
  }

  SUBCASE("tampered prices are flagged") {
    auto table = read_csv((dir / "solved" / "trajectory.csv").string());
    int pcol = table.require_column("price");
    int tcol = table.require_column("t");
    for (auto& row : table.rows)
      if (row[tcol] == "3") {
        double p = std::strtod(row[pcol].c_str(), nullptr);
        row[pcol] = format_double(p * 1.1);
      }
    std::ostringstream out;
    for (size_t i = 0; i < table.header.size(); ++i)
      out << (i ? "," : "") << table.header[i];
    out << "\n";
    for (auto& row : table.rows) {
      for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << "\n";
    }
    spit(dir / "tampered.csv", out.str());
    int rc = cmd_audit((dir / "config.json").string(),
                       (dir / "tampered.csv").string(),
                       (dir / "audited_bad").string());
    REQUIRE(rc == kExitOk);
    auto audit =
        nlohmann::json::parse(slurp(dir / "audited_bad" / "audit.json"));
    CHECK(audit["residuals"]["max_hotelling"].get<double>() > 0.01);
  }

  SUBCASE("margin conventions agree for one resource") {
    int rc = cmd_audit((dir / "config.json").string(),
                       (dir / "solved" / "trajectory.csv").string(),
                       (dir / "audited_recip").string(),
                       "reciprocal_elasticity");
    REQUIRE(rc == kExitOk);
    auto a = nlohmann::json::parse(
        slurp(dir / "audited_recip" / "audit.json"));
    CHECK(a["margin_convention"] == "reciprocal_elasticity");
    CHECK(a["residuals"]["max_hotelling"].get<double>() < 1e-9);
  }

  SUBCASE("incomplete data is a config error") {
    auto text = slurp(dir / "solved" / "trajectory.csv");
    auto cut = text.rfind("\n", text.size() - 2);
    spit(dir / "short.csv", text.substr(0, cut + 1));
    CHECK(cmd_audit((dir / "config.json").string(),
                    (dir / "short.csv").string(),
                    (dir / "audited_short").string()) == kExitConfig);
  }

  SUBCASE("duplicate rows are a config error") {
    auto text = slurp(dir / "solved" / "trajectory.csv");
    auto first_row = text.find('\n') + 1;
    auto second_row = text.find('\n', first_row) + 1;
    auto dup = text + text.substr(first_row, second_row - first_row);
    spit(dir / "dup.csv", dup);
    CHECK(cmd_audit((dir / "config.json").string(),
                    (dir / "dup.csv").string(),
                    (dir / "audited_dup").string()) == kExitConfig);
  }
}

TEST_CASE("oracle check command") {
  auto dir = scratch("oracle");
  int rc = cmd_oracle_check(fixture("oracle_t3.json"),
                            (dir / "fine").string());
  CHECK(rc == kExitOk);
  auto rep = nlohmann::json::parse(slurp(dir / "fine" / "gap_report.json"));
  CHECK(rep["within_bound"] == true);
  CHECK(std::fabs(rep["cbar_gap_rel"].get<double>()) < 1e-6);
  CHECK(rep["hotelling_within_grid_tol"] == true);
  CHECK(rep["enumerated"].get<long long>() == 20825);

  // A three-point grid cannot represent the even split.
  std::string coarse = R"({
    "economy": {"horizon_steps": 3, "dt": 1.0, "interest_rate": 0.0,
                "capital0": 0.0, "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "ore", "stock0": 12.0,
                   "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]},
    "oracle": {"periods": 3, "grid_points": 3, "cbar_tolerance": 1e-6}
  })";
  spit(dir / "coarse.json", coarse);
  CHECK(cmd_oracle_check((dir / "coarse.json").string(),
                         (dir / "coarse").string()) == kExitGap);
  auto bad = nlohmann::json::parse(slurp(dir / "coarse" / "gap_report.json"));
  CHECK(bad["within_bound"] == false);

  SUBCASE("gap bound must be sane") {
    CHECK(cmd_oracle_check(fixture("oracle_t3.json"),
                           (dir / "neg").string(), -0.5) == kExitConfig);
  }

  SUBCASE("oracle section is required") {
    spit(dir / "no_oracle.json", kSmallConfig);
    CHECK(cmd_oracle_check((dir / "no_oracle.json").string(),
                           (dir / "none").string()) == kExitConfig);
  }
}

TEST_CASE("sweep command") {
  auto dir = scratch("sweep");
  std::string cfg = R"({
    "economy": {"horizon_steps": 6, "dt": 1.0, "interest_rate": 0.05,
                "capital0": 0.0, "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "ore", "stock0": 20.0,
                   "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]},
    "sweep": {"parameters": [
      {"path": "interest_rate", "values": [0.0, 0.05]},
      {"path": "stock0:ore", "values": [10.0, 20.0, 40.0]}
    ]}
  })";
  spit(dir / "sweep.json", cfg);

  setenv("SUSTAIN_EXTRACT_THREADS", "4", 1);
  int rc = cmd_sweep((dir / "sweep.json").string(), (dir / "a").string());
  setenv("SUSTAIN_EXTRACT_THREADS", "1", 1);
  int rc2 = cmd_sweep((dir / "sweep.json").string(), (dir / "b").string());
  unsetenv("SUSTAIN_EXTRACT_THREADS");
  REQUIRE(rc == kExitOk);
  REQUIRE(rc2 == kExitOk);
  CHECK(slurp(dir / "a" / "sweep.csv") == slurp(dir / "b" / "sweep.csv"));

  auto table = read_csv((dir / "a" / "sweep.csv").string());
  REQUIRE(table.rows.size() == 6);
  // The last parameter varies fastest.
  int rcol = table.require_column("interest_rate");
  int scol = table.require_column("stock0:ore");
  CHECK(table.rows[0][rcol] == "0");
  CHECK(table.rows[0][scol] == "10");
  CHECK(table.rows[1][scol] == "20");
  CHECK(table.rows[3][rcol] == format_double(0.05));
  auto meta = nlohmann::json::parse(slurp(dir / "a" / "sweep.json"));
  CHECK(meta["cells"].get<int>() == 6);
  CHECK(meta["converged"].get<int>() == 6);

  SUBCASE("unknown sweep paths fail before any solve") {
    std::string bad = cfg;
    auto pos = bad.find("stock0:ore");
    bad.replace(pos, std::string("stock0:ore").size(), "stock0:tin");
    spit(dir / "bad.json", bad);
    CHECK(cmd_sweep((dir / "bad.json").string(), (dir / "c").string()) ==
          kExitConfig);
  }

  SUBCASE("a sweep section is required") {
    spit(dir / "nosweep.json", kSmallConfig);
    CHECK(cmd_sweep((dir / "nosweep.json").string(), (dir / "d").string()) ==
          kExitConfig);
  }
}

TEST_CASE("command error paths and exit codes") {
  auto dir = scratch("errors");
  CHECK(cmd_solve((dir / "missing.json").string(), (dir / "o").string()) ==
        kExitConfig);

  spit(dir / "broken.json", "{ not json");
  CHECK(cmd_solve((dir / "broken.json").string(), (dir / "o").string()) ==
        kExitConfig);

  // A terminal target equal to the stock leaves nothing to extract: the
  // shooting bracket cannot close.
  std::string stuck = R"({
    "economy": {"horizon_steps": 4, "dt": 1.0, "interest_rate": 0.0,
                "terminal": {"kind": "stock_target", "stocks": [20.0]}},
    "resources": [{"name": "ore", "stock0": 20.0,
                   "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [1.0], "exponent": [[-2.0]]}
  })";
  spit(dir / "stuck.json", stuck);
  CHECK(cmd_solve((dir / "stuck.json").string(), (dir / "o2").string()) ==
        kExitSolver);
}

TEST_CASE("perfectly elastic runs keep margins at zero in the outputs") {
  auto dir = scratch("pe");
  std::string cfg = R"({
    "economy": {"horizon_steps": 6, "dt": 1.0, "interest_rate": 0.04,
                "capital0": 0.0, "terminal": {"kind": "exhaust"}},
    "resources": [{"name": "ore", "stock0": 30.0,
                   "growth": {"kind": "zero"}}],
    "demand": {"kind": "isoelastic", "scale": [2.0], "exponent": [[-1.5]],
               "perfectly_elastic": true}
  })";
  spit(dir / "pe.json", cfg);
  REQUIRE(cmd_solve((dir / "pe.json").string(), (dir / "out").string()) ==
          kExitOk);
  auto table = read_csv((dir / "out" / "trajectory.csv").string());
  int mcol = table.require_column("margin");
  int pcol = table.require_column("price");
  int acol = table.require_column("adjusted_price");
  for (auto& row : table.rows) {
    CHECK(row[mcol] == "0");
    CHECK(row[pcol] == row[acol]);
  }
}
