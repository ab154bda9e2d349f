#include "sustain/cli/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "json.hpp"
#include "sustain/cli/config.hpp"
#include "sustain/cli/csv.hpp"
#include "sustain/errors.hpp"
#include "sustain/oracle.hpp"

namespace sustain::cli {

namespace {

using nlohmann::ordered_json;

void emit_error(const std::string& code, const std::string& message) {
  ordered_json err;
  err["error"]["code"] = code;
  err["error"]["message"] = message;
  std::cerr << err.dump() << "\n";
}

// Maps thrown errors onto the documented exit statuses.
template <typename F>
int run_guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    emit_error(e.code(), e.what());
    return kExitConfig;
  } catch (const SolverError& e) {
    emit_error(e.code(), e.what());
    return kExitSolver;
  } catch (const ModelError& e) {
    emit_error(e.code(), e.what());
    return kExitSolver;
  } catch (const Error& e) {
    emit_error(e.code(), e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    emit_error("internal_error", e.what());
    return kExitConfig;
  }
}

std::filesystem::path prepare_out_dir(const std::string& out_dir) {
  std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + dir.string() +
                      "': " + ec.message());
  return dir;
}

void write_json_file(const std::filesystem::path& path,
                     const ordered_json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << "\n";
  if (!out) throw ConfigError("failed while writing '" + path.string() + "'");
}

ordered_json residual_summary(const RuleResidualReport& report) {
  ordered_json j;
  j["max_hotelling"] = report.max_hotelling;
  j["max_present_value"] = report.max_present_value;
  j["max_user_cost"] = report.max_user_cost;
  j["max_hartwick"] = report.max_hartwick;
  j["consumption_drift"] = report.consumption_drift;
  return j;
}

double parse_number(const std::string& s, const std::string& where) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ConfigError(where + ": '" + s + "' is not a number");
  return v;
}

long parse_int(const std::string& s, const std::string& where) {
  const char* begin = s.c_str();
  char* end = nullptr;
  long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw ConfigError(where + ": '" + s + "' is not an integer");
  return v;
}

}  // namespace

int cmd_solve(const std::string& config_path, const std::string& out_dir) {
  return run_guarded([&] {
    RunConfig cfg = load_config(config_path);
    cfg.validate();
    SolveResult res =
        solve_constant_consumption(cfg.econ, cfg.resources, cfg.demand,
                                   cfg.solver);
    auto dir = prepare_out_dir(out_dir);
    write_trajectory_csv(res.trajectory, (dir / "trajectory.csv").string());
    write_residuals_csv(res.trajectory, res.residuals,
                        (dir / "residuals.csv").string());

    ordered_json summary;
    summary["command"] = "solve";
    summary["cbar"] = res.cbar;
    summary["initial_adjusted_price"] = res.initial_adjusted_price;
    summary["iterations"] = res.iterations;
    summary["terminal_mismatch"] = res.terminal_mismatch;
    summary["converged"] = res.converged;
    summary["terminal_stocks"] = res.trajectory.stock.back();
    summary["terminal_capital"] = res.trajectory.capital.back();
    summary["residuals"] = residual_summary(res.residuals);
    write_json_file(dir / "summary.json", summary);
    return kExitOk;
  });
}

namespace {

// Margins for audited data: cross-price impacts always come from the
// configured demand system at the observed extraction, while the division
// and the adjusted price use the observed market price, so the audit
// reprices the data rather than the model's idea of it.
void audit_margins(const DemandSystem& demand, const Vec& price, const Vec& q,
                   MarginConvention convention, Vec& margin, Vec& adjusted) {
  const int n = demand.n;
  margin.assign(n, 0.0);
  adjusted = price;
  if (demand.perfectly_elastic) return;
  for (int j = 0; j < n; ++j) {
    if (!(q[j] > 0.0))
      throw ConfigError("audited extraction must stay positive away from "
                        "the perfectly elastic limit");
    if (!(price[j] > 0.0))
      throw ConfigError("audited prices must be positive");
  }
  if (convention == MarginConvention::inverse_elasticity) {
    MarginReport mr =
        margin_from_jacobian(demand_jacobian(demand, q), price, q);
    margin = mr.margin;
    adjusted = mr.adjusted_price;
    return;
  }
  ElasticityReport el = demand_elasticities(demand, q);
  for (int j = 0; j < n; ++j) {
    double own_value = price[j] * q[j];
    double m = 0.0;
    for (int k = 0; k < n; ++k) {
      double eps = el.epsilon[j][k];
      if (std::fabs(eps) <= 1e-12) continue;
      m += (1.0 / eps) * (price[k] * q[k]) / own_value;
    }
    margin[j] = m;
    adjusted[j] = price[j] * (1.0 + m);
  }
}

}  // namespace

int cmd_audit(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir,
              const std::string& margin_convention) {
  return run_guarded([&] {
    RunConfig cfg = load_config(config_path);
    cfg.validate();
    MarginConvention convention =
        margin_convention.empty() ? cfg.margin_convention
                                  : parse_margin_convention(margin_convention);

    CsvTable table = read_csv(data_path);
    const int col_t = table.require_column("t");
    const int col_res = table.require_column("resource");
    const int col_price = table.require_column("price");
    const int col_stock = table.require_column("stock");
    int col_q = table.column("quantity");
    if (col_q < 0) col_q = table.column("extraction");
    if (col_q < 0)
      throw ConfigError(
          "data file needs a 'quantity' (or 'extraction') column");

    const int T = cfg.econ.horizon_steps;
    const int n = static_cast<int>(cfg.resources.size());

    Trajectory traj;
    traj.econ = cfg.econ;
    traj.resources = cfg.resources;
    traj.demand = cfg.demand;
    traj.price.assign(T + 1, Vec(n, 0.0));
    traj.adjusted_price.assign(T + 1, Vec(n, 0.0));
    traj.margin.assign(T + 1, Vec(n, 0.0));
    traj.extraction.assign(T + 1, Vec(n, 0.0));
    traj.stock.assign(T + 1, Vec(n, 0.0));
    traj.capital.assign(T + 1, 0.0);
    traj.income.assign(T + 1, 0.0);
    traj.investment.assign(T + 1, 0.0);
    traj.consumption.assign(T + 1, 0.0);

    std::vector<std::vector<char>> seen(T + 1, std::vector<char>(n, 0));
    for (size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      std::string where = "data row " + std::to_string(r + 2);
      long t = parse_int(row[col_t], where + " column t");
      if (t < 0 || t > T)
        throw ConfigError(where + ": t=" + std::to_string(t) +
                          " is outside 0..horizon_steps");
      int j = -1;
      for (int k = 0; k < n; ++k)
        if (cfg.resources[k].name == row[col_res]) j = k;
      if (j < 0)
        throw ConfigError(where + ": unknown resource '" + row[col_res] + "'");
      if (seen[t][j])
        throw ConfigError(where + ": duplicate entry for t=" +
                          std::to_string(t) + ", resource '" + row[col_res] +
                          "'");
      seen[t][j] = 1;
      traj.price[t][j] = parse_number(row[col_price], where + " price");
      traj.extraction[t][j] = parse_number(row[col_q], where + " quantity");
      traj.stock[t][j] = parse_number(row[col_stock], where + " stock");
    }
    for (int t = 0; t <= T; ++t)
      for (int j = 0; j < n; ++j)
        if (!seen[t][j])
          throw ConfigError("data is missing t=" + std::to_string(t) +
                            ", resource '" + cfg.resources[j].name +
                            "' (need rows for t=0.." + std::to_string(T) +
                            ")");

    traj.capital[0] = cfg.econ.capital0;
    for (int t = 0; t <= T; ++t) {
      try {
        audit_margins(cfg.demand, traj.price[t], traj.extraction[t],
                      convention, traj.margin[t], traj.adjusted_price[t]);
      } catch (const ModelError& e) {
        throw ConfigError("data at t=" + std::to_string(t) +
                          " cannot be priced: " + e.what());
      }
      traj.income[t] = period_income(cfg.econ.rate_at(t), traj.capital[t],
                                     traj.price[t], traj.extraction[t]);
      if (t == 0) traj.cbar = traj.income[0] - hartwick_investment(traj, 0);
      traj.investment[t] = traj.income[t] - traj.cbar;
      traj.consumption[t] = traj.income[t] - traj.investment[t];
      if (t < T)
        traj.capital[t + 1] =
            traj.capital[t] + (traj.income[t] - traj.cbar) * cfg.econ.dt;
    }

    RuleResidualReport report = build_residual_report(traj);
    auto dir = prepare_out_dir(out_dir);
    write_residuals_csv(traj, report, (dir / "residuals.csv").string());

    ordered_json audit;
    audit["command"] = "audit";
    audit["rows"] = table.rows.size();
    audit["horizon_steps"] = T;
    audit["margin_convention"] =
        convention == MarginConvention::inverse_elasticity
            ? "inverse_elasticity"
            : "reciprocal_elasticity";
    audit["cbar"] = traj.cbar;
    audit["identity_error"] = trajectory_identity_error(traj);
    audit["residuals"] = residual_summary(report);
    write_json_file(dir / "audit.json", audit);
    return kExitOk;
  });
}

int cmd_oracle_check(const std::string& config_path,
                     const std::string& out_dir, double max_gap) {
  return run_guarded([&] {
    RunConfig cfg = load_config(config_path);
    cfg.validate();
    if (!cfg.oracle)
      throw ConfigError("oracle-check needs an 'oracle' section in the config");
    if (!(max_gap >= 0.0))
      throw ConfigError("--max-gap must be >= 0");

    SolveResult res =
        solve_constant_consumption(cfg.econ, cfg.resources, cfg.demand,
                                   cfg.solver);
    OracleResult oracle =
        enumerate_maxmin(*cfg.oracle, cfg.econ, cfg.resources, cfg.demand);
    GapReport gap = compare(res, oracle);

    auto dir = prepare_out_dir(out_dir);
    write_trajectory_csv(res.trajectory, (dir / "trajectory.csv").string());
    write_trajectory_csv(oracle.trajectory,
                         (dir / "oracle_trajectory.csv").string());

    bool within = std::isfinite(gap.cbar_gap_rel) &&
                  std::fabs(gap.cbar_gap_rel) <= max_gap;

    ordered_json doc;
    doc["command"] = "oracle-check";
    doc["solver_cbar_hartwick"] = gap.solver_cbar_hartwick;
    doc["solver_cbar_feasible"] = gap.solver_cbar_feasible;
    doc["oracle_cbar"] = gap.oracle_cbar;
    doc["cbar_gap_rel"] = gap.cbar_gap_rel;
    doc["max_gap"] = max_gap;
    doc["within_bound"] = within;
    doc["max_extraction_gap"] = gap.max_extraction_gap;
    doc["grid_cell"] = gap.grid_cell;
    doc["hotelling_within_grid_tol"] = gap.hotelling_within_grid_tol;
    doc["max_hotelling_excess"] = gap.max_hotelling_excess;
    doc["enumerated"] = oracle.enumerated;
    doc["feasible"] = oracle.feasible;
    write_json_file(dir / "gap_report.json", doc);
    return within ? kExitOk : kExitGap;
  });
}

namespace {

struct SweepCell {
  Vec values;
  bool converged = false;
  std::string error_code;
  double cbar = std::numeric_limits<double>::quiet_NaN();
  Vec initial_adjusted_price;
  double terminal_mismatch = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  RuleResidualReport residuals;
};

size_t thread_budget(size_t cells) {
  size_t hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("SUSTAIN_EXTRACT_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1)
      hw = std::min<size_t>(hw, static_cast<size_t>(v));
  }
  return std::max<size_t>(1, std::min(hw, cells));
}

}  // namespace

int cmd_sweep(const std::string& config_path, const std::string& out_dir) {
  return run_guarded([&] {
    RunConfig base = load_config(config_path);
    base.validate();
    if (!base.sweep)
      throw ConfigError("sweep needs a 'sweep' section in the config");
    const auto& params = base.sweep->parameters;

    size_t cells = 1;
    for (const auto& p : params) {
      cells *= p.values.size();
      if (cells > 10000)
        throw ConfigError("sweep would exceed 10000 cells");
    }

    // Reject unknown paths before spending time on the grid.
    {
      RunConfig probe = base;
      for (const auto& p : params)
        apply_parameter(probe, p.path, p.values.front());
    }

    std::vector<SweepCell> results(cells);
    std::atomic<size_t> next{0};
    auto worker = [&] {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= cells) return;
        SweepCell& cell = results[i];
        cell.values.resize(params.size());
        size_t rem = i;
        for (size_t p = params.size(); p-- > 0;) {
          size_t count = params[p].values.size();
          cell.values[p] = params[p].values[rem % count];
          rem /= count;
        }
        try {
          RunConfig cfg = base;
          for (size_t p = 0; p < params.size(); ++p)
            apply_parameter(cfg, params[p].path, cell.values[p]);
          cfg.validate();
          SolveResult res = solve_constant_consumption(
              cfg.econ, cfg.resources, cfg.demand, cfg.solver);
          cell.converged = true;
          cell.cbar = res.cbar;
          cell.initial_adjusted_price = res.initial_adjusted_price;
          cell.terminal_mismatch = res.terminal_mismatch;
          cell.iterations = res.iterations;
          cell.residuals = res.residuals;
        } catch (const Error& e) {
          cell.error_code = e.code();
        } catch (const std::exception&) {
          cell.error_code = "internal_error";
        }
      }
    };
    size_t nthreads = thread_budget(cells);
    std::vector<std::thread> pool;
    for (size_t i = 1; i < nthreads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    auto dir = prepare_out_dir(out_dir);
    std::ofstream out(dir / "sweep.csv");
    if (!out)
      throw ConfigError("cannot write '" + (dir / "sweep.csv").string() + "'");
    out << "cell";
    for (const auto& p : params) out << ',' << p.path;
    out << ",converged,cbar";
    for (const auto& r : base.resources)
      out << ",initial_adjusted_price_" << r.name;
    out << ",terminal_mismatch,iterations,max_hotelling,max_present_value,"
           "max_user_cost,max_hartwick,consumption_drift,error_code\n";
    size_t converged = 0;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (size_t i = 0; i < cells; ++i) {
      const SweepCell& cell = results[i];
      out << i;
      for (double v : cell.values) out << ',' << format_double(v);
      out << ',' << (cell.converged ? 1 : 0) << ','
          << format_double(cell.cbar);
      for (size_t j = 0; j < base.resources.size(); ++j)
        out << ','
            << format_double(j < cell.initial_adjusted_price.size()
                                 ? cell.initial_adjusted_price[j]
                                 : nan);
      if (cell.converged) {
        out << ',' << format_double(cell.terminal_mismatch) << ','
            << cell.iterations << ','
            << format_double(cell.residuals.max_hotelling) << ','
            << format_double(cell.residuals.max_present_value) << ','
            << format_double(cell.residuals.max_user_cost) << ','
            << format_double(cell.residuals.max_hartwick) << ','
            << format_double(cell.residuals.consumption_drift);
        ++converged;
      } else {
        out << ",nan,0,nan,nan,nan,nan,nan";
      }
      out << ',' << cell.error_code << '\n';
    }
    if (!out)
      throw ConfigError("failed while writing '" +
                        (dir / "sweep.csv").string() + "'");
    out.close();

    ordered_json doc;
    doc["command"] = "sweep";
    doc["cells"] = cells;
    doc["converged"] = converged;
    doc["failed"] = cells - converged;
    write_json_file(dir / "sweep.json", doc);
    return converged > 0 ? kExitOk : kExitSolver;
  });
}

}  // namespace sustain::cli
