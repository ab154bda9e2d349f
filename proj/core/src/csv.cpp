#include "sustain/cli/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "sustain/errors.hpp"

namespace sustain::cli {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

int CsvTable::require_column(const std::string& name) const {
  int i = column(name);
  if (i < 0) throw ConfigError("data file is missing column '" + name + "'");
  return i;
}

namespace {

std::vector<std::string> split_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("data file '" + path + "' is empty");
  table.header = split_line(line);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto row = split_line(line);
    if (row.size() != table.header.size())
      throw ConfigError("data file '" + path + "' line " +
                        std::to_string(lineno) + " has " +
                        std::to_string(row.size()) + " fields, expected " +
                        std::to_string(table.header.size()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  auto out = open_out(path);
  out << "t,resource,price,adjusted_price,margin,extraction,stock,growth,"
         "income,investment,consumption,capital\n";
  const int T = traj.steps();
  const int n = traj.n_resources();
  for (int t = 0; t <= T; ++t) {
    for (int j = 0; j < n; ++j) {
      out << t << ',' << traj.resources[j].name << ','
          << format_double(traj.price[t][j]) << ','
          << format_double(traj.adjusted_price[t][j]) << ','
          << format_double(traj.margin[t][j]) << ','
          << format_double(traj.extraction[t][j]) << ','
          << format_double(traj.stock[t][j]) << ','
          << format_double(growth_of(traj, t, j)) << ','
          << format_double(traj.income[t]) << ','
          << format_double(traj.investment[t]) << ','
          << format_double(traj.consumption[t]) << ','
          << format_double(traj.capital[t]) << '\n';
    }
  }
  if (!out) throw ConfigError("failed while writing '" + path + "'");
}

void write_residuals_csv(const Trajectory& traj,
                         const RuleResidualReport& report,
                         const std::string& path) {
  auto out = open_out(path);
  out << "t,resource,hotelling_rel,present_value_abs,user_cost_abs,"
         "hartwick_abs,consumption_drift\n";
  const int T = traj.steps();
  const int n = traj.n_resources();
  double c0 = traj.consumption[0];
  for (int t = 0; t < T; ++t) {
    double drift =
        std::fabs(traj.consumption[t] - c0) / std::max(1.0, std::fabs(c0));
    for (int j = 0; j < n; ++j) {
      out << t << ',' << traj.resources[j].name << ','
          << format_double(report.hotelling[t][j]) << ','
          << format_double(report.present_value[t][j]) << ','
          << format_double(report.user_cost[t][j]) << ','
          << format_double(report.hartwick[t]) << ','
          << format_double(drift) << '\n';
    }
  }
  if (!out) throw ConfigError("failed while writing '" + path + "'");
}

}  // namespace sustain::cli
