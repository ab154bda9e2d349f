#include "sustain/cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "sustain/errors.hpp"

namespace sustain::cli {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

const json& field(const json& obj, const std::string& where,
                  const char* name) {
  auto it = obj.find(name);
  if (it == obj.end())
    throw ConfigError(where + " is missing required key '" + name + "'");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number())
    throw ConfigError(where + " must be a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer())
    throw ConfigError(where + " must be an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean())
    throw ConfigError(where + " must be a boolean");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string())
    throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

Vec vector_of(const json& j, const std::string& where) {
  if (!j.is_array())
    throw ConfigError(where + " must be an array of numbers");
  Vec out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(number(e, where + " entry"));
  return out;
}

Mat matrix_of(const json& j, const std::string& where) {
  if (!j.is_array())
    throw ConfigError(where + " must be an array of rows");
  Mat out;
  out.reserve(j.size());
  for (const auto& row : j) out.push_back(vector_of(row, where + " row"));
  return out;
}

GrowthFunction parse_growth(const json& j, const std::string& where) {
  if (!j.is_object())
    throw ConfigError(where + " must be an object");
  std::string kind = text(field(j, where, "kind"), where + ".kind");
  if (kind == "zero") {
    check_keys(j, where, {"kind"});
    return GrowthFunction::none();
  }
  if (kind == "exponential") {
    check_keys(j, where, {"kind", "rate"});
    return GrowthFunction::exponential(
        number(field(j, where, "rate"), where + ".rate"));
  }
  if (kind == "logistic") {
    check_keys(j, where, {"kind", "intrinsic_rate", "carrying_capacity"});
    return GrowthFunction::logistic(
        number(field(j, where, "intrinsic_rate"), where + ".intrinsic_rate"),
        number(field(j, where, "carrying_capacity"),
               where + ".carrying_capacity"));
  }
  throw ConfigError(where + ".kind must be zero, exponential, or logistic");
}

EconomySpec parse_economy(const json& j) {
  if (!j.is_object()) throw ConfigError("economy must be an object");
  check_keys(j, "economy",
             {"horizon_steps", "dt", "interest_rate", "capital0", "terminal"});
  EconomySpec econ;
  econ.horizon_steps =
      integer(field(j, "economy", "horizon_steps"), "economy.horizon_steps");
  econ.dt = number(field(j, "economy", "dt"), "economy.dt");
  const json& rate = field(j, "economy", "interest_rate");
  if (rate.is_number())
    econ.interest_rate = {rate.get<double>()};
  else
    econ.interest_rate = vector_of(rate, "economy.interest_rate");
  if (auto it = j.find("capital0"); it != j.end())
    econ.capital0 = number(*it, "economy.capital0");
  if (auto it = j.find("terminal"); it != j.end()) {
    const json& t = *it;
    if (!t.is_object()) throw ConfigError("economy.terminal must be an object");
    check_keys(t, "economy.terminal", {"kind", "stocks", "tolerance"});
    std::string kind =
        text(field(t, "economy.terminal", "kind"), "economy.terminal.kind");
    if (kind == "exhaust") {
      econ.terminal.kind = TerminalCondition::Kind::exhaust;
      if (t.contains("stocks"))
        throw ConfigError("economy.terminal.stocks only applies to "
                          "stock_target");
    } else if (kind == "stock_target") {
      econ.terminal.kind = TerminalCondition::Kind::stock_target;
      econ.terminal.target_stocks = vector_of(
          field(t, "economy.terminal", "stocks"), "economy.terminal.stocks");
    } else {
      throw ConfigError(
          "economy.terminal.kind must be exhaust or stock_target");
    }
    if (auto tt = t.find("tolerance"); tt != t.end())
      econ.terminal.tolerance = number(*tt, "economy.terminal.tolerance");
  }
  return econ;
}

std::vector<ResourceSpec> parse_resources(const json& j) {
  if (!j.is_array() || j.empty())
    throw ConfigError("resources must be a non-empty array");
  std::vector<ResourceSpec> out;
  for (size_t i = 0; i < j.size(); ++i) {
    std::string where = "resources[" + std::to_string(i) + "]";
    const json& r = j[i];
    if (!r.is_object()) throw ConfigError(where + " must be an object");
    check_keys(r, where, {"name", "stock0", "growth"});
    ResourceSpec spec;
    spec.name = text(field(r, where, "name"), where + ".name");
    spec.stock0 = number(field(r, where, "stock0"), where + ".stock0");
    if (auto it = r.find("growth"); it != r.end())
      spec.growth = parse_growth(*it, where + ".growth");
    out.push_back(std::move(spec));
  }
  return out;
}

DemandSystem parse_demand(const json& j) {
  if (!j.is_object()) throw ConfigError("demand must be an object");
  std::string kind = text(field(j, "demand", "kind"), "demand.kind");
  bool pe = false;
  if (auto it = j.find("perfectly_elastic"); it != j.end())
    pe = boolean(*it, "demand.perfectly_elastic");
  if (kind == "isoelastic") {
    check_keys(j, "demand", {"kind", "perfectly_elastic", "scale", "exponent"});
    return DemandSystem::isoelastic(
        vector_of(field(j, "demand", "scale"), "demand.scale"),
        matrix_of(field(j, "demand", "exponent"), "demand.exponent"), pe);
  }
  if (kind == "linear") {
    check_keys(j, "demand", {"kind", "perfectly_elastic", "intercept", "slope"});
    return DemandSystem::linear(
        vector_of(field(j, "demand", "intercept"), "demand.intercept"),
        matrix_of(field(j, "demand", "slope"), "demand.slope"), pe);
  }
  throw ConfigError("demand.kind must be isoelastic or linear");
}

SolverConfig parse_solver(const json& j) {
  if (!j.is_object()) throw ConfigError("solver must be an object");
  check_keys(j, "solver",
             {"shooting_tolerance", "max_outer_iterations", "bracket_lo",
              "bracket_hi", "damping", "inner_tolerance",
              "verify_monotonicity"});
  SolverConfig cfg;
  if (auto it = j.find("shooting_tolerance"); it != j.end())
    cfg.shooting_tolerance = number(*it, "solver.shooting_tolerance");
  if (auto it = j.find("max_outer_iterations"); it != j.end())
    cfg.max_outer_iterations = integer(*it, "solver.max_outer_iterations");
  if (auto it = j.find("bracket_lo"); it != j.end())
    cfg.bracket_lo = number(*it, "solver.bracket_lo");
  if (auto it = j.find("bracket_hi"); it != j.end())
    cfg.bracket_hi = number(*it, "solver.bracket_hi");
  if (auto it = j.find("damping"); it != j.end())
    cfg.damping = number(*it, "solver.damping");
  if (auto it = j.find("inner_tolerance"); it != j.end())
    cfg.inner_tolerance = number(*it, "solver.inner_tolerance");
  if (auto it = j.find("verify_monotonicity"); it != j.end())
    cfg.verify_monotonicity = boolean(*it, "solver.verify_monotonicity");
  return cfg;
}

OracleConfig parse_oracle(const json& j) {
  if (!j.is_object()) throw ConfigError("oracle must be an object");
  check_keys(j, "oracle",
             {"periods", "grid_points", "grid_bounds", "cbar_tolerance"});
  OracleConfig cfg;
  if (auto it = j.find("periods"); it != j.end())
    cfg.periods = integer(*it, "oracle.periods");
  if (auto it = j.find("grid_points"); it != j.end())
    cfg.grid_points = integer(*it, "oracle.grid_points");
  if (auto it = j.find("cbar_tolerance"); it != j.end())
    cfg.cbar_tolerance = number(*it, "oracle.cbar_tolerance");
  if (auto it = j.find("grid_bounds"); it != j.end()) {
    Mat rows = matrix_of(*it, "oracle.grid_bounds");
    for (const Vec& row : rows) {
      if (row.size() != 2)
        throw ConfigError("oracle.grid_bounds rows must be [lo, hi]");
      cfg.grid_bounds.push_back({row[0], row[1]});
    }
  }
  return cfg;
}

SweepSpec parse_sweep(const json& j) {
  if (!j.is_object()) throw ConfigError("sweep must be an object");
  check_keys(j, "sweep", {"parameters"});
  const json& params = field(j, "sweep", "parameters");
  if (!params.is_array() || params.empty())
    throw ConfigError("sweep.parameters must be a non-empty array");
  SweepSpec spec;
  for (size_t i = 0; i < params.size(); ++i) {
    std::string where = "sweep.parameters[" + std::to_string(i) + "]";
    const json& p = params[i];
    if (!p.is_object()) throw ConfigError(where + " must be an object");
    check_keys(p, where, {"path", "values"});
    SweepParameter param;
    param.path = text(field(p, where, "path"), where + ".path");
    param.values = vector_of(field(p, where, "values"), where + ".values");
    if (param.values.empty())
      throw ConfigError(where + ".values must be non-empty");
    spec.parameters.push_back(std::move(param));
  }
  return spec;
}

}  // namespace

MarginConvention parse_margin_convention(const std::string& name) {
  if (name == "inverse_elasticity")
    return MarginConvention::inverse_elasticity;
  if (name == "reciprocal_elasticity")
    return MarginConvention::reciprocal_elasticity;
  throw ConfigError("margin_convention must be inverse_elasticity or "
                    "reciprocal_elasticity");
}

void RunConfig::validate() const {
  const int n = static_cast<int>(resources.size());
  if (n < 1 || n > 3)
    throw ConfigError("between 1 and 3 resources are supported");
  for (const auto& r : resources) {
    if (r.name.empty())
      throw ConfigError("resource names must be non-empty");
    if (r.name.find_first_of(",\n\r") != std::string::npos)
      throw ConfigError("resource name '" + r.name +
                        "' may not contain commas or line breaks");
    if (!(r.stock0 > 0.0))
      throw ConfigError("resource '" + r.name + "' needs stock0 > 0");
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (resources[a].name == resources[b].name)
        throw ConfigError("duplicate resource name '" + resources[a].name +
                          "'");
  econ.validate(n);
  demand.validate();
  if (demand.n != n)
    throw ConfigError("demand system size must match the resource count");
  if (oracle) oracle->validate(n);
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  check_keys(doc, "config",
             {"economy", "resources", "demand", "solver", "oracle", "sweep",
              "margin_convention"});

  RunConfig cfg;
  cfg.econ = parse_economy(field(doc, "config", "economy"));
  cfg.resources = parse_resources(field(doc, "config", "resources"));
  cfg.demand = parse_demand(field(doc, "config", "demand"));
  if (auto it = doc.find("solver"); it != doc.end())
    cfg.solver = parse_solver(*it);
  if (auto it = doc.find("oracle"); it != doc.end())
    cfg.oracle = parse_oracle(*it);
  if (auto it = doc.find("sweep"); it != doc.end())
    cfg.sweep = parse_sweep(*it);
  if (auto it = doc.find("margin_convention"); it != doc.end())
    cfg.margin_convention =
        parse_margin_convention(text(*it, "margin_convention"));
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

int parse_index(const std::string& s, const std::string& path, int limit) {
  size_t pos = 0;
  int value = -1;
  try {
    value = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("bad index '" + s + "' in sweep path '" + path + "'");
  }
  if (pos != s.size() || value < 0 || value >= limit)
    throw ConfigError("index out of range in sweep path '" + path + "'");
  return value;
}

}  // namespace

void apply_parameter(RunConfig& cfg, const std::string& path, double value) {
  std::string head = path;
  std::string arg;
  if (auto colon = path.find(':'); colon != std::string::npos) {
    head = path.substr(0, colon);
    arg = path.substr(colon + 1);
  }

  if (head == "interest_rate") {
    cfg.econ.interest_rate = {value};
    return;
  }
  if (head == "capital0") {
    cfg.econ.capital0 = value;
    return;
  }
  if (head == "stock0") {
    for (auto& r : cfg.resources)
      if (r.name == arg) {
        r.stock0 = value;
        return;
      }
    throw ConfigError("sweep path '" + path + "' names no resource");
  }
  if (head == "demand.scale" || head == "demand.intercept") {
    Vec& target =
        head == "demand.scale" ? cfg.demand.scale : cfg.demand.intercept;
    int j = parse_index(arg, path, static_cast<int>(target.size()));
    target[j] = value;
    return;
  }
  if (head == "demand.exponent" || head == "demand.slope") {
    Mat& target =
        head == "demand.exponent" ? cfg.demand.exponent : cfg.demand.slope;
    auto comma = arg.find(',');
    if (comma == std::string::npos)
      throw ConfigError("sweep path '" + path + "' needs row,col indices");
    int j = parse_index(arg.substr(0, comma), path,
                        static_cast<int>(target.size()));
    int k = parse_index(arg.substr(comma + 1), path,
                        j < static_cast<int>(target.size())
                            ? static_cast<int>(target[j].size())
                            : 0);
    target[j][k] = value;
    return;
  }
  throw ConfigError("unknown sweep path '" + path + "'");
}

}  // namespace sustain::cli
