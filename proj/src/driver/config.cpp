#include "dpg/driver/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "dpg/error.hpp"
#include "dpg/goals/goals.hpp"

namespace dpg::driver {

using nlohmann::json;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::uniform: return "uniform";
    case Mode::smr: return "smr";
    case Mode::gmr_explicit: return "gmr_explicit";
    case Mode::gmr_implicit: return "gmr_implicit";
    case Mode::gmr_adhoc: return "gmr_adhoc";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  for (Mode m : {Mode::uniform, Mode::smr, Mode::gmr_explicit, Mode::gmr_implicit, Mode::gmr_adhoc})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown mode '" + s + "' (uniform, smr, gmr_explicit, gmr_implicit, gmr_adhoc)");
}

namespace {

void only_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + where + "." + key + "'");
  }
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.problem != "steep") throw ConfigError("problem must be 'steep'");
  const auto ref = goals::steep_manufactured().domain;
  if (c.domain.x0 != ref.x0 || c.domain.x1 != ref.x1 || c.domain.y0 != ref.y0 || c.domain.y1 != ref.y1)
    throw ConfigError("domain must be [0,4] x [0,1] for the 'steep' problem");
  if (c.nx < 1 || c.ny < 1) throw ConfigError("domain.nx and domain.ny must be at least 1");
  if (c.p < 1) throw ConfigError("discretization.p must be at least 1");
  if (c.dp < 1) throw ConfigError("discretization.dp must be at least 1");
  if (c.p + c.dp > 20) throw ConfigError("discretization.p + dp must not exceed 20");
  if (!(c.alpha > 0) || !std::isfinite(c.alpha)) throw ConfigError("discretization.alpha must be positive");
  if (!(c.theta > 0 && c.theta < 1)) throw ConfigError("adaptivity.theta must lie in (0, 1)");
  if (c.max_iters < 0) throw ConfigError("adaptivity.max_iters must be nonnegative");
  if (c.max_dof <= 0) throw ConfigError("adaptivity.max_dof must be positive");
  bool known = false;
  for (const auto& n : goals::goal_names()) known = known || n == c.goal;
  if (!known) throw ConfigError("unknown goal '" + c.goal + "'");
}

RunConfig config_from_json(const json& doc) {
  RunConfig c;
  only_keys(doc, "config",
            {"problem", "domain", "boundary", "discretization", "adaptivity", "goal", "seed", "output_dir", "solver",
             "timing"});
  read(doc, "problem", "config", c.problem);
  if (doc.contains("domain")) {
    const auto& d = doc["domain"];
    only_keys(d, "domain", {"x0", "x1", "y0", "y1", "nx", "ny"});
    read(d, "x0", "domain", c.domain.x0);
    read(d, "x1", "domain", c.domain.x1);
    read(d, "y0", "domain", c.domain.y0);
    read(d, "y1", "domain", c.domain.y1);
    read(d, "nx", "domain", c.nx);
    read(d, "ny", "domain", c.ny);
  }
  if (doc.contains("boundary")) {
    const auto& b = doc["boundary"];
    only_keys(b, "boundary", {"neumann"});
    c.boundary = mesh::BoundarySpec::all(mesh::EdgeSide::dirichlet);
    if (b.contains("neumann")) {
      if (!b["neumann"].is_array()) throw ConfigError("boundary.neumann must be a list of side names");
      for (const auto& s : b["neumann"]) {
        if (!s.is_string()) throw ConfigError("boundary.neumann must be a list of side names");
        try {
          c.boundary.sides[static_cast<int>(mesh::side_from_string(s.get<std::string>()))] = mesh::EdgeSide::neumann;
        } catch (const Error& e) {
          throw ConfigError(std::string("boundary.neumann: ") + e.what());
        }
      }
    }
  }
  if (doc.contains("discretization")) {
    const auto& d = doc["discretization"];
    only_keys(d, "discretization", {"p", "dp", "alpha"});
    read(d, "p", "discretization", c.p);
    read(d, "dp", "discretization", c.dp);
    read(d, "alpha", "discretization", c.alpha);
  }
  if (doc.contains("adaptivity")) {
    const auto& a = doc["adaptivity"];
    only_keys(a, "adaptivity", {"mode", "theta", "max_dof", "max_iters"});
    std::string mode = to_string(c.mode);
    read(a, "mode", "adaptivity", mode);
    c.mode = mode_from_string(mode);
    read(a, "theta", "adaptivity", c.theta);
    read(a, "max_dof", "adaptivity", c.max_dof);
    read(a, "max_iters", "adaptivity", c.max_iters);
  }
  if (doc.contains("goal")) {
    const auto& g = doc["goal"];
    only_keys(g, "goal", {"name", "params"});
    read(g, "name", "goal", c.goal);
    if (g.contains("params")) c.goal_params = g["params"];
  }
  read(doc, "seed", "config", c.seed);
  read(doc, "output_dir", "config", c.output_dir);
  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    only_keys(s, "solver", {"kind", "cg_tolerance"});
    std::string kind = "cholesky";
    read(s, "kind", "solver", kind);
    if (kind == "cholesky")
      c.solver.kind = core::SolverOptions::Kind::cholesky;
    else if (kind == "cg")
      c.solver.kind = core::SolverOptions::Kind::cg;
    else
      throw ConfigError("solver.kind must be 'cholesky' or 'cg'");
    read(s, "cg_tolerance", "solver", c.solver.cg_tolerance);
  }
  read(doc, "timing", "config", c.timing);
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

json config_to_json(const RunConfig& c) {
  json neumann = json::array();
  for (int s = 0; s < 4; ++s)
    if (c.boundary.sides[s] == mesh::EdgeSide::neumann) neumann.push_back(mesh::to_string(static_cast<mesh::Side>(s)));
  return json{
      {"problem", c.problem},
      {"domain", {{"x0", c.domain.x0}, {"x1", c.domain.x1}, {"y0", c.domain.y0}, {"y1", c.domain.y1}, {"nx", c.nx}, {"ny", c.ny}}},
      {"boundary", {{"neumann", neumann}}},
      {"discretization", {{"p", c.p}, {"dp", c.dp}, {"alpha", c.alpha}}},
      {"adaptivity", {{"mode", to_string(c.mode)}, {"theta", c.theta}, {"max_dof", c.max_dof}, {"max_iters", c.max_iters}}},
      {"goal", {{"name", c.goal}, {"params", c.goal_params}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"solver", {{"kind", c.solver.kind == core::SolverOptions::Kind::cg ? "cg" : "cholesky"},
                  {"cg_tolerance", c.solver.cg_tolerance}}},
      {"timing", c.timing},
  };
}

}  // namespace dpg::driver
