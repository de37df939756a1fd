#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "dpg/core/dpg_system.hpp"
#include "dpg/mesh/quad_mesh.hpp"

namespace dpg::driver {

enum class Mode { uniform, smr, gmr_explicit, gmr_implicit, gmr_adhoc };
const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);
inline bool is_goal_oriented(Mode m) { return m != Mode::uniform && m != Mode::smr; }

struct RunConfig {
  std::string problem = "steep";
  mesh::Rect domain{0, 4, 0, 1};
  int nx = 4, ny = 1;
  mesh::BoundarySpec boundary;
  int p = 2;
  int dp = 1;
  double alpha = 1.0;
  double theta = 0.5;
  Mode mode = Mode::smr;
  std::string goal = "subdomain_temperature";
  nlohmann::json goal_params = nlohmann::json::object();
  long max_dof = 20000;
  int max_iters = 30;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  core::SolverOptions solver;
  bool timing = false;
};

// Throws ConfigError naming the offending field.
void validate(const RunConfig& c);

RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& c);

}  // namespace dpg::driver
