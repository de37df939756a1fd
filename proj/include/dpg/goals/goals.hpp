#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dpg/fe/spaces.hpp"
#include "dpg/goals/manufactured.hpp"
#include "dpg/mesh/quad_mesh.hpp"

namespace dpg::goals {

using Vector = Eigen::VectorXd;

// Constant densities (g1, g2) on an axis-aligned rectangle.
struct VolumePiece {
  mesh::Rect region;
  double g1 = 0;
  double g2x = 0;
  double g2y = 0;
};

// Piecewise-linear data along one domain side, parametrized by the coordinate that runs along it.
// Repeated knot coordinates encode a jump.
struct BoundaryProfile {
  mesh::Side side = mesh::Side::left;
  std::vector<std::pair<double, double>> knots;

  double value(double s) const;
  double slope(double s) const;  // right derivative
  std::vector<double> breakpoints() const;
};

struct Region {
  enum class Kind { none, boundary_segment, point } kind = Kind::none;
  mesh::Side side = mesh::Side::left;
  mesh::Point point;
  BoundaryProfile weight;  // boundary data the surrogate spreads over the region
};

// What a mesh-dependent update builds on the region.
enum class Surrogate { none, boundary_average, boundary_flux_average, point_average };

struct GoalSpec {
  std::string name = "zero";
  std::vector<VolumePiece> volume;
  std::vector<BoundaryProfile> g3_hat;  // against u-hat on Neumann sides
  std::vector<BoundaryProfile> g4_hat;  // against sigma-hat (outward) on Dirichlet sides
  bool mesh_dependent = false;
  Region region;
  Surrogate surrogate = Surrogate::none;
  // Per-element constant densities set by mesh_dependent_update; indexed by element id.
  std::vector<VolumePiece> element_density;

  bool volumetric_only() const { return g3_hat.empty() && g4_hat.empty(); }
  // Pieces touching element k: global pieces plus the element's own density.
  std::vector<VolumePiece> pieces_on(const mesh::QuadMesh& mesh, int k) const;
  GoalSpec scaled(double c) const;
};

GoalSpec zero_goal();
GoalSpec add(const GoalSpec& a, const GoalSpec& b);

// Catalog: subdomain_temperature, subdomain_flux_x, boundary_temperature, boundary_flux, point_temperature.
// The initial mesh supplies the default ramp width for boundary_flux.
GoalSpec make_goal(const std::string& name, const nlohmann::json& params, const mesh::QuadMesh& initial_mesh);
std::vector<std::string> goal_names();

// Checks the continuity of g4-hat along the Dirichlet boundary and that it vanishes where Dirichlet
// meets Neumann; also that g3-hat/g4-hat sit on Neumann/Dirichlet sides.
void check_regularity(const GoalSpec& goal, const mesh::BoundarySpec& bc);

// Volumetric stand-in for a boundary goal, used by the ad hoc estimator.
GoalSpec adhoc_surrogate(const GoalSpec& goal);

// Rebuilds the element densities of a mesh-dependent goal on this mesh.
GoalSpec mesh_dependent_update(const GoalSpec& goal, const mesh::QuadMesh& mesh);

struct GoalVector {
  Vector free;            // G on every free trial basis function
  double constant = 0;    // G of the prescribed boundary lift
};
GoalVector goal_load_vector(const GoalSpec& goal, const fe::TrialSpace& trial);

double evaluate_qoi(const GoalVector& g, const Vector& coeffs);
double evaluate_qoi(const GoalSpec& goal, const fe::TrialSpace& trial, const Vector& coeffs);

// Reference value G(u) by composite Gauss quadrature (panels per direction).
double exact_qoi(const GoalSpec& goal, const ManufacturedSolution& exact, int panels = 64);

// Integral of a function over a rectangle by composite Gauss quadrature.
double integrate_rect(const mesh::Rect& r, const std::function<double(double, double)>& f, int panels, int points = 8);

}  // namespace dpg::goals
