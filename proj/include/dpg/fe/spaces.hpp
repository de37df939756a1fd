#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dpg/fe/quadrature.hpp"
#include "dpg/goals/manufactured.hpp"
#include "dpg/mesh/quad_mesh.hpp"

namespace dpg::fe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Family { lagrange_gll, legendre };

class Basis1D {
 public:
  Basis1D() = default;
  Basis1D(Family family, int order);
  int order() const { return order_; }
  int size() const { return order_ + 1; }
  Family family() const { return family_; }
  const std::vector<double>& nodes() const { return nodes_; }  // Lagrange only
  void eval(double x, double* values, double* derivs) const;

 private:
  Family family_ = Family::legendre;
  int order_ = 0;
  std::vector<double> nodes_;
};

// Tensor-product Q_q basis on [-1,1]^2, index i + (q+1) j.
class TensorBasis {
 public:
  TensorBasis() = default;
  TensorBasis(Family family, int order) : b_(family, order) {}
  int order() const { return b_.order(); }
  int size() const { return b_.size() * b_.size(); }
  const Basis1D& basis_1d() const { return b_; }
  // values, d/dxi, d/deta, each of length size().
  void eval(double xi, double eta, double* values, double* dxi, double* deta) const;

 private:
  Basis1D b_;
};

// Reference coordinates of a point on element side s at side parameter t (increasing coordinate).
std::array<double, 2> side_reference_point(mesh::Side s, double t);
// Physical point from reference coordinates on an element box.
mesh::Point to_physical(const mesh::Rect& box, double xi, double eta);

// Affine combination of free dofs.
struct Expansion {
  std::vector<std::pair<int, double>> terms;
  double constant = 0;
};

// Node-level hanging constraint: slave node value = sum of weight * master node value.
struct Constraint {
  int slave = -1;
  std::vector<std::pair<int, double>> masters;
};

enum class NodeKind { unused, free, eliminated, prescribed, slave };

struct DofMap {
  // u-hat nodes: vertex v has id v; interior node k of edge e has id num_vertices + e (p-1) + k.
  std::vector<NodeKind> uhat_kind;
  std::vector<Expansion> uhat_expansion;
  std::vector<Constraint> uhat_constraints;
  // sigma-hat nodes: mode j of edge e has id e p + j.
  std::vector<NodeKind> sighat_kind;
  std::vector<Expansion> sighat_expansion;
  std::vector<Constraint> sighat_constraints;

  const Constraint* find_uhat_constraint(int node) const;
};

// Local trial columns of one element folded onto free global dofs: local = c * global + offset.
struct ElementFold {
  std::vector<int> global_dofs;
  Matrix c;
  Vector offset;
};

struct BoundaryData {
  // Prescribed sigma . n on Neumann edges; empty means homogeneous.
  std::function<double(mesh::Point, mesh::Point)> neumann_flux;
};

class TrialSpace {
 public:
  TrialSpace(std::shared_ptr<const mesh::QuadMesh> mesh, int p, const BoundaryData& data);

  int p() const { return p_; }
  const mesh::QuadMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const mesh::QuadMesh> mesh_ptr() const { return mesh_; }

  int field_size() const { return (p_ + 1) * (p_ + 1); }  // per component per element
  int local_dim() const { return 3 * field_size() + 8 * p_; }
  int num_dofs() const { return num_field_ + num_uhat_ + num_sighat_; }
  int num_field_dofs() const { return num_field_; }
  int num_uhat_dofs() const { return num_uhat_; }
  int num_sighat_dofs() const { return num_sighat_; }

  int u_offset(int k) const { return k * field_size(); }
  int sigma_offset(int k) const { return mesh_->num_elements() * field_size() + 2 * k * field_size(); }
  int uhat_offset() const { return num_field_; }
  int sighat_offset() const { return num_field_ + num_uhat_; }

  // Local column layout: [u | sigma_x | sigma_y | u-hat (4 corners, then p-1 per side) | sigma-hat (p per side)].
  int local_uhat(int i) const { return 3 * field_size() + i; }
  int local_sighat(mesh::Side s, int j) const { return 3 * field_size() + 4 * p_ + static_cast<int>(s) * p_ + j; }
  // Local u-hat indices along side s in increasing parameter order (p + 1 entries).
  std::vector<int> side_uhat_locals(mesh::Side s) const;

  int num_uhat_nodes() const { return static_cast<int>(dofs_.uhat_kind.size()); }
  int uhat_node(int edge, int k) const { return num_vertices_ + edge * (p_ - 1) + k; }
  int sighat_node(int edge, int j) const { return edge * p_ + j; }
  // Nodes of an edge in parameter order: v0, interior..., v1.
  std::vector<int> edge_uhat_nodes(int edge) const;
  mesh::Point uhat_node_position(int node) const;

  const TensorBasis& field_basis() const { return field_; }
  const Basis1D& uhat_basis() const { return uhat_; }
  const Basis1D& sighat_basis() const { return sighat_; }
  const DofMap& dof_map() const { return dofs_; }
  const ElementFold& fold(int k) const { return folds_.at(k); }

  // Values of all local trial columns of element k for a global free-dof vector. The prescribed
  // boundary lift is added unless with_offset is false (homogeneous problems such as the dual).
  Vector local_coefficients(int k, const Vector& global, bool with_offset = true) const;

 private:
  void build_dofs(const BoundaryData& data);
  void build_folds();

  std::shared_ptr<const mesh::QuadMesh> mesh_;
  int p_;
  int num_vertices_ = 0;
  int num_field_ = 0, num_uhat_ = 0, num_sighat_ = 0;
  TensorBasis field_;
  Basis1D uhat_, sighat_;
  DofMap dofs_;
  std::vector<ElementFold> folds_;
};

class TestSpace {
 public:
  TestSpace(std::shared_ptr<const mesh::QuadMesh> mesh, int p, int dp);

  int order() const { return order_; }
  int scalar_size() const { return basis_.size(); }
  int local_dim() const { return 3 * basis_.size(); }  // [v | tau_x | tau_y]
  int total_dim() const { return local_dim() * mesh_->num_elements(); }
  const TensorBasis& basis() const { return basis_; }
  const mesh::QuadMesh& mesh() const { return *mesh_; }

 private:
  std::shared_ptr<const mesh::QuadMesh> mesh_;
  int order_;
  TensorBasis basis_;
};

// Test function values at a physical point of element k.
struct TestValue {
  double v = 0;
  mesh::Point grad_v;
  mesh::Point tau;
  double div_tau = 0;
};
TestValue evaluate_test(const TestSpace& space, const mesh::Element& el, const Vector& coeffs, double xi, double eta);

// Field values of the trial solution at a point of element k.
struct FieldValue {
  double u = 0;
  mesh::Point sigma;
};
FieldValue evaluate_fields(const TrialSpace& space, int k, const Vector& global, double xi, double eta);

std::shared_ptr<const TrialSpace> build_trial_space(std::shared_ptr<const mesh::QuadMesh> mesh, int p,
                                                    const BoundaryData& data = {});
std::shared_ptr<const TestSpace> build_test_space(std::shared_ptr<const mesh::QuadMesh> mesh, int p, int dp);

// L2 projection of fields, vertex interpolation plus bubble projection for u-hat, L2 projection of
// grad u . n for sigma-hat; free dofs only.
Vector interpolate_manufactured(const TrialSpace& space, const goals::ManufacturedSolution& exact);

// Test-space L2 projection of (v, tau) onto element k.
Vector project_test_function(const TestSpace& space, const mesh::Element& el,
                             const std::function<double(double, double)>& v,
                             const std::function<mesh::Point(double, double)>& tau);

}  // namespace dpg::fe
