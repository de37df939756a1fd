#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dpg/fe/spaces.hpp"
#include "dpg/mesh/quad_mesh.hpp"

namespace dpg::core {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using SourceFn = std::function<double(double, double)>;

struct Discretization {
  std::shared_ptr<const mesh::QuadMesh> mesh;
  std::shared_ptr<const fe::TrialSpace> trial;
  std::shared_ptr<const fe::TestSpace> test;
  double alpha = 1.0;
};

struct LocalSystem {
  Matrix gram;
  Matrix b_local;  // unfolded: columns follow the trial space's local layout
  Vector load_local;
  Eigen::LLT<Matrix> gram_chol;
};

struct CondensedElement {
  Matrix stiffness;
  Vector rhs;
};

// Graph-norm Gram (div tau, div dtau) + (tau + grad v, dtau + grad dv) + alpha^2 [(v, dv) + (tau, dtau)].
Matrix local_gram(const mesh::Element& el, const fe::TestSpace& test, double alpha);
// b(u, v) on element k with sigma-hat columns oriented by each edge's fixed normal.
Matrix local_b(int k, const fe::TrialSpace& trial, const fe::TestSpace& test);
Vector local_load(const mesh::Element& el, const fe::TestSpace& test, const SourceFn& source);
LocalSystem assemble_local(int k, const Discretization& disc, const SourceFn& source);
CondensedElement condense_element(const LocalSystem& local);

// Gram and b on a box of given size for a trial/test pair; sigma-hat columns follow each side's
// outward normal. The spaces must outlive this object.
class ElementOperators {
 public:
  ElementOperators(const fe::TrialSpace& trial, const fe::TestSpace& test);
  ~ElementOperators();
  Matrix gram(double hx, double hy, double alpha) const;
  Matrix b_outward(double hx, double hy) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct SolverOptions {
  enum class Kind { cholesky, cg } kind = Kind::cholesky;
  double cg_tolerance = 1e-12;
  int cg_max_iterations = 20000;
};

// Gram block and its factor, shared by congruent elements.
struct GramBlock {
  Matrix gram;
  Eigen::LLT<Matrix> chol;
};

struct ElementData {
  std::shared_ptr<const GramBlock> gram;
  Matrix b_folded;  // test x fold.global_dofs
  Vector load_eff;  // load minus the contribution of prescribed trace values
};

class StiffnessSolver;

struct GlobalSystem {
  Discretization disc;
  SparseMatrix stiffness;
  Vector primal_rhs;
  double load_norm_sq = 0;  // |l|^2 in the dual test norm
  std::vector<ElementData> elements;
  std::shared_ptr<const StiffnessSolver> solver;
  Vector solve(const Vector& rhs) const;
};

struct SolveState {
  Discretization disc;
  std::shared_ptr<const GlobalSystem> system;
  Vector u_coeffs;
  std::vector<Vector> psi_coeffs;
  Vector dual_rhs;
  Vector omega_coeffs;
  std::vector<Vector> v_coeffs;
  double alpha = 1.0;
  int dof_count = 0;
  bool has_dual = false;
};

std::shared_ptr<const GlobalSystem> assemble_global(const Discretization& disc, const SourceFn& source,
                                                    const SolverOptions& options = {});

SolveState solve_primal(std::shared_ptr<const GlobalSystem> system);
SolveState solve_primal(const Discretization& disc, const SourceFn& source, const SolverOptions& options = {});

// Reuses the primal factorization; the goal vector holds G on every free trial dof.
SolveState solve_dual(const Discretization& disc, const Vector& goal_rhs, const SolveState& primal);

// Number of dual solves performed in this process.
long dual_solve_count();

struct DenseSystem {
  Matrix b;     // all test dofs x free trial dofs
  Matrix gram;  // block diagonal
  Vector load;
};
DenseSystem extract_dense_system(const GlobalSystem& system);

void write_matrix_market(const SparseMatrix& a, const std::string& path);

}  // namespace dpg::core
