#pragma once

#include <Eigen/Dense>

namespace dpg::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Symmetric positive definite Gram matrix with a cached Cholesky factor G = L L^T.
class GramMatrix {
 public:
  explicit GramMatrix(Matrix entries);

  const Matrix& entries() const { return entries_; }
  Index size() const { return entries_.rows(); }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }
  Matrix lower_factor() const { return llt_.matrixL(); }

  Vector solve(const Vector& f) const;
  Matrix solve(const Matrix& f) const;

 private:
  Matrix entries_;
  Eigen::LLT<Matrix> llt_;
};

// Linear map from trial coordinates to test-functional coordinates (or a square map on one space).
class OperatorMatrix {
 public:
  explicit OperatorMatrix(Matrix entries);
  const Matrix& entries() const { return entries_; }
  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }

 private:
  Matrix entries_;
};

class FunctionalVec {
 public:
  explicit FunctionalVec(Vector entries);
  const Vector& entries() const { return entries_; }
  Index size() const { return entries_.size(); }

 private:
  Vector entries_;
};

// Full column rank basis of a subspace.
class SubspaceBasis {
 public:
  explicit SubspaceBasis(Matrix columns);
  static SubspaceBasis full(Index n);

  const Matrix& columns() const { return columns_; }
  Index ambient_dim() const { return columns_.rows(); }
  Index dim() const { return columns_.cols(); }

 private:
  Matrix columns_;
};

struct MixedSolution {
  Vector trial_part;
  Vector test_part;
};

struct SplitNorm {
  double total_sq = 0;
  double part0_sq = 0;
  double part1_sq = 0;
};

struct QoiDualitySides {
  double qoi_error = 0;   // G(u* - u_hr)
  double load_error = 0;  // l(v* - v_hr)
  double scale = 1;       // |G(u*)| + |l(v*)| + 1
  double gap() const;
};

struct QoiBound {
  double lhs = 0;
  double rhs = 0;
};

struct ProjectionNorms {
  double norm_p = 0;
  double norm_complement = 0;
  double norm_p_minus_orth = 0;
};

struct EnergySplit {
  double full_sq = 0;
  double remainder_sq = 0;
  double psi_sq = 0;
};

struct ReliabilityReport {
  double eta = 0;
  double osc = 0;
  double fortin_norm = 1;
  double gamma = 0;
  double continuity = 0;
  double error_norm = 0;       // |u* - u_h|
  double best_error_norm = 0;  // |u* - u_h*| over the trial subspace
  double lhs = 0;              // gamma^2 |u* - u_h|^2
  double rhs = 0;              // eta^2 + (eta sqrt(|Pi|^2 - 1) + osc)^2
  double efficiency_lhs = 0;   // eta
  double efficiency_rhs = 0;   // M |u* - u_h|
  double osc_lhs = 0;          // osc
  double osc_rhs = 0;          // M |Pi| |u* - u_h*|
};

struct InfSup {
  double gamma = 0;
  double continuity = 0;
};

// Index of the first leading minor that is not positive definite, or -1 if the matrix is SPD.
Index first_nonpositive_pivot(const Matrix& a);

// Right null space of m from the SVD with singular values below rel_cutoff * sigma_max discarded.
Matrix null_space(const Matrix& m, double rel_cutoff = 1e-12);

// Operator norm of a square map measured in the Gram inner product.
double gram_operator_norm(const Matrix& op, const GramMatrix& gram);

// gamma and M for b with identity trial Gram, from the singular values of L^{-1} B.
InfSup inf_sup_constants(const OperatorMatrix& b_op, const GramMatrix& gram_v);

double dual_norm(const GramMatrix& gram, const FunctionalVec& f);
Vector riesz_rep(const GramMatrix& gram, const FunctionalVec& f);

SplitNorm split_dual_norm(const GramMatrix& gram, const FunctionalVec& f, const SubspaceBasis& w0);

MixedSolution solve_idealized_primal(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                     const FunctionalVec& load, const SubspaceBasis& trial_sub);
MixedSolution solve_idealized_dual(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                   const FunctionalVec& goal, const SubspaceBasis& trial_sub);

// Practical pair from a restricted test subspace: u_hr minimizes the residual in V_r', v_hr = Theta_r omega_hr.
MixedSolution solve_practical_primal(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                     const FunctionalVec& load, const SubspaceBasis& trial_sub,
                                     const SubspaceBasis& test_sub);
MixedSolution solve_practical_dual(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                   const FunctionalVec& goal, const SubspaceBasis& trial_sub,
                                   const SubspaceBasis& test_sub);

QoiDualitySides qoi_duality_sides(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                  const FunctionalVec& load, const FunctionalVec& goal,
                                  const SubspaceBasis& trial_sub, const SubspaceBasis& test_sub);
double qoi_duality_gap(const OperatorMatrix& b_op, const GramMatrix& gram_v, const FunctionalVec& load,
                       const FunctionalVec& goal, const SubspaceBasis& trial_sub,
                       const SubspaceBasis& test_sub);

QoiBound qoi_error_bound_check(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                               const FunctionalVec& load, const FunctionalVec& goal,
                               const SubspaceBasis& trial_sub, const SubspaceBasis& test_sub);

ProjectionNorms projection_identities(const OperatorMatrix& proj, const GramMatrix& gram);

EnergySplit energy_residual_identity(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                     const FunctionalVec& load, const Vector& u_h,
                                     const SubspaceBasis& test_sub);

// fortin acts on test coordinates; u_h must lie in span(trial_sub).
ReliabilityReport reliability_report(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                     const FunctionalVec& load, const Vector& u_h,
                                     const OperatorMatrix& fortin, const SubspaceBasis& trial_sub);

}  // namespace dpg::linalg
