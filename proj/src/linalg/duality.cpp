#include "dpg/linalg/duality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dpg/error.hpp"

namespace dpg::linalg {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

std::string dims(Index r, Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

// (V^T G V)^{-1} restricted solves for the subspace Gram.
Eigen::LLT<Matrix> restricted_gram(const GramMatrix& gram, const Matrix& basis) {
  Matrix g = basis.transpose() * gram.entries() * basis;
  g = 0.5 * (g + g.transpose());
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw NumericalError("restricted Gram matrix is not positive definite");
  return llt;
}

Eigen::LLT<Matrix> factor_stiffness(const Matrix& a) {
  Matrix sym = 0.5 * (a + a.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14)
    throw NumericalError("restricted stiffness is singular: the trial subspace loses inf-sup stability");
  return llt;
}

void require_injective(const OperatorMatrix& b_op, const GramMatrix& gram_v) {
  InfSup c = inf_sup_constants(b_op, gram_v);
  if (!(c.gamma > 1e-12 * std::max(c.continuity, 1e-300)))
    throw NumericalError("operator is not injective, the exact solution is undefined");
}

struct Exact {
  Vector u;      // least-squares / exact trial solution
  Vector omega;  // exact influence function
  Vector v;      // Theta omega
};

// Full-space normal-equation solves for u* and the exact influence function.
Exact exact_solutions(const OperatorMatrix& b_op, const GramMatrix& gram_v, const Vector& load,
                      const Vector& goal) {
  require_injective(b_op, gram_v);
  const Matrix& b = b_op.entries();
  Matrix x = gram_v.solve(b);
  Eigen::LLT<Matrix> a = factor_stiffness(b.transpose() * x);
  Exact e;
  e.u = a.solve(x.transpose() * load);
  e.omega = a.solve(goal);
  e.v = x * e.omega;
  return e;
}

void check_problem(const OperatorMatrix& b_op, const GramMatrix& gram_v) {
  require(b_op.rows() == gram_v.size(),
          "operator has " + std::to_string(b_op.rows()) + " rows but the test Gram is " +
              dims(gram_v.size(), gram_v.size()));
}

double frob(const Matrix& m) { return m.norm(); }

}  // namespace

GramMatrix::GramMatrix(Matrix entries) : entries_(std::move(entries)) {
  require(entries_.rows() == entries_.cols(), "Gram matrix must be square, got " + dims(entries_.rows(), entries_.cols()));
  if (!entries_.allFinite()) throw NumericalError("Gram matrix has non-finite entries");
  double scale = entries_.cwiseAbs().maxCoeff();
  double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1e-300)) {
    std::ostringstream os;
    os << "Gram matrix is not symmetric (max asymmetry " << asym << ")";
    throw NumericalError(os.str());
  }
  llt_.compute(entries_);
  if (llt_.info() != Eigen::Success) {
    Index k = first_nonpositive_pivot(entries_);
    throw NumericalError("Gram matrix is not positive definite: leading minor of order " +
                         std::to_string(k + 1) + " fails");
  }
}

Vector GramMatrix::solve(const Vector& f) const {
  require(f.size() == size(), "functional of length " + std::to_string(f.size()) + " against Gram of size " +
                                  std::to_string(size()));
  return llt_.solve(f);
}

Matrix GramMatrix::solve(const Matrix& f) const {
  require(f.rows() == size(), "right-hand side with " + std::to_string(f.rows()) + " rows against Gram of size " +
                                  std::to_string(size()));
  return llt_.solve(f);
}

OperatorMatrix::OperatorMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (!entries_.allFinite()) throw NumericalError("operator has non-finite entries");
}

FunctionalVec::FunctionalVec(Vector entries) : entries_(std::move(entries)) {
  if (!entries_.allFinite()) throw NumericalError("functional has non-finite entries");
}

SubspaceBasis::SubspaceBasis(Matrix columns) : columns_(std::move(columns)) {
  require(columns_.cols() <= columns_.rows() && columns_.cols() > 0,
          "subspace basis must have 1..n columns, got " + dims(columns_.rows(), columns_.cols()));
  Eigen::ColPivHouseholderQR<Matrix> qr(columns_);
  const double tol = 1e-12 * columns_.norm();
  Index rank = 0;
  for (Index i = 0; i < columns_.cols(); ++i)
    if (std::abs(qr.matrixR()(i, i)) > tol) ++rank;
  if (rank < columns_.cols())
    throw NumericalError("subspace basis is rank deficient: rank " + std::to_string(rank) + " < " +
                         std::to_string(columns_.cols()));
}

SubspaceBasis SubspaceBasis::full(Index n) { return SubspaceBasis(Matrix::Identity(n, n)); }

double QoiDualitySides::gap() const { return std::abs(qoi_error - load_error); }

Index first_nonpositive_pivot(const Matrix& a) {
  const Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0)) return j;
    l(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i) l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return -1;
}

Matrix null_space(const Matrix& m, double rel_cutoff) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_cutoff * smax) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

double gram_operator_norm(const Matrix& op, const GramMatrix& gram) {
  require(op.rows() == gram.size() && op.cols() == gram.size(),
          "operator " + dims(op.rows(), op.cols()) + " does not act on a space of dimension " +
              std::to_string(gram.size()));
  // |x|_G = |L^T x|, so the G-norm of op equals the spectral norm of L^T op L^{-T}.
  Matrix lt = gram.llt().matrixU();
  Matrix m = lt * op;
  Matrix t = gram.llt().matrixU().transpose().solve(m.transpose()).transpose();
  Eigen::JacobiSVD<Matrix> svd(t);
  return svd.singularValues()(0);
}

InfSup inf_sup_constants(const OperatorMatrix& b_op, const GramMatrix& gram_v) {
  check_problem(b_op, gram_v);
  Matrix w = gram_v.llt().matrixL().solve(b_op.entries());
  Eigen::JacobiSVD<Matrix> svd(w);
  const Vector& s = svd.singularValues();
  InfSup c;
  c.continuity = s(0);
  c.gamma = b_op.cols() <= b_op.rows() ? s(s.size() - 1) : 0.0;
  return c;
}

double dual_norm(const GramMatrix& gram, const FunctionalVec& f) {
  Vector w = gram.solve(f.entries());
  return std::sqrt(std::max(0.0, f.entries().dot(w)));
}

Vector riesz_rep(const GramMatrix& gram, const FunctionalVec& f) { return gram.solve(f.entries()); }

SplitNorm split_dual_norm(const GramMatrix& gram, const FunctionalVec& f, const SubspaceBasis& w0) {
  require(f.size() == gram.size(), "functional length " + std::to_string(f.size()) + " vs Gram size " +
                                       std::to_string(gram.size()));
  require(w0.ambient_dim() == gram.size(), "subspace ambient dimension " + std::to_string(w0.ambient_dim()) +
                                               " vs Gram size " + std::to_string(gram.size()));
  SplitNorm out;
  out.total_sq = f.entries().dot(gram.solve(f.entries()));

  const Matrix& b0 = w0.columns();
  Vector f0 = b0.transpose() * f.entries();
  out.part0_sq = f0.dot(restricted_gram(gram, b0).solve(f0));

  if (w0.dim() < gram.size()) {
    // Gram-orthogonal complement: vectors w with (w0_i, w)_G = 0.
    Matrix b1 = null_space(b0.transpose() * gram.entries());
    Vector f1 = b1.transpose() * f.entries();
    out.part1_sq = f1.dot(restricted_gram(gram, b1).solve(f1));
  }
  return out;
}

MixedSolution solve_idealized_primal(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                     const FunctionalVec& load, const SubspaceBasis& trial_sub) {
  check_problem(b_op, gram_v);
  require(load.size() == b_op.rows(), "load length " + std::to_string(load.size()) + " vs " +
                                          std::to_string(b_op.rows()) + " test dofs");
  require(trial_sub.ambient_dim() == b_op.cols(), "trial subspace ambient dimension mismatch");
  Matrix bh = b_op.entries() * trial_sub.columns();
  Matrix x = gram_v.solve(bh);
  Eigen::LLT<Matrix> a = factor_stiffness(bh.transpose() * x);
  Vector c = a.solve(x.transpose() * load.entries());
  MixedSolution s;
  s.trial_part = trial_sub.columns() * c;
  s.test_part = gram_v.solve(Vector(b_op.entries() * s.trial_part - load.entries()));
  return s;
}

MixedSolution solve_idealized_dual(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                   const FunctionalVec& goal, const SubspaceBasis& trial_sub) {
  check_problem(b_op, gram_v);
  require(goal.size() == b_op.cols(), "goal length " + std::to_string(goal.size()) + " vs " +
                                          std::to_string(b_op.cols()) + " trial dofs");
  require(trial_sub.ambient_dim() == b_op.cols(), "trial subspace ambient dimension mismatch");
  Matrix bh = b_op.entries() * trial_sub.columns();
  Matrix x = gram_v.solve(bh);
  Eigen::LLT<Matrix> a = factor_stiffness(bh.transpose() * x);
  Vector c = a.solve(trial_sub.columns().transpose() * goal.entries());
  MixedSolution s;
  s.trial_part = trial_sub.columns() * c;
  s.test_part = x * c;
  return s;
}

MixedSolution solve_practical_primal(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                     const FunctionalVec& load, const SubspaceBasis& trial_sub,
                                     const SubspaceBasis& test_sub) {
  check_problem(b_op, gram_v);
  require(test_sub.ambient_dim() == gram_v.size(), "test subspace ambient dimension mismatch");
  require(trial_sub.ambient_dim() == b_op.cols(), "trial subspace ambient dimension mismatch");
  const Matrix& vr = test_sub.columns();
  Eigen::LLT<Matrix> gr = restricted_gram(gram_v, vr);
  Matrix bh = vr.transpose() * b_op.entries() * trial_sub.columns();
  Matrix x = gr.solve(bh);
  Eigen::LLT<Matrix> a = factor_stiffness(bh.transpose() * x);
  Vector lr = vr.transpose() * load.entries();
  Vector c = a.solve(x.transpose() * lr);
  MixedSolution s;
  s.trial_part = trial_sub.columns() * c;
  Vector r = vr.transpose() * (b_op.entries() * s.trial_part - load.entries());
  s.test_part = vr * gr.solve(r);
  return s;
}

MixedSolution solve_practical_dual(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                   const FunctionalVec& goal, const SubspaceBasis& trial_sub,
                                   const SubspaceBasis& test_sub) {
  check_problem(b_op, gram_v);
  require(test_sub.ambient_dim() == gram_v.size(), "test subspace ambient dimension mismatch");
  require(trial_sub.ambient_dim() == b_op.cols() && goal.size() == b_op.cols(),
          "trial subspace or goal dimension mismatch");
  const Matrix& vr = test_sub.columns();
  Eigen::LLT<Matrix> gr = restricted_gram(gram_v, vr);
  Matrix bh = vr.transpose() * b_op.entries() * trial_sub.columns();
  Matrix x = gr.solve(bh);
  Eigen::LLT<Matrix> a = factor_stiffness(bh.transpose() * x);
  Vector c = a.solve(trial_sub.columns().transpose() * goal.entries());
  MixedSolution s;
  s.trial_part = trial_sub.columns() * c;
  s.test_part = vr * (x * c);
  return s;
}

QoiDualitySides qoi_duality_sides(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                  const FunctionalVec& load, const FunctionalVec& goal,
                                  const SubspaceBasis& trial_sub, const SubspaceBasis& test_sub) {
  Exact ex = exact_solutions(b_op, gram_v, load.entries(), goal.entries());
  MixedSolution p = solve_practical_primal(b_op, gram_v, load, trial_sub, test_sub);
  MixedSolution d = solve_practical_dual(b_op, gram_v, goal, trial_sub, test_sub);
  QoiDualitySides s;
  s.qoi_error = goal.entries().dot(ex.u - p.trial_part);
  s.load_error = load.entries().dot(ex.v - d.test_part);
  s.scale = std::abs(goal.entries().dot(ex.u)) + std::abs(load.entries().dot(ex.v)) + 1.0;
  return s;
}

double qoi_duality_gap(const OperatorMatrix& b_op, const GramMatrix& gram_v, const FunctionalVec& load,
                       const FunctionalVec& goal, const SubspaceBasis& trial_sub,
                       const SubspaceBasis& test_sub) {
  return qoi_duality_sides(b_op, gram_v, load, goal, trial_sub, test_sub).gap();
}

QoiBound qoi_error_bound_check(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                               const FunctionalVec& load, const FunctionalVec& goal,
                               const SubspaceBasis& trial_sub, const SubspaceBasis& test_sub) {
  InfSup c = inf_sup_constants(b_op, gram_v);
  if (!(c.gamma > 1e-12)) throw NumericalError("inf-sup constant below 1e-12, operator is degenerate");
  Exact ex = exact_solutions(b_op, gram_v, load.entries(), goal.entries());
  MixedSolution p = solve_practical_primal(b_op, gram_v, load, trial_sub, test_sub);
  MixedSolution d = solve_practical_dual(b_op, gram_v, goal, trial_sub, test_sub);
  QoiBound out;
  out.lhs = std::abs(goal.entries().dot(ex.u - p.trial_part));
  double primal_res = dual_norm(gram_v, FunctionalVec(b_op.entries() * p.trial_part - load.entries()));
  double dual_res = (b_op.entries().transpose() * d.test_part - goal.entries()).norm();
  out.rhs = primal_res * dual_res / c.gamma;
  return out;
}

ProjectionNorms projection_identities(const OperatorMatrix& proj, const GramMatrix& gram) {
  const Matrix& pi = proj.entries();
  require(pi.rows() == pi.cols() && pi.rows() == gram.size(),
          "projection " + dims(pi.rows(), pi.cols()) + " does not act on a space of dimension " +
              std::to_string(gram.size()));
  const Index n = pi.rows();
  if ((pi * pi - pi).norm() > 1e-10 * std::max(1.0, pi.norm()))
    throw AssumptionError("input operator is not idempotent");

  Eigen::JacobiSVD<Matrix> svd(pi, Eigen::ComputeFullU);
  const Vector& s = svd.singularValues();
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-10 * s(0)) ++rank;
  if (rank == 0 || rank == n) throw AssumptionError("projection range must be nontrivial and proper");

  Matrix range = svd.matrixU().leftCols(rank);
  Eigen::LLT<Matrix> gr = restricted_gram(gram, range);
  Matrix orth = range * gr.solve(range.transpose() * gram.entries());

  ProjectionNorms out;
  out.norm_p = gram_operator_norm(pi, gram);
  out.norm_complement = gram_operator_norm(Matrix::Identity(n, n) - pi, gram);
  out.norm_p_minus_orth = gram_operator_norm(pi - orth, gram);
  return out;
}

EnergySplit energy_residual_identity(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                     const FunctionalVec& load, const Vector& u_h,
                                     const SubspaceBasis& test_sub) {
  check_problem(b_op, gram_v);
  require(u_h.size() == b_op.cols(), "trial vector length mismatch");
  require(test_sub.ambient_dim() == gram_v.size(), "test subspace ambient dimension mismatch");
  Exact ex = exact_solutions(b_op, gram_v, load.entries(), Vector::Zero(b_op.cols()));
  const Matrix& b = b_op.entries();
  Vector range_res = b * ex.u - load.entries();
  if (dual_norm(gram_v, FunctionalVec(range_res)) > 1e-9 * std::max(1.0, dual_norm(gram_v, load)))
    throw AssumptionError("load is not in the range of the operator");

  EnergySplit out;
  Vector e = b * (ex.u - u_h);
  out.full_sq = e.dot(gram_v.solve(e));

  Vector r = b * u_h - load.entries();
  const Matrix& vr = test_sub.columns();
  Vector psi = vr * restricted_gram(gram_v, vr).solve(Vector(vr.transpose() * r));
  Vector rem = gram_v.entries() * psi - r;
  out.remainder_sq = rem.dot(gram_v.solve(rem));
  out.psi_sq = psi.dot(gram_v.entries() * psi);
  return out;
}

ReliabilityReport reliability_report(const OperatorMatrix& b_op, const GramMatrix& gram_v,
                                     const FunctionalVec& load, const Vector& u_h,
                                     const OperatorMatrix& fortin, const SubspaceBasis& trial_sub) {
  check_problem(b_op, gram_v);
  const Matrix& b = b_op.entries();
  const Matrix& pi = fortin.entries();
  const Index m = b.rows();
  require(pi.rows() == m && pi.cols() == m, "Fortin projection must be " + dims(m, m));
  require(u_h.size() == b.cols() && trial_sub.ambient_dim() == b.cols(), "trial dimension mismatch");

  const double pin = std::max(1.0, pi.norm());
  if ((pi * pi - pi).norm() > 1e-10 * pin) throw AssumptionError("Fortin projection is not idempotent");
  Matrix bu = b * trial_sub.columns();
  Matrix defect = bu.transpose() * (Matrix::Identity(m, m) - pi);
  if (defect.norm() > 1e-10 * std::max(1.0, frob(bu)) * pin)
    throw AssumptionError("Fortin orthogonality b(u_h, v - Pi v) = 0 fails on the trial subspace");

  InfSup c = inf_sup_constants(b_op, gram_v);
  Exact ex = exact_solutions(b_op, gram_v, load.entries(), Vector::Zero(b.cols()));
  Vector range_res = b * ex.u - load.entries();
  if (dual_norm(gram_v, FunctionalVec(range_res)) > 1e-9 * std::max(1.0, dual_norm(gram_v, load)))
    throw AssumptionError("load is not in the range of the operator");

  Eigen::JacobiSVD<Matrix> svd(pi, Eigen::ComputeFullU);
  const Vector& s = svd.singularValues();
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-10 * s(0)) ++rank;
  if (rank == 0) throw AssumptionError("Fortin projection has trivial range");
  Matrix vr = svd.matrixU().leftCols(rank);

  ReliabilityReport rep;
  Vector res = load.entries() - b * u_h;
  Vector rr = vr.transpose() * res;
  rep.eta = std::sqrt(std::max(0.0, rr.dot(restricted_gram(gram_v, vr).solve(rr))));
  rep.osc = dual_norm(gram_v, FunctionalVec((Matrix::Identity(m, m) - pi).transpose() * load.entries()));
  rep.fortin_norm = gram_operator_norm(pi, gram_v);
  rep.gamma = c.gamma;
  rep.continuity = c.continuity;

  const Matrix& uh = trial_sub.columns();
  Vector best = uh * (uh.transpose() * uh).ldlt().solve(uh.transpose() * ex.u);
  rep.error_norm = (ex.u - u_h).norm();
  rep.best_error_norm = (ex.u - best).norm();

  rep.lhs = c.gamma * c.gamma * rep.error_norm * rep.error_norm;
  double t = rep.eta * std::sqrt(std::max(0.0, rep.fortin_norm * rep.fortin_norm - 1.0)) + rep.osc;
  rep.rhs = rep.eta * rep.eta + t * t;
  rep.efficiency_lhs = rep.eta;
  rep.efficiency_rhs = c.continuity * rep.error_norm;
  rep.osc_lhs = rep.osc;
  rep.osc_rhs = c.continuity * rep.fortin_norm * rep.best_error_norm;
  return rep;
}

}  // namespace dpg::linalg
