#include <cmath>

#include <gtest/gtest.h>

#include "dpg/error.hpp"
#include "dpg/linalg/duality.hpp"
#include "dpg/linalg/random_instances.hpp"

using namespace dpg;
using namespace dpg::linalg;

namespace {

// Dual norm squared through an explicit inverse from full-pivot LU.
double lu_dual_sq(const Matrix& g, const Vector& f) { return f.dot(g.fullPivLu().inverse() * f); }

// Orthonormal basis (in the g metric) of span(cols).
Matrix g_orthonormal(const Matrix& g, const Matrix& cols) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cols.transpose() * g * cols);
  return cols * es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(DualNorm, IdentityGramUnitVector) {
  EXPECT_DOUBLE_EQ(dual_norm(GramMatrix(Matrix::Identity(3, 3)), FunctionalVec(vec({1, 0, 0}))), 1.0);
}

TEST(DualNorm, DiagonalGram) {
  Matrix g = vec({4, 1}).asDiagonal();
  EXPECT_DOUBLE_EQ(dual_norm(GramMatrix(g), FunctionalVec(vec({2, 0}))), 1.0);
}

TEST(DualNorm, MatchesExplicitInverse) {
  Rng rng(11);
  Matrix g = random_spd(rng, 20);
  Vector f = rng.vector(20);
  const double ref = std::sqrt(lu_dual_sq(g, f));
  EXPECT_NEAR(dual_norm(GramMatrix(g), FunctionalVec(f)), ref, 1e-12 * ref);
}

TEST(DualNorm, DimensionMismatchThrows) {
  EXPECT_THROW(dual_norm(GramMatrix(Matrix::Identity(3, 3)), FunctionalVec(vec({1, 2}))), DimensionError);
}

TEST(GramMatrix, NonSpdNamesLeadingMinor) {
  Matrix g = Matrix::Identity(3, 3);
  g(2, 2) = -1;
  try {
    GramMatrix bad(g);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
  EXPECT_EQ(first_nonpositive_pivot(g), 2);
  EXPECT_EQ(first_nonpositive_pivot(Matrix::Identity(4, 4)), -1);
}

TEST(GramMatrix, AsymmetricRejected) {
  Matrix g = Matrix::Identity(2, 2);
  g(0, 1) = 0.5;
  EXPECT_THROW(GramMatrix{g}, NumericalError);
}

TEST(RieszRep, IdentityAndDiagonal) {
  Vector f = vec({1, -2, 3});
  EXPECT_TRUE(riesz_rep(GramMatrix(Matrix::Identity(3, 3)), FunctionalVec(f)).isApprox(f));
  Matrix g = vec({2, 2}).asDiagonal();
  Vector w = riesz_rep(GramMatrix(g), FunctionalVec(vec({1, 1})));
  EXPECT_DOUBLE_EQ(w(0), 0.5);
  EXPECT_DOUBLE_EQ(w(1), 0.5);
}

TEST(RieszRep, ResidualSmall) {
  Rng rng(12);
  Matrix g = random_spd(rng, 30);
  Vector f = rng.vector(30);
  Vector w = riesz_rep(GramMatrix(g), FunctionalVec(f));
  EXPECT_LE((g * w - f).norm(), 1e-12 * f.norm() * g.norm());
}

TEST(SplitDualNorm, FunctionalSupportedInW0) {
  Rng rng(13);
  Matrix g = random_spd(rng, 8);
  Matrix w0 = rng.matrix(8, 3);
  Vector f = g * w0.col(1);
  const auto s = split_dual_norm(GramMatrix(g), FunctionalVec(f), SubspaceBasis(w0));
  EXPECT_NEAR(s.part1_sq, 0.0, 1e-10 * s.total_sq);
  EXPECT_NEAR(s.part0_sq, s.total_sq, 1e-10 * s.total_sq);
}

TEST(SplitDualNorm, FullSubspace) {
  Rng rng(14);
  Matrix g = random_spd(rng, 6);
  Vector f = rng.vector(6);
  const auto s = split_dual_norm(GramMatrix(g), FunctionalVec(f), SubspaceBasis::full(6));
  EXPECT_EQ(s.part1_sq, 0.0);
  EXPECT_NEAR(s.part0_sq, s.total_sq, 1e-12 * s.total_sq);
}

TEST(SplitDualNorm, MatchesOrthonormalBasisOracle) {
  Rng rng(15);
  const Index n = 25;
  Matrix g = random_spd(rng, n);
  Vector f = rng.vector(n);
  Matrix w0 = rng.matrix(n, 10);
  const auto s = split_dual_norm(GramMatrix(g), FunctionalVec(f), SubspaceBasis(w0));

  // Oracle: sup over a g-orthonormal basis is the Euclidean norm of the coefficient vector.
  Matrix q0 = g_orthonormal(g, w0);
  Matrix full = Matrix::Identity(n, n);
  Matrix proj = q0 * q0.transpose() * g;
  Matrix comp = (full - proj) * rng.matrix(n, n - 10);  // spans the complement
  Matrix q1 = g_orthonormal(g, comp);
  const double p0 = (q0.transpose() * f).squaredNorm();
  const double p1 = (q1.transpose() * f).squaredNorm();
  const double tot = lu_dual_sq(g, f);
  EXPECT_NEAR(s.part0_sq, p0, 1e-10 * tot);
  EXPECT_NEAR(s.part1_sq, p1, 1e-10 * tot);
  EXPECT_NEAR(s.total_sq, s.part0_sq + s.part1_sq, 1e-10 * tot);
}

TEST(SplitDualNorm, RankDeficientSubspaceThrows) {
  Matrix w0(4, 2);
  w0 << 1, 2, 0, 0, 1, 2, 0, 0;
  EXPECT_THROW(SubspaceBasis{w0}, NumericalError);
}

TEST(IdealizedPrimal, IdentityOperator) {
  Vector l = vec({1, 2, 3});
  const auto s = solve_idealized_primal(OperatorMatrix(Matrix::Identity(3, 3)), GramMatrix(Matrix::Identity(3, 3)),
                                        FunctionalVec(l), SubspaceBasis::full(3));
  EXPECT_LE((s.trial_part - l).norm(), 1e-14);
  EXPECT_LE(s.test_part.norm(), 1e-14);
}

TEST(IdealizedPrimal, ResidualOrthogonalToNullOfAdjoint) {
  Rng rng(16);
  Matrix b = rng.matrix(7, 4);
  Matrix g = random_spd(rng, 7);
  Vector l = rng.vector(7);
  const auto s = solve_idealized_primal(OperatorMatrix(b), GramMatrix(g), FunctionalVec(l), SubspaceBasis::full(4));
  // Optimality: B^T psi = 0.
  EXPECT_LE((b.transpose() * s.test_part).norm(), 1e-10 * l.norm());
}

TEST(IdealizedPrimal, MatchesDenseSaddleSolve) {
  Rng rng(17);
  const Index m = 20, n = 12, k = 5;
  Matrix b = rng.matrix(m, n);
  Matrix g = random_spd(rng, m);
  Vector l = rng.vector(m);
  Matrix u = rng.matrix(n, k);
  const auto s = solve_idealized_primal(OperatorMatrix(b), GramMatrix(g), FunctionalVec(l), SubspaceBasis(u));
  // [G  -B U; (B U)^T 0] [psi; c] = [-l; 0]
  Matrix bu = b * u;
  Matrix saddle = Matrix::Zero(m + k, m + k);
  saddle.topLeftCorner(m, m) = g;
  saddle.topRightCorner(m, k) = -bu;
  saddle.bottomLeftCorner(k, m) = bu.transpose();
  Vector rhs = Vector::Zero(m + k);
  rhs.head(m) = -l;
  Vector x = saddle.fullPivLu().solve(rhs);
  EXPECT_LE((s.test_part - x.head(m)).norm(), 1e-10 * x.norm());
  EXPECT_LE((s.trial_part - u * x.tail(k)).norm(), 1e-10 * x.norm());
}

TEST(IdealizedPrimal, SingularRestrictedStiffnessThrows) {
  Matrix b = Matrix::Zero(3, 2);
  b(0, 0) = 1;
  EXPECT_THROW(solve_idealized_primal(OperatorMatrix(b), GramMatrix(Matrix::Identity(3, 3)), FunctionalVec(vec({1, 1, 1})),
                                      SubspaceBasis::full(2)),
               NumericalError);
}

TEST(IdealizedDual, ZeroGoal) {
  Rng rng(18);
  Matrix b = rng.matrix(6, 4);
  const auto s = solve_idealized_dual(OperatorMatrix(b), GramMatrix(random_spd(rng, 6)), FunctionalVec(Vector::Zero(4)),
                                      SubspaceBasis::full(4));
  EXPECT_EQ(s.trial_part.norm(), 0.0);
  EXPECT_EQ(s.test_part.norm(), 0.0);
}

TEST(IdealizedDual, SquareInvertibleOperator) {
  Rng rng(19);
  Matrix b = rng.matrix(5, 5) + 5 * Matrix::Identity(5, 5);
  Vector goal = rng.vector(5);
  const auto s = solve_idealized_dual(OperatorMatrix(b), GramMatrix(Matrix::Identity(5, 5)), FunctionalVec(goal),
                                      SubspaceBasis::full(5));
  Vector ref = b.transpose().fullPivLu().solve(goal);
  EXPECT_LE((s.test_part - ref).norm(), 1e-10 * ref.norm());
}

TEST(IdealizedDual, GalerkinOrthogonality) {
  Rng rng(20);
  const Index m = 15, n = 9, k = 4;
  Matrix b = rng.matrix(m, n);
  Matrix g = random_spd(rng, m);
  Vector goal = rng.vector(n);
  Matrix u = rng.matrix(n, k);
  const auto sub = solve_idealized_dual(OperatorMatrix(b), GramMatrix(g), FunctionalVec(goal), SubspaceBasis(u));
  const auto full = solve_idealized_dual(OperatorMatrix(b), GramMatrix(g), FunctionalVec(goal), SubspaceBasis::full(n));
  // v* solves B^T v = goal in the optimal-test range.
  EXPECT_LE((b.transpose() * full.test_part - goal).norm(), 1e-10 * goal.norm());
  Vector orth = (b * u).transpose() * (full.test_part - sub.test_part);
  EXPECT_LE(orth.norm(), 1e-10 * goal.norm() * b.norm());
}

TEST(QoiDuality, FullSpacesGiveZeroErrors) {
  Rng rng(21);
  auto inst = random_duality_instance(rng, 10, 6, 6, 10);
  const auto s = qoi_duality_sides(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load),
                                   FunctionalVec(inst.goal), SubspaceBasis::full(6), SubspaceBasis::full(10));
  EXPECT_LE(std::abs(s.qoi_error), 1e-10 * s.scale);
  EXPECT_LE(std::abs(s.load_error), 1e-10 * s.scale);
}

TEST(QoiDuality, ZeroGoal) {
  Rng rng(22);
  auto inst = random_duality_instance(rng, 10, 6, 3, 7);
  const auto s = qoi_duality_sides(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load),
                                   FunctionalVec(Vector::Zero(6)), SubspaceBasis(inst.trial), SubspaceBasis(inst.test));
  EXPECT_LE(std::abs(s.qoi_error), 1e-12);
  EXPECT_LE(std::abs(s.load_error), 1e-12);
}

TEST(QoiDuality, EnrichedTestSpaceOracle) {
  Rng rng(23);
  const Index m = 30, n = 18, k = 6, r = 12;
  auto inst = random_duality_instance(rng, m, n, k, r);
  const auto s = qoi_duality_sides(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load),
                                   FunctionalVec(inst.goal), SubspaceBasis(inst.trial), SubspaceBasis(inst.test));
  // Oracle: u* from least squares on the consistent system, v* from the full-space dual, discrete
  // pair from the restricted normal equations, each solved with a different factorization.
  const Matrix& B = inst.b;
  const Matrix& G = inst.gram;
  Matrix Ginv = G.fullPivLu().inverse();
  Vector ustar = (B.transpose() * Ginv * B).fullPivLu().solve(B.transpose() * Ginv * inst.load);
  Vector vstar = Ginv * B * (B.transpose() * Ginv * B).fullPivLu().solve(inst.goal);
  const Matrix& V = inst.test;
  const Matrix& U = inst.trial;
  Matrix Gr = V.transpose() * G * V;
  Matrix Br = V.transpose() * B * U;
  Matrix A = Br.transpose() * Gr.fullPivLu().solve(Br);
  Vector uh = U * A.fullPivLu().solve(Br.transpose() * Gr.fullPivLu().solve(V.transpose() * inst.load));
  Vector vh = V * Gr.fullPivLu().solve(Br * A.fullPivLu().solve(U.transpose() * inst.goal));
  EXPECT_NEAR(s.qoi_error, inst.goal.dot(ustar - uh), 1e-9 * s.scale);
  EXPECT_NEAR(s.load_error, inst.load.dot(vstar - vh), 1e-9 * s.scale);
  EXPECT_LE(s.gap(), 1e-10 * s.scale);
}

TEST(QoiDuality, NonInjectiveOperatorThrows) {
  Matrix b = Matrix::Zero(4, 2);
  b(0, 0) = 1;
  b(1, 0) = 1;
  EXPECT_THROW(qoi_duality_gap(OperatorMatrix(b), GramMatrix(Matrix::Identity(4, 4)), FunctionalVec(vec({1, 1, 0, 0})),
                               FunctionalVec(vec({1, 0})), SubspaceBasis::full(2), SubspaceBasis::full(4)),
               NumericalError);
}

TEST(QoiErrorBound, ExactSolvesGiveZeroLhs) {
  Rng rng(24);
  auto inst = random_duality_instance(rng, 9, 5, 5, 9);
  const auto b = qoi_error_bound_check(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load),
                                       FunctionalVec(inst.goal), SubspaceBasis::full(5), SubspaceBasis::full(9));
  EXPECT_LE(b.lhs, 1e-10);
  EXPECT_LE(b.lhs, b.rhs + 1e-10);
}

TEST(QoiErrorBound, IsometryHasUnitConstants) {
  Rng rng(25);
  Matrix q = rng.matrix(6, 6).householderQr().householderQ();
  const auto c = inf_sup_constants(OperatorMatrix(q), GramMatrix(Matrix::Identity(6, 6)));
  EXPECT_NEAR(c.gamma, 1.0, 1e-12);
  EXPECT_NEAR(c.continuity, 1.0, 1e-12);
  Vector load = rng.vector(6), goal = rng.vector(6);
  Matrix u = rng.matrix(6, 2);
  Matrix v = rng.matrix(6, 4);
  const auto b = qoi_error_bound_check(OperatorMatrix(q), GramMatrix(Matrix::Identity(6, 6)), FunctionalVec(load),
                                       FunctionalVec(goal), SubspaceBasis(u), SubspaceBasis(v));
  const auto p = solve_practical_primal(OperatorMatrix(q), GramMatrix(Matrix::Identity(6, 6)), FunctionalVec(load),
                                        SubspaceBasis(u), SubspaceBasis(v));
  const auto d = solve_practical_dual(OperatorMatrix(q), GramMatrix(Matrix::Identity(6, 6)), FunctionalVec(goal),
                                      SubspaceBasis(u), SubspaceBasis(v));
  const double product = (q * p.trial_part - load).norm() * (q.transpose() * d.test_part - goal).norm();
  EXPECT_NEAR(b.rhs, product, 1e-12 * product);
  EXPECT_LE(b.lhs, b.rhs * (1 + 1e-9));
}

TEST(QoiErrorBound, DegenerateOperatorThrows) {
  Matrix b = Matrix::Zero(3, 2);
  b(0, 0) = 1;
  EXPECT_THROW(qoi_error_bound_check(OperatorMatrix(b), GramMatrix(Matrix::Identity(3, 3)), FunctionalVec(vec({1, 0, 0})),
                                     FunctionalVec(vec({1, 1})), SubspaceBasis::full(2), SubspaceBasis::full(3)),
               NumericalError);
}

TEST(Projection, OrthogonalProjection) {
  Matrix p = Matrix::Zero(3, 3);
  p(0, 0) = p(1, 1) = 1;
  const auto r = projection_identities(OperatorMatrix(p), GramMatrix(Matrix::Identity(3, 3)));
  EXPECT_NEAR(r.norm_p, 1.0, 1e-12);
  EXPECT_NEAR(r.norm_complement, 1.0, 1e-12);
  EXPECT_NEAR(r.norm_p_minus_orth, 0.0, 1e-12);
}

TEST(Projection, TwoDimensionalOblique) {
  // Onto span{(1,0)} along span{(1,1)}: x -> (x0 - x1, 0).
  Matrix p(2, 2);
  p << 1, -1, 0, 0;
  const auto r = projection_identities(OperatorMatrix(p), GramMatrix(Matrix::Identity(2, 2)));
  EXPECT_NEAR(r.norm_p, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(r.norm_complement, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(r.norm_p_minus_orth * r.norm_p_minus_orth, 1.0, 1e-12);
}

TEST(Projection, RandomObliqueIdentities) {
  Rng rng(26);
  for (Index n : {5, 10, 40})
    for (int s = 0; s < 10; ++s) {
      Matrix g = random_spd(rng, n);
      Matrix p = random_oblique_projection(rng, n);
      const auto r = projection_identities(OperatorMatrix(p), GramMatrix(g));
      // Oracle: norms from the SVD of L^T P L^{-T} with G = L L^T.
      Eigen::LLT<Matrix> llt(g);
      Matrix lt = llt.matrixU();
      Matrix cong = lt * p * lt.inverse();
      const double np = Eigen::JacobiSVD<Matrix>(cong).singularValues()(0);
      EXPECT_NEAR(r.norm_p, np, 1e-8 * np);
      EXPECT_NEAR(r.norm_p, r.norm_complement, 1e-8 * np);
      EXPECT_NEAR(r.norm_p_minus_orth * r.norm_p_minus_orth + 1, np * np, 1e-8 * np * np);
    }
}

TEST(Projection, NonIdempotentThrows) {
  Matrix p = 0.5 * Matrix::Identity(3, 3);
  EXPECT_THROW(projection_identities(OperatorMatrix(p), GramMatrix(Matrix::Identity(3, 3))), AssumptionError);
}

TEST(EnergyIdentity, FullTestSpaceHasNoRemainder) {
  Rng rng(27);
  auto inst = random_duality_instance(rng, 12, 7, 3, 12);
  Vector uh = inst.trial * rng.vector(3);
  const auto e = energy_residual_identity(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load), uh,
                                          SubspaceBasis::full(12));
  EXPECT_LE(e.remainder_sq, 1e-10 * e.full_sq);
  EXPECT_NEAR(e.psi_sq, e.full_sq, 1e-10 * e.full_sq);
}

TEST(EnergyIdentity, ExactSolutionGivesZeros) {
  Rng rng(28);
  auto inst = random_duality_instance(rng, 12, 7, 3, 8);
  const auto e = energy_residual_identity(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load),
                                          inst.u_true, SubspaceBasis(inst.test));
  const double scale = inst.load.squaredNorm();
  EXPECT_LE(e.full_sq, 1e-20 * scale);
  EXPECT_LE(e.remainder_sq, 1e-20 * scale);
  EXPECT_LE(e.psi_sq, 1e-20 * scale);
}

TEST(EnergyIdentity, RandomAdditivity) {
  Rng rng(29);
  for (int s = 0; s < 20; ++s) {
    auto inst = random_duality_instance(rng, 14, 8, 4, 9);
    Vector uh = inst.trial * rng.vector(4);
    const auto e = energy_residual_identity(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load), uh,
                                            SubspaceBasis(inst.test));
    // Oracle: dense dual norms with an LU inverse.
    Matrix ginv = inst.gram.fullPivLu().inverse();
    Vector err = inst.b * (inst.u_true - uh);
    EXPECT_NEAR(e.full_sq, err.dot(ginv * err), 1e-10 * e.full_sq);
    EXPECT_NEAR(e.full_sq, e.remainder_sq + e.psi_sq, 1e-10 * e.full_sq);
  }
}

TEST(Reliability, OrthogonalFortinReducesToPlainBound) {
  Rng rng(30);
  const Index m = 12, n = 7, k = 3;
  auto inst = random_duality_instance(rng, m, n, k, m);
  // Gram-orthogonal projection onto the full space is the identity: osc = 0, |Pi| = 1.
  Vector uh = inst.trial * rng.vector(k);
  const auto r = reliability_report(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load), uh,
                                    OperatorMatrix(Matrix::Identity(m, m)), SubspaceBasis(inst.trial));
  EXPECT_NEAR(r.fortin_norm, 1.0, 1e-10);
  EXPECT_LE(r.osc, 1e-10 * r.eta);
  EXPECT_LE(r.gamma * r.error_norm, r.eta * (1 + 1e-9));
}

TEST(Reliability, ExactSolution) {
  Rng rng(31);
  auto inst = random_duality_instance(rng, 12, 7, 3, 8);
  // u_h = u* lies in the trial span only when the trial space is everything.
  Matrix full = Matrix::Identity(7, 7);
  Matrix pi_full = fortin_projection(rng, inst.b, inst.gram, full, 0);
  const auto r = reliability_report(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load),
                                    inst.u_true, OperatorMatrix(pi_full), SubspaceBasis(full));
  EXPECT_LE(r.eta, 1e-10 * inst.load.norm());
  EXPECT_LE(r.lhs, 1e-18 * inst.load.squaredNorm());
}

TEST(Reliability, RandomFortinInequalities) {
  Rng rng(32);
  for (int s = 0; s < 30; ++s) {
    const Index n = rng.integer(3, 10), m = n + rng.integer(2, 8), k = rng.integer(1, int(n) - 1);
    auto inst = random_duality_instance(rng, m, n, k, m);
    Matrix pi = fortin_projection(rng, inst.b, inst.gram, inst.trial, rng.integer(0, int(m - k - 1)));
    Vector uh = inst.trial * rng.vector(k);
    const auto r = reliability_report(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load), uh,
                                      OperatorMatrix(pi), SubspaceBasis(inst.trial));
    EXPECT_LE(r.lhs, r.rhs * (1 + 1e-9));
    EXPECT_LE(r.efficiency_lhs, r.efficiency_rhs * (1 + 1e-9));
    EXPECT_LE(r.osc_lhs, r.osc_rhs * (1 + 1e-9));
  }
}

TEST(Reliability, NonFortinProjectionRejected) {
  Rng rng(33);
  auto inst = random_duality_instance(rng, 10, 6, 3, 10);
  Matrix p = random_oblique_projection(rng, 10);
  Vector uh = inst.trial * rng.vector(3);
  EXPECT_THROW(reliability_report(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load), uh,
                                  OperatorMatrix(p), SubspaceBasis(inst.trial)),
               AssumptionError);
}

TEST(RandomInstances, SeedReproducible) {
  Rng a(99), b(99);
  auto x = random_duality_instance(a, 10, 6, 3, 7);
  auto y = random_duality_instance(b, 10, 6, 3, 7);
  EXPECT_EQ(x.b, y.b);
  EXPECT_EQ(x.gram, y.gram);
  EXPECT_EQ(x.load, y.load);
}
