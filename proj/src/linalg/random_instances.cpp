#include "dpg/linalg/random_instances.hpp"

namespace dpg::linalg {

Matrix Rng::matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

Vector Rng::vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Matrix random_spd(Rng& rng, Index n, bool symmetrize) {
  Matrix a = rng.matrix(n, n);
  Matrix g = a * a.transpose() / double(n) + 0.5 * Matrix::Identity(n, n) + 0.01 * rng.matrix(n, n);
  if (symmetrize) g = 0.5 * (g + g.transpose()).eval();
  Vector d(n);
  for (Index i = 0; i < n; ++i) d(i) = rng.uniform(0.5, 2.0);
  return d.asDiagonal() * g * d.asDiagonal();
}

Matrix random_oblique_projection(Rng& rng, Index n) {
  const Index r = rng.integer(1, int(n) - 1);
  Matrix t = rng.matrix(n, n);
  Matrix sel = Matrix::Zero(n, n);
  sel.topLeftCorner(r, r).setIdentity();
  return t * sel * t.inverse();
}

Matrix fortin_projection(Rng& rng, const Matrix& b, const Matrix& gram, const Matrix& trial, Index extra) {
  const Index m = b.rows();
  Matrix bu = b * trial;
  const Index k = bu.cols();
  Matrix range(m, k + extra);
  range.leftCols(k) = gram.llt().solve(bu);
  range.rightCols(extra) = rng.matrix(m, extra);
  Matrix z = null_space(bu.transpose());
  Matrix complement = z * rng.matrix(z.cols(), m - k - extra);
  Matrix t(m, m);
  t << range, complement;
  Matrix sel = Matrix::Zero(m, m);
  sel.topLeftCorner(k + extra, k + extra).setIdentity();
  return t * sel * t.inverse();
}

DualityInstance random_duality_instance(Rng& rng, Index m, Index n, Index k, Index r, bool symmetrize) {
  DualityInstance inst;
  inst.b = rng.matrix(m, n);
  inst.gram = random_spd(rng, m, symmetrize);
  inst.u_true = rng.vector(n);
  inst.load = inst.b * inst.u_true;
  inst.goal = rng.vector(n);
  inst.trial = rng.matrix(n, k);
  inst.test = rng.matrix(m, r);
  return inst;
}

}  // namespace dpg::linalg
