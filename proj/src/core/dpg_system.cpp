#include "dpg/core/dpg_system.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>

#include "dpg/error.hpp"

namespace dpg::core {

using fe::QuadratureRule;
using fe::QuadratureRule1D;
using mesh::Element;
using mesh::Side;

namespace {

std::atomic<long> g_dual_solves{0};

// Basis values at reference quadrature points.
struct RefTables {
  QuadratureRule vol;
  QuadratureRule1D edge;
  Matrix tv, tdx, tdy;          // test scalar basis at volume points (nq x n)
  Matrix fv;                    // trial field basis at volume points (nq x m)
  std::array<Matrix, 4> side_tv;  // test basis at edge points of each side (ne x n)
  Matrix uhat_v, sighat_v;      // edge trace bases at edge points

  RefTables(const fe::TestSpace& test, const fe::TrialSpace* trial) {
    const int npts = test.order() + 2;
    vol = fe::tensor_gauss(npts);
    edge = fe::gauss_legendre(npts);
    const int n = test.scalar_size();
    const int nq = static_cast<int>(vol.points.size());
    tv.resize(nq, n);
    tdx.resize(nq, n);
    tdy.resize(nq, n);
    std::vector<double> a(n), b(n), c(n);
    for (int q = 0; q < nq; ++q) {
      test.basis().eval(vol.points[q][0], vol.points[q][1], a.data(), b.data(), c.data());
      for (int i = 0; i < n; ++i) {
        tv(q, i) = a[i];
        tdx(q, i) = b[i];
        tdy(q, i) = c[i];
      }
    }
    const int ne = static_cast<int>(edge.points.size());
    for (int s = 0; s < 4; ++s) {
      side_tv[s].resize(ne, n);
      for (int q = 0; q < ne; ++q) {
        auto r = fe::side_reference_point(static_cast<Side>(s), edge.points[q]);
        test.basis().eval(r[0], r[1], a.data(), b.data(), c.data());
        for (int i = 0; i < n; ++i) side_tv[s](q, i) = a[i];
      }
    }
    if (trial) {
      const int m = trial->field_size();
      const int p = trial->p();
      fv.resize(nq, m);
      std::vector<double> fa(m), fb(m), fc(m);
      for (int q = 0; q < nq; ++q) {
        trial->field_basis().eval(vol.points[q][0], vol.points[q][1], fa.data(), fb.data(), fc.data());
        for (int i = 0; i < m; ++i) fv(q, i) = fa[i];
      }
      uhat_v.resize(ne, p + 1);
      sighat_v.resize(ne, p);
      std::vector<double> d(p + 1);
      std::vector<double> lv(p + 1), pv(p);
      for (int q = 0; q < ne; ++q) {
        trial->uhat_basis().eval(edge.points[q], lv.data(), d.data());
        trial->sighat_basis().eval(edge.points[q], pv.data(), d.data());
        for (int i = 0; i <= p; ++i) uhat_v(q, i) = lv[i];
        for (int j = 0; j < p; ++j) sighat_v(q, j) = pv[j];
      }
    }
  }
};

Matrix gram_from_tables(const RefTables& t, double hx, double hy, double alpha) {
  const int n = static_cast<int>(t.tv.cols());
  const int nq = static_cast<int>(t.tv.rows());
  const double sx = 2.0 / hx, sy = 2.0 / hy, jac = 0.25 * hx * hy;
  Matrix f = Matrix::Zero(6 * nq, 3 * n);
  for (int q = 0; q < nq; ++q) {
    const double sw = std::sqrt(t.vol.weights[q] * jac);
    for (int i = 0; i < n; ++i) {
      const double v = t.tv(q, i) * sw, dx = t.tdx(q, i) * sx * sw, dy = t.tdy(q, i) * sy * sw;
      // div tau
      f(6 * q, n + i) = dx;
      f(6 * q, 2 * n + i) = dy;
      // tau + grad v
      f(6 * q + 1, i) = dx;
      f(6 * q + 1, n + i) = v;
      f(6 * q + 2, i) = dy;
      f(6 * q + 2, 2 * n + i) = v;
      // alpha (v, tau)
      f(6 * q + 3, i) = alpha * v;
      f(6 * q + 4, n + i) = alpha * v;
      f(6 * q + 5, 2 * n + i) = alpha * v;
    }
  }
  Matrix g = f.transpose() * f;
  return 0.5 * (g + g.transpose());
}

// b with every sigma-hat column taken along the element's outward normal.
Matrix b_from_tables(const RefTables& t, const fe::TrialSpace& trial, double hx, double hy) {
  const int n = static_cast<int>(t.tv.cols());
  const int m = trial.field_size();
  const int p = trial.p();
  const int nq = static_cast<int>(t.tv.rows());
  const double sx = 2.0 / hx, sy = 2.0 / hy, jac = 0.25 * hx * hy;
  Matrix b = Matrix::Zero(3 * n, trial.local_dim());

  Vector w(nq);
  for (int q = 0; q < nq; ++q) w(q) = t.vol.weights[q] * jac;
  const Matrix wf = w.asDiagonal() * t.fv;
  const Matrix dxt = (t.tdx * sx).transpose();
  const Matrix dyt = (t.tdy * sy).transpose();
  const Matrix vt = t.tv.transpose();
  // (u, div tau)
  b.block(n, 0, n, m) = dxt * wf;
  b.block(2 * n, 0, n, m) = dyt * wf;
  // (sigma, tau + grad v)
  b.block(0, m, n, m) = dxt * wf;
  b.block(n, m, n, m) = vt * wf;
  b.block(0, 2 * m, n, m) = dyt * wf;
  b.block(2 * n, 2 * m, n, m) = vt * wf;

  const int ne = static_cast<int>(t.edge.points.size());
  for (int s = 0; s < 4; ++s) {
    const Side side = static_cast<Side>(s);
    const mesh::Point nrm = mesh::outward_normal(side);
    const double len = (side == Side::bottom || side == Side::top) ? hx : hy;
    const std::vector<int> locs = trial.side_uhat_locals(side);
    for (int q = 0; q < ne; ++q) {
      const double ws = t.edge.weights[q] * 0.5 * len;
      for (int a = 0; a < n; ++a) {
        const double tva = t.side_tv[s](q, a) * ws;
        // -<u-hat, tau . n>
        for (int i = 0; i <= p; ++i) {
          const double l = t.uhat_v(q, i) * tva;
          b(n + a, locs[i]) -= l * nrm.x;
          b(2 * n + a, locs[i]) -= l * nrm.y;
        }
        // -<sigma-hat, v>
        for (int j = 0; j < p; ++j) b(a, trial.local_sighat(side, j)) -= t.sighat_v(q, j) * tva;
      }
    }
  }
  return b;
}

void apply_sighat_signs(Matrix& b, int k, const fe::TrialSpace& trial) {
  const auto& msh = trial.mesh();
  const Element& el = msh.elements()[k];
  for (int s = 0; s < 4; ++s) {
    const mesh::Point on = mesh::outward_normal(static_cast<Side>(s));
    const mesh::Point& en = msh.edges()[el.edge_ids[s]].normal;
    if (on.x * en.x + on.y * en.y < 0)
      for (int j = 0; j < trial.p(); ++j) b.col(trial.local_sighat(static_cast<Side>(s), j)) *= -1.0;
  }
}

Vector load_from_tables(const RefTables& t, const Element& el, const SourceFn& source) {
  const int n = static_cast<int>(t.tv.cols());
  Vector l = Vector::Zero(3 * n);
  if (!source) return l;
  const double jac = 0.25 * el.box.area();
  for (std::size_t q = 0; q < t.vol.points.size(); ++q) {
    mesh::Point x = fe::to_physical(el.box, t.vol.points[q][0], t.vol.points[q][1]);
    const double fw = source(x.x, x.y) * t.vol.weights[q] * jac;
    if (fw == 0) continue;
    l.head(n) += fw * t.tv.row(q).transpose();
  }
  return l;
}

void check_same(const Discretization& a, const Discretization& b) {
  if (a.mesh != b.mesh || a.trial != b.trial || a.test != b.test || a.alpha != b.alpha)
    throw NumericalError("dual solve requested on a mesh or space different from the factorized system");
}

Vector gather(const std::vector<int>& idx, const Vector& global) {
  Vector g(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) g(i) = global(idx[i]);
  return g;
}

}  // namespace

struct ElementOperators::Impl {
  const fe::TrialSpace& trial;
  RefTables tables;
};

ElementOperators::ElementOperators(const fe::TrialSpace& trial, const fe::TestSpace& test)
    : impl_(std::make_unique<Impl>(Impl{trial, RefTables(test, &trial)})) {}

ElementOperators::~ElementOperators() = default;

Matrix ElementOperators::gram(double hx, double hy, double alpha) const {
  return gram_from_tables(impl_->tables, hx, hy, alpha);
}

Matrix ElementOperators::b_outward(double hx, double hy) const {
  return b_from_tables(impl_->tables, impl_->trial, hx, hy);
}

class StiffnessSolver {
 public:
  StiffnessSolver(const SparseMatrix& a, const SolverOptions& opt) : kind_(opt.kind) {
    if (kind_ == SolverOptions::Kind::cholesky) {
      llt_.compute(a);
      if (llt_.info() != Eigen::Success)
        throw NumericalError("sparse Cholesky of the global stiffness failed (inf-sup loss or assembly error)");
    } else {
      cg_.setTolerance(opt.cg_tolerance);
      cg_.setMaxIterations(opt.cg_max_iterations);
      cg_.compute(a);
    }
  }

  Vector solve(const Vector& rhs) const {
    if (kind_ == SolverOptions::Kind::cholesky) return llt_.solve(rhs);
    Vector x = cg_.solve(rhs);
    if (cg_.info() != Eigen::Success) throw NumericalError("conjugate gradients did not converge");
    return x;
  }

 private:
  SolverOptions::Kind kind_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg_;
};

Vector GlobalSystem::solve(const Vector& rhs) const { return solver->solve(rhs); }

Matrix local_gram(const Element& el, const fe::TestSpace& test, double alpha) {
  if (!(alpha > 0)) throw ConfigError("graph-norm parameter alpha must be positive");
  RefTables t(test, nullptr);
  return gram_from_tables(t, el.box.width(), el.box.height(), alpha);
}

Matrix local_b(int k, const fe::TrialSpace& trial, const fe::TestSpace& test) {
  RefTables t(test, &trial);
  const Element& el = trial.mesh().elements().at(k);
  Matrix b = b_from_tables(t, trial, el.box.width(), el.box.height());
  apply_sighat_signs(b, k, trial);
  return b;
}

Vector local_load(const Element& el, const fe::TestSpace& test, const SourceFn& source) {
  RefTables t(test, nullptr);
  return load_from_tables(t, el, source);
}

LocalSystem assemble_local(int k, const Discretization& disc, const SourceFn& source) {
  const Element& el = disc.mesh->elements().at(k);
  LocalSystem ls;
  ls.gram = local_gram(el, *disc.test, disc.alpha);
  ls.b_local = local_b(k, *disc.trial, *disc.test);
  ls.load_local = local_load(el, *disc.test, source);
  ls.gram_chol.compute(ls.gram);
  if (ls.gram_chol.info() != Eigen::Success)
    throw NumericalError("element Gram matrix is not positive definite on element " + std::to_string(k));
  return ls;
}

CondensedElement condense_element(const LocalSystem& local) {
  Matrix x = local.gram_chol.matrixL().solve(local.b_local);
  Vector y = local.gram_chol.matrixL().solve(local.load_local);
  CondensedElement c;
  c.stiffness = x.transpose() * x;
  c.rhs = x.transpose() * y;
  return c;
}

std::shared_ptr<const GlobalSystem> assemble_global(const Discretization& disc, const SourceFn& source,
                                                    const SolverOptions& options) {
  if (!(disc.alpha > 0)) throw ConfigError("graph-norm parameter alpha must be positive");
  const auto& trial = *disc.trial;
  const auto& msh = *disc.mesh;
  if (&trial.mesh() != &msh || &disc.test->mesh() != &msh)
    throw NumericalError("trial and test spaces are not built on the same mesh");
  RefTables t(*disc.test, &trial);

  auto sys = std::make_shared<GlobalSystem>();
  sys->disc = disc;
  const int ndof = trial.num_dofs();
  sys->primal_rhs = Vector::Zero(ndof);
  sys->elements.resize(msh.num_elements());

  std::map<std::pair<double, double>, std::pair<std::shared_ptr<const GramBlock>, Matrix>> cache;
  std::vector<Eigen::Triplet<double>> trip;
  std::size_t est = 0;
  for (int k = 0; k < msh.num_elements(); ++k) est += trial.fold(k).global_dofs.size() * trial.fold(k).global_dofs.size();
  trip.reserve(est);

  for (int k = 0; k < msh.num_elements(); ++k) {
    const Element& el = msh.elements()[k];
    const auto key = std::make_pair(el.box.width(), el.box.height());
    auto it = cache.find(key);
    if (it == cache.end()) {
      auto gb = std::make_shared<GramBlock>();
      gb->gram = gram_from_tables(t, key.first, key.second, disc.alpha);
      gb->chol.compute(gb->gram);
      if (gb->chol.info() != Eigen::Success)
        throw NumericalError("element Gram matrix is not positive definite on element " + std::to_string(k));
      it = cache.emplace(key, std::make_pair(std::shared_ptr<const GramBlock>(gb),
                                             b_from_tables(t, trial, key.first, key.second)))
               .first;
    }
    Matrix b = it->second.second;
    apply_sighat_signs(b, k, trial);
    const fe::ElementFold& fold = trial.fold(k);
    ElementData& ed = sys->elements[k];
    ed.gram = it->second.first;
    ed.b_folded = b * fold.c;
    ed.load_eff = load_from_tables(t, el, source);
    if (fold.offset.squaredNorm() > 0) ed.load_eff -= b * fold.offset;

    const auto& l = ed.gram->chol.matrixL();
    Matrix x = l.solve(ed.b_folded);
    Vector y = l.solve(ed.load_eff);
    Matrix ak = x.transpose() * x;
    Vector fk = x.transpose() * y;
    sys->load_norm_sq += y.squaredNorm();
    const auto& g = fold.global_dofs;
    for (std::size_t i = 0; i < g.size(); ++i) {
      sys->primal_rhs(g[i]) += fk(i);
      for (std::size_t j = 0; j < g.size(); ++j) trip.emplace_back(g[i], g[j], ak(i, j));
    }
  }
  sys->stiffness.resize(ndof, ndof);
  sys->stiffness.setFromTriplets(trip.begin(), trip.end());
  trip.clear();
  trip.shrink_to_fit();
  sys->solver = std::make_shared<const StiffnessSolver>(sys->stiffness, options);
  return sys;
}

SolveState solve_primal(std::shared_ptr<const GlobalSystem> system) {
  SolveState st;
  st.disc = system->disc;
  st.system = system;
  st.alpha = system->disc.alpha;
  st.dof_count = system->disc.trial->num_dofs();
  st.u_coeffs = system->solve(system->primal_rhs);
  const auto& trial = *system->disc.trial;
  st.psi_coeffs.resize(system->elements.size());
  for (std::size_t k = 0; k < system->elements.size(); ++k) {
    const ElementData& ed = system->elements[k];
    Vector r = ed.b_folded * gather(trial.fold(static_cast<int>(k)).global_dofs, st.u_coeffs) - ed.load_eff;
    st.psi_coeffs[k] = ed.gram->chol.solve(r);
  }
  return st;
}

SolveState solve_primal(const Discretization& disc, const SourceFn& source, const SolverOptions& options) {
  return solve_primal(assemble_global(disc, source, options));
}

SolveState solve_dual(const Discretization& disc, const Vector& goal_rhs, const SolveState& primal) {
  if (!primal.system) throw NumericalError("dual solve needs a factorized primal system");
  check_same(disc, primal.system->disc);
  const auto& trial = *disc.trial;
  if (goal_rhs.size() != trial.num_dofs())
    throw DimensionError("goal vector has length " + std::to_string(goal_rhs.size()) + ", expected " +
                         std::to_string(trial.num_dofs()));
  ++g_dual_solves;
  SolveState st = primal;
  st.dual_rhs = goal_rhs;
  st.omega_coeffs = primal.system->solve(goal_rhs);
  st.v_coeffs.resize(primal.system->elements.size());
  for (std::size_t k = 0; k < primal.system->elements.size(); ++k) {
    const ElementData& ed = primal.system->elements[k];
    st.v_coeffs[k] =
        ed.gram->chol.solve(ed.b_folded * gather(trial.fold(static_cast<int>(k)).global_dofs, st.omega_coeffs));
  }
  st.has_dual = true;
  return st;
}

long dual_solve_count() { return g_dual_solves.load(); }

DenseSystem extract_dense_system(const GlobalSystem& system) {
  const auto& trial = *system.disc.trial;
  const int nt = system.disc.test->local_dim();
  const int ne = static_cast<int>(system.elements.size());
  DenseSystem d;
  d.b = Matrix::Zero(nt * ne, trial.num_dofs());
  d.gram = Matrix::Zero(nt * ne, nt * ne);
  d.load = Vector::Zero(nt * ne);
  for (int k = 0; k < ne; ++k) {
    const ElementData& ed = system.elements[k];
    const auto& g = trial.fold(k).global_dofs;
    for (std::size_t j = 0; j < g.size(); ++j) d.b.block(k * nt, g[j], nt, 1) += ed.b_folded.col(j);
    d.gram.block(k * nt, k * nt, nt, nt) = ed.gram->gram;
    d.load.segment(k * nt, nt) = ed.load_eff;
  }
  return d;
}

void write_matrix_market(const SparseMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << " " << a.cols() << " " << a.nonZeros() << "\n";
  out << std::setprecision(17);
  for (int c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

}  // namespace dpg::core
