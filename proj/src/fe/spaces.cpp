#include "dpg/fe/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dpg/error.hpp"

namespace dpg::fe {

using mesh::Edge;
using mesh::EdgeSide;
using mesh::Element;
using mesh::Point;
using mesh::Side;

Basis1D::Basis1D(Family family, int order) : family_(family), order_(order) {
  if (order < 0) throw ConfigError("basis order must be nonnegative");
  if (family == Family::lagrange_gll) {
    if (order == 0)
      nodes_ = {0.0};
    else
      nodes_ = gauss_lobatto_nodes(order + 1);
  }
}

void Basis1D::eval(double x, double* values, double* derivs) const {
  if (family_ == Family::legendre)
    legendre(order_, x, values, derivs);
  else
    lagrange(nodes_, x, values, derivs);
}

void TensorBasis::eval(double xi, double eta, double* values, double* dxi, double* deta) const {
  const int n = b_.size();
  double vx[32], dx[32], vy[32], dy[32];
  b_.eval(xi, vx, dx);
  b_.eval(eta, vy, dy);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int idx = i + n * j;
      values[idx] = vx[i] * vy[j];
      dxi[idx] = dx[i] * vy[j];
      deta[idx] = vx[i] * dy[j];
    }
}

std::array<double, 2> side_reference_point(Side s, double t) {
  switch (s) {
    case Side::bottom: return {t, -1.0};
    case Side::right: return {1.0, t};
    case Side::top: return {t, 1.0};
    case Side::left: return {-1.0, t};
  }
  return {0, 0};
}

Point to_physical(const mesh::Rect& box, double xi, double eta) {
  return {box.x0 + 0.5 * (xi + 1) * box.width(), box.y0 + 0.5 * (eta + 1) * box.height()};
}

const Constraint* DofMap::find_uhat_constraint(int node) const {
  for (const auto& c : uhat_constraints)
    if (c.slave == node) return &c;
  return nullptr;
}

namespace {

void add_term(Expansion& e, int dof, double w) {
  for (auto& t : e.terms)
    if (t.first == dof) {
      t.second += w;
      return;
    }
  e.terms.emplace_back(dof, w);
}

// Resolve node expansions through (possibly chained) constraints.
class Resolver {
 public:
  Resolver(std::vector<NodeKind>& kind, std::vector<Expansion>& exp, const std::vector<Constraint>& cons)
      : kind_(kind), exp_(exp), state_(kind.size(), 0) {
    for (std::size_t i = 0; i < cons.size(); ++i) slave_index_[cons[i].slave] = &cons[i];
  }

  const Expansion& resolve(int node) {
    if (state_[node] == 2) return exp_[node];
    if (state_[node] == 1) throw NumericalError("cyclic hanging-node constraints");
    state_[node] = 1;
    if (kind_[node] == NodeKind::slave) {
      Expansion out;
      for (const auto& [m, w] : slave_index_.at(node)->masters) {
        const Expansion& me = resolve(m);
        for (const auto& [d, mw] : me.terms) add_term(out, d, w * mw);
        out.constant += w * me.constant;
      }
      exp_[node] = std::move(out);
    }
    state_[node] = 2;
    return exp_[node];
  }

 private:
  std::vector<NodeKind>& kind_;
  std::vector<Expansion>& exp_;
  std::vector<char> state_;
  std::map<int, const Constraint*> slave_index_;
};

constexpr double kDropWeight = 1e-15;

}  // namespace

TrialSpace::TrialSpace(std::shared_ptr<const mesh::QuadMesh> m, int p, const BoundaryData& data)
    : mesh_(std::move(m)),
      p_(p),
      field_(Family::lagrange_gll, p),
      uhat_(Family::lagrange_gll, p),
      sighat_(Family::legendre, p - 1) {
  if (p < 1) throw ConfigError("trial order p must be at least 1");
  if (p > 12) throw ConfigError("trial order p above 12 is not supported");
  for (const auto& e : mesh_->edges())
    if (e.active() && e.boundary && e.side == EdgeSide::interior)
      throw ConfigError("boundary edge without a boundary classification");
  num_vertices_ = static_cast<int>(mesh_->vertices().size());
  num_field_ = 3 * mesh_->num_elements() * field_size();
  build_dofs(data);
  build_folds();
}

std::vector<int> TrialSpace::side_uhat_locals(Side s) const {
  // Corners: 0 SW, 1 SE, 2 NE, 3 NW.
  static constexpr int first[4] = {0, 1, 3, 0};
  static constexpr int last[4] = {1, 2, 2, 3};
  const int si = static_cast<int>(s);
  std::vector<int> out;
  out.push_back(local_uhat(first[si]));
  for (int k = 0; k < p_ - 1; ++k) out.push_back(local_uhat(4 + si * (p_ - 1) + k));
  out.push_back(local_uhat(last[si]));
  return out;
}

std::vector<int> TrialSpace::edge_uhat_nodes(int edge) const {
  const Edge& e = mesh_->edges()[edge];
  std::vector<int> out;
  out.push_back(e.vertex_ids[0]);
  for (int k = 0; k < p_ - 1; ++k) out.push_back(uhat_node(edge, k));
  out.push_back(e.vertex_ids[1]);
  return out;
}

Point TrialSpace::uhat_node_position(int node) const {
  if (node < num_vertices_) return mesh_->vertices()[node];
  const int e = (node - num_vertices_) / (p_ - 1);
  const int k = (node - num_vertices_) % (p_ - 1);
  const Edge& edge = mesh_->edges()[e];
  const Point& a = mesh_->vertices()[edge.vertex_ids[0]];
  const Point& b = mesh_->vertices()[edge.vertex_ids[1]];
  const double t = uhat_.nodes()[k + 1];
  return {a.x + 0.5 * (t + 1) * (b.x - a.x), a.y + 0.5 * (t + 1) * (b.y - a.y)};
}

void TrialSpace::build_dofs(const BoundaryData& data) {
  const auto& edges = mesh_->edges();
  const int ne = static_cast<int>(edges.size());
  dofs_.uhat_kind.assign(num_vertices_ + ne * (p_ - 1), NodeKind::unused);
  dofs_.uhat_expansion.assign(dofs_.uhat_kind.size(), {});
  dofs_.sighat_kind.assign(ne * p_, NodeKind::unused);
  dofs_.sighat_expansion.assign(dofs_.sighat_kind.size(), {});

  // Referenced nodes default to free.
  for (const auto& el : mesh_->elements())
    for (int eid : el.edge_ids) {
      for (int n : edge_uhat_nodes(eid)) dofs_.uhat_kind[n] = NodeKind::free;
      for (int j = 0; j < p_; ++j) dofs_.sighat_kind[sighat_node(eid, j)] = NodeKind::free;
    }

  const auto& nodes = uhat_.nodes();
  std::vector<double> lv(p_ + 1), ld(p_ + 1);
  for (int eid = 0; eid < ne; ++eid) {
    const Edge& e = edges[eid];
    if (!e.active()) continue;
    if (e.side == EdgeSide::dirichlet) {
      for (int n : edge_uhat_nodes(eid)) dofs_.uhat_kind[n] = NodeKind::eliminated;
    }
    if (!e.hanging_children.empty()) {
      // Midpoint and child interior nodes follow the coarse edge's polynomial.
      const std::vector<int> masters = edge_uhat_nodes(eid);
      auto constrain = [&](int slave, double s) {
        lagrange(nodes, s, lv.data(), ld.data());
        Constraint c;
        c.slave = slave;
        for (int i = 0; i <= p_; ++i)
          if (std::abs(lv[i]) > kDropWeight) c.masters.emplace_back(masters[i], lv[i]);
        dofs_.uhat_constraints.push_back(c);
        dofs_.uhat_kind[slave] = NodeKind::slave;
      };
      constrain(e.midpoint, 0.0);
      for (int c = 0; c < 2; ++c)
        for (int k = 0; k < p_ - 1; ++k) {
          const double t = nodes[k + 1];
          constrain(uhat_node(e.hanging_children[c], k), c == 0 ? 0.5 * (t - 1) : 0.5 * (t + 1));
        }

      QuadratureRule1D g = gauss_legendre(p_ + 2);
      std::vector<double> pv(p_), pd(p_), mv(p_), md(p_);
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < p_; ++j) {
          Constraint con;
          con.slave = sighat_node(e.hanging_children[c], j);
          for (int kk = 0; kk < p_; ++kk) {
            double w = 0;
            for (std::size_t q = 0; q < g.points.size(); ++q) {
              const double t = g.points[q];
              const double s = c == 0 ? 0.5 * (t - 1) : 0.5 * (t + 1);
              sighat_.eval(t, pv.data(), pd.data());
              sighat_.eval(s, mv.data(), md.data());
              w += g.weights[q] * mv[kk] * pv[j];
            }
            w *= 0.5 * (2 * j + 1);
            if (std::abs(w) > kDropWeight) con.masters.emplace_back(sighat_node(eid, kk), w);
          }
          dofs_.sighat_constraints.push_back(con);
          dofs_.sighat_kind[con.slave] = NodeKind::slave;
        }
    }
  }
  // Dirichlet closure wins over any other classification for boundary vertices.
  for (int eid = 0; eid < ne; ++eid)
    if (edges[eid].active() && edges[eid].side == EdgeSide::dirichlet)
      for (int n : edge_uhat_nodes(eid)) dofs_.uhat_kind[n] = NodeKind::eliminated;

  // Prescribed normal traces on Neumann edges.
  QuadratureRule1D gq = gauss_legendre(std::max(8, 2 * p_ + 4));
  std::vector<double> pv(p_), pd(p_);
  for (int eid = 0; eid < ne; ++eid) {
    const Edge& e = edges[eid];
    if (!e.active() || e.side != EdgeSide::neumann) continue;
    const Point& a = mesh_->vertices()[e.vertex_ids[0]];
    const Point& b = mesh_->vertices()[e.vertex_ids[1]];
    for (int j = 0; j < p_; ++j) {
      const int node = sighat_node(eid, j);
      dofs_.sighat_kind[node] = NodeKind::prescribed;
      double c = 0;
      if (data.neumann_flux) {
        for (std::size_t q = 0; q < gq.points.size(); ++q) {
          const double t = gq.points[q];
          Point x{a.x + 0.5 * (t + 1) * (b.x - a.x), a.y + 0.5 * (t + 1) * (b.y - a.y)};
          sighat_.eval(t, pv.data(), pd.data());
          c += gq.weights[q] * data.neumann_flux(x, e.normal) * pv[j];
        }
        c *= 0.5 * (2 * j + 1);
      }
      dofs_.sighat_expansion[node].constant = c;
    }
  }

  int next = num_field_;
  for (std::size_t n = 0; n < dofs_.uhat_kind.size(); ++n)
    if (dofs_.uhat_kind[n] == NodeKind::free) dofs_.uhat_expansion[n].terms = {{next++, 1.0}};
  num_uhat_ = next - num_field_;
  for (std::size_t n = 0; n < dofs_.sighat_kind.size(); ++n)
    if (dofs_.sighat_kind[n] == NodeKind::free) dofs_.sighat_expansion[n].terms = {{next++, 1.0}};
  num_sighat_ = next - num_field_ - num_uhat_;

  Resolver ru(dofs_.uhat_kind, dofs_.uhat_expansion, dofs_.uhat_constraints);
  for (std::size_t n = 0; n < dofs_.uhat_kind.size(); ++n)
    if (dofs_.uhat_kind[n] != NodeKind::unused) ru.resolve(static_cast<int>(n));
  Resolver rs(dofs_.sighat_kind, dofs_.sighat_expansion, dofs_.sighat_constraints);
  for (std::size_t n = 0; n < dofs_.sighat_kind.size(); ++n)
    if (dofs_.sighat_kind[n] != NodeKind::unused) rs.resolve(static_cast<int>(n));
}

void TrialSpace::build_folds() {
  const int m = field_size();
  const int nl = local_dim();
  folds_.resize(mesh_->num_elements());
  for (int k = 0; k < mesh_->num_elements(); ++k) {
    const Element& el = mesh_->elements()[k];
    std::vector<const Expansion*> local(nl, nullptr);
    std::vector<Expansion> field(3 * m);
    for (int i = 0; i < m; ++i) {
      field[i].terms = {{u_offset(k) + i, 1.0}};
      field[m + i].terms = {{sigma_offset(k) + i, 1.0}};
      field[2 * m + i].terms = {{sigma_offset(k) + m + i, 1.0}};
    }
    for (int i = 0; i < 3 * m; ++i) local[i] = &field[i];
    for (int s = 0; s < 4; ++s) {
      const int eid = el.edge_ids[s];
      const std::vector<int> nodes = edge_uhat_nodes(eid);
      const std::vector<int> locs = side_uhat_locals(static_cast<Side>(s));
      for (int i = 0; i <= p_; ++i) local[locs[i]] = &dofs_.uhat_expansion[nodes[i]];
      for (int j = 0; j < p_; ++j)
        local[local_sighat(static_cast<Side>(s), j)] = &dofs_.sighat_expansion[sighat_node(eid, j)];
    }
    ElementFold& f = folds_[k];
    std::vector<int> g;
    for (const Expansion* e : local)
      for (const auto& t : e->terms) g.push_back(t.first);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    f.global_dofs = g;
    f.c = Matrix::Zero(nl, static_cast<Eigen::Index>(g.size()));
    f.offset = Vector::Zero(nl);
    for (int i = 0; i < nl; ++i) {
      for (const auto& [d, w] : local[i]->terms) {
        const auto pos = std::lower_bound(g.begin(), g.end(), d) - g.begin();
        f.c(i, pos) += w;
      }
      f.offset(i) = local[i]->constant;
    }
  }
}

Vector TrialSpace::local_coefficients(int k, const Vector& global, bool with_offset) const {
  const ElementFold& f = folds_.at(k);
  Vector g(f.global_dofs.size());
  for (std::size_t i = 0; i < f.global_dofs.size(); ++i) g(i) = global(f.global_dofs[i]);
  if (!with_offset) return f.c * g;
  return f.c * g + f.offset;
}

TestSpace::TestSpace(std::shared_ptr<const mesh::QuadMesh> m, int p, int dp)
    : mesh_(std::move(m)), order_(p + dp), basis_(Family::legendre, p + dp) {
  if (dp < 1) throw ConfigError("test enrichment dp must be at least 1");
  if (p < 1) throw ConfigError("trial order p must be at least 1");
}

TestValue evaluate_test(const TestSpace& space, const Element& el, const Vector& coeffs, double xi, double eta) {
  const int n = space.scalar_size();
  double v[1024], dx[1024], dy[1024];
  space.basis().eval(xi, eta, v, dx, dy);
  const double sx = 2.0 / el.box.width(), sy = 2.0 / el.box.height();
  TestValue out;
  for (int i = 0; i < n; ++i) {
    const double cv = coeffs(i), ctx = coeffs(n + i), cty = coeffs(2 * n + i);
    out.v += cv * v[i];
    out.grad_v.x += cv * dx[i] * sx;
    out.grad_v.y += cv * dy[i] * sy;
    out.tau.x += ctx * v[i];
    out.tau.y += cty * v[i];
    out.div_tau += ctx * dx[i] * sx + cty * dy[i] * sy;
  }
  return out;
}

FieldValue evaluate_fields(const TrialSpace& space, int k, const Vector& global, double xi, double eta) {
  const int m = space.field_size();
  double v[1024], dx[1024], dy[1024];
  space.field_basis().eval(xi, eta, v, dx, dy);
  FieldValue out;
  for (int i = 0; i < m; ++i) {
    out.u += global(space.u_offset(k) + i) * v[i];
    out.sigma.x += global(space.sigma_offset(k) + i) * v[i];
    out.sigma.y += global(space.sigma_offset(k) + m + i) * v[i];
  }
  return out;
}

std::shared_ptr<const TrialSpace> build_trial_space(std::shared_ptr<const mesh::QuadMesh> mesh, int p,
                                                    const BoundaryData& data) {
  return std::make_shared<const TrialSpace>(std::move(mesh), p, data);
}

std::shared_ptr<const TestSpace> build_test_space(std::shared_ptr<const mesh::QuadMesh> mesh, int p, int dp) {
  return std::make_shared<const TestSpace>(std::move(mesh), p, dp);
}

namespace {

// Projects a scalar function onto a tensor basis on one element.
Vector project_scalar(const TensorBasis& basis, const mesh::Rect& box, const std::function<double(double, double)>& f,
                      int npts) {
  const int n = basis.size();
  QuadratureRule q = tensor_gauss(npts);
  Matrix mass = Matrix::Zero(n, n);
  Vector rhs = Vector::Zero(n);
  std::vector<double> v(n), dx(n), dy(n);
  for (std::size_t iq = 0; iq < q.points.size(); ++iq) {
    basis.eval(q.points[iq][0], q.points[iq][1], v.data(), dx.data(), dy.data());
    Point x = to_physical(box, q.points[iq][0], q.points[iq][1]);
    const double fx = f(x.x, x.y);
    for (int i = 0; i < n; ++i) {
      rhs(i) += q.weights[iq] * fx * v[i];
      for (int j = 0; j < n; ++j) mass(i, j) += q.weights[iq] * v[i] * v[j];
    }
  }
  return mass.llt().solve(rhs);
}

}  // namespace

Vector interpolate_manufactured(const TrialSpace& space, const goals::ManufacturedSolution& exact) {
  const auto& msh = space.mesh();
  const int m = space.field_size();
  const int p = space.p();
  const int npts = p + 6;
  Vector out = Vector::Zero(space.num_dofs());
  for (int k = 0; k < msh.num_elements(); ++k) {
    const auto& box = msh.elements()[k].box;
    out.segment(space.u_offset(k), m) = project_scalar(space.field_basis(), box, exact.u, npts);
    out.segment(space.sigma_offset(k), m) =
        project_scalar(space.field_basis(), box, [&](double x, double y) { return exact.grad(x, y).x; }, npts);
    out.segment(space.sigma_offset(k) + m, m) =
        project_scalar(space.field_basis(), box, [&](double x, double y) { return exact.grad(x, y).y; }, npts);
  }

  const DofMap& dm = space.dof_map();
  auto free_index = [](const Expansion& e) -> int {
    return e.terms.size() == 1 && e.terms[0].second == 1.0 ? e.terms[0].first : -1;
  };
  // Vertex values by interpolation.
  for (int v = 0; v < static_cast<int>(msh.vertices().size()); ++v)
    if (dm.uhat_kind[v] == NodeKind::free) {
      const Point& x = msh.vertices()[v];
      out(free_index(dm.uhat_expansion[v])) = exact.u(x.x, x.y);
    }

  QuadratureRule1D g = gauss_legendre(p + 6);
  std::vector<double> lv(p + 1), ld(p + 1), pv(p), pd(p);
  const auto& edges = msh.edges();
  for (int eid = 0; eid < static_cast<int>(edges.size()); ++eid) {
    const Edge& e = edges[eid];
    if (!e.active()) continue;
    const Point& a = msh.vertices()[e.vertex_ids[0]];
    const Point& b = msh.vertices()[e.vertex_ids[1]];
    auto at = [&](double t) { return Point{a.x + 0.5 * (t + 1) * (b.x - a.x), a.y + 0.5 * (t + 1) * (b.y - a.y)}; };

    if (p > 1 && dm.uhat_kind[space.uhat_node(eid, 0)] == NodeKind::free) {
      // Bubble part: L2 projection of u minus its vertex interpolant onto interior nodal functions.
      const int nb = p - 1;
      Matrix mass = Matrix::Zero(nb, nb);
      Vector rhs = Vector::Zero(nb);
      const double ua = exact.u(a.x, a.y), ub = exact.u(b.x, b.y);
      for (std::size_t q = 0; q < g.points.size(); ++q) {
        const double t = g.points[q];
        lagrange(space.uhat_basis().nodes(), t, lv.data(), ld.data());
        Point x = at(t);
        const double r = exact.u(x.x, x.y) - ua * lv[0] - ub * lv[p];
        for (int i = 0; i < nb; ++i) {
          rhs(i) += g.weights[q] * r * lv[i + 1];
          for (int j = 0; j < nb; ++j) mass(i, j) += g.weights[q] * lv[i + 1] * lv[j + 1];
        }
      }
      Vector c = mass.llt().solve(rhs);
      for (int i = 0; i < nb; ++i) out(free_index(dm.uhat_expansion[space.uhat_node(eid, i)])) = c(i);
    }
    if (dm.sighat_kind[space.sighat_node(eid, 0)] == NodeKind::free) {
      for (int j = 0; j < p; ++j) {
        double c = 0;
        for (std::size_t q = 0; q < g.points.size(); ++q) {
          const double t = g.points[q];
          space.sighat_basis().eval(t, pv.data(), pd.data());
          c += g.weights[q] * exact.flux(at(t), e.normal) * pv[j];
        }
        out(free_index(dm.sighat_expansion[space.sighat_node(eid, j)])) = c * 0.5 * (2 * j + 1);
      }
    }
  }
  return out;
}

Vector project_test_function(const TestSpace& space, const Element& el, const std::function<double(double, double)>& v,
                             const std::function<Point(double, double)>& tau) {
  const int n = space.scalar_size();
  const int npts = space.order() + 4;
  Vector out(3 * n);
  out.segment(0, n) = project_scalar(space.basis(), el.box, v, npts);
  out.segment(n, n) = project_scalar(space.basis(), el.box, [&](double x, double y) { return tau(x, y).x; }, npts);
  out.segment(2 * n, n) = project_scalar(space.basis(), el.box, [&](double x, double y) { return tau(x, y).y; }, npts);
  return out;
}

}  // namespace dpg::fe
