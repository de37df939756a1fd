#include "dpg/estimators/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dpg/error.hpp"
#include "dpg/fe/quadrature.hpp"

namespace dpg::estimators {

using core::Matrix;
using core::SolveState;
using core::Vector;
using goals::GoalSpec;
using goals::VolumePiece;
using mesh::Element;
using mesh::Point;
using mesh::Rect;
using mesh::Side;

const char* to_string(IndicatorKind k) {
  switch (k) {
    case IndicatorKind::energy: return "energy";
    case IndicatorKind::star_explicit: return "star_explicit";
    case IndicatorKind::star_implicit: return "star_implicit";
    case IndicatorKind::star_adhoc: return "star_adhoc";
    case IndicatorKind::product: return "product";
  }
  return "?";
}

double IndicatorField::total() const {
  double s = 0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

namespace {

bool along_x(Side s) { return s == Side::bottom || s == Side::top; }

// Splits an element box along piece boundaries so the goal density is constant on each cell.
struct Cell {
  Rect box;
  double g1 = 0, g2x = 0, g2y = 0;
};

std::vector<Cell> cells_of(const Rect& box, const std::vector<VolumePiece>& pieces) {
  std::vector<double> xs{box.x0, box.x1}, ys{box.y0, box.y1};
  for (const auto& p : pieces) {
    for (double x : {p.region.x0, p.region.x1})
      if (x > box.x0 && x < box.x1) xs.push_back(x);
    for (double y : {p.region.y0, p.region.y1})
      if (y > box.y0 && y < box.y1) ys.push_back(y);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  std::vector<Cell> out;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      Cell c;
      c.box = Rect{xs[i], xs[i + 1], ys[j], ys[j + 1]};
      const Point mid{0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])};
      for (const auto& p : pieces)
        if (p.region.contains(mid)) {
          c.g1 += p.g1;
          c.g2x += p.g2x;
          c.g2y += p.g2y;
        }
      out.push_back(c);
    }
  return out;
}

double ref(double x, double a, double b) { return std::clamp(2 * (x - a) / (b - a) - 1, -1.0, 1.0); }

// Integrates f(point) over [a, b] of the side-parallel coordinate, split at the given cuts.
template <class F>
double integrate_line(double a, double b, std::vector<double> cuts, int npts, F&& f) {
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double c) { return !(c > a && c < b); }), cuts.end());
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  const auto q = fe::gauss_legendre(npts);
  double sum = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], h = cuts[i + 1] - cuts[i];
    if (h <= 0) continue;
    for (std::size_t k = 0; k < q.points.size(); ++k) sum += 0.5 * h * q.weights[k] * f(lo + 0.5 * h * (q.points[k] + 1));
  }
  return sum;
}

const goals::BoundaryProfile* profile_on(const std::vector<goals::BoundaryProfile>& list, Side s) {
  for (const auto& p : list)
    if (p.side == s) return &p;
  return nullptr;
}

void require_dual(const SolveState& st) {
  if (!st.has_dual || st.v_coeffs.size() != static_cast<std::size_t>(st.disc.mesh->num_elements()))
    throw Error("dual solve not available on this mesh; DPG* indicators need solve_dual first");
}

void require_fresh(const GoalSpec& goal, const mesh::QuadMesh& m) {
  if (goal.mesh_dependent && static_cast<int>(goal.element_density.size()) != m.num_elements())
    throw Error("goal '" + goal.name + "' is mesh-dependent; call goals::mesh_dependent_update on this mesh first");
}

}  // namespace

IndicatorField energy_indicators(const SolveState& state) {
  if (!state.system) throw Error("energy indicators need a primal solve");
  IndicatorField f;
  f.kind = IndicatorKind::energy;
  f.values.resize(state.psi_coeffs.size());
  for (std::size_t k = 0; k < state.psi_coeffs.size(); ++k) {
    const Vector& psi = state.psi_coeffs[k];
    f.values[k] = std::sqrt(std::max(0.0, psi.dot(state.system->elements[k].gram->gram * psi)));
  }
  return f;
}

IndicatorField explicit_star_indicators(const SolveState& state, const GoalSpec& goal) {
  require_dual(state);
  const mesh::QuadMesh& m = *state.disc.mesh;
  const fe::TestSpace& test = *state.disc.test;
  goals::check_regularity(goal, m.boundary_spec());
  require_fresh(goal, m);
  const int npts = test.order() + 2;
  const auto q = fe::gauss_legendre(npts);

  IndicatorField f;
  f.kind = IndicatorKind::star_explicit;
  f.values.assign(m.num_elements(), 0.0);
  for (int k = 0; k < m.num_elements(); ++k) {
    const Element& el = m.elements()[k];
    const Vector& vk = state.v_coeffs[k];
    double vol = 0;
    for (const Cell& c : cells_of(el.box, goal.pieces_on(m, k))) {
      const double jac = 0.25 * c.box.area();
      for (std::size_t i = 0; i < q.points.size(); ++i)
        for (std::size_t j = 0; j < q.points.size(); ++j) {
          const double x = c.box.x0 + 0.5 * (q.points[i] + 1) * c.box.width();
          const double y = c.box.y0 + 0.5 * (q.points[j] + 1) * c.box.height();
          const auto t = fe::evaluate_test(test, el, vk, ref(x, el.box.x0, el.box.x1), ref(y, el.box.y0, el.box.y1));
          const double r0 = t.div_tau - c.g1;
          const double rx = t.tau.x + t.grad_v.x - c.g2x;
          const double ry = t.tau.y + t.grad_v.y - c.g2y;
          vol += jac * q.weights[i] * q.weights[j] * (r0 * r0 + rx * rx + ry * ry);
        }
    }

    double edges = 0;
    for (int si = 0; si < 4; ++si) {
      const Side s = static_cast<Side>(si);
      const Point n = mesh::outward_normal(s);
      const bool ax = along_x(s);
      const double fixed = s == Side::bottom ? el.box.y0 : s == Side::top ? el.box.y1 : s == Side::left ? el.box.x0 : el.box.x1;
      auto at = [&](double c) { return ax ? Point{c, fixed} : Point{fixed, c}; };
      auto eval = [&](int e, Point x) {
        const Element& E = m.elements()[e];
        return fe::evaluate_test(test, E, state.v_coeffs[e], ref(x.x, E.box.x0, E.box.x1), ref(x.y, E.box.y0, E.box.y1));
      };
      const auto nb = m.neighbors(k, s);
      const double a = ax ? el.box.x0 : el.box.y0;
      const double b = ax ? el.box.x1 : el.box.y1;
      if (nb.kind == mesh::SideNeighbors::Kind::boundary) {
        const mesh::Edge& e = m.edges()[el.edge_ids[si]];
        const Side dside = *e.boundary;
        if (e.side == mesh::EdgeSide::neumann) {
          const auto* g3 = profile_on(goal.g3_hat, dside);
          edges += integrate_line(a, b, g3 ? g3->breakpoints() : std::vector<double>{}, npts, [&](double c) {
            const auto t = eval(k, at(c));
            const double r = t.tau.x * n.x + t.tau.y * n.y + (g3 ? g3->value(c) : 0.0);
            return r * r;
          });
        } else {
          const auto* g4 = profile_on(goal.g4_hat, dside);
          edges += integrate_line(a, b, g4 ? g4->breakpoints() : std::vector<double>{}, npts, [&](double c) {
            const auto t = eval(k, at(c));
            const double r = t.v + (g4 ? g4->value(c) : 0.0);
            const double dr = (ax ? t.grad_v.x : t.grad_v.y) + (g4 ? g4->slope(c) : 0.0);
            return r * r + dr * dr;
          });
        }
        continue;
      }
      // Interior: integrate over the fine side of the interface.
      std::vector<std::tuple<double, double, int>> segments;
      if (nb.kind == mesh::SideNeighbors::Kind::finer) {
        for (std::size_t i = 0; i < nb.elements.size(); ++i) {
          const Rect& nbox = m.elements()[nb.elements[i]].box;
          segments.emplace_back(ax ? nbox.x0 : nbox.y0, ax ? nbox.x1 : nbox.y1, nb.elements[i]);
        }
      } else {
        segments.emplace_back(a, b, nb.elements.at(0));
      }
      for (const auto& [lo, hi, other] : segments) {
        edges += integrate_line(lo, hi, {}, npts, [&](double c) {
          const Point x = at(c);
          const auto tk = eval(k, x);
          const auto tn = eval(other, x);
          const double jt = (tk.tau.x - tn.tau.x) * n.x + (tk.tau.y - tn.tau.y) * n.y;
          const double jv = tk.v - tn.v;
          const double djv = ax ? tk.grad_v.x - tn.grad_v.x : tk.grad_v.y - tn.grad_v.y;
          return jt * jt + jv * jv + djv * djv;
        });
      }
    }
    f.values[k] = std::sqrt(std::max(0.0, vol + el.h_k() * edges));
  }
  return f;
}

IndicatorField implicit_star_indicators(const SolveState& state, const GoalSpec& goal, int P, int dp) {
  require_dual(state);
  const auto& meshp = state.disc.mesh;
  const mesh::QuadMesh& m = *meshp;
  const fe::TestSpace& test = *state.disc.test;
  const int p = state.disc.trial->p();
  if (P < 0) P = p + 1;
  if (dp < 0) dp = test.order() - p;
  if (P < 1 || dp < 1) throw ConfigError("implicit estimator orders must be positive");
  goals::check_regularity(goal, m.boundary_spec());
  require_fresh(goal, m);

  const auto trialR = fe::build_trial_space(meshp, P);
  const auto testR = fe::build_test_space(meshp, P, dp);
  const core::ElementOperators ops(*trialR, *testR);
  const int fm = trialR->field_size();
  const int nq = test.order(), nr = testR->order();
  const int ns = test.scalar_size(), nrs = testR->scalar_size();

  // Kept local columns: fields and sigma-hat; u-hat is pinned to zero on the element boundary.
  std::vector<int> keep;
  for (int i = 0; i < 3 * fm; ++i) keep.push_back(i);
  for (int si = 0; si < 4; ++si)
    for (int j = 0; j < P; ++j) keep.push_back(trialR->local_sighat(static_cast<Side>(si), j));

  struct Local {
    Matrix x;  // L^{-1} B over kept columns
    Matrix b;  // B over kept columns
    Eigen::LLT<Matrix> a;
  };
  std::map<std::pair<double, double>, std::shared_ptr<Local>> cache;

  const auto q = fe::gauss_legendre(P + 2);
  std::vector<double> fv(fm), fdx(fm), fdy(fm), pv(P), pd(P);

  IndicatorField f;
  f.kind = IndicatorKind::star_implicit;
  f.values.assign(m.num_elements(), 0.0);
  for (int k = 0; k < m.num_elements(); ++k) {
    const Element& el = m.elements()[k];
    const auto key = std::make_pair(el.box.width(), el.box.height());
    auto it = cache.find(key);
    if (it == cache.end()) {
      auto loc = std::make_shared<Local>();
      const Matrix g = ops.gram(key.first, key.second, state.disc.alpha);
      Eigen::LLT<Matrix> gc(g);
      if (gc.info() != Eigen::Success) throw NumericalError("enriched Gram not positive definite on element " + std::to_string(k));
      const Matrix bfull = ops.b_outward(key.first, key.second);
      loc->b.resize(bfull.rows(), keep.size());
      for (std::size_t c = 0; c < keep.size(); ++c) loc->b.col(c) = bfull.col(keep[c]);
      loc->x = gc.matrixL().solve(loc->b);
      loc->a.compute(loc->x.transpose() * loc->x);
      if (loc->a.info() != Eigen::Success)
        throw NumericalError("local enriched residual problem is singular on element " + std::to_string(k));
      it = cache.emplace(key, loc).first;
    }
    const Local& loc = *it->second;

    // v_{h,r} embedded in the enriched (hierarchical Legendre) test basis.
    Vector ve = Vector::Zero(3 * nrs);
    const Vector& vk = state.v_coeffs[k];
    for (int blk = 0; blk < 3; ++blk)
      for (int j = 0; j <= nq; ++j)
        for (int i = 0; i <= nq; ++i) ve(blk * nrs + i + (nr + 1) * j) = vk(blk * ns + i + (nq + 1) * j);
    Vector rhs = -loc.b.transpose() * ve;

    for (const auto& piece : goal.pieces_on(m, k)) {
      const Rect& r = piece.region;
      for (std::size_t i = 0; i < q.points.size(); ++i)
        for (std::size_t j = 0; j < q.points.size(); ++j) {
          const double x = r.x0 + 0.5 * (q.points[i] + 1) * r.width();
          const double y = r.y0 + 0.5 * (q.points[j] + 1) * r.height();
          const double w = 0.25 * r.area() * q.weights[i] * q.weights[j];
          trialR->field_basis().eval(ref(x, el.box.x0, el.box.x1), ref(y, el.box.y0, el.box.y1), fv.data(), fdx.data(),
                                     fdy.data());
          for (int a = 0; a < fm; ++a) {
            rhs(a) += piece.g1 * w * fv[a];
            rhs(fm + a) += piece.g2x * w * fv[a];
            rhs(2 * fm + a) += piece.g2y * w * fv[a];
          }
        }
    }
    for (int si = 0; si < 4; ++si) {
      const mesh::Edge& e = m.edges()[el.edge_ids[si]];
      if (!e.boundary || e.side != mesh::EdgeSide::dirichlet) continue;
      const auto* g4 = profile_on(goal.g4_hat, *e.boundary);
      if (!g4) continue;
      const bool ax = along_x(static_cast<Side>(si));
      const double a = ax ? el.box.x0 : el.box.y0, b = ax ? el.box.x1 : el.box.y1;
      for (int j = 0; j < P; ++j)
        rhs(3 * fm + si * P + j) += integrate_line(a, b, g4->breakpoints(), P + 3, [&](double c) {
          trialR->sighat_basis().eval(2 * (c - a) / (b - a) - 1, pv.data(), pd.data());
          return g4->value(c) * pv[j];
        });
    }
    f.values[k] = std::sqrt(std::max(0.0, rhs.dot(loc.a.solve(rhs))));
  }
  return f;
}

IndicatorField adhoc_star_indicators(const SolveState& state, const GoalSpec& goal) {
  require_dual(state);
  if (!goal.volumetric_only())
    throw AssumptionError("ad hoc indicator needs a volumetric goal; replace '" + goal.name +
                          "' by goals::adhoc_surrogate and refresh it with goals::mesh_dependent_update");
  const mesh::QuadMesh& m = *state.disc.mesh;
  require_fresh(goal, m);
  const fe::TrialSpace& trial = *state.disc.trial;
  const auto q = fe::gauss_legendre(trial.p() + 2);
  IndicatorField f;
  f.kind = IndicatorKind::star_adhoc;
  f.values.assign(m.num_elements(), 0.0);
  for (int k = 0; k < m.num_elements(); ++k) {
    const Element& el = m.elements()[k];
    double sum = 0;
    for (const Cell& c : cells_of(el.box, goal.pieces_on(m, k))) {
      const double jac = 0.25 * c.box.area();
      for (std::size_t i = 0; i < q.points.size(); ++i)
        for (std::size_t j = 0; j < q.points.size(); ++j) {
          const double x = c.box.x0 + 0.5 * (q.points[i] + 1) * c.box.width();
          const double y = c.box.y0 + 0.5 * (q.points[j] + 1) * c.box.height();
          const auto w = fe::evaluate_fields(trial, k, state.omega_coeffs, ref(x, el.box.x0, el.box.x1),
                                             ref(y, el.box.y0, el.box.y1));
          const double r0 = c.g1 - w.u, rx = c.g2x - w.sigma.x, ry = c.g2y - w.sigma.y;
          sum += jac * q.weights[i] * q.weights[j] * (r0 * r0 + rx * rx + ry * ry);
        }
    }
    f.values[k] = std::sqrt(sum);
  }
  return f;
}

IndicatorField product_indicators(const IndicatorField& primal, const IndicatorField& dual) {
  if (primal.values.size() != dual.values.size())
    throw DimensionError("indicator fields have " + std::to_string(primal.values.size()) + " and " +
                         std::to_string(dual.values.size()) + " elements");
  IndicatorField f;
  f.kind = IndicatorKind::product;
  f.values.resize(primal.values.size());
  for (std::size_t k = 0; k < f.values.size(); ++k) f.values[k] = primal.values[k] * dual.values[k];
  return f;
}

}  // namespace dpg::estimators
