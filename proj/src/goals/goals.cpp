#include "dpg/goals/goals.hpp"

#include <algorithm>
#include <cmath>

#include "dpg/error.hpp"
#include "dpg/fe/quadrature.hpp"

namespace dpg::goals {

using mesh::EdgeSide;
using mesh::Point;
using mesh::Rect;
using mesh::Side;

double steep_profile(double s) { return s * (1 - s) * (s / 4 + (1 - 4 * s) * (1 - 4 * s)); }
double steep_profile_d1(double s) { return ((-64 * s + 71.25) * s - 17.5) * s + 1; }
double steep_profile_d2(double s) { return (-192 * s + 142.5) * s - 17.5; }

ManufacturedSolution steep_manufactured() {
  ManufacturedSolution m;
  m.name = "steep";
  m.domain = Rect{0, 4, 0, 1};
  m.u = [](double x, double y) { return steep_profile(x / 4) * steep_profile(y); };
  m.grad = [](double x, double y) {
    return Point{steep_profile_d1(x / 4) / 4 * steep_profile(y), steep_profile(x / 4) * steep_profile_d1(y)};
  };
  m.laplacian = [](double x, double y) {
    return steep_profile_d2(x / 4) / 16 * steep_profile(y) + steep_profile(x / 4) * steep_profile_d2(y);
  };
  return m;
}

ManufacturedSolution zero_solution(const Rect& domain) {
  ManufacturedSolution m;
  m.name = "zero";
  m.domain = domain;
  m.u = [](double, double) { return 0.0; };
  m.grad = [](double, double) { return Point{}; };
  m.laplacian = [](double, double) { return 0.0; };
  return m;
}

namespace {

Rect intersect(const Rect& a, const Rect& b) {
  return Rect{std::max(a.x0, b.x0), std::min(a.x1, b.x1), std::max(a.y0, b.y0), std::min(a.y1, b.y1)};
}

bool nonempty(const Rect& r) { return r.width() > 0 && r.height() > 0; }

bool along_x(Side s) { return s == Side::bottom || s == Side::top; }

// Coordinate range of a domain side.
std::pair<double, double> side_range(const Rect& d, Side s) {
  return along_x(s) ? std::make_pair(d.x0, d.x1) : std::make_pair(d.y0, d.y1);
}

Point side_point(const Rect& d, Side s, double c) {
  switch (s) {
    case Side::bottom: return {c, d.y0};
    case Side::right: return {d.x1, c};
    case Side::top: return {c, d.y1};
    case Side::left: return {d.x0, c};
  }
  return {};
}

// Integrates f(c) over [a, b] split at the profile breakpoints.
template <class F>
double integrate_segment(double a, double b, const std::vector<double>& breaks, int panels, int points, F&& f) {
  std::vector<double> cuts{a};
  for (double c : breaks)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  const auto q = fe::gauss_legendre(points);
  double sum = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double h = (cuts[i + 1] - cuts[i]) / panels;
    for (int pnl = 0; pnl < panels; ++pnl) {
      const double lo = cuts[i] + pnl * h;
      for (std::size_t k = 0; k < q.points.size(); ++k) sum += 0.5 * h * q.weights[k] * f(lo + 0.5 * h * (q.points[k] + 1));
    }
  }
  return sum;
}

const BoundaryProfile* profile_on(const std::vector<BoundaryProfile>& list, Side s) {
  for (const auto& p : list)
    if (p.side == s) return &p;
  return nullptr;
}

int side_of(const mesh::Element& el, int edge) {
  for (int s = 0; s < 4; ++s)
    if (el.edge_ids[s] == edge) return s;
  throw Error("edge " + std::to_string(edge) + " is not a side of its owner");
}

}  // namespace

double BoundaryProfile::value(double s) const {
  if (knots.empty()) return 0;
  if (s < knots.front().first || s > knots.back().first) return 0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const auto& [a, fa] = knots[i];
    const auto& [b, fb] = knots[i + 1];
    if (s >= a && s <= b) {
      if (b == a) continue;
      return fa + (fb - fa) * (s - a) / (b - a);
    }
  }
  return knots.back().second;
}

double BoundaryProfile::slope(double s) const {
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const auto& [a, fa] = knots[i];
    const auto& [b, fb] = knots[i + 1];
    if (s >= a && s < b) return (fb - fa) / (b - a);
  }
  return 0;
}

std::vector<double> BoundaryProfile::breakpoints() const {
  std::vector<double> out;
  for (const auto& k : knots)
    if (out.empty() || out.back() != k.first) out.push_back(k.first);
  return out;
}

std::vector<VolumePiece> GoalSpec::pieces_on(const mesh::QuadMesh& m, int k) const {
  const Rect& box = m.elements().at(k).box;
  std::vector<VolumePiece> out;
  for (const auto& p : volume) {
    Rect r = intersect(p.region, box);
    if (nonempty(r)) out.push_back(VolumePiece{r, p.g1, p.g2x, p.g2y});
  }
  if (!element_density.empty()) {
    if (static_cast<int>(element_density.size()) != m.num_elements())
      throw Error("goal '" + name + "' was built for another mesh; call mesh_dependent_update first");
    const auto& d = element_density[k];
    if (d.g1 != 0 || d.g2x != 0 || d.g2y != 0) out.push_back(VolumePiece{box, d.g1, d.g2x, d.g2y});
  }
  return out;
}

GoalSpec GoalSpec::scaled(double c) const {
  GoalSpec g = *this;
  for (auto& p : g.volume) {
    p.g1 *= c;
    p.g2x *= c;
    p.g2y *= c;
  }
  for (auto& p : g.element_density) {
    p.g1 *= c;
    p.g2x *= c;
    p.g2y *= c;
  }
  for (auto* list : {&g.g3_hat, &g.g4_hat})
    for (auto& p : *list)
      for (auto& k : p.knots) k.second *= c;
  return g;
}

GoalSpec zero_goal() { return GoalSpec{}; }

GoalSpec add(const GoalSpec& a, const GoalSpec& b) {
  if (a.mesh_dependent || b.mesh_dependent) throw Error("cannot add mesh-dependent goals");
  GoalSpec g = a;
  g.name = a.name + "+" + b.name;
  g.volume.insert(g.volume.end(), b.volume.begin(), b.volume.end());
  g.g3_hat.insert(g.g3_hat.end(), b.g3_hat.begin(), b.g3_hat.end());
  g.g4_hat.insert(g.g4_hat.end(), b.g4_hat.begin(), b.g4_hat.end());
  return g;
}

std::vector<std::string> goal_names() {
  return {"subdomain_temperature", "subdomain_flux_x", "boundary_temperature", "boundary_flux", "point_temperature"};
}

GoalSpec make_goal(const std::string& name, const nlohmann::json& params, const mesh::QuadMesh& initial_mesh) {
  const Rect& d = initial_mesh.domain();
  const auto& bc = initial_mesh.boundary_spec();
  auto num = [&](const char* key, double def) {
    if (!params.is_object() || !params.contains(key)) return def;
    if (!params[key].is_number()) throw ConfigError(std::string("goal parameter '") + key + "' must be a number");
    return params[key].get<double>();
  };
  auto side_param = [&]() {
    if (!params.is_object() || !params.contains("side")) return Side::left;
    return mesh::side_from_string(params["side"].get<std::string>());
  };

  GoalSpec g;
  g.name = name;
  if (name == "subdomain_temperature" || name == "subdomain_flux_x") {
    const double xmax = num("x_max", d.x0 + 1.0);
    if (!(xmax > d.x0)) throw ConfigError("goal region x <= x_max misses the domain");
    VolumePiece p;
    p.region = Rect{d.x0, std::min(xmax, d.x1), d.y0, d.y1};
    if (name == "subdomain_temperature")
      p.g1 = 1;
    else
      p.g2x = 1;
    g.volume.push_back(p);
  } else if (name == "boundary_temperature") {
    const Side s = side_param();
    if (bc.of(s) != EdgeSide::neumann)
      throw ConfigError(std::string("boundary_temperature needs a Neumann side; '") + mesh::to_string(s) +
                        "' is " + mesh::to_string(bc.of(s)));
    const auto [a, b] = side_range(d, s);
    const double v = num("value", 1.0);
    g.g3_hat.push_back(BoundaryProfile{s, {{a, v}, {b, v}}});
    g.surrogate = Surrogate::boundary_average;
    g.region = Region{Region::Kind::boundary_segment, s, {}, g.g3_hat.back()};
  } else if (name == "boundary_flux") {
    const Side s = side_param();
    if (bc.of(s) != EdgeSide::dirichlet)
      throw ConfigError(std::string("boundary_flux needs a Dirichlet side; '") + mesh::to_string(s) + "' is " +
                        mesh::to_string(bc.of(s)));
    const auto [a, b] = side_range(d, s);
    double initial_h = b - a;
    for (const auto& e : initial_mesh.edges())
      if (e.active() && e.boundary && *e.boundary == s) initial_h = std::min(initial_h, e.h_f);
    // A side covered by one initial edge gets a hat peaking at mid-side.
    const double w = num("ramp_width", std::min(initial_h, 0.5 * (b - a)));
    const bool mollify = !params.is_object() || params.value("mollify", true);
    BoundaryProfile prof{s, {}};
    if (mollify) {
      if (!(w > 0) || 2 * w > b - a) throw ConfigError("boundary_flux ramp width must lie in (0, half the side length]");
      prof.knots = {{a, 0.0}, {a + w, 1.0}, {b - w, 1.0}, {b, 0.0}};
    } else {
      prof.knots = {{a, 1.0}, {b, 1.0}};
    }
    g.g4_hat.push_back(prof);
    g.surrogate = Surrogate::boundary_flux_average;
    g.region = Region{Region::Kind::boundary_segment, s, {}, prof};
  } else if (name == "point_temperature") {
    Point x{num("x", 0.3), num("y", 0.3)};
    if (!d.contains(x)) throw ConfigError("point_temperature location lies outside the domain");
    g.mesh_dependent = true;
    g.surrogate = Surrogate::point_average;
    g.region = Region{Region::Kind::point, Side::left, x, {}};
  } else {
    std::string known;
    for (const auto& n : goal_names()) known += " " + n;
    throw ConfigError("unknown goal '" + name + "'; known goals:" + known);
  }
  return g;
}

void check_regularity(const GoalSpec& goal, const mesh::BoundarySpec& bc) {
  for (const auto& p : goal.g3_hat)
    if (bc.of(p.side) != EdgeSide::neumann)
      throw ConfigError(std::string("g3-hat data on side '") + mesh::to_string(p.side) + "', which is not Neumann");
  for (const auto& p : goal.g4_hat)
    if (bc.of(p.side) != EdgeSide::dirichlet)
      throw ConfigError(std::string("g4-hat data on side '") + mesh::to_string(p.side) + "', which is not Dirichlet");
  if (goal.g4_hat.empty()) return;

  auto fail = [&](Side s, double c) {
    throw AssumptionError(std::string("goal '") + goal.name + "': g4-hat jumps at coordinate " + std::to_string(c) +
                          " of side '" + mesh::to_string(s) +
                          "'; a discontinuous g4-hat is unbounded on the trial space, mollify it with a ramp");
  };
  // Interior continuity (the profile is taken as zero outside its knot range).
  for (const auto& p : goal.g4_hat) {
    for (std::size_t i = 0; i + 1 < p.knots.size(); ++i)
      if (p.knots[i].first == p.knots[i + 1].first && std::abs(p.knots[i].second - p.knots[i + 1].second) > 1e-12)
        fail(p.side, p.knots[i].first);
  }
  // Corners: compare with the adjacent side, or require zero where Dirichlet meets Neumann.
  // Adjacent side at the start/end of each side in increasing coordinate.
  static constexpr Side start_nb[4] = {Side::left, Side::bottom, Side::left, Side::bottom};
  static constexpr Side end_nb[4] = {Side::right, Side::top, Side::right, Side::top};
  static constexpr bool start_nb_at_end[4] = {false, true, true, false};
  static constexpr bool end_nb_at_end[4] = {false, true, true, false};
  for (const auto& p : goal.g4_hat) {
    if (p.knots.empty()) continue;
    const int si = static_cast<int>(p.side);
    for (int which = 0; which < 2; ++which) {
      const auto& knot = which == 0 ? p.knots.front() : p.knots.back();
      const Side nb = which == 0 ? start_nb[si] : end_nb[si];
      const bool nb_end = which == 0 ? start_nb_at_end[si] : end_nb_at_end[si];
      double other = 0;
      if (bc.of(nb) == EdgeSide::dirichlet) {
        if (const BoundaryProfile* q = profile_on(goal.g4_hat, nb); q && !q->knots.empty())
          other = nb_end ? q->knots.back().second : q->knots.front().second;
      }
      if (std::abs(knot.second - other) > 1e-12) fail(p.side, knot.first);
    }
  }
}

GoalSpec adhoc_surrogate(const GoalSpec& goal) {
  if (goal.volumetric_only()) return goal;
  if (goal.surrogate != Surrogate::boundary_average && goal.surrogate != Surrogate::boundary_flux_average)
    throw Error("goal '" + goal.name + "' has boundary data but no volumetric surrogate");
  GoalSpec g;
  g.name = goal.name + "_surrogate";
  g.mesh_dependent = true;
  g.surrogate = goal.surrogate;
  g.region = goal.region;
  return g;
}

GoalSpec mesh_dependent_update(const GoalSpec& goal, const mesh::QuadMesh& m) {
  if (!goal.mesh_dependent) return goal;
  GoalSpec g = goal;
  g.element_density.assign(m.num_elements(), VolumePiece{});
  const Rect& d = m.domain();
  const double tol = 1e-12 * std::max(d.width(), d.height());
  if (goal.surrogate == Surrogate::point_average) {
    const Point x = goal.region.point;
    std::vector<int> hit;
    double vol = 0;
    for (int k = 0; k < m.num_elements(); ++k)
      if (m.elements()[k].box.contains(x, tol)) {
        hit.push_back(k);
        vol += m.elements()[k].area();
      }
    if (hit.empty()) throw Error("goal point (" + std::to_string(x.x) + ", " + std::to_string(x.y) + ") lies in no element");
    for (int k : hit) g.element_density[k].g1 = 1.0 / vol;
    return g;
  }
  if (goal.surrogate == Surrogate::boundary_average || goal.surrogate == Surrogate::boundary_flux_average) {
    const Side s = goal.region.side;
    const Point n = mesh::outward_normal(s);
    bool any = false;
    for (int k = 0; k < m.num_elements(); ++k) {
      const Rect& b = m.elements()[k].box;
      bool touches = false;
      switch (s) {
        case Side::bottom: touches = std::abs(b.y0 - d.y0) <= tol; break;
        case Side::right: touches = std::abs(b.x1 - d.x1) <= tol; break;
        case Side::top: touches = std::abs(b.y1 - d.y1) <= tol; break;
        case Side::left: touches = std::abs(b.x0 - d.x0) <= tol; break;
      }
      if (!touches) continue;
      any = true;
      const double h_perp = along_x(s) ? b.height() : b.width();
      const Point c = m.elements()[k].center();
      const double w = goal.region.weight.knots.empty() ? 1.0 : goal.region.weight.value(along_x(s) ? c.x : c.y);
      if (goal.surrogate == Surrogate::boundary_average) {
        g.element_density[k].g1 = w / h_perp;
      } else {
        g.element_density[k].g2x = n.x * w / h_perp;
        g.element_density[k].g2y = n.y * w / h_perp;
      }
    }
    if (!any) throw Error("goal region side touches no element");
    return g;
  }
  throw Error("mesh-dependent goal '" + goal.name + "' carries no region descriptor");
}

GoalVector goal_load_vector(const GoalSpec& goal, const fe::TrialSpace& trial) {
  const mesh::QuadMesh& m = trial.mesh();
  check_regularity(goal, m.boundary_spec());
  if (goal.mesh_dependent && static_cast<int>(goal.element_density.size()) != m.num_elements())
    throw Error("goal '" + goal.name + "' is mesh-dependent; call mesh_dependent_update on this mesh first");
  GoalVector out;
  out.free = Vector::Zero(trial.num_dofs());
  const int p = trial.p();
  const int fm = trial.field_size();

  const auto q1 = fe::gauss_legendre(p + 2);
  std::vector<double> v(fm), dx(fm), dy(fm);
  for (int k = 0; k < m.num_elements(); ++k) {
    const Rect& box = m.elements()[k].box;
    for (const auto& piece : goal.pieces_on(m, k)) {
      const Rect& r = piece.region;
      for (std::size_t i = 0; i < q1.points.size(); ++i)
        for (std::size_t j = 0; j < q1.points.size(); ++j) {
          const double x = r.x0 + 0.5 * (q1.points[i] + 1) * r.width();
          const double y = r.y0 + 0.5 * (q1.points[j] + 1) * r.height();
          const double w = 0.25 * r.area() * q1.weights[i] * q1.weights[j];
          trial.field_basis().eval(2 * (x - box.x0) / box.width() - 1, 2 * (y - box.y0) / box.height() - 1, v.data(),
                                   dx.data(), dy.data());
          for (int a = 0; a < fm; ++a) {
            out.free(trial.u_offset(k) + a) += piece.g1 * w * v[a];
            out.free(trial.sigma_offset(k) + a) += piece.g2x * w * v[a];
            out.free(trial.sigma_offset(k) + fm + a) += piece.g2y * w * v[a];
          }
        }
    }
  }

  if (goal.volumetric_only()) return out;
  std::vector<double> lv(p + 1), ld(p + 1), pv(p), pd(p);
  for (int eid = 0; eid < static_cast<int>(m.edges().size()); ++eid) {
    const mesh::Edge& e = m.edges()[eid];
    if (!e.active() || !e.boundary) continue;
    const Side dside = *e.boundary;
    const BoundaryProfile* g3 = profile_on(goal.g3_hat, dside);
    const BoundaryProfile* g4 = profile_on(goal.g4_hat, dside);
    if (!g3 && !g4) continue;
    const int k = e.owner_elements.front();
    const mesh::Element& el = m.elements()[k];
    const Side s = static_cast<Side>(side_of(el, eid));
    const double a = along_x(s) ? el.box.x0 : el.box.y0;
    const double b = along_x(s) ? el.box.x1 : el.box.y1;
    Vector gl = Vector::Zero(trial.local_dim());
    const auto locs = trial.side_uhat_locals(s);
    for (int i = 0; i <= p; ++i)
      if (g3)
        gl(locs[i]) += integrate_segment(a, b, g3->breakpoints(), 1, p + 3, [&](double c) {
          trial.uhat_basis().eval(2 * (c - a) / (b - a) - 1, lv.data(), ld.data());
          return g3->value(c) * lv[i];
        });
    for (int j = 0; j < p; ++j)
      if (g4)
        gl(trial.local_sighat(s, j)) += integrate_segment(a, b, g4->breakpoints(), 1, p + 3, [&](double c) {
          trial.sighat_basis().eval(2 * (c - a) / (b - a) - 1, pv.data(), pd.data());
          return g4->value(c) * pv[j];
        });
    const fe::ElementFold& f = trial.fold(k);
    const Vector cg = f.c.transpose() * gl;
    for (std::size_t i = 0; i < f.global_dofs.size(); ++i) out.free(f.global_dofs[i]) += cg(i);
    out.constant += gl.dot(f.offset);
  }
  return out;
}

double evaluate_qoi(const GoalVector& g, const Vector& coeffs) {
  if (coeffs.size() != g.free.size())
    throw DimensionError("coefficient vector has length " + std::to_string(coeffs.size()) + ", goal expects " +
                         std::to_string(g.free.size()));
  return g.free.dot(coeffs) + g.constant;
}

double evaluate_qoi(const GoalSpec& goal, const fe::TrialSpace& trial, const Vector& coeffs) {
  return evaluate_qoi(goal_load_vector(goal, trial), coeffs);
}

double integrate_rect(const Rect& r, const std::function<double(double, double)>& f, int panels, int points) {
  if (!nonempty(r)) return 0;
  const auto q = fe::gauss_legendre(points);
  const double hx = r.width() / panels, hy = r.height() / panels;
  double sum = 0;
  for (int i = 0; i < panels; ++i)
    for (int j = 0; j < panels; ++j) {
      double panel = 0;
      for (std::size_t a = 0; a < q.points.size(); ++a)
        for (std::size_t b = 0; b < q.points.size(); ++b)
          panel += q.weights[a] * q.weights[b] *
                   f(r.x0 + hx * (i + 0.5 * (q.points[a] + 1)), r.y0 + hy * (j + 0.5 * (q.points[b] + 1)));
      sum += 0.25 * hx * hy * panel;
    }
  return sum;
}

double exact_qoi(const GoalSpec& goal, const ManufacturedSolution& exact, int panels) {
  const Rect& d = exact.domain;
  if (goal.surrogate == Surrogate::point_average) {
    if (!d.contains(goal.region.point))
      throw ConfigError("point goal location lies outside the domain of the reference solution");
    return exact.u(goal.region.point.x, goal.region.point.y);
  }
  if (goal.mesh_dependent && goal.element_density.empty())
    throw Error("goal '" + goal.name + "' needs mesh_dependent_update before it has a value");
  double total = 0;
  auto volume_term = [&](const VolumePiece& p) {
    const Rect r = intersect(p.region, d);
    return integrate_rect(r, [&](double x, double y) {
      const Point g = exact.grad(x, y);
      return p.g1 * exact.u(x, y) + p.g2x * g.x + p.g2y * g.y;
    }, panels);
  };
  for (const auto& p : goal.volume) total += volume_term(p);
  for (const auto& p : goal.element_density)
    if (p.g1 != 0 || p.g2x != 0 || p.g2y != 0) throw Error("exact_qoi of element densities needs the mesh boxes");
  for (const auto& p : goal.g3_hat) {
    const auto [a, b] = side_range(d, p.side);
    total += integrate_segment(a, b, p.breakpoints(), panels, 8, [&](double c) {
      const Point x = side_point(d, p.side, c);
      return p.value(c) * exact.u(x.x, x.y);
    });
  }
  for (const auto& p : goal.g4_hat) {
    const auto [a, b] = side_range(d, p.side);
    const Point n = mesh::outward_normal(p.side);
    total += integrate_segment(a, b, p.breakpoints(), panels, 8, [&](double c) {
      const Point x = side_point(d, p.side, c);
      return p.value(c) * exact.flux(x, n);
    });
  }
  return total;
}

}  // namespace dpg::goals
