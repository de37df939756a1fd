#include "dpg/mesh/quad_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dpg/error.hpp"

namespace dpg::mesh {

const char* to_string(EdgeSide s) {
  switch (s) {
    case EdgeSide::interior: return "interior";
    case EdgeSide::dirichlet: return "dirichlet";
    case EdgeSide::neumann: return "neumann";
  }
  return "?";
}

const char* to_string(Side s) {
  switch (s) {
    case Side::bottom: return "bottom";
    case Side::right: return "right";
    case Side::top: return "top";
    case Side::left: return "left";
  }
  return "?";
}

Side side_from_string(const std::string& name) {
  if (name == "bottom") return Side::bottom;
  if (name == "right") return Side::right;
  if (name == "top") return Side::top;
  if (name == "left") return Side::left;
  throw ConfigError("unknown boundary side '" + name + "' (expected bottom, right, top, left)");
}

namespace {

EdgeSide edge_side_from_string(const std::string& name) {
  if (name == "interior") return EdgeSide::interior;
  if (name == "dirichlet") return EdgeSide::dirichlet;
  if (name == "neumann") return EdgeSide::neumann;
  throw ConfigError("unknown edge classification '" + name + "'");
}

}  // namespace

Point outward_normal(Side s) {
  switch (s) {
    case Side::bottom: return {0, -1};
    case Side::right: return {1, 0};
    case Side::top: return {0, 1};
    case Side::left: return {-1, 0};
  }
  return {};
}

BoundarySpec BoundarySpec::all(EdgeSide kind) {
  BoundarySpec b;
  b.sides.fill(kind);
  return b;
}

double Element::h_k() const { return std::hypot(box.width(), box.height()); }

int QuadMesh::add_vertex(Point p) {
  vertices_.push_back(p);
  return static_cast<int>(vertices_.size()) - 1;
}

int QuadMesh::add_edge(int v0, int v1, EdgeSide side, std::optional<Side> boundary, bool horizontal,
                       Point normal) {
  Edge e;
  e.vertex_ids = {v0, v1};
  e.side = side;
  e.boundary = boundary;
  e.horizontal = horizontal;
  e.normal = normal;
  const Point& a = vertices_[v0];
  const Point& b = vertices_[v1];
  e.h_f = std::hypot(b.x - a.x, b.y - a.y);
  edges_.push_back(e);
  return static_cast<int>(edges_.size()) - 1;
}

void QuadMesh::split_edge(int id) {
  if (edges_[id].children[0] >= 0) return;
  Edge e = edges_[id];
  const Point& a = vertices_[e.vertex_ids[0]];
  const Point& b = vertices_[e.vertex_ids[1]];
  int mid = add_vertex({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
  int c0 = add_edge(e.vertex_ids[0], mid, e.side, e.boundary, e.horizontal, e.normal);
  int c1 = add_edge(mid, e.vertex_ids[1], e.side, e.boundary, e.horizontal, e.normal);
  edges_[c0].parent = id;
  edges_[c1].parent = id;
  edges_[id].children = {c0, c1};
  edges_[id].midpoint = mid;
}

void QuadMesh::finalize() {
  for (auto& e : edges_) {
    e.owner_elements.clear();
    e.hanging_children.clear();
  }
  for (int k = 0; k < num_elements(); ++k)
    for (int s = 0; s < 4; ++s) edges_[elements_[k].edge_ids[s]].owner_elements.push_back(k);
  for (auto& e : edges_) {
    if (!e.active() || e.children[0] < 0) continue;
    if (edges_[e.children[0]].active() && edges_[e.children[1]].active())
      e.hanging_children = {e.children[0], e.children[1]};
  }
}

int QuadMesh::num_active_edges() const {
  return static_cast<int>(std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) { return e.active(); }));
}

std::vector<int> QuadMesh::refinement_levels() const {
  std::vector<int> lv;
  lv.reserve(elements_.size());
  for (const auto& el : elements_) lv.push_back(el.level);
  return lv;
}

SideNeighbors QuadMesh::neighbors(int element, Side side) const {
  const int eid = elements_.at(element).edge_ids[static_cast<int>(side)];
  const Edge& e = edges_[eid];
  SideNeighbors n;
  if (e.side != EdgeSide::interior) {
    n.kind = SideNeighbors::Kind::boundary;
    return n;
  }
  if (e.owner_elements.size() == 2) {
    n.kind = SideNeighbors::Kind::conforming;
    n.elements = {e.owner_elements[0] == element ? e.owner_elements[1] : e.owner_elements[0]};
    n.edges = {eid};
    return n;
  }
  if (!e.hanging_children.empty()) {
    n.kind = SideNeighbors::Kind::finer;
    for (int c : e.hanging_children) {
      n.elements.push_back(edges_[c].owner_elements.at(0));
      n.edges.push_back(c);
    }
    return n;
  }
  if (e.parent >= 0 && edges_[e.parent].active()) {
    n.kind = SideNeighbors::Kind::coarser;
    n.elements = {edges_[e.parent].owner_elements.at(0)};
    n.edges = {eid};
    return n;
  }
  throw NumericalError("interior edge " + std::to_string(eid) + " has no neighbor across it");
}

std::vector<int> QuadMesh::hanging_vertices() const {
  std::vector<int> out;
  for (const auto& e : edges_)
    if (!e.hanging_children.empty()) out.push_back(e.midpoint);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> QuadMesh::invariant_violations() const {
  std::vector<std::string> bad;
  auto report = [&](const std::string& s) { bad.push_back(s); };

  double area = 0;
  for (const auto& el : elements_) {
    if (!(el.area() > 0)) report("element with nonpositive area");
    area += el.area();
  }
  if (std::abs(area - domain_.area()) > 1e-12 * domain_.area()) {
    std::ostringstream os;
    os << "element areas sum to " << area << ", domain area " << domain_.area();
    report(os.str());
  }

  std::vector<int> hang_count(vertices_.size(), 0);
  for (int id = 0; id < static_cast<int>(edges_.size()); ++id) {
    const Edge& e = edges_[id];
    if (!e.active()) continue;
    const std::string tag = "edge " + std::to_string(id);
    if (e.side != EdgeSide::interior) {
      if (e.owner_elements.size() != 1) report(tag + ": boundary edge without exactly one owner");
      if (!e.hanging_children.empty()) report(tag + ": boundary edge with hanging children");
      continue;
    }
    const bool coarse_side = e.hanging_children.size() == 2;
    const bool fine_side = e.parent >= 0 && edges_[e.parent].active();
    if (e.owner_elements.size() == 2) {
      if (coarse_side || fine_side) report(tag + ": two owners and a hanging interface");
    } else if (e.owner_elements.size() == 1) {
      if (!coarse_side && !fine_side) report(tag + ": interior edge with one owner and no hanging interface");
    } else {
      report(tag + ": more than two owners");
    }
    if (coarse_side) {
      ++hang_count[e.midpoint];
      for (int c : e.hanging_children)
        if (!edges_[c].hanging_children.empty()) report(tag + ": 2-irregular interface");
    }
  }
  for (std::size_t v = 0; v < hang_count.size(); ++v)
    if (hang_count[v] > 1) report("vertex " + std::to_string(v) + " hangs on more than one coarse edge");

  for (int k = 0; k < num_elements(); ++k)
    for (int s = 0; s < 4; ++s) {
      const Edge& e = edges_[elements_[k].edge_ids[s]];
      if (e.parent >= 0 && edges_[e.parent].active()) {
        const Element& coarse = elements_[edges_[e.parent].owner_elements.at(0)];
        if (elements_[k].level - coarse.level != 1) report("neighbors differ by more than one level");
      }
    }
  return bad;
}

QuadMesh build_rect_mesh(const Rect& domain, int nx, int ny, const BoundarySpec& bc) {
  if (nx < 1 || ny < 1) throw ConfigError("grid counts must be at least 1");
  if (!(domain.width() > 0) || !(domain.height() > 0)) throw ConfigError("degenerate domain rectangle");
  QuadMesh m;
  m.domain_ = domain;
  m.bc_ = bc;
  const double hx = domain.width() / nx, hy = domain.height() / ny;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.add_vertex({i == nx ? domain.x1 : domain.x0 + i * hx, j == ny ? domain.y1 : domain.y0 + j * hy});

  // Horizontal edges h(i,j) from (i,j) to (i+1,j), then vertical v(i,j) from (i,j) to (i,j+1).
  std::vector<int> hid((nx) * (ny + 1)), vedge((nx + 1) * ny);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      std::optional<Side> b;
      if (j == 0) b = Side::bottom;
      if (j == ny) b = Side::top;
      EdgeSide cls = b ? bc.of(*b) : EdgeSide::interior;
      Point n = b ? outward_normal(*b) : Point{0, 1};
      hid[j * nx + i] = m.add_edge(vid(i, j), vid(i + 1, j), cls, b, true, n);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      std::optional<Side> b;
      if (i == 0) b = Side::left;
      if (i == nx) b = Side::right;
      EdgeSide cls = b ? bc.of(*b) : EdgeSide::interior;
      Point n = b ? outward_normal(*b) : Point{1, 0};
      vedge[j * (nx + 1) + i] = m.add_edge(vid(i, j), vid(i, j + 1), cls, b, false, n);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      Element el;
      el.vertex_ids = {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)};
      el.edge_ids = {hid[j * nx + i], vedge[j * (nx + 1) + i + 1], hid[(j + 1) * nx + i], vedge[j * (nx + 1) + i]};
      el.box = {m.vertices_[el.vertex_ids[0]].x, m.vertices_[el.vertex_ids[2]].x, m.vertices_[el.vertex_ids[0]].y,
                m.vertices_[el.vertex_ids[2]].y};
      m.elements_.push_back(el);
    }
  for (const auto& e : m.edges_)
    if (e.boundary && e.side == EdgeSide::interior) throw ConfigError("boundary edge left unclassified");
  m.finalize();
  return m;
}

MarkedSet mark_greedy(const std::vector<double>& indicators, double theta) {
  if (!(theta > 0 && theta < 1)) throw ConfigError("marking fraction must lie in (0, 1)");
  double mx = 0;
  for (double v : indicators) {
    if (!(v >= 0) || !std::isfinite(v)) throw NumericalError("indicators must be finite and nonnegative");
    mx = std::max(mx, v);
  }
  MarkedSet out;
  if (mx == 0) return out;
  const double threshold = theta * mx;
  for (std::size_t k = 0; k < indicators.size(); ++k)
    if (indicators[k] >= threshold) out.element_ids.push_back(static_cast<int>(k));
  return out;
}

MarkedSet mark_all(const QuadMesh& mesh) {
  MarkedSet out;
  out.element_ids.resize(mesh.num_elements());
  for (int k = 0; k < mesh.num_elements(); ++k) out.element_ids[k] = k;
  return out;
}

QuadMesh refine(const QuadMesh& mesh, const MarkedSet& marked) {
  const int n = mesh.num_elements();
  std::set<int> todo;
  for (int k : marked.element_ids) {
    if (k < 0 || k >= n) throw ConfigError("marked element id " + std::to_string(k) + " out of range");
    todo.insert(k);
  }

  // Closure: a refined element may not end up two levels finer than a neighbor.
  std::set<int> work = todo;
  while (!work.empty()) {
    int k = *work.begin();
    work.erase(work.begin());
    for (int s = 0; s < 4; ++s) {
      const Edge& e = mesh.edges()[mesh.elements()[k].edge_ids[s]];
      if (e.parent < 0) continue;
      const Edge& pe = mesh.edges()[e.parent];
      if (!pe.active()) continue;
      int coarse = pe.owner_elements.at(0);
      if (todo.insert(coarse).second) work.insert(coarse);
    }
  }

  QuadMesh out = mesh;
  std::vector<Element> next;
  next.reserve(mesh.elements().size() + 3 * todo.size());
  for (int k = 0; k < n; ++k) {
    const Element& el = mesh.elements()[k];
    if (!todo.count(k)) {
      Element keep = el;
      keep.parent.reset();
      next.push_back(keep);
      continue;
    }
    const auto [eb, er, et, el_] = el.edge_ids;
    for (int e : el.edge_ids) out.split_edge(e);
    const int mb = out.edges_[eb].midpoint, mr = out.edges_[er].midpoint, mt = out.edges_[et].midpoint,
              ml = out.edges_[el_].midpoint;
    const Point ctr = el.center();
    const int m = out.add_vertex(ctr);
    const int ib = out.add_edge(mb, m, EdgeSide::interior, std::nullopt, false, {1, 0});
    const int it = out.add_edge(m, mt, EdgeSide::interior, std::nullopt, false, {1, 0});
    const int il = out.add_edge(ml, m, EdgeSide::interior, std::nullopt, true, {0, 1});
    const int ir = out.add_edge(m, mr, EdgeSide::interior, std::nullopt, true, {0, 1});
    const auto cb = out.edges_[eb].children, cr = out.edges_[er].children, ct = out.edges_[et].children,
               cl = out.edges_[el_].children;
    const Rect& bx = el.box;
    const double xm = ctr.x, ym = ctr.y;

    auto child = [&](std::array<int, 4> v, std::array<int, 4> e, Rect box) {
      Element ch;
      ch.vertex_ids = v;
      ch.edge_ids = e;
      ch.level = el.level + 1;
      ch.box = box;
      ch.parent = k;
      next.push_back(ch);
    };
    child({el.vertex_ids[0], mb, m, ml}, {cb[0], ib, il, cl[0]}, {bx.x0, xm, bx.y0, ym});
    child({mb, el.vertex_ids[1], mr, m}, {cb[1], cr[0], ir, ib}, {xm, bx.x1, bx.y0, ym});
    child({m, mr, el.vertex_ids[2], mt}, {ir, cr[1], ct[1], it}, {xm, bx.x1, ym, bx.y1});
    child({ml, m, mt, el.vertex_ids[3]}, {il, it, ct[0], cl[1]}, {bx.x0, xm, ym, bx.y1});
  }
  out.elements_ = std::move(next);
  out.finalize();
  return out;
}

nlohmann::json QuadMesh::to_json() const {
  nlohmann::json doc;
  doc["format"] = "dpg-goal-mesh";
  doc["version"] = 1;
  doc["domain"] = {{"x0", domain_.x0}, {"x1", domain_.x1}, {"y0", domain_.y0}, {"y1", domain_.y1}};
  nlohmann::json bc = nlohmann::json::object();
  for (int s = 0; s < 4; ++s) bc[to_string(static_cast<Side>(s))] = to_string(bc_.sides[s]);
  doc["boundary"] = bc;
  nlohmann::json verts = nlohmann::json::array();
  for (const auto& p : vertices_) verts.push_back({p.x, p.y});
  doc["vertices"] = verts;
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    nlohmann::json je;
    je["id"] = i;
    je["vertices"] = {e.vertex_ids[0], e.vertex_ids[1]};
    je["side"] = to_string(e.side);
    je["boundary"] = e.boundary ? nlohmann::json(to_string(*e.boundary)) : nlohmann::json(nullptr);
    je["owners"] = e.owner_elements;
    je["length"] = e.h_f;
    je["parent"] = e.parent;
    je["children"] = {e.children[0], e.children[1]};
    je["hanging_children"] = e.hanging_children;
    edges.push_back(je);
  }
  doc["edges"] = edges;
  nlohmann::json elems = nlohmann::json::array();
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    const Element& el = elements_[k];
    nlohmann::json jk;
    jk["id"] = k;
    jk["vertices"] = el.vertex_ids;
    jk["edges"] = el.edge_ids;
    jk["level"] = el.level;
    jk["parent"] = el.parent ? nlohmann::json(*el.parent) : nlohmann::json(nullptr);
    jk["box"] = {el.box.x0, el.box.x1, el.box.y0, el.box.y1};
    elems.push_back(jk);
  }
  doc["elements"] = elems;
  return doc;
}

QuadMesh QuadMesh::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "dpg-goal-mesh") throw ConfigError("not a dpg-goal mesh document");
  if (doc.value("version", 0) != 1) throw ConfigError("unsupported mesh document version");
  QuadMesh m;
  const auto& d = doc.at("domain");
  m.domain_ = {d.at("x0"), d.at("x1"), d.at("y0"), d.at("y1")};
  for (int s = 0; s < 4; ++s)
    m.bc_.sides[s] = edge_side_from_string(doc.at("boundary").at(to_string(static_cast<Side>(s))));
  for (const auto& p : doc.at("vertices")) m.vertices_.push_back({p.at(0), p.at(1)});
  for (const auto& je : doc.at("edges")) {
    Edge e;
    e.vertex_ids = {je.at("vertices").at(0), je.at("vertices").at(1)};
    e.side = edge_side_from_string(je.at("side"));
    if (!je.at("boundary").is_null()) e.boundary = side_from_string(je.at("boundary"));
    const Point& a = m.vertices_.at(e.vertex_ids[0]);
    const Point& b = m.vertices_.at(e.vertex_ids[1]);
    e.horizontal = a.y == b.y;
    e.normal = e.boundary ? outward_normal(*e.boundary) : (e.horizontal ? Point{0, 1} : Point{1, 0});
    e.h_f = je.at("length");
    e.parent = je.at("parent");
    e.children = {je.at("children").at(0), je.at("children").at(1)};
    m.edges_.push_back(e);
  }
  for (auto& e : m.edges_)
    if (e.children[0] >= 0) e.midpoint = m.edges_[e.children[0]].vertex_ids[1];
  for (const auto& jk : doc.at("elements")) {
    Element el;
    for (int i = 0; i < 4; ++i) {
      el.vertex_ids[i] = jk.at("vertices").at(i);
      el.edge_ids[i] = jk.at("edges").at(i);
    }
    el.level = jk.at("level");
    if (!jk.at("parent").is_null()) el.parent = jk.at("parent").get<int>();
    const auto& b = jk.at("box");
    el.box = {b.at(0), b.at(1), b.at(2), b.at(3)};
    m.elements_.push_back(el);
  }
  m.finalize();
  return m;
}

}  // namespace dpg::mesh
