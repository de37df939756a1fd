#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dpg::mesh {

struct Point {
  double x = 0;
  double y = 0;
};

struct Rect {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(Point p, double tol = 0) const {
    return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
  }
};

enum class EdgeSide { interior, dirichlet, neumann };

// Element sides and domain sides share this order.
enum class Side { bottom = 0, right = 1, top = 2, left = 3 };

const char* to_string(EdgeSide s);
const char* to_string(Side s);
Side side_from_string(const std::string& name);

// Outward unit normal of a rectangle side.
Point outward_normal(Side s);

struct BoundarySpec {
  std::array<EdgeSide, 4> sides{EdgeSide::dirichlet, EdgeSide::dirichlet, EdgeSide::dirichlet,
                                EdgeSide::dirichlet};
  EdgeSide of(Side s) const { return sides[static_cast<int>(s)]; }
  static BoundarySpec all(EdgeSide kind);
};

struct Element {
  std::array<int, 4> vertex_ids{};  // counterclockwise from the lower-left corner
  std::array<int, 4> edge_ids{};    // bottom, right, top, left
  int level = 0;
  Rect box;
  std::optional<int> parent;  // id in the mesh this one was refined from
  double h_k() const;         // diameter
  double area() const { return box.area(); }
  Point center() const { return {0.5 * (box.x0 + box.x1), 0.5 * (box.y0 + box.y1)}; }
};

struct Edge {
  std::array<int, 2> vertex_ids{};  // ordered by increasing coordinate
  EdgeSide side = EdgeSide::interior;
  std::optional<Side> boundary;  // domain side for boundary edges
  bool horizontal = true;
  Point normal;  // fixed orientation for signed traces: outward on the boundary, +x or +y inside
  std::vector<int> owner_elements;
  double h_f = 0;
  std::vector<int> hanging_children;  // two active children across a hanging interface
  int parent = -1;
  std::array<int, 2> children{-1, -1};
  int midpoint = -1;
  bool active() const { return !owner_elements.empty(); }
};

// What lies across one side of an element.
struct SideNeighbors {
  enum class Kind { boundary, conforming, coarser, finer } kind = Kind::boundary;
  std::vector<int> elements;  // one for conforming/coarser, two for finer (ordered along the edge)
  std::vector<int> edges;     // edges carrying the interface on the fine side
};

struct MarkedSet;

class QuadMesh {
 public:
  QuadMesh() = default;

  const Rect& domain() const { return domain_; }
  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Element>& elements() const { return elements_; }
  // All edges ever created; inactive ones (no owners) are interior to refined regions.
  const std::vector<Edge>& edges() const { return edges_; }
  const BoundarySpec& boundary_spec() const { return bc_; }

  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_active_edges() const;
  std::vector<int> refinement_levels() const;

  SideNeighbors neighbors(int element, Side side) const;
  // Vertices lying at the midpoint of an active edge whose halves are also active.
  std::vector<int> hanging_vertices() const;

  // Empty when every mesh invariant holds.
  std::vector<std::string> invariant_violations() const;

  nlohmann::json to_json() const;
  static QuadMesh from_json(const nlohmann::json& doc);

 private:
  friend QuadMesh build_rect_mesh(const Rect&, int, int, const BoundarySpec&);
  friend QuadMesh refine(const QuadMesh&, const MarkedSet&);

  int add_vertex(Point p);
  int add_edge(int v0, int v1, EdgeSide side, std::optional<Side> boundary, bool horizontal, Point normal);
  void split_edge(int e);
  void finalize();

  Rect domain_;
  BoundarySpec bc_;
  std::vector<Point> vertices_;
  std::vector<Element> elements_;
  std::vector<Edge> edges_;
};

struct MarkedSet {
  std::vector<int> element_ids;  // sorted, unique
  bool empty() const { return element_ids.empty(); }
  std::size_t size() const { return element_ids.size(); }
};

QuadMesh build_rect_mesh(const Rect& domain, int nx, int ny, const BoundarySpec& bc = {});

MarkedSet mark_greedy(const std::vector<double>& indicators, double theta);
MarkedSet mark_all(const QuadMesh& mesh);

// Quadrisects marked elements, then coarser neighbors until the mesh is 1-irregular.
QuadMesh refine(const QuadMesh& mesh, const MarkedSet& marked);

}  // namespace dpg::mesh
