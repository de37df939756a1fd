#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "dpg/error.hpp"
#include "dpg/mesh/quad_mesh.hpp"

using namespace dpg;
using namespace dpg::mesh;

namespace {

int count_edges(const QuadMesh& m, bool interior) {
  int n = 0;
  for (const auto& e : m.edges())
    if (e.active() && (e.side == EdgeSide::interior) == interior) ++n;
  return n;
}

double total_area(const QuadMesh& m) {
  double a = 0;
  for (const auto& el : m.elements()) a += el.area();
  return a;
}

MarkedSet marks(std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  return MarkedSet{ids};
}

// Independent irregularity scan: for each element side, the elements touching it from outside must
// be at most one level apart.
int max_level_jump(const QuadMesh& m) {
  int worst = 0;
  const auto& els = m.elements();
  for (std::size_t a = 0; a < els.size(); ++a)
    for (std::size_t b = 0; b < els.size(); ++b) {
      if (a == b) continue;
      const Rect& r = els[a].box;
      const Rect& s = els[b].box;
      const double tol = 1e-12;
      const bool share_v = (std::abs(r.x1 - s.x0) < tol || std::abs(r.x0 - s.x1) < tol) &&
                           std::min(r.y1, s.y1) - std::max(r.y0, s.y0) > tol;
      const bool share_h = (std::abs(r.y1 - s.y0) < tol || std::abs(r.y0 - s.y1) < tol) &&
                           std::min(r.x1, s.x1) - std::max(r.x0, s.x0) > tol;
      if (share_v || share_h) worst = std::max(worst, std::abs(els[a].level - els[b].level));
    }
  return worst;
}

}  // namespace

TEST(BuildRectMesh, FourByOneCounts) {
  const auto m = build_rect_mesh({0, 4, 0, 1}, 4, 1);
  EXPECT_EQ(m.num_elements(), 4);
  EXPECT_EQ(m.vertices().size(), 10u);
  EXPECT_EQ(m.num_active_edges(), 13);
  for (int lvl : m.refinement_levels()) EXPECT_EQ(lvl, 0);
  EXPECT_TRUE(m.invariant_violations().empty());
}

TEST(BuildRectMesh, SingleElement) {
  const auto m = build_rect_mesh({0, 1, 0, 1}, 1, 1);
  EXPECT_EQ(m.num_elements(), 1);
  EXPECT_EQ(count_edges(m, false), 4);
  EXPECT_EQ(count_edges(m, true), 0);
  EXPECT_NEAR(m.elements()[0].h_k(), std::sqrt(2.0), 1e-15);
}

TEST(BuildRectMesh, TwoByOneHasOneInteriorEdge) {
  const auto m = build_rect_mesh({0, 2, 0, 1}, 2, 1);
  EXPECT_EQ(count_edges(m, true), 1);
}

TEST(BuildRectMesh, BoundaryClassification) {
  BoundarySpec bc;
  bc.sides[static_cast<int>(Side::left)] = EdgeSide::neumann;
  const auto m = build_rect_mesh({0, 4, 0, 1}, 4, 2, bc);
  for (const auto& e : m.edges()) {
    if (!e.boundary) {
      EXPECT_EQ(e.side, EdgeSide::interior);
      continue;
    }
    EXPECT_EQ(e.side, *e.boundary == Side::left ? EdgeSide::neumann : EdgeSide::dirichlet);
    EXPECT_EQ(e.owner_elements.size(), 1u);
    const Point n = outward_normal(*e.boundary);
    EXPECT_EQ(e.normal.x, n.x);
    EXPECT_EQ(e.normal.y, n.y);
  }
}

TEST(BuildRectMesh, DegenerateInputsRejected) {
  EXPECT_THROW(build_rect_mesh({0, 0, 0, 1}, 1, 1), ConfigError);
  EXPECT_THROW(build_rect_mesh({0, 1, 0, 1}, 0, 1), ConfigError);
}

TEST(MarkGreedy, ThresholdExample) {
  const auto m = mark_greedy({4, 2, 1, 0.5}, 0.5);
  EXPECT_EQ(m.element_ids, (std::vector<int>{0, 1}));
}

TEST(MarkGreedy, EqualIndicatorsMarkEverything) {
  for (double theta : {0.1, 0.5, 0.99}) EXPECT_EQ(mark_greedy({3, 3, 3}, theta).size(), 3u);
}

TEST(MarkGreedy, AllZeroGivesEmptySet) { EXPECT_TRUE(mark_greedy({0, 0, 0}, 0.5).empty()); }

TEST(MarkGreedy, MatchesLinearScanAndIsMonotone) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> ind(1 + trial);
    for (double& v : ind) v = u(gen);
    const double mx = *std::max_element(ind.begin(), ind.end());
    std::vector<int> expect;
    for (int k = 0; k < int(ind.size()); ++k)
      if (ind[k] >= 0.5 * mx) expect.push_back(k);
    EXPECT_EQ(mark_greedy(ind, 0.5).element_ids, expect);

    const auto loose = mark_greedy(ind, 0.3).element_ids;
    for (int k : mark_greedy(ind, 0.7).element_ids)
      EXPECT_TRUE(std::binary_search(loose.begin(), loose.end(), k));
  }
}

TEST(MarkGreedy, ScaleInvariant) {
  const std::vector<double> a{0.3, 1.7, 0.9, 1.2};
  std::vector<double> b = a;
  for (double& v : b) v *= 1e-7;
  EXPECT_EQ(mark_greedy(a, 0.5).element_ids, mark_greedy(b, 0.5).element_ids);
}

TEST(MarkGreedy, BadInputRejected) {
  EXPECT_THROW(mark_greedy({1, 2}, 0.0), ConfigError);
  EXPECT_THROW(mark_greedy({1, 2}, 1.0), ConfigError);
  EXPECT_THROW(mark_greedy({1, -2}, 0.5), NumericalError);
}

TEST(Refine, SingleElement) {
  const auto m0 = build_rect_mesh({0, 1, 0, 1}, 1, 1);
  const auto m1 = refine(m0, marks({0}));
  EXPECT_EQ(m1.num_elements(), 4);
  EXPECT_TRUE(m1.hanging_vertices().empty());
  for (const auto& el : m1.elements()) {
    EXPECT_EQ(el.level, 1);
    ASSERT_TRUE(el.parent.has_value());
    EXPECT_EQ(*el.parent, 0);
    EXPECT_NEAR(el.area(), 0.25, 1e-15);
  }
}

TEST(Refine, ClosureAfterRepeatedLocalRefinement) {
  const auto m0 = build_rect_mesh({0, 2, 0, 1}, 2, 1);
  const auto m1 = refine(m0, marks({0}));
  EXPECT_EQ(m1.num_elements(), 5);
  EXPECT_EQ(m1.hanging_vertices().size(), 1u);
  EXPECT_EQ(max_level_jump(m1), 1);

  // Refine the left children touching the interface; without closure they would sit two levels
  // below the right element.
  std::vector<int> touching;
  for (int k = 0; k < m1.num_elements(); ++k)
    if (m1.elements()[k].level == 1 && std::abs(m1.elements()[k].box.x1 - 1.0) < 1e-12) touching.push_back(k);
  ASSERT_EQ(touching.size(), 2u);
  const auto m2 = refine(m1, marks(touching));
  EXPECT_TRUE(m2.invariant_violations().empty());
  EXPECT_LE(max_level_jump(m2), 1);
  for (const auto& el : m2.elements())
    if (el.box.x0 >= 1.0 - 1e-12) EXPECT_GE(el.level, 1);
}

TEST(Refine, UniformFourByOne) {
  const auto m0 = build_rect_mesh({0, 4, 0, 1}, 4, 1);
  const auto m1 = refine(m0, mark_all(m0));
  EXPECT_EQ(m1.num_elements(), 16);
  EXPECT_NEAR(total_area(m1), 4.0, 1e-12 * 4.0);
  const auto m2 = refine(m1, mark_all(m1));
  EXPECT_EQ(m2.num_elements(), 64);
}

TEST(Refine, ChildEdgesInheritClassification) {
  BoundarySpec bc;
  bc.sides[static_cast<int>(Side::left)] = EdgeSide::neumann;
  auto m = build_rect_mesh({0, 4, 0, 1}, 4, 1, bc);
  for (int r = 0; r < 3; ++r) m = refine(m, marks({0}));
  for (const auto& e : m.edges()) {
    if (e.parent < 0) continue;
    EXPECT_EQ(e.side, m.edges()[e.parent].side);
  }
}

TEST(Refine, RandomSequencesKeepInvariants) {
  std::mt19937_64 gen(17);
  auto m = build_rect_mesh({0, 4, 0, 1}, 4, 1);
  for (int round = 0; round < 12; ++round) {
    std::vector<int> ids;
    std::uniform_int_distribution<int> pick(0, m.num_elements() - 1);
    for (int i = 0; i < 3; ++i) ids.push_back(pick(gen));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    m = refine(m, MarkedSet{ids});
    const auto bad = m.invariant_violations();
    EXPECT_TRUE(bad.empty()) << (bad.empty() ? "" : bad.front());
    EXPECT_LE(max_level_jump(m), 1);
    EXPECT_NEAR(total_area(m), 4.0, 1e-12 * 4.0);
    for (int v : m.hanging_vertices()) EXPECT_GE(v, 0);
  }
}

TEST(Refine, Deterministic) {
  auto run = [] {
    auto m = build_rect_mesh({0, 4, 0, 1}, 4, 1);
    m = refine(m, marks({1}));
    m = refine(m, marks({0, 4, 5}));
    return m.to_json().dump();
  };
  EXPECT_EQ(run(), run());
}

TEST(Refine, OutOfRangeMarkRejected) {
  const auto m = build_rect_mesh({0, 1, 0, 1}, 1, 1);
  EXPECT_THROW(refine(m, marks({3})), ConfigError);
}

TEST(Neighbors, ConformingCoarserFiner) {
  const auto m0 = build_rect_mesh({0, 2, 0, 1}, 2, 1);
  const auto m1 = refine(m0, marks({0}));
  int right = -1;
  for (int k = 0; k < m1.num_elements(); ++k)
    if (m1.elements()[k].level == 0) right = k;
  ASSERT_GE(right, 0);
  const auto finer = m1.neighbors(right, Side::left);
  EXPECT_EQ(finer.kind, SideNeighbors::Kind::finer);
  EXPECT_EQ(finer.elements.size(), 2u);
  EXPECT_EQ(m1.neighbors(right, Side::right).kind, SideNeighbors::Kind::boundary);
  const auto coarser = m1.neighbors(finer.elements[0], Side::right);
  EXPECT_EQ(coarser.kind, SideNeighbors::Kind::coarser);
  EXPECT_EQ(coarser.elements, std::vector<int>{right});
}

TEST(MeshJson, RoundTrip) {
  auto m = build_rect_mesh({0, 4, 0, 1}, 4, 1);
  m = refine(m, marks({0, 2}));
  m = refine(m, marks({1}));
  const auto doc = m.to_json();
  EXPECT_EQ(doc["format"], "dpg-goal-mesh");
  EXPECT_EQ(doc["version"], 1);
  const auto back = QuadMesh::from_json(doc);
  EXPECT_EQ(back.to_json().dump(), doc.dump());
  EXPECT_TRUE(back.invariant_violations().empty());
}

TEST(MeshJson, RejectsForeignDocument) {
  EXPECT_THROW(QuadMesh::from_json(nlohmann::json{{"format", "other"}}), ConfigError);
}
