#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "verifem/mesh.hpp"

using namespace verifem;

namespace {

double total_area(const Mesh& m) {
  double a = 0.0;
  for (int K = 0; K < m.num_elements(); ++K) a += m.area(K);
  return a;
}

void expect_valid(const Mesh& m) {
  for (int K = 0; K < m.num_elements(); ++K) EXPECT_GT(m.area(K), 0.0);
  for (int e = 0; e < m.num_edges(); ++e) {
    const Edge& ed = m.edge(e);
    EXPECT_EQ(ed.on_boundary(), ed.label != BoundaryLabel::interior);
    if (!ed.on_boundary()) {
      // Antisymmetric orientation.
      int s = 0;
      for (int K : ed.elements)
        for (int k = 0; k < 3; ++k)
          if (m.element_edge(K, k) == e) s += m.sigma(K, k);
      EXPECT_EQ(s, 0);
    }
  }
  // Conformity: each vertex lies on no edge interior (no hanging nodes).
  std::vector<int> count(m.num_vertices(), 0);
  for (const auto& t : m.triangles())
    for (int v : t) ++count[v];
  for (int v = 0; v < m.num_vertices(); ++v) EXPECT_GT(count[v], 0);
  for (int e = 0; e < m.num_edges(); ++e) {
    const Point a = m.vertex(m.edge(e).vertices[0]), b = m.vertex(m.edge(e).vertices[1]);
    for (int v = 0; v < m.num_vertices(); ++v) {
      const Point p = m.vertex(v);
      const double t = (p - a).dot(b - a) / (b - a).squaredNorm();
      if (t <= 1e-12 || t >= 1 - 1e-12) continue;
      EXPECT_GT((a + t * (b - a) - p).norm(), 1e-12) << "hanging vertex " << v;
    }
  }
}

}  // namespace

TEST(UnitSquareMesh, SmallestGrid) {
  auto m = unit_square_mesh(1);
  EXPECT_EQ(m->num_vertices(), 4);
  EXPECT_EQ(m->num_elements(), 2);
  EXPECT_EQ(m->num_edges(), 5);
  EXPECT_EQ(m->num_edges_with(BoundaryLabel::interior), 1);
  EXPECT_EQ(m->num_edges_with(BoundaryLabel::dirichlet), 4);
}

TEST(UnitSquareMesh, TwoByTwoCounts) {
  auto m = unit_square_mesh(2);
  EXPECT_EQ(m->num_vertices(), 9);
  EXPECT_EQ(m->num_elements(), 8);
  EXPECT_EQ(m->num_edges(), 16);
  expect_valid(*m);
}

TEST(UnitSquareMesh, Fig1Layout) {
  auto m = unit_square_mesh(8, "fig1");
  EXPECT_EQ(m->num_elements(), 128);
  EXPECT_EQ(m->num_edges_with(BoundaryLabel::neumann), 8);
  for (const auto& e : m->edges())
    if (e.label == BoundaryLabel::neumann) {
      EXPECT_DOUBLE_EQ(m->vertex(e.vertices[0]).y(), 1.0);
      EXPECT_DOUBLE_EQ(m->vertex(e.vertices[1]).y(), 1.0);
    }
}

TEST(UnitSquareMesh, RejectsUnknownLayout) {
  EXPECT_THROW(unit_square_mesh(2, "mixed"), std::invalid_argument);
  EXPECT_THROW(unit_square_mesh(0), std::invalid_argument);
}

TEST(UnitSquareMesh, EulerCharacteristic) {
  for (int n : {1, 3, 7}) {
    auto m = unit_square_mesh(n);
    EXPECT_EQ(m->num_vertices() - m->num_edges() + m->num_elements(), 1);
  }
}

TEST(UnitSquareMesh, RefinementEdgeIsLongest) {
  auto m = unit_square_mesh(3);
  for (int K = 0; K < m->num_elements(); ++K)
    EXPECT_DOUBLE_EQ(m->edge_length(m->element_edge(K, 2)), m->diameter(K));
}

TEST(LShapeMesh, MinimalL) {
  auto m = l_shape_mesh(1);
  EXPECT_EQ(m->num_elements(), 6);
  EXPECT_NEAR(total_area(*m), 3.0, 1e-14);
}

TEST(LShapeMesh, AreaAndCounts) {
  auto m = l_shape_mesh(2);
  EXPECT_EQ(m->num_elements(), 24);
  EXPECT_NEAR(total_area(*m), 3.0, 1e-13);
  expect_valid(*m);
}

TEST(LShapeMesh, DirichletEdgesMeetTheCorner) {
  for (int n = 1; n <= 6; ++n) {
    auto m = l_shape_mesh(n);
    EXPECT_EQ(m->num_edges_with(BoundaryLabel::dirichlet), 2 * n);
    EXPECT_EQ(m->num_vertices() - m->num_edges() + m->num_elements(), 1);
  }
}

TEST(VertexPatch, Examples) {
  auto m1 = unit_square_mesh(1);
  EXPECT_EQ(m1->vertex_patch(0).size(), 2u);  // (0,0) on the diagonal
  EXPECT_EQ(m1->vertex_patch(3).size(), 2u);
  auto m2 = unit_square_mesh(2);
  EXPECT_EQ(m2->vertex_patch(4).size(), 6u);  // center
  EXPECT_EQ(m2->vertex_patch(2).size(), 1u);  // (1,0)
  EXPECT_EQ(m2->vertex_patch(6).size(), 1u);  // (0,1)
  EXPECT_THROW(m2->vertex_patch(9), std::out_of_range);
}

TEST(ElementNeighborhood, Examples) {
  auto m1 = unit_square_mesh(1);
  EXPECT_EQ(m1->element_neighborhood(0).size(), 2u);
  auto m2 = unit_square_mesh(2);
  // Element 2 is the lower triangle of cell (1,0): vertices (2,0)-(1,0)... corner (1,0).
  const auto u = m2->element_neighborhood(2);
  EXPECT_EQ(u.size(), 4u);
  for (int K = 0; K < m2->num_elements(); ++K) {
    const auto n = m2->element_neighborhood(K);
    EXPECT_TRUE(std::find(n.begin(), n.end(), K) != n.end());
  }
}

TEST(Refine, EmptyMarkingIsIdentity) {
  auto m = unit_square_mesh(2);
  auto r = refine(m, {});
  EXPECT_EQ(r->vertices(), m->vertices());
  EXPECT_EQ(r->triangles(), m->triangles());
}

TEST(Refine, BothElementsOfSmallestGrid) {
  auto m = unit_square_mesh(1);
  auto r = refine(m, {0, 1});
  EXPECT_EQ(r->num_elements(), 4);
  EXPECT_EQ(r->num_vertices(), 5);
  expect_valid(*r);
}

TEST(Refine, ClosureKeepsConformity) {
  auto m = l_shape_mesh(2);
  std::mt19937 rng(7);
  MeshPtr cur = m;
  const double gamma0 = m->quality().gamma0;
  for (int it = 0; it < 8; ++it) {
    std::set<int> marked;
    std::uniform_int_distribution<int> pick(0, cur->num_elements() - 1);
    for (int j = 0; j < 3; ++j) marked.insert(pick(rng));
    auto next = refine(cur, marked);
    EXPECT_NEAR(total_area(*next), 3.0, 3e-12);
    expect_valid(*next);
    // Every child lies in its parent.
    for (int K = 0; K < next->num_elements(); ++K) {
      const int P = next->parent_map()[K];
      for (int v : next->triangle(K)) {
        const auto b = cur->barycentric(P, next->vertex(v));
        for (double x : b) EXPECT_GE(x, -1e-12);
      }
    }
    EXPECT_LE(next->quality().gamma0, 4.0 * gamma0);
    cur = next;
  }
  EXPECT_EQ(cur->num_edges_with(BoundaryLabel::dirichlet) % 2, 0);
}

TEST(Refine, IsDeterministic) {
  auto a = refine(unit_square_mesh(4), {3, 9, 17});
  auto b = refine(unit_square_mesh(4), {3, 9, 17});
  EXPECT_EQ(a->vertices(), b->vertices());
  EXPECT_EQ(a->triangles(), b->triangles());
}

TEST(UniformRefine, Counts) {
  auto m = unit_square_mesh(1);
  auto r = uniform_refine(m);
  EXPECT_EQ(r->num_elements(), 8);
  EXPECT_DOUBLE_EQ(r->h(), m->h() / 2);
  EXPECT_EQ(uniform_refine(m, 2)->num_elements(), 32);
  expect_valid(*uniform_refine(l_shape_mesh(1), 2));
  EXPECT_EQ(uniform_refine(l_shape_mesh(2))->num_edges_with(BoundaryLabel::dirichlet), 8);
}

TEST(UniformRefine, AncestorLookup) {
  auto m = unit_square_mesh(2);
  auto r = uniform_refine(m, 2);
  for (int K = 0; K < r->num_elements(); ++K) {
    const int P = r->ancestor_in(*m, K);
    const auto b = m->barycentric(P, r->centroid(K));
    for (double x : b) EXPECT_GT(x, 0.0);
  }
  EXPECT_THROW(m->ancestor_in(*r, 0), std::invalid_argument);
}

TEST(Mesh, RejectsMissingDirichlet) {
  std::vector<Point> v{{0, 0}, {1, 0}, {0, 1}};
  BoundaryMap b{{{0, 1}, BoundaryLabel::neumann}, {{1, 2}, BoundaryLabel::neumann}, {{0, 2}, BoundaryLabel::neumann}};
  EXPECT_THROW(Mesh(v, {{0, 1, 2}}, b), std::invalid_argument);
  b[{0, 1}] = BoundaryLabel::dirichlet;
  EXPECT_NO_THROW(Mesh(v, {{0, 1, 2}}, b));
  EXPECT_THROW(Mesh(v, {{0, 2, 1}}, b), std::invalid_argument);
}

TEST(MeshQuality, RatioAtLeastOne) {
  const auto q = l_shape_mesh(3)->quality();
  for (size_t K = 0; K < q.h_K.size(); ++K) EXPECT_GE(q.h_K[K] / q.rho_K[K], 1.0);
  EXPECT_TRUE(std::isfinite(q.gamma0));
}
