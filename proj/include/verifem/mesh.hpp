#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "verifem/geometry.hpp"

namespace verifem {

enum class BoundaryLabel : std::uint8_t { interior, dirichlet, neumann };

std::string to_string(BoundaryLabel label);

struct Edge {
  std::array<int, 2> vertices;  // sorted
  std::array<int, 2> elements;  // elements[1] == -1 on the boundary
  BoundaryLabel label = BoundaryLabel::interior;

  bool on_boundary() const { return elements[1] < 0; }
};

struct MeshQuality {
  double h = 0.0;
  std::vector<double> h_K;
  std::vector<double> rho_K;
  double gamma0 = 0.0;
};

using Triangle = std::array<int, 3>;
using EdgeKey = std::pair<int, int>;
using BoundaryMap = std::map<EdgeKey, BoundaryLabel>;

inline EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

class Mesh;
using MeshPtr = std::shared_ptr<const Mesh>;

// Conforming triangulation. Triangles are counterclockwise; (v0, v1) is the
// refinement edge and v2 the newest vertex. Local edge k is opposite vertex k.
class Mesh {
 public:
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, const BoundaryMap& boundary,
       MeshPtr parent = nullptr, std::vector<int> parent_map = {}, std::vector<int> generation = {});

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }

  const Point& vertex(int i) const { return vertices_[i]; }
  const Triangle& triangle(int K) const { return triangles_[K]; }
  const Edge& edge(int e) const { return edges_[e]; }

  // Global edge id of local edge k of K.
  int element_edge(int K, int k) const { return element_edges_[K][k]; }
  const std::array<int, 3>& element_edges(int K) const { return element_edges_[K]; }
  // Local index of global edge e in K, -1 when e is not an edge of K.
  int local_edge(int K, int e) const;
  // Local index of vertex v in K, -1 when absent.
  int local_vertex(int K, int v) const;

  // Orientation sign: -1 when the neighbor across the edge has a larger id,
  // +1 when it has a smaller id and on every boundary edge.
  int sigma(int K, int k) const;

  // Unit outward normal of local edge k.
  Vec2 normal(int K, int k) const;
  double edge_length(int e) const;
  double area(int K) const { return areas_[K]; }
  double diameter(int K) const;
  Point centroid(int K) const;
  // Gradients of the three barycentric coordinates.
  std::array<Vec2, 3> barycentric_gradients(int K) const;
  Point map(int K, const std::array<double, 3>& bary) const;
  std::array<double, 3> barycentric(int K, const Point& x) const;

  std::vector<int> vertex_patch(int i) const;
  std::vector<int> element_neighborhood(int K) const;
  // Edges incident to vertex i.
  const std::vector<int>& vertex_edges(int i) const { return vertex_edges_[i]; }

  bool is_dirichlet_vertex(int i) const { return dirichlet_vertex_[i] != 0; }
  bool is_boundary_vertex(int i) const { return boundary_vertex_[i] != 0; }
  int num_edges_with(BoundaryLabel label) const;

  MeshQuality quality() const;
  double h() const;

  const MeshPtr& parent() const { return parent_; }
  // Parent element of each element (identity on root meshes).
  const std::vector<int>& parent_map() const { return parent_map_; }
  int generation(int K) const { return generation_[K]; }
  const std::vector<int>& generations() const { return generation_; }

  // Ancestor of element K in `coarse`, which must appear in the parent chain
  // (or be this mesh). Throws when the meshes are not nested.
  int ancestor_in(const Mesh& coarse, int K) const;
  bool descends_from(const Mesh& coarse) const;

  BoundaryMap boundary_map() const;

 private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> element_edges_;
  std::vector<double> areas_;
  std::vector<int> patch_offsets_;
  std::vector<int> patch_elements_;
  std::vector<std::vector<int>> vertex_edges_;
  std::vector<char> dirichlet_vertex_;
  std::vector<char> boundary_vertex_;
  MeshPtr parent_;
  std::vector<int> parent_map_;
  std::vector<int> generation_;
};

// 2n^2 triangles, each cell split along its lower-left to upper-right diagonal.
// Layouts: "all_dirichlet", and "fig1" (top side neumann, others dirichlet).
MeshPtr unit_square_mesh(int n, const std::string& bc_layout = "all_dirichlet");

// (-1,1)^2 minus [0,1)x(-1,0], 2n x 2n cells per unit length pair. The two edges
// meeting at the re-entrant corner are dirichlet, the rest neumann.
MeshPtr l_shape_mesh(int n);

// Newest-vertex bisection of the marked elements plus conforming closure.
MeshPtr refine(const MeshPtr& mesh, const std::set<int>& marked);

// Red refinement: every triangle split into 4 through its edge midpoints.
MeshPtr uniform_refine(const MeshPtr& mesh);
MeshPtr uniform_refine(const MeshPtr& mesh, int times);

}  // namespace verifem
