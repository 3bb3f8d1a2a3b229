#include "verifem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_map>

namespace verifem {

std::string to_string(BoundaryLabel label) {
  switch (label) {
    case BoundaryLabel::interior: return "interior";
    case BoundaryLabel::dirichlet: return "dirichlet";
    case BoundaryLabel::neumann: return "neumann";
  }
  return "unknown";
}

namespace {

std::int64_t pack(int a, int b) {
  const auto [lo, hi] = edge_key(a, b);
  return (static_cast<std::int64_t>(lo) << 32) | static_cast<std::uint32_t>(hi);
}

// Rotate so that the longest edge comes first, as (v0, v1).
Triangle longest_edge_first(const std::vector<Point>& v, Triangle t) {
  int best = 2;
  double len = -1.0;
  for (int k = 0; k < 3; ++k) {
    // Local edge k joins t[(k+1)%3] and t[(k+2)%3].
    const double l = (v[t[(k + 1) % 3]] - v[t[(k + 2) % 3]]).norm();
    if (l > len * (1.0 + 1e-12)) {
      len = l;
      best = k;
    }
  }
  // Bring vertex `best` to position 2.
  const int shift = (best + 1) % 3;
  return {t[shift], t[(shift + 1) % 3], t[(shift + 2) % 3]};
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, const BoundaryMap& boundary,
           MeshPtr parent, std::vector<int> parent_map, std::vector<int> generation)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      parent_(std::move(parent)),
      parent_map_(std::move(parent_map)),
      generation_(std::move(generation)) {
  const int nv = num_vertices();
  const int nt = num_elements();
  if (nt == 0) throw std::invalid_argument("mesh has no triangles");
  for (const auto& t : triangles_)
    for (int v : t)
      if (v < 0 || v >= nv) throw std::invalid_argument("triangle references a missing vertex");
  if (!parent_) {
    for (auto& t : triangles_) t = longest_edge_first(vertices_, t);
  }
  if (parent_map_.empty()) {
    parent_map_.resize(nt);
    for (int K = 0; K < nt; ++K) parent_map_[K] = K;
  }
  if (generation_.empty()) generation_.assign(nt, 0);
  if (static_cast<int>(parent_map_.size()) != nt || static_cast<int>(generation_.size()) != nt)
    throw std::invalid_argument("genealogy arrays do not match the triangle count");

  areas_.resize(nt);
  for (int K = 0; K < nt; ++K) {
    const auto& t = triangles_[K];
    areas_[K] = signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
    if (!(areas_[K] > 0.0))
      throw std::invalid_argument("triangle " + std::to_string(K) + " has non-positive area");
  }

  std::unordered_map<std::int64_t, int> lookup;
  lookup.reserve(3 * nt);
  element_edges_.resize(nt);
  for (int K = 0; K < nt; ++K) {
    const auto& t = triangles_[K];
    for (int k = 0; k < 3; ++k) {
      const int a = t[(k + 1) % 3], b = t[(k + 2) % 3];
      const auto key = pack(a, b);
      auto it = lookup.find(key);
      if (it == lookup.end()) {
        const auto [lo, hi] = edge_key(a, b);
        edges_.push_back({{lo, hi}, {K, -1}, BoundaryLabel::interior});
        it = lookup.emplace(key, num_edges() - 1).first;
      } else {
        Edge& e = edges_[it->second];
        if (e.elements[1] >= 0) throw std::invalid_argument("edge shared by more than two triangles");
        e.elements[1] = K;
      }
      element_edges_[K][k] = it->second;
    }
  }

  dirichlet_vertex_.assign(nv, 0);
  boundary_vertex_.assign(nv, 0);
  bool any_dirichlet = false;
  for (auto& e : edges_) {
    if (!e.on_boundary()) {
      if (boundary.count({e.vertices[0], e.vertices[1]}))
        throw std::invalid_argument("interior edge carries a boundary label");
      continue;
    }
    auto it = boundary.find({e.vertices[0], e.vertices[1]});
    if (it == boundary.end() || it->second == BoundaryLabel::interior)
      throw std::invalid_argument("boundary edge (" + std::to_string(e.vertices[0]) + ", " +
                                  std::to_string(e.vertices[1]) + ") has no boundary label");
    e.label = it->second;
    boundary_vertex_[e.vertices[0]] = boundary_vertex_[e.vertices[1]] = 1;
    if (e.label == BoundaryLabel::dirichlet) {
      any_dirichlet = true;
      dirichlet_vertex_[e.vertices[0]] = dirichlet_vertex_[e.vertices[1]] = 1;
    }
  }
  if (!any_dirichlet) throw std::invalid_argument("mesh needs at least one dirichlet edge");

  patch_offsets_.assign(nv + 1, 0);
  for (const auto& t : triangles_)
    for (int v : t) ++patch_offsets_[v + 1];
  for (int i = 0; i < nv; ++i) patch_offsets_[i + 1] += patch_offsets_[i];
  patch_elements_.resize(patch_offsets_[nv]);
  std::vector<int> fill(patch_offsets_.begin(), patch_offsets_.end() - 1);
  for (int K = 0; K < nt; ++K)
    for (int v : triangles_[K]) patch_elements_[fill[v]++] = K;

  vertex_edges_.assign(nv, {});
  for (int e = 0; e < num_edges(); ++e)
    for (int v : edges_[e].vertices) vertex_edges_[v].push_back(e);
}

int Mesh::local_edge(int K, int e) const {
  for (int k = 0; k < 3; ++k)
    if (element_edges_[K][k] == e) return k;
  return -1;
}

int Mesh::local_vertex(int K, int v) const {
  for (int k = 0; k < 3; ++k)
    if (triangles_[K][k] == v) return k;
  return -1;
}

int Mesh::sigma(int K, int k) const {
  const Edge& e = edges_[element_edges_[K][k]];
  if (e.on_boundary()) return 1;
  const int J = e.elements[0] == K ? e.elements[1] : e.elements[0];
  return J < K ? 1 : -1;
}

Vec2 Mesh::normal(int K, int k) const {
  const auto& t = triangles_[K];
  const Vec2 d = vertices_[t[(k + 2) % 3]] - vertices_[t[(k + 1) % 3]];
  return Vec2(d.y(), -d.x()) / d.norm();
}

double Mesh::edge_length(int e) const {
  return (vertices_[edges_[e].vertices[1]] - vertices_[edges_[e].vertices[0]]).norm();
}

double Mesh::diameter(int K) const {
  double h = 0.0;
  for (int k = 0; k < 3; ++k) h = std::max(h, edge_length(element_edges_[K][k]));
  return h;
}

Point Mesh::centroid(int K) const {
  const auto& t = triangles_[K];
  return (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
}

std::array<Vec2, 3> Mesh::barycentric_gradients(int K) const {
  const auto& t = triangles_[K];
  std::array<Vec2, 3> g;
  const double twice = 2.0 * areas_[K];
  for (int k = 0; k < 3; ++k) {
    const Vec2 d = vertices_[t[(k + 2) % 3]] - vertices_[t[(k + 1) % 3]];
    g[k] = Vec2(-d.y(), d.x()) / twice;
  }
  return g;
}

Point Mesh::map(int K, const std::array<double, 3>& bary) const {
  const auto& t = triangles_[K];
  return bary[0] * vertices_[t[0]] + bary[1] * vertices_[t[1]] + bary[2] * vertices_[t[2]];
}

std::array<double, 3> Mesh::barycentric(int K, const Point& x) const {
  const auto& t = triangles_[K];
  const Point &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
  const double twice = 2.0 * areas_[K];
  const double l0 = cross(c - b, x - b) / twice;
  const double l1 = cross(a - c, x - c) / twice;
  return {l0, l1, 1.0 - l0 - l1};
}

std::vector<int> Mesh::vertex_patch(int i) const {
  if (i < 0 || i >= num_vertices()) throw std::out_of_range("vertex id out of range");
  return {patch_elements_.begin() + patch_offsets_[i], patch_elements_.begin() + patch_offsets_[i + 1]};
}

std::vector<int> Mesh::element_neighborhood(int K) const {
  if (K < 0 || K >= num_elements()) throw std::out_of_range("element id out of range");
  std::vector<int> out;
  for (int v : triangles_[K])
    out.insert(out.end(), patch_elements_.begin() + patch_offsets_[v],
               patch_elements_.begin() + patch_offsets_[v + 1]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int Mesh::num_edges_with(BoundaryLabel label) const {
  return static_cast<int>(
      std::count_if(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.label == label; }));
}

MeshQuality Mesh::quality() const {
  MeshQuality q;
  const int nt = num_elements();
  q.h_K.resize(nt);
  q.rho_K.resize(nt);
  for (int K = 0; K < nt; ++K) {
    double perimeter = 0.0;
    for (int k = 0; k < 3; ++k) perimeter += edge_length(element_edges_[K][k]);
    q.h_K[K] = diameter(K);
    q.rho_K[K] = 4.0 * areas_[K] / perimeter;
    q.h = std::max(q.h, q.h_K[K]);
    q.gamma0 = std::max(q.gamma0, q.h_K[K] / q.rho_K[K]);
  }
  return q;
}

double Mesh::h() const {
  double h = 0.0;
  for (int K = 0; K < num_elements(); ++K) h = std::max(h, diameter(K));
  return h;
}

int Mesh::ancestor_in(const Mesh& coarse, int K) const {
  const Mesh* m = this;
  while (m != &coarse) {
    if (!m->parent_) throw std::invalid_argument("meshes are not nested");
    K = m->parent_map_[K];
    m = m->parent_.get();
  }
  return K;
}

bool Mesh::descends_from(const Mesh& coarse) const {
  for (const Mesh* m = this; m; m = m->parent_.get())
    if (m == &coarse) return true;
  return false;
}

BoundaryMap Mesh::boundary_map() const {
  BoundaryMap out;
  for (const auto& e : edges_)
    if (e.on_boundary()) out[{e.vertices[0], e.vertices[1]}] = e.label;
  return out;
}

MeshPtr unit_square_mesh(int n, const std::string& bc_layout) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (bc_layout != "all_dirichlet" && bc_layout != "fig1")
    throw std::invalid_argument("unknown boundary layout '" + bc_layout + "'");
  std::vector<Point> v;
  v.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<Triangle> t;
  t.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      t.push_back({id(i + 1, j + 1), id(i, j), id(i + 1, j)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  BoundaryMap b;
  const auto side = bc_layout == "fig1" ? BoundaryLabel::neumann : BoundaryLabel::dirichlet;
  for (int i = 0; i < n; ++i) {
    b[edge_key(id(i, 0), id(i + 1, 0))] = BoundaryLabel::dirichlet;
    b[edge_key(id(i, n), id(i + 1, n))] = side;
    b[edge_key(id(0, i), id(0, i + 1))] = BoundaryLabel::dirichlet;
    b[edge_key(id(n, i), id(n, i + 1))] = BoundaryLabel::dirichlet;
  }
  return std::make_shared<const Mesh>(std::move(v), std::move(t), b);
}

MeshPtr l_shape_mesh(int n) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  const int m = 2 * n;
  auto inside = [n](int i, int j) { return !(i >= n && j < n); };  // cell (i,j) used
  std::vector<int> id((m + 1) * (m + 1), -1);
  std::vector<Point> v;
  auto grid = [m](int i, int j) { return j * (m + 1) + i; };
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) {
      bool used = false;
      for (int dj = -1; dj <= 0; ++dj)
        for (int di = -1; di <= 0; ++di) {
          const int ci = i + di, cj = j + dj;
          if (ci >= 0 && cj >= 0 && ci < m && cj < m && inside(ci, cj)) used = true;
        }
      if (used) {
        id[grid(i, j)] = static_cast<int>(v.size());
        v.emplace_back(-1.0 + static_cast<double>(i) / n, -1.0 + static_cast<double>(j) / n);
      }
    }
  }
  std::vector<Triangle> t;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      if (!inside(i, j)) continue;
      const int p00 = id[grid(i, j)], p10 = id[grid(i + 1, j)];
      const int p01 = id[grid(i, j + 1)], p11 = id[grid(i + 1, j + 1)];
      t.push_back({p11, p00, p10});
      t.push_back({p00, p11, p01});
    }
  }
  // Label boundary edges: count cell faces, those seen once are on the boundary.
  std::map<EdgeKey, int> count;
  for (const auto& tri : t)
    for (int k = 0; k < 3; ++k) ++count[edge_key(tri[(k + 1) % 3], tri[(k + 2) % 3])];
  BoundaryMap b;
  for (const auto& [key, c] : count) {
    if (c != 1) continue;
    const Point& a = v[key.first];
    const Point& c2 = v[key.second];
    const bool on_x_axis = std::abs(a.y()) < 1e-14 && std::abs(c2.y()) < 1e-14 && a.x() >= -1e-14 &&
                           c2.x() >= -1e-14;
    const bool on_y_axis = std::abs(a.x()) < 1e-14 && std::abs(c2.x()) < 1e-14 && a.y() <= 1e-14 &&
                           c2.y() <= 1e-14;
    b[key] = (on_x_axis || on_y_axis) ? BoundaryLabel::dirichlet : BoundaryLabel::neumann;
  }
  return std::make_shared<const Mesh>(std::move(v), std::move(t), b);
}

MeshPtr refine(const MeshPtr& mesh, const std::set<int>& marked) {
  const Mesh& m = *mesh;
  for (int K : marked)
    if (K < 0 || K >= m.num_elements()) throw std::out_of_range("marked element id out of range");
  if (marked.empty()) {
    return std::make_shared<const Mesh>(m.vertices(), m.triangles(), m.boundary_map(), mesh,
                                        std::vector<int>{}, m.generations());
  }
  // Refinement edge of K is local edge 2.
  std::vector<char> split(m.num_edges(), 0);
  for (int K : marked) split[m.element_edge(K, 2)] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (int K = 0; K < m.num_elements(); ++K) {
      const auto& ee = m.element_edges(K);
      if (!split[ee[2]] && (split[ee[0]] || split[ee[1]])) {
        split[ee[2]] = 1;
        changed = true;
      }
    }
  }
  std::vector<Point> v = m.vertices();
  std::map<EdgeKey, int> midpoint;
  for (int e = 0; e < m.num_edges(); ++e) {
    if (!split[e]) continue;
    const auto& ev = m.edge(e).vertices;
    midpoint[{ev[0], ev[1]}] = static_cast<int>(v.size());
    v.push_back(0.5 * (m.vertex(ev[0]) + m.vertex(ev[1])));
  }
  auto mid = [&](int a, int b) {
    auto it = midpoint.find(edge_key(a, b));
    return it == midpoint.end() ? -1 : it->second;
  };

  std::vector<Triangle> t;
  std::vector<int> parent, gen;
  std::function<void(const Triangle&, int, int)> bisect = [&](const Triangle& tri, int P, int g) {
    const int mm = mid(tri[0], tri[1]);
    if (mm < 0) {
      t.push_back(tri);
      parent.push_back(P);
      gen.push_back(g);
      return;
    }
    bisect({tri[2], tri[0], mm}, P, g + 1);
    bisect({tri[1], tri[2], mm}, P, g + 1);
  };
  for (int K = 0; K < m.num_elements(); ++K) bisect(m.triangle(K), K, m.generation(K));

  BoundaryMap b;
  for (const auto& e : m.edges()) {
    if (!e.on_boundary()) continue;
    const int mm = mid(e.vertices[0], e.vertices[1]);
    if (mm < 0) {
      b[{e.vertices[0], e.vertices[1]}] = e.label;
    } else {
      b[edge_key(e.vertices[0], mm)] = e.label;
      b[edge_key(mm, e.vertices[1])] = e.label;
    }
  }
  return std::make_shared<const Mesh>(std::move(v), std::move(t), b, mesh, std::move(parent), std::move(gen));
}

MeshPtr uniform_refine(const MeshPtr& mesh) {
  const Mesh& m = *mesh;
  std::vector<Point> v = m.vertices();
  std::vector<int> mid(m.num_edges());
  for (int e = 0; e < m.num_edges(); ++e) {
    const auto& ev = m.edge(e).vertices;
    mid[e] = static_cast<int>(v.size());
    v.push_back(0.5 * (m.vertex(ev[0]) + m.vertex(ev[1])));
  }
  std::vector<Triangle> t;
  std::vector<int> parent, gen;
  t.reserve(4 * m.num_elements());
  for (int K = 0; K < m.num_elements(); ++K) {
    const auto& [a, b, c] = m.triangle(K);
    const auto& ee = m.element_edges(K);
    const int mbc = mid[ee[0]], mca = mid[ee[1]], mab = mid[ee[2]];
    for (const Triangle& child : {Triangle{a, mab, mca}, Triangle{mab, b, mbc}, Triangle{mca, mbc, c},
                                  Triangle{mbc, mca, mab}}) {
      t.push_back(child);
      parent.push_back(K);
      gen.push_back(m.generation(K) + 2);
    }
  }
  BoundaryMap bm;
  for (int e = 0; e < m.num_edges(); ++e) {
    const auto& ed = m.edge(e);
    if (!ed.on_boundary()) continue;
    bm[edge_key(ed.vertices[0], mid[e])] = ed.label;
    bm[edge_key(mid[e], ed.vertices[1])] = ed.label;
  }
  return std::make_shared<const Mesh>(std::move(v), std::move(t), bm, mesh, std::move(parent), std::move(gen));
}

MeshPtr uniform_refine(const MeshPtr& mesh, int times) {
  MeshPtr out = mesh;
  for (int i = 0; i < times; ++i) out = uniform_refine(out);
  return out;
}

}  // namespace verifem
