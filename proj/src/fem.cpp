#include "verifem/fem.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

#include "verifem/quadrature.hpp"

namespace verifem {

FeSpace::FeSpace(MeshPtr mesh) : mesh_(std::move(mesh)) {
  if (!mesh_) throw std::invalid_argument("space needs a mesh");
}

SpacePtr make_space(MeshPtr mesh) { return std::make_shared<const FeSpace>(std::move(mesh)); }

Vec2 FeFunction::gradient(int K) const {
  const auto g = mesh().barycentric_gradients(K);
  const auto& t = mesh().triangle(K);
  return values[t[0]] * g[0] + values[t[1]] * g[1] + values[t[2]] * g[2];
}

double FeFunction::value(int K, const std::array<double, 3>& bary) const {
  const auto& t = mesh().triangle(K);
  return bary[0] * values[t[0]] + bary[1] * values[t[1]] + bary[2] * values[t[2]];
}

FeFunction zero_function(const SpacePtr& space) { return {space, Eigen::VectorXd::Zero(space->dofs())}; }

FeFunction interpolate(const SpacePtr& space, const std::function<double(const Point&)>& f) {
  FeFunction out = zero_function(space);
  for (int i = 0; i < space->dofs(); ++i) out.values[i] = f(space->mesh()->vertex(i));
  return out;
}

Eigen::Matrix3d element_stiffness(const Mesh& mesh, int K, const Mat2& A) {
  const auto g = mesh.barycentric_gradients(K);
  Eigen::Matrix3d k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k(i, j) = mesh.area(K) * g[i].dot(A * g[j]);
  return 0.5 * (k + k.transpose());
}

Eigen::Vector3d element_load(const DiffusionProblem& problem, const Mesh& mesh, int K) {
  if (problem.source.elementwise_constant())
    return Eigen::Vector3d::Constant(problem.source.on_element(mesh, K) * mesh.area(K) / 3.0);
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (const auto& q : triangle_rule(5)) {
    const double f = problem.source.at(mesh, K, mesh.map(K, q.bary));
    for (int i = 0; i < 3; ++i) out[i] += q.weight * f * q.bary[i];
  }
  return out * mesh.area(K);
}

Eigen::Vector2d edge_load(const Mesh& mesh, int e, const NeumannData& g) {
  Eigen::Vector2d out = Eigen::Vector2d::Zero();
  if (!g) return out;
  const Edge& ed = mesh.edge(e);
  const int K = ed.elements[0];
  int k = 0;
  while (mesh.element_edge(K, k) != e) ++k;
  const Vec2 n = mesh.normal(K, k);
  const Point& a = mesh.vertex(ed.vertices[0]);
  const Point& b = mesh.vertex(ed.vertices[1]);
  const double l = (b - a).norm();
  for (const auto& q : line_rule(3)) {
    const double val = g(a + q.t * (b - a), n);
    out[0] += q.weight * l * val * (1.0 - q.t);
    out[1] += q.weight * l * val * q.t;
  }
  return out;
}

LinearSystem assemble(const DiffusionProblem& problem, const FeSpace& space) {
  const Mesh& mesh = *space.mesh();
  const int n = space.dofs();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.num_elements());
  Eigen::VectorXd load = Eigen::VectorXd::Zero(n);
  for (int K = 0; K < mesh.num_elements(); ++K) {
    const auto& t = mesh.triangle(K);
    const Eigen::Matrix3d k = element_stiffness(mesh, K, problem.A(mesh, K));
    const Eigen::Vector3d f = element_load(problem, mesh, K);
    for (int i = 0; i < 3; ++i) {
      load[t[i]] += f[i];
      for (int j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], k(i, j));
    }
  }
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& ed = mesh.edge(e);
    if (ed.label != BoundaryLabel::neumann) continue;
    const Eigen::Vector2d g = edge_load(mesh, e, problem.neumann);
    load[ed.vertices[0]] += g[0];
    load[ed.vertices[1]] += g[1];
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return {std::move(m), std::move(load)};
}

FeFunction solve_system(const SpacePtr& space, const SparseMatrix& matrix, const Eigen::VectorXd& rhs) {
  const int n = space->dofs();
  std::vector<int> free_index(n, -1);
  std::vector<int> free_dofs;
  for (int i = 0; i < n; ++i)
    if (!space->is_dirichlet(i)) {
      free_index[i] = static_cast<int>(free_dofs.size());
      free_dofs.push_back(i);
    }
  const int m = static_cast<int>(free_dofs.size());
  FeFunction u = zero_function(space);
  if (m == 0) return u;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(matrix.nonZeros());
  for (int c = 0; c < matrix.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(matrix, c); it; ++it) {
      const int r = free_index[it.row()], cc = free_index[it.col()];
      if (r >= 0 && cc >= 0) trip.emplace_back(r, cc, it.value());
    }
  SparseMatrix a(m, m);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd b(m);
  for (int r = 0; r < m; ++r) b[r] = rhs[free_dofs[r]];
  if (b.norm() == 0.0) return u;
  const Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("stiffness matrix factorization failed");
  Eigen::VectorXd x = ldlt.solve(b);
  x += ldlt.solve(b - a * x);
  for (int r = 0; r < m; ++r) u.values[free_dofs[r]] = x[r];
  return u;
}

FeFunction solve(const DiffusionProblem& problem, const SpacePtr& space) {
  const LinearSystem sys = assemble(problem, *space);
  return solve_system(space, sys.matrix, sys.load);
}

ElementFlux flux(const DiffusionProblem& problem, const FeFunction& u) {
  const Mesh& mesh = u.mesh();
  ElementFlux q{u.space->mesh(), std::vector<Vec2>(mesh.num_elements())};
  for (int K = 0; K < mesh.num_elements(); ++K) q.values[K] = problem.A(mesh, K) * u.gradient(K);
  return q;
}

double bilinear(const DiffusionProblem& problem, const FeFunction& u, const FeFunction& v) {
  if (u.space->mesh() != v.space->mesh()) throw std::invalid_argument("functions live on different meshes");
  const Mesh& mesh = u.mesh();
  double s = 0.0;
  for (int K = 0; K < mesh.num_elements(); ++K)
    s += mesh.area(K) * u.gradient(K).dot(problem.A(mesh, K) * v.gradient(K));
  return s;
}

double energy_norm(const DiffusionProblem& problem, const FeFunction& v) {
  return std::sqrt(std::max(0.0, bilinear(problem, v, v)));
}

double load_functional(const DiffusionProblem& problem, const FeFunction& v) {
  const Mesh& mesh = v.mesh();
  double s = 0.0;
  for (int K = 0; K < mesh.num_elements(); ++K) {
    const Eigen::Vector3d f = element_load(problem, mesh, K);
    const auto& t = mesh.triangle(K);
    for (int i = 0; i < 3; ++i) s += f[i] * v.values[t[i]];
  }
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& ed = mesh.edge(e);
    if (ed.label != BoundaryLabel::neumann) continue;
    const Eigen::Vector2d g = edge_load(mesh, e, problem.neumann);
    s += g[0] * v.values[ed.vertices[0]] + g[1] * v.values[ed.vertices[1]];
  }
  return s;
}

double flux_norm(const DiffusionProblem& problem, const ElementFlux& p) {
  const Mesh& mesh = *p.mesh;
  double s = 0.0;
  for (int K = 0; K < mesh.num_elements(); ++K)
    s += mesh.area(K) * p.values[K].dot(problem.A(mesh, K).inverse() * p.values[K]);
  return std::sqrt(s);
}

double exact_energy_error(const DiffusionProblem& problem, const FeFunction& u) {
  if (!problem.exact) throw std::invalid_argument("problem has no exact solution");
  const Mesh& mesh = u.mesh();
  const auto& rule = triangle_rule(10);
  double s = 0.0;
  for (int K = 0; K < mesh.num_elements(); ++K) {
    const Mat2 A = problem.A(mesh, K);
    const Vec2 gh = u.gradient(K);
    double sk = 0.0;
    for (const auto& q : rule) {
      const Vec2 d = problem.exact->gradient(mesh.map(K, q.bary)) - gh;
      sk += q.weight * d.dot(A * d);
    }
    s += sk * mesh.area(K);
  }
  return std::sqrt(s);
}

double accurate_load(const DiffusionProblem& problem, const FeFunction& v) {
  const Mesh& mesh = v.mesh();
  double s = 0.0;
  const auto& rule = triangle_rule(10);
  if (!problem.source.is_zero()) {
    for (int K = 0; K < mesh.num_elements(); ++K) {
      double sk = 0.0;
      for (const auto& q : rule) sk += q.weight * problem.source.at(mesh, K, mesh.map(K, q.bary)) * v.value(K, q.bary);
      s += sk * mesh.area(K);
    }
  }
  if (problem.neumann) {
    for (int e = 0; e < mesh.num_edges(); ++e) {
      const Edge& ed = mesh.edge(e);
      if (ed.label != BoundaryLabel::neumann) continue;
      const int K = ed.elements[0];
      int k = 0;
      while (mesh.element_edge(K, k) != e) ++k;
      const Vec2 n = mesh.normal(K, k);
      const Point& a = mesh.vertex(ed.vertices[0]);
      const Point& b = mesh.vertex(ed.vertices[1]);
      const double va = v.values[ed.vertices[0]], vb = v.values[ed.vertices[1]];
      for (const auto& q : line_rule(10))
        s += q.weight * (b - a).norm() * problem.g(a + q.t * (b - a), n) * ((1.0 - q.t) * va + q.t * vb);
    }
  }
  return s;
}

double reference_energy_error(const DiffusionProblem& problem, const FeFunction& u) {
  if (!problem.exact) throw std::invalid_argument("problem has no exact solution");
  if (!problem.exact->energy_squared) return exact_energy_error(problem, u);
  const double e2 = *problem.exact->energy_squared - 2.0 * accurate_load(problem, u) + bilinear(problem, u, u);
  return std::sqrt(std::max(0.0, e2));
}

FeFunction prolong(const FeFunction& u, const SpacePtr& fine) {
  const Mesh& coarse = u.mesh();
  const Mesh& f = *fine->mesh();
  if (!f.descends_from(coarse)) throw std::invalid_argument("meshes are not nested");
  FeFunction out = zero_function(fine);
  std::vector<char> done(f.num_vertices(), 0);
  for (int K = 0; K < f.num_elements(); ++K) {
    const int P = f.ancestor_in(coarse, K);
    for (int v : f.triangle(K)) {
      if (done[v]) continue;
      done[v] = 1;
      out.values[v] = u.value(P, coarse.barycentric(P, f.vertex(v)));
    }
  }
  return out;
}

double residual_eval(const DiffusionProblem& problem, const FeFunction& u_h, const FeFunction& v) {
  const FeFunction up = v.space->mesh() == u_h.space->mesh() ? u_h : prolong(u_h, v.space);
  return load_functional(problem, v) - bilinear(problem, up, v);
}

double l2_norm(const FeFunction& v) {
  const Mesh& mesh = v.mesh();
  double s = 0.0;
  for (int K = 0; K < mesh.num_elements(); ++K) {
    const auto& t = mesh.triangle(K);
    const double a = v.values[t[0]], b = v.values[t[1]], c = v.values[t[2]];
    s += mesh.area(K) / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a);
  }
  return std::sqrt(s);
}

}  // namespace verifem
