#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "verifem/problem.hpp"

namespace verifem {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Continuous P1 space. Dirichlet dofs are the vertices touching a dirichlet edge.
class FeSpace {
 public:
  explicit FeSpace(MeshPtr mesh);
  const MeshPtr& mesh() const { return mesh_; }
  int degree() const { return 1; }
  int dofs() const { return mesh_->num_vertices(); }
  bool is_dirichlet(int i) const { return mesh_->is_dirichlet_vertex(i); }

 private:
  MeshPtr mesh_;
};

using SpacePtr = std::shared_ptr<const FeSpace>;
SpacePtr make_space(MeshPtr mesh);

struct FeFunction {
  SpacePtr space;
  Eigen::VectorXd values;

  const Mesh& mesh() const { return *space->mesh(); }
  Vec2 gradient(int K) const;
  double value(int K, const std::array<double, 3>& bary) const;
};

FeFunction zero_function(const SpacePtr& space);
// Nodal interpolant of a pointwise function.
FeFunction interpolate(const SpacePtr& space, const std::function<double(const Point&)>& f);

// Per-element constant vector field.
struct ElementFlux {
  MeshPtr mesh;
  std::vector<Vec2> values;
};

struct LinearSystem {
  SparseMatrix matrix;
  Eigen::VectorXd load;
};

Eigen::Matrix3d element_stiffness(const Mesh& mesh, int K, const Mat2& A);
// (integral of f phi_i) over K, exact for elementwise-constant f, degree-5 rule otherwise.
Eigen::Vector3d element_load(const DiffusionProblem& problem, const Mesh& mesh, int K);
// (integral of g phi_a, integral of g phi_b) over a neumann edge with sorted vertices (a, b);
// 3-point Gauss.
Eigen::Vector2d edge_load(const Mesh& mesh, int e, const NeumannData& g);

LinearSystem assemble(const DiffusionProblem& problem, const FeSpace& space);

// Preconditioned CG on the system with dirichlet rows and columns eliminated.
FeFunction solve_system(const SpacePtr& space, const SparseMatrix& matrix, const Eigen::VectorXd& rhs);
FeFunction solve(const DiffusionProblem& problem, const SpacePtr& space);

ElementFlux flux(const DiffusionProblem& problem, const FeFunction& u);

double energy_norm(const DiffusionProblem& problem, const FeFunction& v);
// B(u, v) on a common mesh.
double bilinear(const DiffusionProblem& problem, const FeFunction& u, const FeFunction& v);
// F(v): source plus neumann load.
double load_functional(const DiffusionProblem& problem, const FeFunction& v);
// |||p|||_q for a per-element constant field.
double flux_norm(const DiffusionProblem& problem, const ElementFlux& p);

// Degree-10 quadrature of the gradient difference.
double exact_energy_error(const DiffusionProblem& problem, const FeFunction& u);
// |||u - u_h|||. Uses |||u|||^2 - 2 F_exact(u_h) + B(u_h, u_h) when |||u|||^2 is known,
// otherwise exact_energy_error.
double reference_energy_error(const DiffusionProblem& problem, const FeFunction& u);
// F(v) with degree-10 element and 10-point edge quadrature.
double accurate_load(const DiffusionProblem& problem, const FeFunction& v);

// Coarse P1 function evaluated on a nested mesh.
FeFunction prolong(const FeFunction& u, const SpacePtr& fine);
// R(v) = F(v) - B(prolong(u_h), v) on v's mesh.
double residual_eval(const DiffusionProblem& problem, const FeFunction& u_h, const FeFunction& v);

// L2 norm of a P1 function (exact).
double l2_norm(const FeFunction& v);

}  // namespace verifem
