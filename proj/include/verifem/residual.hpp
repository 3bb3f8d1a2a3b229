#pragma once

#include "verifem/fem.hpp"
#include "verifem/polynomial.hpp"
#include "verifem/report.hpp"

namespace verifem {

// Interior residual r_K = f + div(A grad u_h) and edge residual t per edge:
// q1.n1 + q2.n2 on interior edges, q.n - g on neumann edges, unused on dirichlet edges.
struct ResidualData {
  MeshPtr mesh;
  SourceTerm source;
  NeumannData neumann;
  // Interior edges: the jump. Neumann edges: q.n (g is subtracted on evaluation).
  std::vector<double> edge_flux;
  std::vector<double> beta;

  double r(int K, const Point& x) const { return source.at(*mesh, K, x); }
  double t(int e, const Point& x) const;
  bool constant_interior_residual() const { return source.elementwise_constant(); }
};

ResidualData residual_data(const DiffusionProblem& problem, const FeFunction& u_h);

// eta_K^2 = h_K^2 ||r_K||^2 + sum over edges of beta l ||t||^2. Unscaled indicator.
EstimateReport explicit_indicators(const ResidualData& data);

struct PatchSolution {
  MeshPtr mesh;
  int vertex = -1;
  int degree = 3;
  std::vector<int> elements;
  // Monomial coefficients of z_i on each patch element, in that element's frame.
  std::vector<Eigen::VectorXd> coefficients;
  bool mean_zero = false;
  double mean = 0.0;
};

// Galerkin solve of B(z_i, v) = R(v phi_i) in continuous P(1+k) on the vertex patch.
PatchSolution flux_free_patch_solve(int i, const ResidualData& data, const DiffusionProblem& problem, int k = 2);
std::vector<PatchSolution> flux_free_patches(const ResidualData& data, const DiffusionProblem& problem, int k = 2);

// sqrt(B_brok(sum z_i, sum z_i)).
EstimateReport flux_free_estimate(const DiffusionProblem& problem, const std::vector<PatchSolution>& patches);

// sum of z_i phi_i interpolated as P1 on `levels` uniform refinements of the mesh of u_h.
FeFunction flux_free_test_function(const std::vector<PatchSolution>& patches, const FeFunction& u_h, int levels = 2);
// |R(v)| / |||v||| for v = flux_free_test_function(...). The relative gap between the
// interpolated and exact energy of v is stored as "interpolation_defect".
EstimateReport flux_free_lower_bound(const DiffusionProblem& problem, const std::vector<PatchSolution>& patches,
                                     const FeFunction& u_h, int levels = 2);

}  // namespace verifem
