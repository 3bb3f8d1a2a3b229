#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include "verifem/polynomial.hpp"
#include "verifem/report.hpp"

namespace verifem {

// Data of a residual R(v) = sum_K int_K (f v - p . grad v) + int_{Gamma_N} g v with p
// constant per element. The primal residual uses p = A grad u_h.
struct EquilibrationInput {
  DiffusionProblem problem;
  ElementFlux flux;

  const Mesh& mesh() const { return *flux.mesh; }
};

EquilibrationInput equilibration_input(const DiffusionProblem& problem, const FeFunction& u_h);

// Q_i^K = int_K (p . grad phi_i - f phi_i), with f integrated as in assembly.
double nodal_projection(int i, int K, const EquilibrationInput& input);

struct NodeSystem {
  int vertex = -1;
  std::vector<int> elements;
  std::vector<double> Q;
  // Edges through the vertex; b_hat[j] = int over edges[j] of g_Gamma phi_i.
  std::vector<int> edges;
  std::vector<double> b_hat;
  std::vector<double> b_m;
  std::vector<char> prescribed;
  double scale = 0.0;
  double residual = 0.0;
};

// Signed difference equations sum_{e in K} sigma_{e,K} b_e = Q_i^K for every K in the patch,
// neumann moments prescribed, the rest chosen to minimize sum (b - b_m)^2 / l^2.
NodeSystem solve_node_system(int i, const EquilibrationInput& input);

// Coefficients (c_a, c_b) of the P1 function on an edge of length l with moments (b_a, b_b).
Eigen::Vector2d edge_traction(double length, const Eigen::Vector2d& moments);

// g_Gamma per edge as c[e](0) phi_a + c[e](1) phi_b over the sorted edge vertices;
// g_K = sigma_{e,K} g_Gamma.
struct TractionSet {
  MeshPtr mesh;
  std::vector<Eigen::Vector2d> coefficients;
  // Per element: int_K f + int_{dK} g_K, and the scale it is measured against.
  std::vector<double> equilibrium;
  std::vector<double> equilibrium_scale;
  // Max |g - g_Gamma| over neumann edges (nonzero when g is not affine).
  double neumann_projection = 0.0;

  double on_edge(int e, const Point& x) const;
  double on_element(int K, int k, const Point& x) const;
  // Values of g_K on local edge k at its endpoints, local vertices (k+1)%3 and (k+2)%3.
  std::array<double, 2> endpoint_values(int K, int k) const;
  void write_csv(std::ostream& out) const;
};

TractionSet build_tractions(const EquilibrationInput& input);
TractionSet build_tractions(const EquilibrationInput& input, const std::vector<NodeSystem>& nodes);
std::vector<NodeSystem> solve_node_systems(const EquilibrationInput& input);

struct FluxDefect {
  double equilibrium = 0.0;
  double trace = 0.0;
};

struct EquilibratedFlux {
  PolyField field;
  std::string backend;
  std::vector<FluxDefect> defects;
  bool exact_member = false;

  Vec2 value(int K, const Point& x) const { return field.vector(K, x); }
  double max_equilibrium_defect() const;
};

// The same piecewise polynomial field expressed on a nested refinement.
EquilibratedFlux prolong(const EquilibratedFlux& q, const MeshPtr& fine);

// Nodal values of the P1 field on K whose normal trace on local edge k is affine
// with endpoint values traction[k].
std::array<Vec2, 3> analytic_element_flux(const Mesh& mesh, int K, const std::array<std::array<double, 2>, 3>& traction);

EquilibratedFlux element_flux_analytic(const EquilibrationInput& input, const TractionSet& tractions);
// q = A grad w_K with B_K(w_K, v) = int f v + int g_K v over polynomials of degree 1 + k.
EquilibratedFlux element_flux_fe(const EquilibrationInput& input, const TractionSet& tractions, int k = 3);

// E_CRE^2 = |||q - p|||_q^2 / 2.
double cre(const EquilibrationInput& input, const EquilibratedFlux& q);
EstimateReport cre_upper_bound(const EquilibrationInput& input, const EquilibratedFlux& q, const TractionSet& tractions);

struct PragerSyngeGap {
  double equality = 0.0;
  double hypercircle = 0.0;
  double value() const { return std::max(equality, hypercircle); }
};
PragerSyngeGap prager_synge_gap(const DiffusionProblem& problem, const FeFunction& u_h, const EquilibratedFlux& q);

// eta_K^2 = B_K(e_K, e_K) with B_K(e_K, v) = int f v + int g_K v - int p . grad v.
EstimateReport equilibrated_element_residual(const EquilibrationInput& input, const TractionSet& tractions, int k = 3);

}  // namespace verifem
