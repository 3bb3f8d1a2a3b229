#pragma once

#include "verifem/fem.hpp"
#include "verifem/report.hpp"

namespace verifem {

// Continuous piecewise-P1 vector field given by its nodal values.
struct RecoveredFlux {
  MeshPtr mesh;
  std::vector<Vec2> nodal;

  Vec2 value(int K, const std::array<double, 3>& bary) const;
  Vec2 value(int K, const Point& x) const { return value(K, mesh->barycentric(K, x)); }
  double divergence(int K) const;
};

RecoveredFlux zz_average(const ElementFlux& q_h);
// Affine least-squares fit to centroid values on every vertex patch; nodes average
// the fits of the patches containing them.
RecoveredFlux spr_recover(const ElementFlux& q_h);

EstimateReport recovery_estimate(const DiffusionProblem& problem, const RecoveredFlux& q_star, const ElementFlux& q_h,
                                 const std::string& name = "recovery");

// u_hstar lives on uniform_refine(mesh of u_h).
double richardson_estimate(const DiffusionProblem& problem, const FeFunction& u_h, const FeFunction& u_hstar,
                           double alpha = 1.0);
double aubin_nitsche_constant(const DiffusionProblem& problem, const FeFunction& u_h, const FeFunction& u_hstar,
                              double alpha = 1.0);

// |||q* - q_h|||_q + C h ||f + div q*||_0, with the neumann mismatch recorded.
EstimateReport recovery_guaranteed_bound(const DiffusionProblem& problem, const RecoveredFlux& q_star,
                                         const ElementFlux& q_h, double C);

// sqrt(max(0, -2 J(w - u_h))) with J(v) = B(v, v) / 2 - R(v) on w's mesh.
EstimateReport energy_lower_bound(const DiffusionProblem& problem, const FeFunction& w, const FeFunction& u_h);

}  // namespace verifem
