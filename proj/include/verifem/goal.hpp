#pragma once

#include <string>
#include <vector>

#include "verifem/equilibration.hpp"

namespace verifem {

// Q(v) = int (f_Q v + q_Q . grad v) + int_{Gamma_N} g_Q v + int A grad u_Q . grad v.
// The flux weight q_Q is constant per element.
struct QuantityOfInterest {
  std::string name = "qoi";
  SourceTerm body;
  SourceTerm flux_x;
  SourceTerm flux_y;
  NeumannData traction;
  // Must vanish on the neumann boundary.
  std::function<double(const Point&)> pre_primal;

  bool empty() const { return body.is_zero() && flux_x.is_zero() && flux_y.is_zero() && !traction && !pre_primal; }
  Vec2 flux_weight(const Mesh& mesh, int K) const;
};

// Average of v over the union of the given elements of `mesh` (inherited by refinements).
QuantityOfInterest subdomain_average(const MeshPtr& mesh, const std::vector<int>& elements);
// Elements whose centroid lies in [x0, x1] x [y0, y1].
QuantityOfInterest subdomain_average(const MeshPtr& mesh, double x0, double x1, double y0, double y1);
// Average of grad v . direction over the union of the elements.
QuantityOfInterest flux_average(const MeshPtr& mesh, const std::vector<int>& elements, const Vec2& direction);

double qoi_eval(const DiffusionProblem& problem, const QuantityOfInterest& Q, const FeFunction& v);

FeFunction solve_adjoint(const DiffusionProblem& problem, const QuantityOfInterest& Q, const SpacePtr& space);

// R(u_+) for an adjoint solution on a nested refinement.
double dwr_estimate(const DiffusionProblem& problem, const FeFunction& u_h, const FeFunction& adjoint_plus);

GoalBounds cs_goal_bound(double q_h, const EstimateReport& primal, const EstimateReport& adjoint);

enum class FluxBackend { automatic, analytic, fe };

// One equilibrated side of the goal computation: solution, tractions, flux and its CRE report.
struct FluxSide {
  FeFunction solution;
  EquilibrationInput input;
  TractionSet tractions;
  EquilibratedFlux flux;
  EstimateReport report;

  // q_hat - p: the field whose energy is 2 E_CRE^2.
  Vec2 difference(int K, const Point& x) const { return Vec2(flux.value(K, x) - input.flux.values[K]); }
  double cre() const { return report.eta / std::sqrt(2.0); }
};

FluxSide make_side(EquilibrationInput input, FeFunction solution, TractionSet tractions, EquilibratedFlux flux);
FluxSide equilibrate(const EquilibrationInput& input, const FeFunction& solution, FluxBackend backend = FluxBackend::automatic,
                     int k = 3);
FluxSide primal_side(const DiffusionProblem& problem, const FeFunction& u_h, FluxBackend backend = FluxBackend::automatic,
                     int k = 3);

// Adjoint residual data: source f_Q, neumann g_Q and p = A grad u - q_Q - A grad u_Q.
DiffusionProblem adjoint_problem(const DiffusionProblem& problem, const QuantityOfInterest& Q);
EquilibrationInput adjoint_input(const DiffusionProblem& problem, const QuantityOfInterest& Q, const FeFunction& adjoint);
FluxSide adjoint_side(const DiffusionProblem& problem, const QuantityOfInterest& Q, const FeFunction& adjoint,
                      FluxBackend backend = FluxBackend::automatic, int k = 3);

struct GoalCre {
  GoalBounds bounds;
  // |Q(e)| <= 2 E E~, centered at Q(u_h).
  GoalBounds weak;
  double E = 0.0;
  double E_adjoint = 0.0;
  std::vector<double> C_K;
  std::vector<double> E2_K;
  std::vector<double> E2_adjoint_K;
};

GoalCre cre_goal_bound(const DiffusionProblem& problem, double q_h, const FluxSide& primal, const FluxSide& adjoint);

// Adjoint side on a nested refinement of the primal mesh.
GoalBounds enriched_cre_goal_bound(const DiffusionProblem& problem, double q_h, const FluxSide& primal,
                                   const FluxSide& adjoint_plus);

struct GoalIndicators {
  int theta = 1;
  std::vector<double> values;
  std::vector<double> eta_K;
};
GoalIndicators local_goal_indicators(const GoalCre& cre);

struct ChiBounds {
  double s = 1.0;
  double plus_low = 0.0;
  double plus_upp = 0.0;
  double minus_low = 0.0;
  double minus_upp = 0.0;
  bool guaranteed = false;
  std::vector<std::string> caveats;
};

// Bounds on |||s e +- e~ / s|||^2: upper from the combined equilibrated fluxes, lower from
// the refined primal and adjoint solutions.
ChiBounds parallelogram_chi(const DiffusionProblem& problem, const QuantityOfInterest& Q, const FluxSide& primal,
                            const FluxSide& adjoint, const FeFunction& u_plus, const FeFunction& adjoint_plus, double s);
GoalBounds parallelogram_bound(double q_h, const ChiBounds& chi);
double optimal_scaling(const FluxSide& primal, const FluxSide& adjoint);

}  // namespace verifem
