#include "verifem/goal.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "verifem/quadrature.hpp"

namespace verifem {

Vec2 QuantityOfInterest::flux_weight(const Mesh& mesh, int K) const {
  return Vec2(flux_x.on_element(mesh, K), flux_y.on_element(mesh, K));
}

namespace {

std::vector<double> indicator_values(const Mesh& m, const std::vector<int>& elements, double& area) {
  std::vector<double> v(m.num_elements(), 0.0);
  area = 0.0;
  for (int K : elements) {
    if (K < 0 || K >= m.num_elements()) throw std::invalid_argument("element id out of range");
    if (v[K] == 0.0) area += m.area(K);
    v[K] = 1.0;
  }
  if (area <= 0.0) throw std::invalid_argument("empty subdomain");
  return v;
}

FeFunction pre_primal_on(const QuantityOfInterest& Q, const SpacePtr& space) {
  const FeFunction u = interpolate(space, Q.pre_primal);
  const Mesh& m = *space->mesh();
  for (const Edge& e : m.edges())
    if (e.label == BoundaryLabel::neumann)
      for (int v : e.vertices)
        if (std::abs(u.values[v]) > 1e-12) throw std::invalid_argument("pre-primal field must vanish on the neumann boundary");
  return u;
}

}  // namespace

QuantityOfInterest subdomain_average(const MeshPtr& mesh, const std::vector<int>& elements) {
  double area = 0.0;
  auto v = indicator_values(*mesh, elements, area);
  for (double& x : v) x /= area;
  QuantityOfInterest Q;
  Q.name = "subdomain_average";
  Q.body = SourceTerm::piecewise(mesh, std::move(v));
  return Q;
}

QuantityOfInterest subdomain_average(const MeshPtr& mesh, double x0, double x1, double y0, double y1) {
  std::vector<int> elements;
  for (int K = 0; K < mesh->num_elements(); ++K) {
    const Point c = mesh->centroid(K);
    if (c.x() >= x0 && c.x() <= x1 && c.y() >= y0 && c.y() <= y1) elements.push_back(K);
  }
  return subdomain_average(mesh, elements);
}

QuantityOfInterest flux_average(const MeshPtr& mesh, const std::vector<int>& elements, const Vec2& direction) {
  double area = 0.0;
  const auto v = indicator_values(*mesh, elements, area);
  std::vector<double> vx(v.size()), vy(v.size());
  for (size_t K = 0; K < v.size(); ++K) {
    vx[K] = v[K] * direction.x() / area;
    vy[K] = v[K] * direction.y() / area;
  }
  QuantityOfInterest Q;
  Q.name = "flux_average";
  Q.flux_x = SourceTerm::piecewise(mesh, std::move(vx));
  Q.flux_y = SourceTerm::piecewise(mesh, std::move(vy));
  return Q;
}

DiffusionProblem adjoint_problem(const DiffusionProblem& problem, const QuantityOfInterest& Q) {
  if (!Q.flux_x.elementwise_constant() || !Q.flux_y.elementwise_constant())
    throw std::invalid_argument("flux weight must be constant per element");
  DiffusionProblem p;
  p.name = problem.name + "_adjoint";
  p.coefficient = problem.coefficient;
  p.source = Q.body;
  p.neumann = Q.traction;
  return p;
}

double qoi_eval(const DiffusionProblem& problem, const QuantityOfInterest& Q, const FeFunction& v) {
  const DiffusionProblem adj = adjoint_problem(problem, Q);
  const Mesh& m = v.mesh();
  double s = 0.0;
  for (int K = 0; K < m.num_elements(); ++K) {
    const auto& t = m.triangle(K);
    if (!Q.body.is_zero()) {
      if (Q.body.elementwise_constant()) {
        s += Q.body.on_element(m, K) * m.area(K) * (v.values[t[0]] + v.values[t[1]] + v.values[t[2]]) / 3.0;
      } else {
        double b = 0.0;
        for (const auto& q : triangle_rule(5)) b += q.weight * Q.body.at(m, K, m.map(K, q.bary)) * v.value(K, q.bary);
        s += b * m.area(K);
      }
    }
    s += m.area(K) * Q.flux_weight(m, K).dot(v.gradient(K));
  }
  if (Q.traction)
    for (int e = 0; e < m.num_edges(); ++e) {
      const Edge& ed = m.edge(e);
      if (ed.label != BoundaryLabel::neumann) continue;
      const Eigen::Vector2d g = edge_load(m, e, Q.traction);
      s += g[0] * v.values[ed.vertices[0]] + g[1] * v.values[ed.vertices[1]];
    }
  if (Q.pre_primal) s += bilinear(adj, pre_primal_on(Q, v.space), v);
  return s;
}

FeFunction solve_adjoint(const DiffusionProblem& problem, const QuantityOfInterest& Q, const SpacePtr& space) {
  const DiffusionProblem adj = adjoint_problem(problem, Q);
  LinearSystem sys = assemble(adj, *space);
  const Mesh& m = *space->mesh();
  for (int K = 0; K < m.num_elements(); ++K) {
    const Vec2 w = Q.flux_weight(m, K);
    if (w.isZero()) continue;
    const auto g = m.barycentric_gradients(K);
    const auto& t = m.triangle(K);
    for (int i = 0; i < 3; ++i) sys.load[t[i]] += m.area(K) * w.dot(g[i]);
  }
  if (Q.pre_primal) sys.load += sys.matrix * pre_primal_on(Q, space).values;
  return solve_system(space, sys.matrix, sys.load);
}

double dwr_estimate(const DiffusionProblem& problem, const FeFunction& u_h, const FeFunction& adjoint_plus) {
  if (adjoint_plus.space->mesh() == u_h.space->mesh() || !adjoint_plus.mesh().descends_from(u_h.mesh()))
    throw std::invalid_argument("adjoint must live on a strict refinement of the primal mesh");
  return residual_eval(problem, u_h, adjoint_plus);
}

GoalBounds cs_goal_bound(double q_h, const EstimateReport& primal, const EstimateReport& adjoint) {
  if (primal.kind != BoundKind::guaranteed_upper || adjoint.kind != BoundKind::guaranteed_upper)
    throw std::invalid_argument("Cauchy-Schwarz goal bound needs two guaranteed upper bounds");
  GoalBounds b = centered_bounds("cauchy_schwarz", q_h, 0.0, primal.eta * adjoint.eta,
                                 primal.unconditional() && adjoint.unconditional());
  for (const auto& c : primal.caveats) b.caveats.push_back("primal:" + c);
  for (const auto& c : adjoint.caveats) b.caveats.push_back("adjoint:" + c);
  b.constants = {{"eta", primal.eta}, {"eta_adjoint", adjoint.eta}};
  return b;
}

FluxSide make_side(EquilibrationInput input, FeFunction solution, TractionSet tractions, EquilibratedFlux flux) {
  FluxSide s{std::move(solution), std::move(input), std::move(tractions), std::move(flux), {}};
  s.report = cre_upper_bound(s.input, s.flux, s.tractions);
  return s;
}

FluxSide equilibrate(const EquilibrationInput& input, const FeFunction& solution, FluxBackend backend, int k) {
  TractionSet ts = build_tractions(input);
  const bool analytic = backend == FluxBackend::analytic ||
                        (backend == FluxBackend::automatic && input.problem.source.elementwise_constant());
  EquilibratedFlux q = analytic ? element_flux_analytic(input, ts) : element_flux_fe(input, ts, k);
  return make_side(input, solution, std::move(ts), std::move(q));
}

FluxSide primal_side(const DiffusionProblem& problem, const FeFunction& u_h, FluxBackend backend, int k) {
  return equilibrate(equilibration_input(problem, u_h), u_h, backend, k);
}

EquilibrationInput adjoint_input(const DiffusionProblem& problem, const QuantityOfInterest& Q, const FeFunction& adjoint) {
  DiffusionProblem adj = adjoint_problem(problem, Q);
  ElementFlux p = flux(adj, adjoint);
  const Mesh& m = adjoint.mesh();
  std::optional<ElementFlux> shift;
  if (Q.pre_primal) shift = flux(adj, pre_primal_on(Q, adjoint.space));
  for (int K = 0; K < m.num_elements(); ++K) {
    p.values[K] -= Q.flux_weight(m, K);
    if (shift) p.values[K] -= shift->values[K];
  }
  return {std::move(adj), std::move(p)};
}

FluxSide adjoint_side(const DiffusionProblem& problem, const QuantityOfInterest& Q, const FeFunction& adjoint,
                      FluxBackend backend, int k) {
  return equilibrate(adjoint_input(problem, Q, adjoint), adjoint, backend, k);
}

namespace {

int rule_degree(const FluxSide& a, const FluxSide& b) {
  return std::max(a.flux.field.degree() + b.flux.field.degree(), 1);
}

std::vector<std::string> side_caveats(const FluxSide& primal, const FluxSide& adjoint) {
  std::vector<std::string> out;
  for (const auto& c : primal.report.caveats) out.push_back("primal:" + c);
  for (const auto& c : adjoint.report.caveats) out.push_back("adjoint:" + c);
  return out;
}

}  // namespace

GoalCre cre_goal_bound(const DiffusionProblem& problem, double q_h, const FluxSide& primal, const FluxSide& adjoint) {
  const Mesh& m = primal.input.mesh();
  if (&adjoint.input.mesh() != &m) throw std::invalid_argument("primal and adjoint fluxes live on different meshes");
  GoalCre r;
  r.C_K.assign(m.num_elements(), 0.0);
  r.E2_K.resize(m.num_elements());
  r.E2_adjoint_K.resize(m.num_elements());
  const auto& rule = triangle_rule(rule_degree(primal, adjoint));
  for (int K = 0; K < m.num_elements(); ++K) {
    const Mat2 Ainv = problem.A(m, K).inverse();
    double s = 0.0;
    for (const auto& q : rule) {
      const Point x = m.map(K, q.bary);
      s += q.weight * primal.difference(K, x).dot(Ainv * adjoint.difference(K, x));
    }
    r.C_K[K] = 0.5 * s * m.area(K);
    r.E2_K[K] = 0.5 * std::pow(primal.report.indicators[K], 2);
    r.E2_adjoint_K[K] = 0.5 * std::pow(adjoint.report.indicators[K], 2);
  }
  r.E = primal.cre();
  r.E_adjoint = adjoint.cre();
  double C = 0.0;
  for (double c : r.C_K) C += c;
  const auto caveats = side_caveats(primal, adjoint);
  r.bounds = centered_bounds("cre", q_h, C, r.E * r.E_adjoint, caveats.empty());
  r.bounds.caveats = caveats;
  r.bounds.constants = {{"E_cre", r.E}, {"E_cre_adjoint", r.E_adjoint}, {"C_h", C}};
  r.weak = centered_bounds("cre_weak", q_h, 0.0, 2.0 * r.E * r.E_adjoint, caveats.empty());
  r.weak.caveats = caveats;
  return r;
}

GoalBounds enriched_cre_goal_bound(const DiffusionProblem& problem, double q_h, const FluxSide& primal,
                                   const FluxSide& adjoint_plus) {
  const Mesh& coarse = primal.input.mesh();
  const Mesh& fine = adjoint_plus.input.mesh();
  if (!fine.descends_from(coarse)) throw std::invalid_argument("meshes are not nested");
  const auto& rule = triangle_rule(rule_degree(primal, adjoint_plus));
  double c_plus = 0.0, r_plus = 0.0;
  for (int K = 0; K < fine.num_elements(); ++K) {
    const int P = fine.ancestor_in(coarse, K);
    const Mat2 A = problem.A(fine, K);
    const Mat2 Ainv = A.inverse();
    const Vec2 q_plus = A * adjoint_plus.solution.gradient(K);
    double c = 0.0, r = 0.0;
    for (const auto& q : rule) {
      const Point x = fine.map(K, q.bary);
      const Vec2 d = Ainv * primal.difference(P, x);
      c += q.weight * d.dot(adjoint_plus.difference(K, x));
      r += q.weight * d.dot(q_plus);
    }
    c_plus += 0.5 * c * fine.area(K);
    r_plus += r * fine.area(K);
  }
  const double correction = c_plus + r_plus;
  const auto caveats = side_caveats(primal, adjoint_plus);
  GoalBounds b = centered_bounds("cre_enriched", q_h, correction, primal.cre() * adjoint_plus.cre(), caveats.empty());
  b.caveats = caveats;
  b.constants = {{"E_cre", primal.cre()},
                 {"E_cre_adjoint", adjoint_plus.cre()},
                 {"C_plus", c_plus},
                 {"R_plus", r_plus},
                 {"R_plus_direct", residual_eval(problem, primal.solution, adjoint_plus.solution)}};
  return b;
}

GoalIndicators local_goal_indicators(const GoalCre& cre) {
  double C = 0.0;
  for (double c : cre.C_K) C += c;
  const double w = cre.E * cre.E_adjoint;
  GoalIndicators out;
  out.theta = std::abs(C + w) >= std::abs(C - w) ? 1 : -1;
  const double E2 = cre.E * cre.E, Et2 = cre.E_adjoint * cre.E_adjoint;
  out.values.resize(cre.C_K.size());
  out.eta_K.resize(cre.C_K.size());
  for (size_t K = 0; K < cre.C_K.size(); ++K) {
    out.eta_K[K] = std::sqrt(0.5 * E2 * cre.E2_adjoint_K[K] + 0.5 * Et2 * cre.E2_K[K]);
    out.values[K] = cre.C_K[K] + out.theta * out.eta_K[K];
  }
  return out;
}

double optimal_scaling(const FluxSide& primal, const FluxSide& adjoint) {
  const double E = primal.cre(), Et = adjoint.cre();
  if (E <= 0.0 || Et <= 0.0) return 1.0;
  return std::sqrt(Et / E);
}

ChiBounds parallelogram_chi(const DiffusionProblem& problem, const QuantityOfInterest& Q, const FluxSide& primal,
                            const FluxSide& adjoint, const FeFunction& u_plus, const FeFunction& adjoint_plus, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("scaling s must be positive");
  const Mesh& m = primal.input.mesh();
  ChiBounds chi;
  chi.s = s;
  const int deg = rule_degree(primal, adjoint);
  for (int sign : {1, -1}) {
    const double upp = sum(flux_norm_squared(
        problem, m,
        [&](int K, const Point& x) { return Vec2(s * primal.difference(K, x) + sign / s * adjoint.difference(K, x)); },
        deg));
    // Lower bound 2 R_c(v) - |||v|||^2 with v the refined correction of the combined problem.
    if (u_plus.space->mesh() != adjoint_plus.space->mesh()) throw std::invalid_argument("refined solutions must share a mesh");
    const FeFunction pu = prolong(primal.solution, u_plus.space);
    const FeFunction pz = prolong(adjoint.solution, u_plus.space);
    const FeFunction v{u_plus.space, s * (u_plus.values - pu.values) + sign / s * (adjoint_plus.values - pz.values)};
    const double R = accurate_load(problem, v) - bilinear(problem, pu, v);
    const double Rt = qoi_eval(problem, Q, v) - bilinear(problem, pz, v);
    const double low = std::max(0.0, 2.0 * (s * R + sign / s * Rt) - bilinear(problem, v, v));
    (sign > 0 ? chi.plus_upp : chi.minus_upp) = upp;
    (sign > 0 ? chi.plus_low : chi.minus_low) = std::min(low, upp);
  }
  chi.caveats = side_caveats(primal, adjoint);
  chi.guaranteed = chi.caveats.empty();
  return chi;
}

GoalBounds parallelogram_bound(double q_h, const ChiBounds& chi) {
  if (!(chi.s > 0.0)) throw std::invalid_argument("scaling s must be positive");
  GoalBounds b;
  b.method = "parallelogram";
  b.lower = q_h + 0.25 * (chi.plus_low - chi.minus_upp);
  b.upper = q_h + 0.25 * (chi.plus_upp - chi.minus_low);
  b.corrected = 0.5 * (b.lower + b.upper);
  b.correction = b.corrected - q_h;
  b.half_width = 0.5 * (b.upper - b.lower);
  b.guaranteed = chi.guaranteed;
  b.caveats = chi.caveats;
  b.constants = {{"s", chi.s},
                 {"chi_plus_low", chi.plus_low},
                 {"chi_plus_upp", chi.plus_upp},
                 {"chi_minus_low", chi.minus_low},
                 {"chi_minus_upp", chi.minus_upp}};
  return b;
}

}  // namespace verifem
