#include "verifem/recovery.hpp"

#include <cmath>
#include <stdexcept>

#include "verifem/parallel.hpp"
#include "verifem/polynomial.hpp"
#include "verifem/quadrature.hpp"

namespace verifem {

Vec2 RecoveredFlux::value(int K, const std::array<double, 3>& bary) const {
  const auto& t = mesh->triangle(K);
  return bary[0] * nodal[t[0]] + bary[1] * nodal[t[1]] + bary[2] * nodal[t[2]];
}

double RecoveredFlux::divergence(int K) const {
  const auto g = mesh->barycentric_gradients(K);
  const auto& t = mesh->triangle(K);
  double d = 0.0;
  for (int i = 0; i < 3; ++i) d += nodal[t[i]].dot(g[i]);
  return d;
}

RecoveredFlux zz_average(const ElementFlux& q_h) {
  const Mesh& m = *q_h.mesh;
  RecoveredFlux out{q_h.mesh, std::vector<Vec2>(m.num_vertices(), Vec2::Zero())};
  for (int i = 0; i < m.num_vertices(); ++i) {
    const auto patch = m.vertex_patch(i);
    for (int K : patch) out.nodal[i] += q_h.values[K];
    out.nodal[i] /= static_cast<double>(patch.size());
  }
  return out;
}

namespace {

// Affine fit g(x) = c0 + c1 (x - x_i)/s + c2 (y - y_i)/s on the patch of vertex i.
struct PatchFit {
  Eigen::Matrix<double, 3, 2> coeffs = Eigen::Matrix<double, 3, 2>::Zero();
  Point origin = Point::Zero();
  double scale = 1.0;
  bool regular = false;

  Vec2 at(const Point& x) const {
    const Vec2 d = (x - origin) / scale;
    return (coeffs.row(0) + d.x() * coeffs.row(1) + d.y() * coeffs.row(2)).transpose();
  }
};

PatchFit fit_patch(const Mesh& m, const ElementFlux& q_h, int i) {
  PatchFit fit;
  fit.origin = m.vertex(i);
  const auto patch = m.vertex_patch(i);
  double scale = 0.0;
  for (int K : patch) scale = std::max(scale, m.diameter(K));
  fit.scale = scale;
  Vec2 mean = Vec2::Zero();
  for (int K : patch) mean += q_h.values[K];
  mean /= static_cast<double>(patch.size());
  fit.coeffs.row(0) = mean.transpose();
  if (patch.size() < 3) return fit;
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Matrix<double, 3, 2> rhs = Eigen::Matrix<double, 3, 2>::Zero();
  for (int K : patch) {
    const Vec2 d = (m.centroid(K) - fit.origin) / scale;
    const Eigen::Vector3d p(1.0, d.x(), d.y());
    normal += p * p.transpose();
    rhs += p * q_h.values[K].transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal);
  const auto ev = eig.eigenvalues();
  if (ev.minCoeff() <= 1e-12 * ev.maxCoeff()) return fit;
  fit.coeffs = normal.ldlt().solve(rhs);
  fit.regular = true;
  return fit;
}

}  // namespace

RecoveredFlux spr_recover(const ElementFlux& q_h) {
  const Mesh& m = *q_h.mesh;
  const int nv = m.num_vertices();
  std::vector<PatchFit> fits(nv);
  parallel_for(nv, [&](std::size_t i) { fits[i] = fit_patch(m, q_h, static_cast<int>(i)); });
  RecoveredFlux out{q_h.mesh, std::vector<Vec2>(nv, Vec2::Zero())};
  for (int j = 0; j < nv; ++j) {
    // Patches containing node j: its own and those of its edge neighbors.
    std::vector<int> owners{j};
    for (int e : m.vertex_edges(j)) {
      const auto& v = m.edge(e).vertices;
      owners.push_back(v[0] == j ? v[1] : v[0]);
    }
    Vec2 s = Vec2::Zero();
    int count = 0;
    for (int i : owners)
      if (fits[i].regular) {
        s += fits[i].at(m.vertex(j));
        ++count;
      }
    if (count == 0) {
      // Only degenerate patches cover the node.
      for (int i : owners) s += fits[i].at(m.vertex(j));
      count = static_cast<int>(owners.size());
    }
    out.nodal[j] = s / count;
  }
  return out;
}

EstimateReport recovery_estimate(const DiffusionProblem& problem, const RecoveredFlux& q_star, const ElementFlux& q_h,
                                 const std::string& name) {
  const auto e2 = flux_norm_squared(
      problem, *q_h.mesh, [&](int K, const Point& x) { return Vec2(q_star.value(K, x) - q_h.values[K]); }, 5);
  std::vector<double> ind(e2.size());
  for (size_t K = 0; K < e2.size(); ++K) ind[K] = std::sqrt(e2[K]);
  return report_from_indicators(name, BoundKind::indicator, std::move(ind));
}

namespace {

FeFunction nested_difference(const FeFunction& u_h, const FeFunction& u_hstar) {
  const Mesh& fine = u_hstar.mesh();
  if (fine.parent().get() != u_h.space->mesh().get() || fine.num_elements() != 4 * u_h.mesh().num_elements())
    throw std::invalid_argument("refined solution must live on the uniform refinement of the coarse mesh");
  const FeFunction up = prolong(u_h, u_hstar.space);
  return {u_hstar.space, u_hstar.values - up.values};
}

}  // namespace

double richardson_estimate(const DiffusionProblem& problem, const FeFunction& u_h, const FeFunction& u_hstar,
                           double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const FeFunction d = nested_difference(u_h, u_hstar);
  return energy_norm(problem, d) / std::sqrt(1.0 - std::pow(0.5, 2.0 * alpha));
}

double aubin_nitsche_constant(const DiffusionProblem& problem, const FeFunction& u_h, const FeFunction& u_hstar,
                              double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const FeFunction d = nested_difference(u_h, u_hstar);
  const double energy = energy_norm(problem, d);
  if (energy == 0.0) throw std::domain_error("degenerate: refined solution equals the prolonged coarse solution");
  const double l2 = l2_norm(d);
  const double h = u_h.mesh().h();
  const double r = 0.5;
  return std::sqrt(l2 * l2 * (1.0 - std::pow(r, 2.0 * alpha)) /
                   (h * h * energy * energy * (1.0 - std::pow(r, 2.0 * alpha + 2.0))));
}

EstimateReport recovery_guaranteed_bound(const DiffusionProblem& problem, const RecoveredFlux& q_star,
                                         const ElementFlux& q_h, double C) {
  const Mesh& m = *q_h.mesh;
  const EstimateReport base = recovery_estimate(problem, q_star, q_h);
  double residual2 = 0.0;
  for (int K = 0; K < m.num_elements(); ++K) {
    const double div = q_star.divergence(K);
    double s = 0.0;
    if (problem.source.elementwise_constant()) {
      const double r = problem.source.on_element(m, K) + div;
      s = r * r;
    } else {
      for (const auto& q : triangle_rule(5)) {
        const double r = problem.source.at(m, K, m.map(K, q.bary)) + div;
        s += q.weight * r * r;
      }
    }
    residual2 += s * m.area(K);
  }
  double mismatch = 0.0;
  for (int e = 0; e < m.num_edges(); ++e) {
    const Edge& ed = m.edge(e);
    if (ed.label != BoundaryLabel::neumann) continue;
    const int K = ed.elements[0];
    int k = 0;
    while (m.element_edge(K, k) != e) ++k;
    const Vec2 n = m.normal(K, k);
    const Point a = m.vertex(ed.vertices[0]), b = m.vertex(ed.vertices[1]);
    for (const auto& q : line_rule(3)) {
      const Point x = a + q.t * (b - a);
      const double d = problem.g(x, n) - q_star.value(K, x).dot(n);
      mismatch += q.weight * (b - a).norm() * d * d;
    }
  }
  EstimateReport r;
  r.estimator = "recovery_guaranteed";
  r.kind = BoundKind::guaranteed_upper;
  const double h = m.h();
  r.eta = base.eta + C * h * std::sqrt(residual2);
  r.constants = {{"C", C},
                 {"h", h},
                 {"recovery_term", base.eta},
                 {"equilibrium_residual", std::sqrt(residual2)},
                 {"neumann_mismatch", mismatch}};
  if (mismatch > 1e-10) r.caveats.push_back("neumann_mismatch");
  r.caveats.push_back("estimated_constant");
  return r;
}

EstimateReport energy_lower_bound(const DiffusionProblem& problem, const FeFunction& w, const FeFunction& u_h) {
  const FeFunction up = w.space->mesh() == u_h.space->mesh() ? u_h : prolong(u_h, w.space);
  const FeFunction v{w.space, w.values - up.values};
  const double b = bilinear(problem, v, v);
  const double r = load_functional(problem, v) - bilinear(problem, up, v);
  const double minus_2j = 2.0 * r - b;
  EstimateReport rep;
  rep.estimator = "energy_lower";
  rep.kind = BoundKind::guaranteed_lower;
  rep.eta = std::sqrt(std::max(0.0, minus_2j));
  rep.constants = {{"minus_2J", minus_2j}};
  return rep;
}

}  // namespace verifem
