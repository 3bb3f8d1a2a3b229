#include "verifem/equilibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "verifem/parallel.hpp"
#include "verifem/quadrature.hpp"

namespace verifem {

EquilibrationInput equilibration_input(const DiffusionProblem& problem, const FeFunction& u_h) {
  return {problem, flux(problem, u_h)};
}

double nodal_projection(int i, int K, const EquilibrationInput& input) {
  const Mesh& m = input.mesh();
  const int j = m.local_vertex(K, i);
  if (j < 0) throw std::invalid_argument("vertex is not in the element");
  const auto g = m.barycentric_gradients(K);
  return m.area(K) * input.flux.values[K].dot(g[j]) - element_load(input.problem, m, K)[j];
}

namespace {

int position_in_edge(const Edge& ed, int i) { return ed.vertices[0] == i ? 0 : 1; }

// Unit normal of edge e oriented as sigma_{e,K} n_K, the same from both sides.
Vec2 edge_orientation(const Mesh& m, int e) {
  const int K = m.edge(e).elements[0];
  const int k = m.local_edge(K, e);
  return m.sigma(K, k) * m.normal(K, k);
}

}  // namespace

NodeSystem solve_node_system(int i, const EquilibrationInput& input) {
  const Mesh& m = input.mesh();
  NodeSystem s;
  s.vertex = i;
  s.elements = m.vertex_patch(i);
  s.edges = m.vertex_edges(i);
  const int ne = static_cast<int>(s.elements.size());
  const int nb = static_cast<int>(s.edges.size());
  s.Q.resize(ne);
  for (int a = 0; a < ne; ++a) s.Q[a] = nodal_projection(i, s.elements[a], input);
  s.b_hat.assign(nb, 0.0);
  s.b_m.assign(nb, 0.0);
  s.prescribed.assign(nb, 0);
  Eigen::VectorXd lengths(nb);
  for (int j = 0; j < nb; ++j) {
    const int e = s.edges[j];
    const Edge& ed = m.edge(e);
    const double l = m.edge_length(e);
    lengths[j] = l;
    const Vec2 nu = edge_orientation(m, e);
    switch (ed.label) {
      case BoundaryLabel::neumann:
        s.prescribed[j] = 1;
        s.b_hat[j] = edge_load(m, e, input.problem.neumann)[position_in_edge(ed, i)];
        s.b_m[j] = s.b_hat[j];
        break;
      case BoundaryLabel::dirichlet: s.b_m[j] = 0.5 * l * input.flux.values[ed.elements[0]].dot(nu); break;
      case BoundaryLabel::interior:
        s.b_m[j] = 0.25 * l * (input.flux.values[ed.elements[0]] + input.flux.values[ed.elements[1]]).dot(nu);
        break;
    }
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ne, nb);
  for (int a = 0; a < ne; ++a) {
    const int K = s.elements[a];
    for (int j = 0; j < nb; ++j) {
      const int k = m.local_edge(K, s.edges[j]);
      if (k >= 0) M(a, j) = m.sigma(K, k);
    }
  }
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(s.Q.data(), ne);
  Eigen::VectorXd base = Eigen::Map<const Eigen::VectorXd>(s.b_m.data(), nb);
  double scale = 0.0;
  for (double q : s.Q) scale = std::max(scale, std::abs(q));
  for (double b : s.b_m) scale = std::max(scale, std::abs(b));
  s.scale = scale;

  std::vector<int> free;
  for (int j = 0; j < nb; ++j)
    if (!s.prescribed[j]) free.push_back(j);
  const Eigen::VectorXd r = rhs - M * base;
  Eigen::VectorXd b = base;
  if (!free.empty()) {
    Eigen::MatrixXd MW(ne, free.size());
    for (size_t c = 0; c < free.size(); ++c) MW.col(c) = M.col(free[c]) * lengths[free[c]];
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(MW);
    Eigen::VectorXd y = cod.solve(r);
    y += cod.solve(r - MW * y);
    for (size_t c = 0; c < free.size(); ++c) b[free[c]] += lengths[free[c]] * y[c];
  }
  s.residual = (M * b - rhs).cwiseAbs().maxCoeff();
  if (s.residual > 1e-8 * std::max(scale, 1e-300) && s.residual > 1e-300)
    throw std::runtime_error("inconsistent node system at vertex " + std::to_string(i));
  for (int j = 0; j < nb; ++j) s.b_hat[j] = b[j];
  return s;
}

Eigen::Vector2d edge_traction(double length, const Eigen::Vector2d& moments) {
  if (!(length > 0.0)) throw std::invalid_argument("zero-length edge");
  return Eigen::Vector2d(4.0 * moments[0] - 2.0 * moments[1], -2.0 * moments[0] + 4.0 * moments[1]) / length;
}

double TractionSet::on_edge(int e, const Point& x) const {
  const Edge& ed = mesh->edge(e);
  const Point a = mesh->vertex(ed.vertices[0]), b = mesh->vertex(ed.vertices[1]);
  const double t = (x - a).dot(b - a) / (b - a).squaredNorm();
  return coefficients[e][0] * (1.0 - t) + coefficients[e][1] * t;
}

double TractionSet::on_element(int K, int k, const Point& x) const {
  return mesh->sigma(K, k) * on_edge(mesh->element_edge(K, k), x);
}

std::array<double, 2> TractionSet::endpoint_values(int K, int k) const {
  const int e = mesh->element_edge(K, k);
  const Edge& ed = mesh->edge(e);
  const auto& t = mesh->triangle(K);
  const double s = mesh->sigma(K, k);
  std::array<double, 2> out{};
  for (int j = 0; j < 2; ++j) out[j] = s * coefficients[e][position_in_edge(ed, t[(k + 1 + j) % 3])];
  return out;
}

void TractionSet::write_csv(std::ostream& out) const {
  out << "edge,c1,c2\n";
  char buf[96];
  for (size_t e = 0; e < coefficients.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e, coefficients[e][0], coefficients[e][1]);
    out << buf;
  }
}

std::vector<NodeSystem> solve_node_systems(const EquilibrationInput& input) {
  std::vector<NodeSystem> nodes(input.mesh().num_vertices());
  parallel_for(nodes.size(), [&](std::size_t i) { nodes[i] = solve_node_system(static_cast<int>(i), input); });
  return nodes;
}

TractionSet build_tractions(const EquilibrationInput& input) { return build_tractions(input, solve_node_systems(input)); }

TractionSet build_tractions(const EquilibrationInput& input, const std::vector<NodeSystem>& nodes) {
  const Mesh& m = input.mesh();
  TractionSet ts;
  ts.mesh = input.flux.mesh;
  ts.coefficients.assign(m.num_edges(), Eigen::Vector2d::Zero());
  parallel_for(m.num_edges(), [&](std::size_t ee) {
    const int e = static_cast<int>(ee);
    const Edge& ed = m.edge(e);
    Eigen::Vector2d moments;
    for (int j = 0; j < 2; ++j) {
      const NodeSystem& s = nodes[ed.vertices[j]];
      const auto it = std::find(s.edges.begin(), s.edges.end(), e);
      moments[j] = s.b_hat[it - s.edges.begin()];
    }
    ts.coefficients[e] = edge_traction(m.edge_length(e), moments);
  });

  ts.equilibrium.assign(m.num_elements(), 0.0);
  ts.equilibrium_scale.assign(m.num_elements(), 0.0);
  parallel_for(m.num_elements(), [&](std::size_t KK) {
    const int K = static_cast<int>(KK);
    const Eigen::Vector3d load = element_load(input.problem, m, K);
    double s = load.sum(), scale = load.cwiseAbs().sum();
    for (int k = 0; k < 3; ++k) {
      const auto v = ts.endpoint_values(K, k);
      const double l = m.edge_length(m.element_edge(K, k));
      s += 0.5 * l * (v[0] + v[1]);
      scale += 0.5 * l * (std::abs(v[0]) + std::abs(v[1]));
    }
    ts.equilibrium[K] = s;
    ts.equilibrium_scale[K] = scale;
  });

  if (input.problem.neumann)
    for (int e = 0; e < m.num_edges(); ++e) {
      const Edge& ed = m.edge(e);
      if (ed.label != BoundaryLabel::neumann) continue;
      const int K = ed.elements[0];
      const Vec2 n = m.normal(K, m.local_edge(K, e));
      const Point a = m.vertex(ed.vertices[0]), b = m.vertex(ed.vertices[1]);
      for (const auto& q : line_rule(5)) {
        const Point x = a + q.t * (b - a);
        ts.neumann_projection = std::max(ts.neumann_projection, std::abs(input.problem.neumann(x, n) - ts.on_edge(e, x)));
      }
    }
  return ts;
}

double EquilibratedFlux::max_equilibrium_defect() const {
  double d = 0.0;
  for (const auto& f : defects) d = std::max(d, f.equilibrium);
  return d;
}

namespace {

// Monomial coefficients of a vector polynomial of degree deg given by its values on the lattice.
template <class F>
Eigen::MatrixX2d fit_lattice(const Mesh& m, int K, int deg, const LocalFrame& frame, F&& fn) {
  const auto nodes = lattice(deg);
  Eigen::MatrixX2d values(nodes.size(), 2);
  for (size_t r = 0; r < nodes.size(); ++r) {
    std::array<double, 3> bary{};
    for (int j = 0; j < 3; ++j) bary[j] = deg == 0 ? 1.0 / 3.0 : nodes[r][j] / double(deg);
    values.row(r) = fn(bary).transpose();
  }
  return lagrange_basis(m, K, deg, frame) * values;
}

void record_defects(const EquilibrationInput& input, const TractionSet& tractions, EquilibratedFlux& q) {
  const Mesh& m = input.mesh();
  const auto& f = input.problem.source;
  const int deg = q.field.degree();
  const int rule = f.elementwise_constant() ? std::max(2 * deg, 1) : 10;
  q.defects.assign(m.num_elements(), {});
  parallel_for(m.num_elements(), [&](std::size_t KK) {
    const int K = static_cast<int>(KK);
    double s = 0.0;
    for (const auto& p : triangle_rule(rule)) {
      const Point x = m.map(K, p.bary);
      const double r = f.at(m, K, x) + q.field.divergence(K, x);
      s += p.weight * r * r;
    }
    double trace = 0.0;
    for (int k = 0; k < 3; ++k) {
      const int e = m.element_edge(K, k);
      const Point a = m.vertex(m.edge(e).vertices[0]), b = m.vertex(m.edge(e).vertices[1]);
      const Vec2 n = m.normal(K, k);
      for (const auto& p : line_rule(deg + 2)) {
        const Point x = a + p.t * (b - a);
        trace = std::max(trace, std::abs(q.value(K, x).dot(n) - tractions.on_element(K, k, x)));
      }
    }
    q.defects[K] = {std::sqrt(s * m.area(K)), trace};
  });
}

}  // namespace

EquilibratedFlux prolong(const EquilibratedFlux& q, const MeshPtr& fine) {
  const Mesh& coarse = *q.field.mesh();
  if (!fine->descends_from(coarse)) throw std::invalid_argument("meshes are not nested");
  EquilibratedFlux out{PolyField(fine, q.field.degree(), 2), q.backend, {}, q.exact_member};
  out.defects.resize(fine->num_elements());
  for (int K = 0; K < fine->num_elements(); ++K) {
    const int P = fine->ancestor_in(coarse, K);
    out.field.coefficients(K) = fit_lattice(*fine, K, q.field.degree(), out.field.frame(K),
                                            [&](const std::array<double, 3>& b) { return q.value(P, fine->map(K, b)); });
    if (!q.defects.empty()) out.defects[K] = q.defects[P];
  }
  return out;
}

std::array<Vec2, 3> analytic_element_flux(const Mesh& m, int K, const std::array<std::array<double, 2>, 3>& traction) {
  std::array<Vec2, 3> out;
  for (int j = 0; j < 3; ++j) {
    // Vertex j is the first endpoint of edge j+2 and the second endpoint of edge j+1.
    const int k1 = (j + 2) % 3, k2 = (j + 1) % 3;
    Mat2 N;
    N.row(0) = m.normal(K, k1).transpose();
    N.row(1) = m.normal(K, k2).transpose();
    const double det = N.determinant();
    if (std::abs(det) < 1e-14) throw std::domain_error("degenerate element " + std::to_string(K));
    out[j] = N.inverse() * Vec2(traction[k1][0], traction[k2][1]);
  }
  return out;
}

EquilibratedFlux element_flux_analytic(const EquilibrationInput& input, const TractionSet& tractions) {
  const Mesh& m = input.mesh();
  if (!input.problem.source.elementwise_constant())
    throw std::invalid_argument("analytic backend requires an elementwise constant source");
  EquilibratedFlux q{PolyField(input.flux.mesh, 1, 2), "analytic", {}, false};
  parallel_for(m.num_elements(), [&](std::size_t KK) {
    const int K = static_cast<int>(KK);
    std::array<std::array<double, 2>, 3> tr;
    for (int k = 0; k < 3; ++k) tr[k] = tractions.endpoint_values(K, k);
    const auto nodal = analytic_element_flux(m, K, tr);
    q.field.coefficients(K) = fit_lattice(m, K, 1, q.field.frame(K), [&](const std::array<double, 3>& b) {
      return Vec2(b[0] * nodal[0] + b[1] * nodal[1] + b[2] * nodal[2]);
    });
  });
  record_defects(input, tractions, q);
  q.exact_member = tractions.neumann_projection <= 1e-12;
  return q;
}

namespace {

struct LocalSolve {
  LocalFrame frame;
  Eigen::MatrixXd stiffness;
  Eigen::VectorXd w;
};

// Neumann problem on K in polynomials of degree deg with zero-mean multiplier;
// `flux` adds - int p . grad v to the right side.
LocalSolve local_neumann_solve(const EquilibrationInput& input, const TractionSet& tractions, int K, int deg,
                               bool subtract_flux) {
  const Mesh& m = input.mesh();
  const auto& f = input.problem.source;
  LocalSolve s;
  s.frame = element_frame(m, K);
  const int n = monomial_count(deg);
  s.stiffness = monomial_stiffness(m, K, deg, s.frame, input.problem.A(m, K));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n), mean = Eigen::VectorXd::Zero(n);
  const int rule = f.elementwise_constant() ? deg : deg + 5;
  for (const auto& p : triangle_rule(std::max(rule, 1))) {
    const Point x = m.map(K, p.bary);
    const Vec2 xi = s.frame.local(x);
    const Eigen::VectorXd mono = monomials(deg, xi);
    rhs += p.weight * f.at(m, K, x) * mono;
    mean += p.weight * mono;
    if (subtract_flux) rhs -= p.weight * monomial_gradients(deg, s.frame, xi) * input.flux.values[K];
  }
  rhs *= m.area(K);
  mean *= m.area(K);

  const Eigen::Vector3d load = element_load(input.problem, m, K);
  double compat = load.sum(), scale = load.cwiseAbs().sum();
  for (int k = 0; k < 3; ++k) {
    const int e = m.element_edge(K, k);
    const Point a = m.vertex(m.edge(e).vertices[0]), b = m.vertex(m.edge(e).vertices[1]);
    const double l = (b - a).norm();
    for (const auto& p : line_rule((deg + 3) / 2 + 1)) {
      const Point x = a + p.t * (b - a);
      const double g = tractions.on_element(K, k, x);
      rhs += p.weight * l * g * monomials(deg, s.frame.local(x));
      compat += p.weight * l * g;
      scale += p.weight * l * std::abs(g);
    }
  }
  if (std::abs(compat) > 1e-8 * scale && std::abs(compat) > 1e-300)
    throw std::invalid_argument("tractions are not in equilibrium on element " + std::to_string(K));

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
  kkt.topLeftCorner(n, n) = s.stiffness;
  kkt.block(0, n, n, 1) = mean;
  kkt.block(n, 0, 1, n) = mean.transpose();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b.head(n) = rhs;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) throw std::runtime_error("singular local system on element " + std::to_string(K));
  s.w = lu.solve(b).head(n);
  return s;
}

}  // namespace

EquilibratedFlux element_flux_fe(const EquilibrationInput& input, const TractionSet& tractions, int k) {
  if (k < 1) throw std::invalid_argument("enrichment degree must be at least 1");
  const Mesh& m = input.mesh();
  const int deg = 1 + k;
  EquilibratedFlux q{PolyField(input.flux.mesh, k, 2), "fe_p" + std::to_string(deg), {}, false};
  parallel_for(m.num_elements(), [&](std::size_t KK) {
    const int K = static_cast<int>(KK);
    const LocalSolve s = local_neumann_solve(input, tractions, K, deg, false);
    const Mat2 A = input.problem.A(m, K);
    q.field.coefficients(K) = fit_lattice(m, K, k, q.field.frame(K), [&](const std::array<double, 3>& b) {
      const Eigen::MatrixX2d g = monomial_gradients(deg, s.frame, s.frame.local(m.map(K, b)));
      return Vec2(A * (g.transpose() * s.w));
    });
  });
  record_defects(input, tractions, q);
  return q;
}

namespace {

std::vector<double> cre_squared(const EquilibrationInput& input, const EquilibratedFlux& q) {
  return flux_norm_squared(
      input.problem, input.mesh(), [&](int K, const Point& x) { return Vec2(q.value(K, x) - input.flux.values[K]); },
      std::max(2 * q.field.degree(), 1));
}

}  // namespace

double cre(const EquilibrationInput& input, const EquilibratedFlux& q) {
  return std::sqrt(0.5 * sum(cre_squared(input, q)));
}

EstimateReport cre_upper_bound(const EquilibrationInput& input, const EquilibratedFlux& q, const TractionSet& tractions) {
  const Mesh& m = input.mesh();
  auto e2 = cre_squared(input, q);
  std::vector<double> ind(e2.size());
  for (size_t K = 0; K < e2.size(); ++K) ind[K] = std::sqrt(e2[K]);
  auto rep = report_from_indicators("cre", BoundKind::guaranteed_upper, std::move(ind));
  rep.backend = q.backend;
  double defect = 0.0, scale = 0.0;
  for (int K = 0; K < m.num_elements(); ++K) {
    defect = std::max(defect, q.defects[K].equilibrium);
    scale = std::max(scale, tractions.equilibrium_scale[K] / std::sqrt(m.area(K)));
  }
  rep.constants = {{"E_cre", rep.eta / std::sqrt(2.0)},
                   {"equilibrium_defect", defect},
                   {"neumann_projection", tractions.neumann_projection}};
  if (defect > 1e-10 * std::max(scale, 1.0)) rep.caveats.push_back("equilibrium_defect");
  if (tractions.neumann_projection > 1e-12) rep.caveats.push_back("neumann_projection");
  if (input.problem.projection_defect) {
    rep.caveats.push_back("projected_source");
    rep.constants["projection_defect"] = *input.problem.projection_defect;
  }
  return rep;
}

PragerSyngeGap prager_synge_gap(const DiffusionProblem& problem, const FeFunction& u_h, const EquilibratedFlux& q) {
  if (!problem.exact) throw std::invalid_argument("exact solution required");
  const Mesh& m = u_h.mesh();
  const ElementFlux qh = flux(problem, u_h);
  const auto exact = [&](int K, const Point& x) { return Vec2(problem.A(m, K) * problem.exact->gradient(x)); };
  const double a = sum(flux_norm_squared(problem, m, [&](int K, const Point& x) { return Vec2(exact(K, x) - q.value(K, x)); }, 10));
  const double b = sum(flux_norm_squared(problem, m, [&](int K, const Point& x) { return Vec2(exact(K, x) - qh.values[K]); }, 10));
  const double c = sum(flux_norm_squared(problem, m, [&](int K, const Point& x) { return Vec2(q.value(K, x) - qh.values[K]); }, 10));
  const double mid = sum(flux_norm_squared(
      problem, m, [&](int K, const Point& x) { return Vec2(exact(K, x) - 0.5 * (q.value(K, x) + qh.values[K])); }, 10));
  const double e2 = 0.5 * c;
  return {std::abs(2.0 * e2 - a - b), std::abs(e2 - 2.0 * mid)};
}

EstimateReport equilibrated_element_residual(const EquilibrationInput& input, const TractionSet& tractions, int k) {
  if (k < 1) throw std::invalid_argument("enrichment degree must be at least 1");
  const Mesh& m = input.mesh();
  const int deg = 1 + k;
  std::vector<double> ind(m.num_elements());
  parallel_for(m.num_elements(), [&](std::size_t KK) {
    const int K = static_cast<int>(KK);
    const LocalSolve s = local_neumann_solve(input, tractions, K, deg, true);
    ind[K] = std::sqrt(std::max(0.0, s.w.dot(s.stiffness * s.w)));
  });
  auto rep = report_from_indicators("element_residual", BoundKind::guaranteed_upper, std::move(ind));
  rep.backend = "fe_p" + std::to_string(deg);
  const EquilibratedFlux fe = element_flux_fe(input, tractions, k);
  const EstimateReport cre_rep = cre_upper_bound(input, fe, tractions);
  rep.caveats = cre_rep.caveats;
  rep.constants = {{"cre_fe", cre_rep.eta}, {"identity_gap", std::abs(rep.eta - cre_rep.eta)}};
  return rep;
}

}  // namespace verifem
