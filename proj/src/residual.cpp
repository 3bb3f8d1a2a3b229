#include "verifem/residual.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "verifem/parallel.hpp"
#include "verifem/quadrature.hpp"

namespace verifem {

double ResidualData::t(int e, const Point& x) const {
  const Edge& ed = mesh->edge(e);
  switch (ed.label) {
    case BoundaryLabel::interior: return edge_flux[e];
    case BoundaryLabel::neumann: {
      const int K = ed.elements[0];
      return edge_flux[e] - (neumann ? neumann(x, mesh->normal(K, mesh->local_edge(K, e))) : 0.0);
    }
    case BoundaryLabel::dirichlet: return 0.0;
  }
  return 0.0;
}

ResidualData residual_data(const DiffusionProblem& problem, const FeFunction& u_h) {
  const Mesh& m = u_h.mesh();
  ResidualData d;
  d.mesh = u_h.space->mesh();
  d.source = problem.source;
  d.neumann = problem.neumann;
  d.edge_flux.assign(m.num_edges(), 0.0);
  d.beta.assign(m.num_edges(), 0.0);
  const ElementFlux q = flux(problem, u_h);
  for (int e = 0; e < m.num_edges(); ++e) {
    const Edge& ed = m.edge(e);
    switch (ed.label) {
      case BoundaryLabel::interior: {
        double s = 0.0;
        for (int K : ed.elements) s += q.values[K].dot(m.normal(K, m.local_edge(K, e)));
        d.edge_flux[e] = s;
        d.beta[e] = 0.5;
        break;
      }
      case BoundaryLabel::neumann: {
        const int K = ed.elements[0];
        d.edge_flux[e] = q.values[K].dot(m.normal(K, m.local_edge(K, e)));
        d.beta[e] = 1.0;
        break;
      }
      case BoundaryLabel::dirichlet: break;
    }
  }
  return d;
}

EstimateReport explicit_indicators(const ResidualData& data) {
  const Mesh& m = *data.mesh;
  std::vector<double> edge_term(m.num_edges(), 0.0);
  for (int e = 0; e < m.num_edges(); ++e) {
    if (data.beta[e] == 0.0) continue;
    const Point a = m.vertex(m.edge(e).vertices[0]), b = m.vertex(m.edge(e).vertices[1]);
    const double l = (b - a).norm();
    double s = 0.0;
    for (const auto& q : line_rule(3)) {
      const double t = data.t(e, a + q.t * (b - a));
      s += q.weight * l * t * t;
    }
    edge_term[e] = data.beta[e] * l * s;
  }
  std::vector<double> ind(m.num_elements());
  for (int K = 0; K < m.num_elements(); ++K) {
    double r2 = 0.0;
    if (data.constant_interior_residual()) {
      const double r = data.source.on_element(m, K);
      r2 = r * r * m.area(K);
    } else {
      for (const auto& q : triangle_rule(5)) {
        const double r = data.r(K, m.map(K, q.bary));
        r2 += q.weight * r * r;
      }
      r2 *= m.area(K);
    }
    const double h = m.diameter(K);
    double s = h * h * r2;
    for (int e : m.element_edges(K)) s += edge_term[e];
    ind[K] = std::sqrt(s);
  }
  auto rep = report_from_indicators("explicit", BoundKind::indicator, std::move(ind));
  rep.caveats.push_back("unscaled_constant");
  return rep;
}

namespace {

using NodeKey = std::vector<std::pair<int, int>>;

NodeKey node_key(const Triangle& t, const std::array<int, 3>& mult) {
  NodeKey k;
  for (int j = 0; j < 3; ++j)
    if (mult[j] > 0) k.emplace_back(t[j], mult[j]);
  std::sort(k.begin(), k.end());
  return k;
}

}  // namespace

PatchSolution flux_free_patch_solve(int i, const ResidualData& data, const DiffusionProblem& problem, int k) {
  if (k < 1) throw std::invalid_argument("enrichment degree must be at least 1");
  const Mesh& m = *data.mesh;
  const int deg = 1 + k;
  PatchSolution sol;
  sol.mesh = data.mesh;
  sol.vertex = i;
  sol.degree = deg;
  sol.elements = m.vertex_patch(i);
  const int ne = static_cast<int>(sol.elements.size());
  const auto nodes = lattice(deg);
  const int nloc = static_cast<int>(nodes.size());

  std::vector<char> dirichlet_vertex(m.num_vertices(), 0);
  bool touches_dirichlet = false;
  for (int K : sol.elements)
    for (int e : m.element_edges(K))
      if (m.edge(e).label == BoundaryLabel::dirichlet) {
        touches_dirichlet = true;
        for (int v : m.edge(e).vertices) dirichlet_vertex[v] = 1;
      }

  std::map<NodeKey, int> index;
  std::vector<char> constrained;
  std::vector<std::vector<int>> dofs(ne, std::vector<int>(nloc));
  std::vector<LocalFrame> frames(ne);
  std::vector<Eigen::MatrixXd> basis(ne);
  for (int a = 0; a < ne; ++a) {
    const int K = sol.elements[a];
    const auto& t = m.triangle(K);
    frames[a] = element_frame(m, K);
    basis[a] = lagrange_basis(m, K, deg, frames[a]);
    for (int r = 0; r < nloc; ++r) {
      const auto key = node_key(t, nodes[r]);
      auto it = index.find(key);
      if (it == index.end()) {
        bool fixed = false;
        if (key.size() == 1) {
          fixed = dirichlet_vertex[key[0].first] != 0;
        } else if (key.size() == 2) {
          for (int kk = 0; kk < 3; ++kk)
            if (nodes[r][kk] == 0) fixed = m.edge(m.element_edge(K, kk)).label == BoundaryLabel::dirichlet;
        }
        it = index.emplace(key, static_cast<int>(constrained.size())).first;
        constrained.push_back(fixed);
      }
      dofs[a][r] = it->second;
    }
  }
  const int n = static_cast<int>(constrained.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  const int rhs_degree = data.constant_interior_residual() ? deg + 1 : deg + 5;
  for (int a = 0; a < ne; ++a) {
    const int K = sol.elements[a];
    const int li = m.local_vertex(K, i);
    const Eigen::MatrixXd S = monomial_stiffness(m, K, deg, frames[a], problem.A(m, K));
    const Eigen::MatrixXd local = basis[a].transpose() * S * basis[a];
    Eigen::VectorXd load = Eigen::VectorXd::Zero(nloc), mean = Eigen::VectorXd::Zero(nloc);
    for (const auto& q : triangle_rule(rhs_degree)) {
      const Point x = m.map(K, q.bary);
      const Eigen::VectorXd phi = basis[a].transpose() * monomials(deg, frames[a].local(x));
      load += q.weight * data.r(K, x) * q.bary[li] * phi;
      mean += q.weight * phi;
    }
    load *= m.area(K);
    mean *= m.area(K);
    for (int r = 0; r < nloc; ++r) {
      b[dofs[a][r]] += load[r];
      c[dofs[a][r]] += mean[r];
      for (int s = 0; s < nloc; ++s) A(dofs[a][r], dofs[a][s]) += local(r, s);
    }
  }
  // Edge residuals on edges through i (phi_i vanishes on the others).
  const int edge_points = (deg + 2) / 2 + 3;
  for (int e : m.vertex_edges(i)) {
    const Edge& ed = m.edge(e);
    if (ed.label == BoundaryLabel::dirichlet) continue;
    const int K = ed.elements[0];
    const int a = static_cast<int>(std::find(sol.elements.begin(), sol.elements.end(), K) - sol.elements.begin());
    const Point p0 = m.vertex(ed.vertices[0]), p1 = m.vertex(ed.vertices[1]);
    const double l = (p1 - p0).norm();
    for (const auto& q : line_rule(edge_points)) {
      const Point x = p0 + q.t * (p1 - p0);
      const double phi_i = ed.vertices[0] == i ? 1.0 - q.t : q.t;
      const Eigen::VectorXd phi = basis[a].transpose() * monomials(deg, frames[a].local(x));
      const double w = q.weight * l * data.t(e, x) * phi_i;
      for (int r = 0; r < nloc; ++r) b[dofs[a][r]] -= w * phi[r];
    }
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  std::vector<int> free;
  for (int d = 0; d < n; ++d)
    if (!constrained[d]) free.push_back(d);
  const int nf = static_cast<int>(free.size());
  sol.mean_zero = !touches_dirichlet;
  if (nf > 0) {
    const int size = nf + (sol.mean_zero ? 1 : 0);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(size, size);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
    for (int r = 0; r < nf; ++r) {
      rhs[r] = b[free[r]];
      for (int s = 0; s < nf; ++s) M(r, s) = A(free[r], free[s]);
      if (sol.mean_zero) M(r, nf) = M(nf, r) = c[free[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) throw std::runtime_error("singular patch system at vertex " + std::to_string(i));
    const Eigen::VectorXd x = lu.solve(rhs);
    if (!x.allFinite()) throw std::runtime_error("singular patch system at vertex " + std::to_string(i));
    for (int r = 0; r < nf; ++r) z[free[r]] = x[r];
  }
  double area = 0.0;
  for (int K : sol.elements) area += m.area(K);
  sol.mean = c.dot(z) / area;
  sol.coefficients.resize(ne);
  for (int a = 0; a < ne; ++a) {
    Eigen::VectorXd loc(nloc);
    for (int r = 0; r < nloc; ++r) loc[r] = z[dofs[a][r]];
    sol.coefficients[a] = basis[a] * loc;
  }
  return sol;
}

std::vector<PatchSolution> flux_free_patches(const ResidualData& data, const DiffusionProblem& problem, int k) {
  std::vector<PatchSolution> out(data.mesh->num_vertices());
  parallel_for(out.size(), [&](std::size_t i) { out[i] = flux_free_patch_solve(static_cast<int>(i), data, problem, k); });
  return out;
}

namespace {

// Monomial coefficients of sum_i z_i on each element (degree of the patches).
std::vector<Eigen::VectorXd> summed_patches(const Mesh& m, const std::vector<PatchSolution>& patches, int deg) {
  std::vector<Eigen::VectorXd> z(m.num_elements(), Eigen::VectorXd::Zero(monomial_count(deg)));
  for (const auto& p : patches)
    for (size_t a = 0; a < p.elements.size(); ++a) z[p.elements[a]] += p.coefficients[a];
  return z;
}

// Monomial coefficients (degree deg + 1) of sum_i z_i lambda_i on K.
Eigen::VectorXd weighted_sum(const Mesh& m, int K, const std::vector<const Eigen::VectorXd*>& z, int deg,
                             const LocalFrame& frame) {
  // Interpolate on the degree deg+1 lattice, which is exact for this polynomial.
  const int up = deg + 1;
  const auto nodes = lattice(up);
  Eigen::VectorXd values(nodes.size());
  for (size_t r = 0; r < nodes.size(); ++r) {
    const std::array<double, 3> bary{nodes[r][0] / double(up), nodes[r][1] / double(up), nodes[r][2] / double(up)};
    const Eigen::VectorXd mono = monomials(deg, frame.local(m.map(K, bary)));
    double v = 0.0;
    for (int j = 0; j < 3; ++j)
      if (z[j]) v += bary[j] * mono.dot(*z[j]);
    values[r] = v;
  }
  return lagrange_basis(m, K, up, frame) * values;
}

}  // namespace

EstimateReport flux_free_estimate(const DiffusionProblem& problem, const std::vector<PatchSolution>& patches) {
  if (patches.empty()) throw std::invalid_argument("no patch solutions");
  const Mesh& m = *patches.front().mesh;
  const int deg = patches.front().degree;
  const auto z = summed_patches(m, patches, deg);
  std::vector<double> ind(m.num_elements());
  for (int K = 0; K < m.num_elements(); ++K) {
    const Eigen::MatrixXd S = monomial_stiffness(m, K, deg, element_frame(m, K), problem.A(m, K));
    ind[K] = std::sqrt(std::max(0.0, z[K].dot(S * z[K])));
  }
  auto rep = report_from_indicators("flux_free", BoundKind::guaranteed_upper, std::move(ind));
  rep.backend = "patch_p" + std::to_string(deg);
  rep.caveats.push_back("local_enrichment");
  rep.constants["k"] = deg - 1;
  return rep;
}

namespace {

// Monomial coefficients of v = sum_i z_i phi_i on every element, degree deg + 1.
std::vector<Eigen::VectorXd> test_function_coefficients(const Mesh& m, const std::vector<PatchSolution>& patches,
                                                        int deg) {
  std::vector<std::array<const Eigen::VectorXd*, 3>> parts(m.num_elements(), {nullptr, nullptr, nullptr});
  for (const auto& p : patches)
    for (size_t a = 0; a < p.elements.size(); ++a) {
      const int K = p.elements[a];
      parts[K][m.local_vertex(K, p.vertex)] = &p.coefficients[a];
    }
  std::vector<Eigen::VectorXd> out(m.num_elements());
  for (int K = 0; K < m.num_elements(); ++K)
    out[K] = weighted_sum(m, K, {parts[K][0], parts[K][1], parts[K][2]}, deg, element_frame(m, K));
  return out;
}

}  // namespace

FeFunction flux_free_test_function(const std::vector<PatchSolution>& patches, const FeFunction& u_h, int levels) {
  if (patches.empty()) throw std::invalid_argument("no patch solutions");
  const Mesh& m = u_h.mesh();
  const int deg = patches.front().degree;
  const auto coeffs = test_function_coefficients(m, patches, deg);
  auto fine = make_space(uniform_refine(u_h.space->mesh(), levels));
  const Mesh& f = *fine->mesh();
  FeFunction v = zero_function(fine);
  std::vector<char> done(f.num_vertices(), 0);
  for (int K = 0; K < f.num_elements(); ++K) {
    const int P = f.ancestor_in(m, K);
    const LocalFrame frame = element_frame(m, P);
    for (int x : f.triangle(K)) {
      if (done[x]) continue;
      done[x] = 1;
      v.values[x] = f.is_dirichlet_vertex(x) ? 0.0 : monomials(deg + 1, frame.local(f.vertex(x))).dot(coeffs[P]);
    }
  }
  return v;
}

EstimateReport flux_free_lower_bound(const DiffusionProblem& problem, const std::vector<PatchSolution>& patches,
                                     const FeFunction& u_h, int levels) {
  const FeFunction v = flux_free_test_function(patches, u_h, levels);
  const Mesh& m = u_h.mesh();
  const int deg = patches.front().degree;
  const auto coeffs = test_function_coefficients(m, patches, deg);
  double exact2 = 0.0;
  for (int K = 0; K < m.num_elements(); ++K) {
    const Eigen::MatrixXd S = monomial_stiffness(m, K, deg + 1, element_frame(m, K), problem.A(m, K));
    exact2 += coeffs[K].dot(S * coeffs[K]);
  }
  const double norm = energy_norm(problem, v);
  EstimateReport rep;
  rep.estimator = "flux_free_lower";
  rep.kind = BoundKind::guaranteed_lower;
  rep.backend = "interpolated_p1_x" + std::to_string(levels);
  if (norm == 0.0) {
    rep.caveats.push_back("degenerate");
    return rep;
  }
  const double r = residual_eval(problem, u_h, v);
  rep.eta = std::abs(r) / norm;
  const double exact = std::sqrt(std::max(0.0, exact2));
  rep.constants = {{"residual", r},
                   {"test_energy", norm},
                   {"interpolation_defect", exact > 0.0 ? std::abs(norm - exact) / exact : 0.0}};
  return rep;
}

}  // namespace verifem
