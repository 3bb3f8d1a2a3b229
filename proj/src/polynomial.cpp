#include "verifem/polynomial.hpp"

#include <numeric>
#include <stdexcept>

#include "verifem/quadrature.hpp"

namespace verifem {

LocalFrame element_frame(const Mesh& mesh, int K) { return {mesh.centroid(K), mesh.diameter(K)}; }

int monomial_count(int degree) { return (degree + 1) * (degree + 2) / 2; }

Eigen::VectorXd monomials(int degree, const Vec2& xi) {
  Eigen::VectorXd out(monomial_count(degree));
  int idx = 0;
  for (int d = 0; d <= degree; ++d)
    for (int b = 0; b <= d; ++b) {
      const int a = d - b;
      double v = 1.0;
      for (int i = 0; i < a; ++i) v *= xi.x();
      for (int i = 0; i < b; ++i) v *= xi.y();
      out[idx++] = v;
    }
  return out;
}

Eigen::MatrixX2d monomial_gradients(int degree, const LocalFrame& frame, const Vec2& xi) {
  Eigen::MatrixX2d out(monomial_count(degree), 2);
  auto power = [](double x, int n) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= x;
    return v;
  };
  int idx = 0;
  for (int d = 0; d <= degree; ++d)
    for (int b = 0; b <= d; ++b) {
      const int a = d - b;
      out(idx, 0) = a == 0 ? 0.0 : a * power(xi.x(), a - 1) * power(xi.y(), b) / frame.scale;
      out(idx, 1) = b == 0 ? 0.0 : b * power(xi.x(), a) * power(xi.y(), b - 1) / frame.scale;
      ++idx;
    }
  return out;
}

std::vector<std::array<int, 3>> lattice(int m) {
  std::vector<std::array<int, 3>> out;
  for (int i = m; i >= 0; --i)
    for (int j = m - i; j >= 0; --j) out.push_back({i, j, m - i - j});
  return out;
}

Eigen::MatrixXd lagrange_basis(const Mesh& mesh, int K, int m, const LocalFrame& frame) {
  const auto nodes = lattice(m);
  const int n = static_cast<int>(nodes.size());
  Eigen::MatrixXd V(n, n);
  for (int r = 0; r < n; ++r) {
    const auto& c = nodes[r];
    const Point x = mesh.map(K, {c[0] / double(m), c[1] / double(m), c[2] / double(m)});
    V.row(r) = monomials(m, frame.local(x)).transpose();
  }
  return V.inverse();
}

Eigen::MatrixXd monomial_stiffness(const Mesh& mesh, int K, int degree, const LocalFrame& frame, const Mat2& A) {
  const int n = monomial_count(degree);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (const auto& q : triangle_rule(std::max(2 * degree - 2, 1))) {
    const Eigen::MatrixX2d g = monomial_gradients(degree, frame, frame.local(mesh.map(K, q.bary)));
    k.noalias() += q.weight * (g * A * g.transpose());
  }
  k *= mesh.area(K);
  return 0.5 * (k + k.transpose());
}

PolyField::PolyField(MeshPtr mesh, int degree, int components)
    : mesh_(std::move(mesh)), degree_(degree), components_(components), block_(monomial_count(degree)) {
  frames_.resize(mesh_->num_elements());
  for (int K = 0; K < mesh_->num_elements(); ++K) frames_[K] = element_frame(*mesh_, K);
  coeffs_ = Eigen::MatrixXd::Zero(block_ * mesh_->num_elements(), components_);
}

double PolyField::value(int K, const Point& x, int component) const {
  return monomials(degree_, frames_[K].local(x)).dot(coefficients(K).col(component));
}

Vec2 PolyField::vector(int K, const Point& x) const {
  const Eigen::VectorXd m = monomials(degree_, frames_[K].local(x));
  const auto c = coefficients(K);
  return Vec2(m.dot(c.col(0)), m.dot(c.col(1)));
}

double PolyField::divergence(int K, const Point& x) const {
  const Eigen::MatrixX2d g = monomial_gradients(degree_, frames_[K], frames_[K].local(x));
  const auto c = coefficients(K);
  return g.col(0).dot(c.col(0)) + g.col(1).dot(c.col(1));
}

std::vector<double> flux_norm_squared(const DiffusionProblem& problem, const Mesh& mesh, const VectorField& p,
                                      int degree) {
  std::vector<double> out(mesh.num_elements(), 0.0);
  const auto& rule = triangle_rule(degree);
  for (int K = 0; K < mesh.num_elements(); ++K) {
    const Mat2 Ainv = problem.A(mesh, K).inverse();
    double s = 0.0;
    for (const auto& q : rule) {
      const Vec2 v = p(K, mesh.map(K, q.bary));
      s += q.weight * v.dot(Ainv * v);
    }
    out[K] = s * mesh.area(K);
  }
  return out;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace verifem
