#include "verifem/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "verifem/quadrature.hpp"

namespace verifem {

SourceTerm SourceTerm::constant(double value) {
  SourceTerm s;
  s.kind_ = Kind::constant;
  s.value_ = value;
  return s;
}

SourceTerm SourceTerm::pointwise(std::function<double(const Point&)> f) {
  SourceTerm s;
  s.kind_ = Kind::pointwise;
  s.fn_ = std::move(f);
  return s;
}

SourceTerm SourceTerm::centroid_sampled(std::function<double(const Point&)> f) {
  SourceTerm s;
  s.kind_ = Kind::centroid_sampled;
  s.fn_ = std::move(f);
  return s;
}

SourceTerm SourceTerm::piecewise(MeshPtr base, std::vector<double> values) {
  if (!base || static_cast<int>(values.size()) != base->num_elements())
    throw std::invalid_argument("piecewise source needs one value per element");
  SourceTerm s;
  s.kind_ = Kind::piecewise;
  s.base_ = std::move(base);
  s.values_ = std::move(values);
  return s;
}

double SourceTerm::on_element(const Mesh& mesh, int K) const {
  switch (kind_) {
    case Kind::constant: return value_;
    case Kind::centroid_sampled: return fn_(mesh.centroid(K));
    case Kind::piecewise: return values_[mesh.ancestor_in(*base_, K)];
    case Kind::pointwise: break;
  }
  throw std::logic_error("source term is not constant per element");
}

double SourceTerm::at(const Mesh& mesh, int K, const Point& x) const {
  return kind_ == Kind::pointwise ? fn_(x) : on_element(mesh, K);
}

namespace {

constexpr double pi = std::numbers::pi;

// sinh(k pi y) / cosh(k pi) without overflow.
double sinh_ratio(double k, double y) {
  return (std::exp(k * pi * (y - 1.0)) - std::exp(-k * pi * (y + 1.0))) / (1.0 + std::exp(-2.0 * k * pi));
}

double cosh_ratio(double k, double y) {
  return (std::exp(k * pi * (y - 1.0)) + std::exp(-k * pi * (y + 1.0))) / (1.0 + std::exp(-2.0 * k * pi));
}

double lshape_angle(const Point& x) {
  double t = std::atan2(x.y(), x.x());
  if (t < 0.0) t += 2.0 * pi;
  return t;
}

}  // namespace

DiffusionProblem sin_sin_problem() {
  DiffusionProblem p;
  p.name = "sin_sin";
  p.source = SourceTerm::pointwise(
      [](const Point& x) { return 2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y()); });
  ExactSolution ex;
  ex.value = [](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  ex.gradient = [](const Point& x) {
    return Vec2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()), pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
  };
  ex.energy_squared = pi * pi / 2.0;
  p.exact = ex;
  return p;
}

DiffusionProblem fig1_problem() {
  DiffusionProblem p;
  p.name = "fig1_square";
  p.source = SourceTerm::constant(0.0);
  p.neumann = [](const Point&, const Vec2&) { return 1.0; };
  // u = sum over odd k of 4 sin(k pi x) sinh(k pi y) / (k^2 pi^2 cosh(k pi)).
  ExactSolution ex;
  ex.value = [](const Point& x) {
    double s = 0.0;
    for (int k = 1; k < 4001; k += 2) {
      const double term = 4.0 * std::sin(k * pi * x.x()) * sinh_ratio(k, x.y()) / (k * k * pi * pi);
      s += term;
      if (std::abs(term) < 1e-18 && k > 50) break;
    }
    return s;
  };
  ex.gradient = [](const Point& x) {
    Vec2 g = Vec2::Zero();
    for (int k = 1; k < 40001; k += 2) {
      const double c = 4.0 / (k * pi);
      const Vec2 term(c * std::cos(k * pi * x.x()) * sinh_ratio(k, x.y()),
                      c * std::sin(k * pi * x.x()) * cosh_ratio(k, x.y()));
      g += term;
      if (std::exp(k * pi * (x.y() - 1.0)) < 1e-18 && k > 50) break;
    }
    return g;
  };
  double e2 = 0.0;
  for (int k = 1; k < 2001; k += 2) e2 += 8.0 * std::tanh(k * pi) / (std::pow(k, 3) * std::pow(pi, 3));
  ex.energy_squared = e2;
  p.exact = ex;
  return p;
}

DiffusionProblem lshape_problem() {
  DiffusionProblem p;
  p.name = "lshape_singular";
  p.source = SourceTerm::constant(0.0);
  ExactSolution ex;
  const double a = 2.0 / 3.0;
  ex.value = [a](const Point& x) {
    const double r = x.norm();
    return r == 0.0 ? 0.0 : std::pow(r, a) * std::sin(a * lshape_angle(x));
  };
  ex.gradient = [a](const Point& x) {
    const double r = x.norm();
    if (r == 0.0) return Vec2(0.0, 0.0);
    const double t = lshape_angle(x);
    const double c = a * std::pow(r, a - 1.0);
    return Vec2(c * std::sin((a - 1.0) * t), c * std::cos((a - 1.0) * t));
  };
  auto grad = ex.gradient;
  p.neumann = [grad](const Point& x, const Vec2& n) { return grad(x).dot(n); };
  // |||u|||^2 = integral of g u over the neumann boundary (f = 0, u = 0 on the dirichlet part).
  const std::array<std::array<Point, 2>, 4> sides{{{Point(1, 0), Point(1, 1)},
                                                   {Point(1, 1), Point(-1, 1)},
                                                   {Point(-1, 1), Point(-1, -1)},
                                                   {Point(-1, -1), Point(0, -1)}}};
  const auto& rule = line_rule(40);
  double e2 = 0.0;
  for (const auto& s : sides) {
    const Vec2 d = s[1] - s[0];
    const Vec2 n(d.y(), -d.x());
    const int pieces = 16;
    for (int j = 0; j < pieces; ++j)
      for (const auto& q : rule) {
        const Point x = s[0] + (j + q.t) / pieces * d;
        e2 += q.weight * d.norm() / pieces * p.neumann(x, n / n.norm()) * ex.value(x);
      }
  }
  ex.energy_squared = e2;
  p.exact = ex;
  return p;
}

DiffusionProblem project_source(const DiffusionProblem& problem, const MeshPtr& mesh) {
  DiffusionProblem out = problem;
  const auto& rule = triangle_rule(10);
  std::vector<double> values(mesh->num_elements());
  double defect = 0.0;
  for (int K = 0; K < mesh->num_elements(); ++K) {
    double mean = 0.0;
    for (const auto& q : rule) mean += q.weight * problem.source.at(*mesh, K, mesh->map(K, q.bary));
    values[K] = mean;
    for (const auto& q : rule) {
      const double d = problem.source.at(*mesh, K, mesh->map(K, q.bary)) - mean;
      defect += q.weight * mesh->area(K) * d * d;
    }
  }
  out.source = SourceTerm::piecewise(mesh, std::move(values));
  out.projection_defect = std::sqrt(defect);
  out.exact.reset();
  out.name = problem.name + "_projected";
  return out;
}

}  // namespace verifem
