#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "verifem/mesh.hpp"

namespace verifem {

// Scalar field over the domain that is either evaluable pointwise or constant
// on each element of a given mesh and its refinements.
class SourceTerm {
 public:
  enum class Kind { constant, pointwise, centroid_sampled, piecewise };

  SourceTerm() = default;
  static SourceTerm constant(double value);
  static SourceTerm pointwise(std::function<double(const Point&)> f);
  // Constant per element: the function evaluated at the element centroid.
  static SourceTerm centroid_sampled(std::function<double(const Point&)> f);
  // Per-element values on `base`; refinements of `base` inherit their ancestor's value.
  static SourceTerm piecewise(MeshPtr base, std::vector<double> values);

  Kind kind() const { return kind_; }
  bool elementwise_constant() const { return kind_ != Kind::pointwise; }
  bool is_zero() const { return kind_ == Kind::constant && value_ == 0.0; }

  // Value on K; requires elementwise_constant().
  double on_element(const Mesh& mesh, int K) const;
  double at(const Mesh& mesh, int K, const Point& x) const;

 private:
  Kind kind_ = Kind::constant;
  double value_ = 0.0;
  std::function<double(const Point&)> fn_;
  MeshPtr base_;
  std::vector<double> values_;
};

using CoefficientField = std::function<Mat2(const Point&)>;
// Neumann data g(x, n) with n the outward unit normal.
using NeumannData = std::function<double(const Point&, const Vec2&)>;

struct ExactSolution {
  std::function<double(const Point&)> value;
  std::function<Vec2(const Point&)> gradient;
  // |||u|||^2 when known in closed form.
  std::optional<double> energy_squared;
};

// -div(A grad u) = f in the domain, u = 0 on the dirichlet boundary, A grad u . n = g
// on the neumann boundary. A is sampled at element centroids, so it is constant per element.
struct DiffusionProblem {
  std::string name;
  CoefficientField coefficient = [](const Point&) { return Mat2::Identity(); };
  SourceTerm source;
  NeumannData neumann;
  std::optional<ExactSolution> exact;
  // Elementwise projection defect ||f - f_proj|| when the source was projected.
  std::optional<double> projection_defect;

  Mat2 A(const Mesh& mesh, int K) const { return coefficient(mesh.centroid(K)); }
  double g(const Point& x, const Vec2& n) const { return neumann ? neumann(x, n) : 0.0; }
};

// u = sin(pi x) sin(pi y), all dirichlet; pairs with unit_square_mesh(n, "all_dirichlet").
DiffusionProblem sin_sin_problem();
// Laplace equation, g = 1 on the top side; pairs with unit_square_mesh(n, "fig1").
DiffusionProblem fig1_problem();
// u = r^(2/3) sin(2 theta / 3), f = 0, g from the exact gradient; pairs with l_shape_mesh(n).
DiffusionProblem lshape_problem();

// Copy of `problem` with f replaced by its elementwise mean on `mesh` (degree-10
// quadrature). The L2 defect of the projection is stored on the result.
DiffusionProblem project_source(const DiffusionProblem& problem, const MeshPtr& mesh);

}  // namespace verifem
