#pragma once

#include <array>
#include <functional>
#include <vector>

#include "verifem/fem.hpp"

namespace verifem {

// Monomials xi^a eta^b in local coordinates xi = (x - center) / scale, ordered
// by total degree: 1, xi, eta, xi^2, xi eta, eta^2, ...
struct LocalFrame {
  Point center = Point::Zero();
  double scale = 1.0;

  Vec2 local(const Point& x) const { return (x - center) / scale; }
};

LocalFrame element_frame(const Mesh& mesh, int K);

int monomial_count(int degree);
Eigen::VectorXd monomials(int degree, const Vec2& xi);
// Physical gradients (rows) of the monomials of `frame`.
Eigen::MatrixX2d monomial_gradients(int degree, const LocalFrame& frame, const Vec2& xi);

// Barycentric lattice of degree m: multiplicities (i, j, k) with i + j + k = m.
std::vector<std::array<int, 3>> lattice(int m);

// Columns are monomial coefficients of the Lagrange basis on K for the lattice of degree m.
Eigen::MatrixXd lagrange_basis(const Mesh& mesh, int K, int m, const LocalFrame& frame);

// Element stiffness of the monomial basis, integral of (A grad p_i) . grad p_j.
Eigen::MatrixXd monomial_stiffness(const Mesh& mesh, int K, int degree, const LocalFrame& frame, const Mat2& A);

// Per-element polynomial field (scalar or 2-vector) in the monomial basis of the element frames.
class PolyField {
 public:
  PolyField() = default;
  PolyField(MeshPtr mesh, int degree, int components);

  const MeshPtr& mesh() const { return mesh_; }
  int degree() const { return degree_; }
  int components() const { return components_; }
  int block_size() const { return block_; }
  const LocalFrame& frame(int K) const { return frames_[K]; }

  // Coefficients of element K: block_size() rows, components() columns.
  Eigen::Block<Eigen::MatrixXd> coefficients(int K) { return coeffs_.block(K * block_, 0, block_, components_); }
  Eigen::Block<const Eigen::MatrixXd> coefficients(int K) const {
    return coeffs_.block(K * block_, 0, block_, components_);
  }

  double value(int K, const Point& x, int component = 0) const;
  Vec2 vector(int K, const Point& x) const;
  double divergence(int K, const Point& x) const;

 private:
  MeshPtr mesh_;
  int degree_ = 0;
  int components_ = 1;
  int block_ = 1;
  std::vector<LocalFrame> frames_;
  Eigen::MatrixXd coeffs_;
};

using VectorField = std::function<Vec2(int K, const Point& x)>;

// Per-element integral of A^-1 p . p with a rule of the given degree.
std::vector<double> flux_norm_squared(const DiffusionProblem& problem, const Mesh& mesh, const VectorField& p,
                                      int degree);
double sum(const std::vector<double>& v);

}  // namespace verifem
