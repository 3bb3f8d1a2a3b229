#pragma once

#include <array>
#include <vector>

namespace verifem {

// Barycentric point with weight normalized to sum 1 over the reference triangle.
struct TrianglePoint {
  std::array<double, 3> bary;
  double weight;
};

// Point on [0,1] with weight normalized to sum 1.
struct LinePoint {
  double t;
  double weight;
};

// Exact for polynomials of total degree <= degree.
// Degree <= 5 uses the 7-point symmetric rule; higher degrees use a collapsed
// Gauss-Legendre product rule.
const std::vector<TrianglePoint>& triangle_rule(int degree);

// n-point Gauss-Legendre on [0,1].
const std::vector<LinePoint>& line_rule(int points);

}  // namespace verifem
