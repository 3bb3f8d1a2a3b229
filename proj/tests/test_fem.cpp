#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "verifem/fem.hpp"

using namespace verifem;

namespace {

MeshPtr right_triangle() {
  std::vector<Point> v{{0, 0}, {1, 0}, {0, 1}};
  BoundaryMap b{{{0, 1}, BoundaryLabel::dirichlet}, {{1, 2}, BoundaryLabel::neumann}, {{0, 2}, BoundaryLabel::neumann}};
  return std::make_shared<const Mesh>(v, std::vector<Triangle>{{0, 1, 2}}, b);
}

// Stiffness entry of vertex ids (a, b) on the single triangle, independent of the
// vertex rotation applied by the mesh constructor.
Eigen::Matrix3d by_vertex(const Mesh& m, const Eigen::Matrix3d& k) {
  Eigen::Matrix3d out;
  const auto& t = m.triangle(0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(t[i], t[j]) = k(i, j);
  return out;
}

}  // namespace

TEST(Assemble, ReferenceStiffness) {
  auto m = right_triangle();
  const Eigen::Matrix3d k = by_vertex(*m, element_stiffness(*m, 0, Mat2::Identity()));
  Eigen::Matrix3d expected;
  expected << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  EXPECT_LT((k - 0.5 * expected).norm(), 1e-15);
  const Eigen::Matrix3d k3 = by_vertex(*m, element_stiffness(*m, 0, 3.0 * Mat2::Identity()));
  EXPECT_LT((k3 - 3.0 * k).norm(), 1e-15);
}

TEST(Assemble, UnitSourceLoad) {
  auto m = right_triangle();
  DiffusionProblem p;
  p.source = SourceTerm::constant(1.0);
  const Eigen::Vector3d f = element_load(p, *m, 0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(f[i], 1.0 / 6.0, 1e-16);
  p.source = SourceTerm::pointwise([](const Point&) { return 1.0; });
  const Eigen::Vector3d g = element_load(p, *m, 0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(g[i], 1.0 / 6.0, 1e-15);
}

TEST(Assemble, MatrixIsSymmetric) {
  auto p = sin_sin_problem();
  p.coefficient = [](const Point& x) {
    Mat2 a;
    a << 2 + x.x(), 0.3, 0.3, 1 + x.y();
    return a;
  };
  const auto sys = assemble(p, FeSpace(l_shape_mesh(3)));
  const SparseMatrix t = sys.matrix.transpose();
  EXPECT_EQ((sys.matrix - t).norm(), 0.0);
}

TEST(Solve, ZeroDataGivesZero) {
  DiffusionProblem p;
  auto space = make_space(unit_square_mesh(4, "fig1"));
  const auto u = solve(p, space);
  EXPECT_EQ(u.values.norm(), 0.0);
}

TEST(Solve, Fig1ResidualIsSmall) {
  auto p = fig1_problem();
  auto space = make_space(unit_square_mesh(8, "fig1"));
  const auto sys = assemble(p, *space);
  const auto u = solve_system(space, sys.matrix, sys.load);
  Eigen::VectorXd r = sys.matrix * u.values - sys.load;
  for (int i = 0; i < space->dofs(); ++i)
    if (space->is_dirichlet(i)) r[i] = 0.0;
  EXPECT_LE(r.norm() / sys.load.norm(), 1e-10);
}

TEST(Solve, SinSinErrorDecreases) {
  auto p = sin_sin_problem();
  const auto u16 = solve(p, make_space(unit_square_mesh(16)));
  const auto u32 = solve(p, make_space(unit_square_mesh(32)));
  EXPECT_LT(exact_energy_error(p, u32), exact_energy_error(p, u16));
}

TEST(Flux, Examples) {
  auto space = make_space(unit_square_mesh(3));
  DiffusionProblem p;
  auto zero = flux(p, zero_function(space));
  for (const auto& q : zero.values) EXPECT_EQ(q.norm(), 0.0);
  const auto x = interpolate(space, [](const Point& pt) { return pt.x(); });
  for (const auto& q : flux(p, x).values) EXPECT_NEAR((q - Vec2(1, 0)).norm(), 0.0, 1e-13);
  p.coefficient = [](const Point&) { return Mat2(Eigen::Vector2d(2, 1).asDiagonal()); };
  for (const auto& q : flux(p, x).values) EXPECT_NEAR((q - Vec2(2, 0)).norm(), 0.0, 1e-13);
}

TEST(Norms, FluxNormMatchesEnergyNorm) {
  auto p = sin_sin_problem();
  auto space = make_space(unit_square_mesh(6));
  const auto u = solve(p, space);
  EXPECT_NEAR(flux_norm(p, flux(p, u)), energy_norm(p, u), 1e-13);
  EXPECT_EQ(energy_norm(p, zero_function(space)), 0.0);
  auto p2 = p;
  p2.coefficient = [](const Point&) { return Mat2(2.5 * Mat2::Identity()); };
  EXPECT_NEAR(bilinear(p2, u, u), 2.5 * bilinear(p, u, u), 1e-12);
}

TEST(Norms, SinSinExactEnergy) {
  // Zero discrete function: the reference error is |||u|||.
  auto p = sin_sin_problem();
  auto space = make_space(unit_square_mesh(8));
  const double e = exact_energy_error(p, zero_function(space));
  EXPECT_NEAR(e * e, std::numbers::pi * std::numbers::pi / 2.0, 1e-9);
}

TEST(ExactError, LinearIsReproduced) {
  DiffusionProblem p;
  p.exact = ExactSolution{[](const Point& x) { return 2 * x.x() - x.y(); },
                          [](const Point&) { return Vec2(2, -1); }, std::nullopt};
  auto space = make_space(unit_square_mesh(5));
  const auto u = interpolate(space, p.exact->value);
  EXPECT_LT(exact_energy_error(p, u), 1e-12);
}

TEST(ExactError, SinSinRate) {
  auto p = sin_sin_problem();
  const double e8 = exact_energy_error(p, solve(p, make_space(unit_square_mesh(8))));
  const double e16 = exact_energy_error(p, solve(p, make_space(unit_square_mesh(16))));
  EXPECT_GE(e8 / e16, 1.8);
  EXPECT_LE(e8 / e16, 2.2);
}

TEST(ExactError, EnergyIdentityAgreesWithQuadrature) {
  auto p = sin_sin_problem();
  const auto u = solve(p, make_space(unit_square_mesh(16)));
  EXPECT_NEAR(reference_energy_error(p, u), exact_energy_error(p, u), 1e-8);
}

TEST(ExactError, EnergyIdentityResolvesTheCorner) {
  // Quadrature on sub-refinements converges to the identity value from below.
  auto l = lshape_problem();
  auto space = make_space(l_shape_mesh(4));
  const auto ul = solve(l, space);
  const double ref = reference_energy_error(l, ul);
  double previous = exact_energy_error(l, ul);
  for (int r = 1; r <= 4; ++r) {
    const double sub = exact_energy_error(l, prolong(ul, make_space(uniform_refine(space->mesh(), r))));
    EXPECT_GT(sub, previous);
    EXPECT_LT(sub, ref);
    previous = sub;
  }
  EXPECT_NEAR(previous / ref, 1.0, 2e-4);
}

TEST(ExactError, BestApproximation) {
  auto p = sin_sin_problem();
  auto space = make_space(unit_square_mesh(8));
  const auto u = solve(p, space);
  const auto iu = interpolate(space, p.exact->value);
  EXPECT_LE(exact_energy_error(p, u), exact_energy_error(p, iu) + 1e-10);
}

TEST(Fig1, SeriesEnergyMatchesNeumannIntegral) {
  auto p = fig1_problem();
  // Energy via the gradient series on a fine interior box should stay below |||u|||^2.
  EXPECT_GT(*p.exact->energy_squared, 0.0);
  EXPECT_NEAR(p.exact->value(Point(0.5, 1.0)), 0.0, 1.0);
  const auto u = solve(p, make_space(unit_square_mesh(16, "fig1")));
  const double a = reference_energy_error(p, u);
  const double b = exact_energy_error(p, u);
  EXPECT_NEAR(a / b, 1.0, 0.05);
}

TEST(ResidualEval, GalerkinOrthogonality) {
  auto p = fig1_problem();
  auto coarse = make_space(unit_square_mesh(8, "fig1"));
  auto fine = make_space(uniform_refine(coarse->mesh()));
  const auto u = solve(p, coarse);
  const auto uf = solve(p, fine);
  const auto up = prolong(u, fine);
  const double scale = assemble(p, *coarse).load.norm();
  EXPECT_LE(std::abs(residual_eval(p, u, up)), 1e-10 * scale);
  EXPECT_EQ(residual_eval(p, u, zero_function(fine)), 0.0);
  FeFunction v{fine, uf.values - up.values};
  const double e = energy_norm(p, v);
  EXPECT_NEAR(residual_eval(p, u, v), e * e, 1e-8 * e * e);
}

TEST(Prolong, RejectsNonNested) {
  auto a = make_space(unit_square_mesh(2));
  auto b = make_space(unit_square_mesh(4));
  EXPECT_THROW(prolong(zero_function(a), b), std::invalid_argument);
}
