#include <gtest/gtest.h>

#include <cmath>

#include "verifem/residual.hpp"

using namespace verifem;

TEST(Residual, DataLabelsAndWeights) {
  auto m = unit_square_mesh(3, "fig1");
  auto p = fig1_problem();
  const auto u = solve(p, make_space(m));
  const auto d = residual_data(p, u);
  for (int e = 0; e < m->num_edges(); ++e) {
    const double expected = m->edge(e).label == BoundaryLabel::interior  ? 0.5
                            : m->edge(e).label == BoundaryLabel::neumann ? 1.0
                                                                         : 0.0;
    EXPECT_EQ(d.beta[e], expected);
  }
}

TEST(Residual, ExplicitIndicatorsVanishForZeroData) {
  auto m = unit_square_mesh(3);
  DiffusionProblem p;
  const auto u = solve(p, make_space(m));
  const auto rep = explicit_indicators(residual_data(p, u));
  EXPECT_EQ(rep.eta, 0.0);
  EXPECT_EQ(rep.kind, BoundKind::indicator);
  EXPECT_FALSE(rep.unconditional());
}

TEST(Residual, ExplicitIndicatorDecaysLinearly) {
  auto p = sin_sin_problem();
  const auto e4 = explicit_indicators(residual_data(p, solve(p, make_space(unit_square_mesh(8))))).eta;
  const auto e8 = explicit_indicators(residual_data(p, solve(p, make_space(unit_square_mesh(16))))).eta;
  EXPECT_NEAR(e4 / e8, 2.0, 0.2);
}

TEST(Residual, ExplicitIndicatorMatchesHandComputation) {
  // Single element, f = 1, all data on one triangle with a dirichlet edge: u_h = 0.
  std::vector<Point> v{{0, 0}, {1, 0}, {0, 1}};
  BoundaryMap b{{{0, 1}, BoundaryLabel::dirichlet}, {{1, 2}, BoundaryLabel::dirichlet}, {{0, 2}, BoundaryLabel::dirichlet}};
  auto m = std::make_shared<const Mesh>(v, std::vector<Triangle>{{0, 1, 2}}, b);
  DiffusionProblem p;
  p.source = SourceTerm::constant(1.0);
  const auto u = solve(p, make_space(m));
  const auto rep = explicit_indicators(residual_data(p, u));
  EXPECT_NEAR(rep.eta, std::sqrt(2.0 * 0.5), 1e-14);
}

TEST(Residual, PatchSolveRejectsBadDegree) {
  auto m = unit_square_mesh(2);
  auto p = sin_sin_problem();
  const auto d = residual_data(p, solve(p, make_space(m)));
  EXPECT_THROW(flux_free_patch_solve(0, d, p, 0), std::invalid_argument);
}

TEST(Residual, FloatingPatchesHaveZeroMean) {
  auto m = unit_square_mesh(4, "fig1");
  auto p = fig1_problem();
  const auto u = solve(p, make_space(m));
  const auto patches = flux_free_patches(residual_data(p, u), p);
  int floating = 0;
  for (const auto& s : patches) {
    EXPECT_EQ(s.mean_zero, !std::any_of(s.elements.begin(), s.elements.end(), [&](int K) {
      for (int e : m->element_edges(K))
        if (m->edge(e).label == BoundaryLabel::dirichlet) return true;
      return false;
    }));
    if (s.mean_zero) {
      ++floating;
      EXPECT_NEAR(s.mean, 0.0, 1e-12);
    }
  }
  EXPECT_GT(floating, 0);
}

TEST(Residual, FluxFreeBracketsTheError) {
  for (const char* name : {"sin_sin", "fig1", "lshape"}) {
    DiffusionProblem p;
    MeshPtr m;
    if (std::string(name) == "sin_sin") {
      p = sin_sin_problem();
      m = unit_square_mesh(6);
    } else if (std::string(name) == "fig1") {
      p = fig1_problem();
      m = unit_square_mesh(6, "fig1");
    } else {
      p = lshape_problem();
      m = l_shape_mesh(3);
    }
    const auto u = solve(p, make_space(m));
    const auto patches = flux_free_patches(residual_data(p, u), p);
    const auto up = flux_free_estimate(p, patches);
    const auto lo = flux_free_lower_bound(p, patches, u);
    const double err = reference_energy_error(p, u);
    EXPECT_EQ(up.kind, BoundKind::guaranteed_upper) << name;
    EXPECT_EQ(lo.kind, BoundKind::guaranteed_lower) << name;
    EXPECT_LE(lo.eta, err * (1.0 + 1e-8)) << name;
    EXPECT_GT(lo.eta, 0.5 * err) << name;
    EXPECT_LT(up.eta / err, 2.0) << name;
    EXPECT_LT(lo.constants.at("interpolation_defect"), 0.1) << name;
  }
}

TEST(Residual, FluxFreeUpperBoundConverges) {
  auto p = sin_sin_problem();
  double prev = 0.0;
  for (int n : {4, 8, 16}) {
    auto m = unit_square_mesh(n);
    const auto u = solve(p, make_space(m));
    const auto up = flux_free_estimate(p, flux_free_patches(residual_data(p, u), p));
    const double err = reference_energy_error(p, u);
    EXPECT_GE(up.eta, err) << n;
    if (prev > 0.0) EXPECT_NEAR(prev / up.eta, 2.0, 0.25);
    prev = up.eta;
  }
}

TEST(Residual, TestFunctionVanishesOnDirichletBoundary) {
  auto m = unit_square_mesh(3, "fig1");
  auto p = fig1_problem();
  const auto u = solve(p, make_space(m));
  const auto v = flux_free_test_function(flux_free_patches(residual_data(p, u), p), u, 1);
  const Mesh& f = v.mesh();
  EXPECT_EQ(f.num_elements(), 4 * m->num_elements());
  for (int i = 0; i < f.num_vertices(); ++i)
    if (f.is_dirichlet_vertex(i)) EXPECT_EQ(v.values[i], 0.0);
}

TEST(Residual, DegenerateLowerBoundForExactSolution) {
  auto m = unit_square_mesh(3);
  DiffusionProblem p;
  const auto u = solve(p, make_space(m));
  const auto lo = flux_free_lower_bound(p, flux_free_patches(residual_data(p, u), p), u);
  EXPECT_EQ(lo.eta, 0.0);
  EXPECT_EQ(lo.caveats, std::vector<std::string>{"degenerate"});
}
