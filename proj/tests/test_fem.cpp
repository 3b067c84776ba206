#include <cutint/fem.hpp>
#include <cutint/experiments.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace cutint;

namespace {

const Rect disc_bulk{-1.5, 1.5, -1.5, 1.5};

AssemblyOptions assembly(Method method, int m) {
  AssemblyOptions o;
  o.rules.cut.method = method;
  o.rules.cut.m = m;
  o.rules.cut.seed = 11;
  return o;
}

double max_deviation_from_one(const Eigen::VectorXd& x) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x(i) - 1.0));
  return d;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(FeSpace, DofCounts) {
  Mesh mesh = build_uniform({0, 1, 0, 1}, 1.0);
  EXPECT_EQ(build_space(mesh, 1).num_dofs(), 4);
  EXPECT_EQ(build_space(mesh, 2).num_dofs(), 9);
  EXPECT_EQ(build_space(mesh, 3).num_dofs(), 16);
  EXPECT_THROW(build_space(mesh, 4), Error);
}

TEST(FeSpace, InterpolantReproducesPolynomials) {
  Mesh mesh = build_uniform({0, 1, 0, 1}, 0.25);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int r = 1; r <= 3; ++r) {
    FeSpace space = build_space(mesh, r);
    auto u = [r](const Vec2& x) { return std::pow(x.x(), r) - 2.0 * std::pow(x.y(), r) + (r > 1 ? x.x() * x.y() : x.y()) + 0.5; };
    FeFunction uh{&space, interpolate_function(space, u)};
    for (int k = 0; k < 50; ++k) {
      Vec2 x(U(rng), U(rng));
      EXPECT_NEAR(uh.value(x), u(x), 1e-12) << "r=" << r;
    }
  }
}

TEST(FeSpace, ActiveDofsCoverNonExteriorCells) {
  Mesh mesh = build_uniform(disc_bulk, 0.25);
  auto cls = classify(mesh, CircleLevelSet(), 0.0);
  FeSpace space = build_space(mesh, 2);
  mark_active(space, cls);
  EXPECT_GT(space.num_active(), 0);
  EXPECT_LT(space.num_active(), space.num_dofs());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    if (cls.tags[c] == CellTag::exterior) continue;
    const int* d = space.dofs->cell_dofs(static_cast<int>(c));
    for (int k = 0; k < space.dofs->dofs_per_cell(); ++k) EXPECT_TRUE(space.active[d[k]]);
  }
}

TEST(FeAssembly, LpPointCount) {
  EXPECT_EQ(fe_lp_points(4, 2), 3);
  EXPECT_EQ(fe_lp_points(5, 3), 4);
  EXPECT_EQ(fe_lp_points(10, 2), 5);
}

// u ≡ 1 solves -Δu + u = 1 with zero Neumann data, and the constant lies in
// the discrete space, so every rule reproduces it up to round-off.
TEST(FeAssembly, PoissonPatchTest) {
  Mesh mesh = build_uniform(disc_bulk, 0.25);
  DiscreteLevelSet phi = interpolate(CircleLevelSet(), mesh, 2);
  auto cls = classify(mesh, phi, 0.0);
  FeSpace space = build_space(mesh, 2);
  mark_active(space, cls);
  for (Method method : {Method::LP, Method::ST, Method::MF, Method::MC}) {
    auto sys = assemble_poisson(
        space, phi, cls, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return 1.0; }, assembly(method, 4));
    Eigen::VectorXd x = solve(sys);
    EXPECT_LT(max_deviation_from_one(x), 1e-10) << to_string(method);
  }
}

TEST(FeAssembly, NarrowBandPatchTest) {
  Mesh mesh = build_uniform(disc_bulk, 0.125);
  DiscreteLevelSet phi = interpolate(CircleLevelSet(), mesh, 2);
  auto band = classify_band(mesh, phi, 2.0 * mesh.h);
  FeSpace space = build_space(mesh, 2);
  mark_active(space, band);
  LaplaceBeltramiProblem prob;
  auto coeffs = narrow_band_coefficients([prob](const Vec2& x) { return prob.hessian(x); });
  for (Method method : {Method::LP, Method::ST, Method::MF, Method::MC}) {
    auto sys = assemble_narrowband(
        space, phi, band, coeffs, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return 1.0; },
        assembly(method, 4));
    Eigen::VectorXd x = solve(sys);
    EXPECT_LT(max_deviation_from_one(x), 1e-10) << to_string(method);
  }
}

TEST(FeAssembly, MatrixIsSymmetricAndLpIsPositiveDefinite) {
  Mesh mesh = build_uniform(disc_bulk, 0.125);
  DiscreteLevelSet phi = interpolate(CircleLevelSet(), mesh, 2);
  auto cls = classify(mesh, phi, 0.0);
  FeSpace space = build_space(mesh, 2);
  mark_active(space, cls);
  auto sys = assemble_poisson(
      space, phi, cls, [](const Vec2&) { return 1.0; }, [](const Vec2& x) { return x.x(); }, assembly(Method::LP, 4));
  Eigen::SparseMatrix<double> At = sys.matrix.transpose();
  EXPECT_LE((sys.matrix - At).norm(), 1e-14 * sys.matrix.norm());
  SolveReport rep;
  solve(sys, &rep);
  EXPECT_EQ(rep.nonpositive_pivots, 0);
  EXPECT_GT(rep.min_pivot, 0.0);
  EXPECT_LE(rep.relative_residual, 1e-10);
}

TEST(FeAssembly, NarrowBandMetricGuard) {
  auto coeffs = narrow_band_coefficients([](const Vec2&) { return Mat2(Mat2::Identity()); });
  LinearLevelSet phi(Vec2(1, 0), 0.0);  // φ = x
  auto a = coeffs(phi, Vec2(0.5, 0.0));  // I − φH = 0.5 I
  EXPECT_NEAR(a.mu, 0.25, 1e-15);
  EXPECT_NEAR(a.coefficient(0, 0), 4.0, 1e-14);
  EXPECT_NEAR(a.coefficient(0, 1), 0.0, 1e-15);
  EXPECT_THROW(coeffs(phi, Vec2(1.0, 0.0)), Error);  // det(I − φH) = 0
}

TEST(FeSolve, DenseAndSparsePathsMatchOnRandomSpd) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N(0.0, 1.0);
  const int n = 60;
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, 4.0 + std::abs(N(rng)));
    if (i + 1 < n) {
      double v = 0.5 * N(rng);
      trip.emplace_back(i, i + 1, v);
      trip.emplace_back(i + 1, i, v);
    }
  }
  FeSystem sys;
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.load = Eigen::VectorXd::NullaryExpr(n, [&]() { return N(rng); });
  SolveReport dense, sparse;
  Eigen::VectorXd a = solve(sys, &dense);
  SolveOptions so;
  so.dense_below = 0;
  Eigen::VectorXd b = solve(sys, &sparse, so);
  EXPECT_TRUE(dense.dense);
  EXPECT_FALSE(sparse.dense);
  EXPECT_LE(dense.relative_residual, 1e-12);
  EXPECT_LE(sparse.relative_residual, 1e-12);
  EXPECT_LE((a - b).norm(), 1e-12 * a.norm());
}

TEST(FeSolve, IdentityAndSingular) {
  FeSystem sys;
  sys.matrix.resize(3, 3);
  sys.matrix.setIdentity();
  sys.load = Eigen::Vector3d(1, 2, 3);
  EXPECT_LE((solve(sys) - sys.load).norm(), 1e-15);
  sys.matrix.coeffRef(1, 1) = 0.0;
  EXPECT_THROW(solve(sys), Error);
}

TEST(EdgeStabilization, VanishesOnGlobalPolynomials) {
  Mesh mesh = build_uniform(disc_bulk, 0.25);
  auto cls = classify(mesh, CircleLevelSet(), 0.0);
  ASSERT_FALSE(cls.boundary_faces.empty());
  FeSpace space = build_space(mesh, 2);
  auto J = assemble_edge_stabilization(space, cls, 1.0);
  auto u = interpolate_function(space, [](const Vec2& x) { return 1.0 + 2.0 * x.x() - x.y() + x.x() * x.y(); });
  Eigen::Map<const Eigen::VectorXd> v(u.data(), static_cast<Eigen::Index>(u.size()));
  EXPECT_LE(std::abs(v.dot(J * v)), 1e-10);
}

// A kink of slope γ across a single face F of length L gives σγ²L.
TEST(EdgeStabilization, SingleFaceJump) {
  Mesh mesh = build_uniform(disc_bulk, 0.25);
  auto cls = classify(mesh, CircleLevelSet(), 0.0);
  const int e = cls.boundary_faces.front();
  cls.boundary_faces = {e};
  const Vec2 a = mesh.vertices[mesh.edges[e].vertices[0]];
  const Vec2 b = mesh.vertices[mesh.edges[e].vertices[1]];
  const Vec2 nu = perp_right(b - a).normalized();
  const double gamma = 1.7, sigma = 0.3, L = (b - a).norm();
  FeSpace space = build_space(mesh, 1);
  auto u = interpolate_function(space, [&](const Vec2& x) { return gamma * std::max(0.0, nu.dot(x - a)); });
  auto J = assemble_edge_stabilization(space, cls, sigma);
  Eigen::Map<const Eigen::VectorXd> v(u.data(), static_cast<Eigen::Index>(u.size()));
  EXPECT_NEAR(v.dot(J * v), sigma * gamma * gamma * L, 1e-12);
}

TEST(FeExport, MatrixAndSolutionFormats) {
  Mesh mesh = build_uniform(disc_bulk, 0.5);
  auto cls = classify(mesh, CircleLevelSet(), 0.0);
  FeSpace space = build_space(mesh, 1);
  mark_active(space, cls);
  auto sys = assemble_poisson(
      space, CircleLevelSet(), cls, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return 1.0; },
      assembly(Method::LP, 4));
  FeFunction uh = expand(space, sys, solve(sys));
  std::ostringstream m, s;
  write_matrix(m, sys.matrix);
  write_solution(s, uh);
  EXPECT_EQ(count_lines(m.str()), static_cast<std::size_t>(sys.matrix.nonZeros()));
  EXPECT_EQ(count_lines(s.str()), static_cast<std::size_t>(space.num_active()));
  std::istringstream first(s.str());
  double x, y, v;
  first >> x >> y >> v;
  EXPECT_NEAR(v, 1.0, 1e-10);
}
