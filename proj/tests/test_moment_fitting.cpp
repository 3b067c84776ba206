#include <cutint/cut_rules.hpp>
#include <cutint/reference.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using namespace cutint;

TEST(MomentBases, SizesForQuadraticCase) {
  auto B = moment_bases(2);
  EXPECT_EQ(B.g.size(), 6u);
  EXPECT_EQ(B.h.size(), 6u);
  EXPECT_EQ(B.f.size(), 14u);
}

TEST(MomentBases, FieldsAreDivergenceFreeSymbolically) {
  for (int d = 0; d <= 4; ++d) {
    auto B = moment_bases(d);
    for (const auto& f : B.f) EXPECT_TRUE(f.divergence().terms.empty());
    // div h_j - 2 g_j vanishes coefficient by coefficient.
    for (std::size_t j = 0; j < B.g.size(); ++j) {
      Poly2 twice = B.g[j];
      for (auto& t : twice.terms) t.c *= 2.0;
      Poly2 diff = B.h[j].divergence();
      for (auto t : twice.terms) diff.terms.push_back({-t.c, t.a, t.b});
      for (const auto& t : diff.normalized().terms) EXPECT_LE(std::abs(t.c), 1e-15);
    }
  }
}

TEST(MomentBases, ContainsTheQuadraticFieldSet) {
  // Each classical quadratic divergence-free field is a multiple of one of ours.
  const std::vector<std::function<Vec2(const Vec2&)>> classical = {
      [](const Vec2&) { return Vec2(1, 0); },
      [](const Vec2&) { return Vec2(0, 1); },
      [](const Vec2& p) { return Vec2(0, p.x()); },
      [](const Vec2& p) { return Vec2(p.x(), -p.y()); },
      [](const Vec2& p) { return Vec2(p.y(), 0); },
      [](const Vec2& p) { return Vec2(p.y() * p.y(), 0); },
      [](const Vec2& p) { return Vec2(2 * p.x() * p.y(), -p.y() * p.y()); },
      [](const Vec2& p) { return Vec2(p.x() * p.x(), -2 * p.x() * p.y()); },
      [](const Vec2& p) { return Vec2(0, p.x() * p.x()); },
  };
  auto B = moment_bases(2);
  const std::vector<Vec2> probes{Vec2(0.3, -0.7), Vec2(1.1, 0.4), Vec2(-0.5, 0.9)};
  for (const auto& f : classical) {
    bool found = false;
    for (const auto& g : B.f) {
      // f = c g at every probe for a single c.
      double c = 0.0;
      bool ok = true;
      for (const auto& p : probes) {
        Vec2 fv = f(p), gv = g(p);
        for (int k = 0; k < 2; ++k) {
          if (std::abs(gv[k]) > 1e-14) {
            double ck = fv[k] / gv[k];
            if (c == 0.0) c = ck;
            ok &= std::abs(ck - c) < 1e-12;
          } else {
            ok &= std::abs(fv[k]) < 1e-14;
          }
        }
      }
      found |= ok && c != 0.0;
    }
    EXPECT_TRUE(found);
  }
}

TEST(MomentFitting, PointCountExceedsBasis) {
  std::array<Vec2, 3> v{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  LinearLevelSet phi(Vec2(1, 1), -0.5);
  auto g = build_cut_geometry(phi, v, LevelCut{}, 3);
  for (int d = 0; d <= 3; ++d) {
    auto B = moment_bases(d);
    auto pts = moment_fit_points(g, d);
    EXPECT_GE(pts.size(), B.g.size() + 3);
    EXPECT_GT(pts.size(), B.f.size());
  }
}

TEST(MomentFitting, LinearCutSurfaceFluxIdentity) {
  std::array<Vec2, 3> v{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  LinearLevelSet phi(Vec2(1, 1), -0.5);
  auto g = build_cut_geometry(phi, v, LevelCut{}, 3);
  MomentFitDiagnostics diag;
  auto sw = moment_fit_surface_weights(g, phi, 2, &diag);
  // Flux of (1,0) through the interface equals its length times n_x.
  double flux = 0.0, length = 0.0;
  for (std::size_t i = 0; i < sw.nodes.size(); ++i) {
    flux += sw.weights[i] * sw.normals[i].x();
    length += sw.weights[i];
  }
  const double chord = std::sqrt(0.5);
  EXPECT_NEAR(flux, chord / std::sqrt(2.0), 1e-13);
  EXPECT_NEAR(length, chord, 1e-13);
  EXPECT_LE(diag.surface_residual, 1e-10);
}

TEST(MomentFitting, LinearCutReproducesPolygonMoments) {
  std::array<Vec2, 3> v{Vec2(0.2, 0.1), Vec2(0.9, 0.3), Vec2(0.4, 0.8)};
  LinearLevelSet phi(Vec2(0.8, -0.6), -0.1);
  auto g = build_cut_geometry(phi, v, LevelCut{}, 3);
  MomentFitDiagnostics diag;
  auto rule = moment_fit_area_weights(g, phi, 2, &diag);
  for (const auto& gj : moment_bases(2).g) {
    auto f = [&](const Vec2& x) { return gj(x); };
    EXPECT_NEAR(rule.integrate(f), integrate_polygon(g, f), 1e-10);
  }
  EXPECT_EQ(diag.area_rank, 6);
  EXPECT_LE(diag.area_residual, 1e-9);
}

TEST(MomentFitting, CircleCellArcLengthAndResiduals) {
  Mesh mesh = build_uniform({-1.5, 1.5, -1.5, 1.5}, 0.1);
  CircleLevelSet circle;
  auto cls = classify(mesh, circle, 0.0);
  int checked = 0;
  for (int c : cls.cut_cells) {
    auto g = build_cut_geometry(mesh, c, circle, LevelCut{});
    if (g.components.size() != 1 || g.components[0].length < 0.3 * g.h) continue;
    MomentFitDiagnostics diag;
    auto sw = moment_fit_surface_weights(g, circle, 2, &diag);
    double sum = 0.0;
    for (double w : sw.weights) sum += w;
    const auto& comp = g.components[0];
    double arc = 2.0 * std::asin(0.5 * comp.length);
    EXPECT_NEAR(sum / arc, 1.0, 1e-3) << "cell " << c;
    auto rule = moment_fit_area_weights(g, circle, 2, &diag);
    EXPECT_LE(diag.surface_residual, 1e-9);
    EXPECT_LE(diag.area_residual, 1e-9);
    double oracle = adaptive_cell_integral(circle, mesh.cell_vertices(c), LevelCut{}, [](const Vec2&) { return 1.0; });
    EXPECT_NEAR(rule.integrate([](const Vec2&) { return 1.0; }), oracle, 1e-4);
    ++checked;
  }
  EXPECT_GT(checked, 20);
}
