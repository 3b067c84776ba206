#pragma once

// Moment fitting on a cut cell: surface weights at fixed points of K from
// divergence-free flux moments, then area weights from the identity
// 2 ∫_Q g dx = ∫_{∂Q} h·n ds with div h = 2g.

#include "cut_geometry.hpp"
#include "quadrules.hpp"

#include <Eigen/QR>

#include <map>
#include <utility>
#include <vector>

namespace cutint {

// Polynomial in two variables as a sum of c·x^a·y^b.
struct Poly2 {
  struct Term {
    double c;
    int a, b;
  };
  std::vector<Term> terms;

  // Like terms merged, zero coefficients dropped.
  Poly2 normalized() const {
    std::map<std::pair<int, int>, double> acc;
    for (const auto& t : terms) acc[{t.a, t.b}] += t.c;
    Poly2 out;
    for (const auto& [ab, c] : acc)
      if (c != 0.0) out.terms.push_back({c, ab.first, ab.second});
    return out;
  }
  Poly2 dx() const {
    Poly2 out;
    for (const auto& t : terms)
      if (t.a > 0) out.terms.push_back({t.c * t.a, t.a - 1, t.b});
    return out;
  }
  Poly2 dy() const {
    Poly2 out;
    for (const auto& t : terms)
      if (t.b > 0) out.terms.push_back({t.c * t.b, t.a, t.b - 1});
    return out;
  }
  Poly2 operator+(const Poly2& o) const {
    Poly2 out = *this;
    out.terms.insert(out.terms.end(), o.terms.begin(), o.terms.end());
    return out;
  }
  int degree() const {
    int d = 0;
    for (const auto& t : terms) d = std::max(d, t.a + t.b);
    return d;
  }
  double operator()(const Vec2& x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.c * std::pow(x.x(), t.a) * std::pow(x.y(), t.b);
    return s;
  }
};

struct VecPoly2 {
  Poly2 x, y;
  Poly2 divergence() const { return (x.dx() + y.dy()).normalized(); }
  Vec2 operator()(const Vec2& p) const { return Vec2(x(p), y(p)); }
};

struct MomentBases {
  std::vector<Poly2> g;     // all monomials of degree <= d
  std::vector<VecPoly2> f;  // divergence-free fields curl(x^a y^b), 1 <= a+b <= d+2
  std::vector<VecPoly2> h;  // div h_j = 2 g_j
};

inline MomentBases moment_bases(int d) {
  if (d < 0) throw Error(ErrorCode::unsupported_degree, "moment-fitting degree must be nonnegative");
  MomentBases B;
  for (int k = 0; k <= d; ++k)
    for (int b = 0; b <= k; ++b) {
      int a = k - b;
      B.g.push_back(Poly2{{{1.0, a, b}}});
      double s = 2.0 / (k + 2);
      B.h.push_back(VecPoly2{Poly2{{{s, a + 1, b}}}, Poly2{{{s, a, b + 1}}}});
    }
  // Streams up to degree d+2 so that the fluxes of every h_j are covered.
  for (int k = 1; k <= d + 2; ++k)
    for (int b = 0; b <= k; ++b) {
      int a = k - b;
      Poly2 stream{{{1.0, a, b}}};
      Poly2 minus_dx = stream.dx();
      for (auto& t : minus_dx.terms) t.c = -t.c;
      B.f.push_back(VecPoly2{stream.dy().normalized(), minus_dx.normalized()});
    }
  return B;
}

struct MomentFitDiagnostics {
  int surface_rank = 0;
  int area_rank = 0;
  double surface_residual = 0.0;  // max over rows of |residual| / row scale
  double area_residual = 0.0;
};

struct SurfaceWeights {
  std::vector<Vec2> nodes;
  std::vector<Vec2> normals;  // unit interface normals at the nodes
  std::vector<double> weights;
};

// Fixed points on K for the fitted rules: the nodes of the smallest triangle
// rule of exactness >= d+2 with enough points for both systems.
inline QuadRule2D moment_fit_points(const CutCellGeometry& geom, int d) {
  MomentBases B = moment_bases(d);
  const std::size_t need = std::max(B.g.size() + 3, B.f.size() + 1);
  for (int e = d + 2; e <= 10; ++e) {
    QuadRule2D ref = triangle_rule(e);
    if (ref.size() >= need) return map_to_cell(ref, geom.vertices[0], geom.vertices[1], geom.vertices[2]);
  }
  throw Error(ErrorCode::unsupported_degree, "no point set large enough for moment fitting");
}

namespace detail {

struct ScaledFrame {
  Vec2 center;
  double scale;
  Vec2 operator()(const Vec2& x) const { return (x - center) / scale; }
};

inline ScaledFrame frame_of(const CutCellGeometry& g) {
  return {(g.vertices[0] + g.vertices[1] + g.vertices[2]) / 3.0, g.h};
}

inline Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int& rank, double& residual) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-12);
  cod.compute(A);
  rank = static_cast<int>(cod.rank());
  Eigen::VectorXd x = cod.solve(b);
  Eigen::VectorXd r = A * x - b;
  residual = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    double scale = std::max(A.row(i).norm() * x.norm(), std::abs(b(i)));
    if (scale > 0.0) residual = std::max(residual, std::abs(r(i)) / scale);
  }
  return x;
}

template <class Fn>
double straight_boundary_integral(const CutCellGeometry& g, const QuadRule1D& gauss, Fn&& flux) {
  double s = 0.0;
  for (const auto& p : g.pieces) {
    double len = (p.b - p.a).norm();
    for (std::size_t k = 0; k < gauss.nodes.size(); ++k)
      s += len * gauss.weights[k] * flux(p.a + gauss.nodes[k] * (p.b - p.a), p.normal);
  }
  return s;
}

}  // namespace detail

template <class LocalField>
SurfaceWeights moment_fit_surface_weights(const CutCellGeometry& geom, const LocalField& phi, int d,
                                          MomentFitDiagnostics* diag = nullptr) {
  MomentBases B = moment_bases(d);
  QuadRule2D pts = moment_fit_points(geom, d);
  auto xi = detail::frame_of(geom);
  const std::size_t M = pts.size();

  SurfaceWeights sw;
  sw.nodes = pts.nodes;
  sw.normals.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    Vec2 gpsi = geom.cut.orientation() * phi.gradient(pts.nodes[i]);
    double n = gpsi.norm();
    if (!(n > 1e-10))
      throw Error(ErrorCode::degenerate_cut, "vanishing level-set gradient at a fitting point of cell " +
                                                 std::to_string(geom.cell));
    sw.normals[i] = gpsi / n;
  }
  const QuadRule1D gauss = gauss_1d(std::min(10, d + 2));
  Eigen::MatrixXd A(B.f.size(), M);
  Eigen::VectorXd rhs(B.f.size());
  for (std::size_t j = 0; j < B.f.size(); ++j) {
    for (std::size_t i = 0; i < M; ++i) A(j, i) = B.f[j](xi(pts.nodes[i])).dot(sw.normals[i]);
    // The field has zero total flux through the closed boundary of Q.
    rhs(j) = -detail::straight_boundary_integral(geom, gauss,
                                                 [&](const Vec2& x, const Vec2& n) { return B.f[j](xi(x)).dot(n); });
  }
  int rank;
  double res;
  Eigen::VectorXd v = detail::min_norm_solve(A, rhs, rank, res);
  sw.weights.assign(v.data(), v.data() + v.size());
  if (diag) {
    diag->surface_rank = rank;
    diag->surface_residual = res;
  }
  return sw;
}

template <class LocalField>
QuadRule2D moment_fit_area_weights(const CutCellGeometry& geom, const LocalField& phi, int d,
                                   MomentFitDiagnostics* diag = nullptr) {
  MomentFitDiagnostics local;
  if (!diag) diag = &local;
  SurfaceWeights sw = moment_fit_surface_weights(geom, phi, d, diag);
  MomentBases B = moment_bases(d);
  auto xi = detail::frame_of(geom);
  const double s = xi.scale;
  const std::size_t M = sw.nodes.size();
  const QuadRule1D gauss = gauss_1d(std::min(10, d + 2));

  Eigen::MatrixXd A(B.g.size(), M);
  Eigen::VectorXd rhs(B.g.size());
  for (std::size_t j = 0; j < B.g.size(); ++j) {
    double interface = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      A(j, i) = B.g[j](xi(sw.nodes[i]));
      interface += s * B.h[j](xi(sw.nodes[i])).dot(sw.normals[i]) * sw.weights[i];
    }
    double straight = detail::straight_boundary_integral(
        geom, gauss, [&](const Vec2& x, const Vec2& n) { return s * B.h[j](xi(x)).dot(n); });
    rhs(j) = 0.5 * (interface + straight);
  }
  int rank;
  double res;
  Eigen::VectorXd w = detail::min_norm_solve(A, rhs, rank, res);
  diag->area_rank = rank;
  diag->area_residual = res;
  if (rank < static_cast<int>(B.g.size()))
    throw Error(ErrorCode::rank_deficient, "area moment system of cell " + std::to_string(geom.cell) + " has rank " +
                                               std::to_string(rank) + " < " + std::to_string(B.g.size()));
  QuadRule2D rule;
  rule.exactness = d;
  rule.nodes = sw.nodes;
  rule.weights.assign(w.data(), w.data() + w.size());
  return rule;
}

}  // namespace cutint
