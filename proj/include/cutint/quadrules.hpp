#pragma once

// Reference quadrature: Gauss-Legendre on [0,1] and symmetric rules on the
// unit triangle (0,0),(1,0),(0,1), plus affine maps to physical cells.

#include "core.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace cutint {

struct QuadRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  int exactness = 0;

  std::size_t size() const { return nodes.size(); }
};

// Nodes are points in the plane: reference coordinates for reference rules,
// physical coordinates after map_to_cell.
struct QuadRule2D {
  std::vector<Vec2> nodes;
  std::vector<double> weights;
  int exactness = 0;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

namespace detail {

// Legendre P_n and its derivative at x in [-1,1].
inline std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace detail

inline QuadRule1D gauss_1d(int points) {
  if (points < 1 || points > 10)
    throw Error(ErrorCode::unsupported_degree, "Gauss-Legendre supports 1..10 nodes, got " + std::to_string(points));
  QuadRule1D rule;
  rule.exactness = 2 * points - 1;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  for (int i = 0; i < (points + 1) / 2; ++i) {
    // Chebyshev-like initial guess, then Newton to full precision.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      auto [p, d] = detail::legendre(points, x);
      dp = d;
      double dx = p / d;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    dp = detail::legendre(points, x).second;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map [-1,1] -> [0,1]; nodes in increasing order.
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[points - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = rule.weights[points - 1 - i] = 0.5 * w;
  }
  if (points % 2 == 1) rule.nodes[points / 2] = 0.5;
  return rule;
}

namespace detail {

struct Orbit {
  int kind;  // 1: centroid, 3: (a,a,1-2a), 6: (a,b,1-a-b)
  double a, b, w;  // w normalized so the full rule sums to 1
};

inline void push_orbit(QuadRule2D& rule, const Orbit& o) {
  auto add = [&](double l1, double l2) {
    rule.nodes.emplace_back(l1, l2);
    rule.weights.push_back(0.5 * o.w);
  };
  if (o.kind == 1) {
    add(1.0 / 3.0, 1.0 / 3.0);
  } else if (o.kind == 3) {
    double c = 1.0 - 2.0 * o.a;
    add(o.a, o.a);
    add(c, o.a);
    add(o.a, c);
  } else {
    double c = 1.0 - o.a - o.b;
    add(o.a, o.b);
    add(o.b, o.a);
    add(o.b, c);
    add(c, o.b);
    add(c, o.a);
    add(o.a, c);
  }
}

inline QuadRule2D tabulated(int degree) {
  std::vector<Orbit> orbits;
  switch (degree) {
    case 1:
      orbits = {{1, 0, 0, 1.0}};
      break;
    case 2:
      orbits = {{3, 1.0 / 6.0, 0, 1.0 / 3.0}};
      break;
    case 4:
      orbits = {{3, 0.445948490915965, 0, 0.223381589678011},
                {3, 0.091576213509771, 0, 0.109951743655322}};
      break;
    case 5:
      orbits = {{1, 0, 0, 0.225},
                {3, 0.470142064105115, 0, 0.132394152788506},
                {3, 0.101286507323456, 0, 0.125939180544827}};
      break;
    case 6:
      orbits = {{3, 0.249286745170910, 0, 0.116786275726379},
                {3, 0.063089014491502, 0, 0.050844906370207},
                {6, 0.053145049844817, 0.310352451033784, 0.082851075618374}};
      break;
    case 8:
      orbits = {{1, 0, 0, 0.144315607677787},
                {3, 0.459292588292723, 0, 0.095091634267285},
                {3, 0.170569307751760, 0, 0.103217370534718},
                {3, 0.050547228317031, 0, 0.032458497623198},
                {6, 0.008394777409958, 0.263112829634638, 0.027230314174435}};
      break;
    default:
      break;
  }
  QuadRule2D rule;
  rule.exactness = degree;
  for (const auto& o : orbits) push_orbit(rule, o);
  return rule;
}

// Collapsed Gauss product rule averaged over the six vertex permutations,
// which keeps it symmetric and positive.
inline QuadRule2D symmetrized_conical(int degree) {
  int n = (degree + 3) / 2;
  QuadRule1D g = gauss_1d(n);
  QuadRule2D rule;
  rule.exactness = degree;
  static constexpr std::array<std::array<int, 3>, 6> perms = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (const auto& p : perms) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double u = g.nodes[i];
        double v = g.nodes[j] * (1.0 - u);
        std::array<double, 3> lam{1.0 - u - v, u, v};
        rule.nodes.emplace_back(lam[p[1]], lam[p[2]]);
        rule.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - u) / 6.0);
      }
    }
  }
  return rule;
}

}  // namespace detail

// Symmetric positive rule on the reference triangle exact to total degree m.
inline QuadRule2D triangle_rule(int m) {
  if (m < 1 || m > 10)
    throw Error(ErrorCode::unsupported_degree, "triangle rules support exactness 1..10, got " + std::to_string(m));
  static constexpr std::array<int, 11> table = {0, 1, 2, 4, 4, 5, 6, 8, 8, 0, 0};
  if (table[m] == 0) return detail::symmetrized_conical(m);
  QuadRule2D rule = detail::tabulated(table[m]);
  return rule;
}

// Affine image of a reference triangle rule on the triangle (a, b, c).
inline QuadRule2D map_to_cell(const QuadRule2D& ref, const Vec2& a, const Vec2& b, const Vec2& c) {
  double jac = signed_area2(a, b, c);
  if (!(std::abs(jac) > 0.0)) throw Error(ErrorCode::degenerate_cell, "triangle with zero area");
  QuadRule2D out;
  out.exactness = ref.exactness;
  out.nodes.reserve(ref.size());
  out.weights.reserve(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const Vec2& r = ref.nodes[i];
    out.nodes.push_back(a + r.x() * (b - a) + r.y() * (c - a));
    out.weights.push_back(ref.weights[i] * std::abs(jac));
  }
  return out;
}

// Affine image of a [0,1] rule on the segment (a, b).
inline QuadRule2D map_to_cell(const QuadRule1D& ref, const Vec2& a, const Vec2& b) {
  double len = (b - a).norm();
  if (!(len > 0.0)) throw Error(ErrorCode::degenerate_cell, "segment with zero length");
  QuadRule2D out;
  out.exactness = ref.exactness;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    out.nodes.push_back(a + ref.nodes[i] * (b - a));
    out.weights.push_back(ref.weights[i] * len);
  }
  return out;
}

}  // namespace cutint
