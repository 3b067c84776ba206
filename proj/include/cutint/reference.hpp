#pragma once

// Reference integration over K ∩ {inside} by recursive 4-way subdivision
// with a straight clip plus a parabolic segment correction at the finest
// level. It shares no root finder or chord logic with the cut-cell rules and
// is used as a test oracle.

#include "core.hpp"
#include "quadrules.hpp"

#include <array>
#include <vector>

namespace cutint {

struct AdaptiveOptions {
  int max_depth = 9;
  int min_depth = 2;
  int exactness = 8;
};

namespace detail {

template <class G>
Vec2 bisect_edge(G&& g, const Vec2& a, const Vec2& b, double ga) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    double gm = g(a + mid * (b - a));
    if ((gm < 0.0) == (ga < 0.0)) lo = mid;
    else hi = mid;
  }
  return a + 0.5 * (lo + hi) * (b - a);
}

template <class G, class F>
double adaptive_triangle(G& g, F& f, const QuadRule2D& ref, const Vec2& a, const Vec2& b, const Vec2& c,
                         const AdaptiveOptions& opt, int depth) {
  auto full = [&] {
    double jac = std::abs(signed_area2(a, b, c));
    double s = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
      s += ref.weights[i] * f(a + ref.nodes[i].x() * (b - a) + ref.nodes[i].y() * (c - a));
    return jac * s;
  };
  const Vec2 mab = 0.5 * (a + b), mbc = 0.5 * (b + c), mca = 0.5 * (c + a);
  if (depth < opt.max_depth) {
    const std::array<double, 7> s{g(a), g(b), g(c), g(mab), g(mbc), g(mca), g((a + b + c) / 3.0)};
    bool all_in = true, all_out = true;
    for (double v : s) {
      all_in &= v < 0.0;
      all_out &= !(v < 0.0);
    }
    if (depth >= opt.min_depth && all_out) return 0.0;
    if (depth >= opt.min_depth && all_in) return full();
    return adaptive_triangle(g, f, ref, a, mab, mca, opt, depth + 1) +
           adaptive_triangle(g, f, ref, mab, b, mbc, opt, depth + 1) +
           adaptive_triangle(g, f, ref, mca, mbc, c, opt, depth + 1) +
           adaptive_triangle(g, f, ref, mab, mbc, mca, opt, depth + 1);
  }
  // Finest level: clip by the straight line through the edge roots, then
  // add the parabolic segment between that chord and the interface.
  const std::array<Vec2, 3> v{a, b, c};
  const std::array<double, 3> gv{g(a), g(b), g(c)};
  std::vector<Vec2> poly;
  std::vector<Vec2> exits, entries;
  for (int e = 0; e < 3; ++e) {
    int n = (e + 1) % 3;
    if (gv[e] < 0.0) poly.push_back(v[e]);
    if ((gv[e] < 0.0) != (gv[n] < 0.0)) {
      Vec2 r = bisect_edge(g, v[e], v[n], gv[e]);
      poly.push_back(r);
      (gv[e] < 0.0 ? exits : entries).push_back(r);
    }
  }
  double s = 0.0;
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    double jac = std::abs(signed_area2(poly[0], poly[k], poly[k + 1]));
    for (std::size_t i = 0; i < ref.size(); ++i)
      s += jac * ref.weights[i] *
           f(poly[0] + ref.nodes[i].x() * (poly[k] - poly[0]) + ref.nodes[i].y() * (poly[k + 1] - poly[0]));
  }
  if (exits.size() == 1 && entries.size() == 1) {
    Vec2 d = entries[0] - exits[0];
    double len = d.norm();
    if (len > 0.0) {
      Vec2 out = Vec2(d.y(), -d.x()) / len;  // away from the clipped polygon
      Vec2 mid = 0.5 * (exits[0] + entries[0]);
      double reach = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
      double glo = g(mid - reach * out), ghi = g(mid + reach * out);
      if ((glo < 0.0) != (ghi < 0.0)) {
        Vec2 root = bisect_edge(g, mid - reach * out, mid + reach * out, glo);
        double sagitta = (root - mid).dot(out);
        s += (2.0 / 3.0) * len * sagitta * f(mid + 0.5 * sagitta * out);
      }
    }
  }
  return s;
}

}  // namespace detail

// Integral of f over {x in triangle : cut.oriented(phi(x)) < 0}.
template <class LocalField, class F>
double adaptive_cell_integral(const LocalField& phi, const std::array<Vec2, 3>& v, const LevelCut& cut, F&& f,
                              const AdaptiveOptions& opt = {}) {
  auto g = [&](const Vec2& x) { return cut.oriented(phi.value(x)); };
  QuadRule2D ref = triangle_rule(opt.exactness);
  return detail::adaptive_triangle(g, f, ref, v[0], v[1], v[2], opt, 0);
}

}  // namespace cutint
