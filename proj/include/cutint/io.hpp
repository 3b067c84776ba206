#pragma once

// Text and SVG dumps of one cut cell and its quadrature rule.

#include "cut_geometry.hpp"
#include "cut_rules.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>

namespace cutint {

namespace detail {

inline std::string point_str(const Vec2& p) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "%.17g %.17g", p.x(), p.y());
  return buf;
}

}  // namespace detail

inline void write_cell_text(std::ostream& os, const CutCellGeometry& g, const CutRule& rule) {
  os << "cell " << g.cell << "\n";
  os << "method " << to_string(rule.method) << " m " << rule.order << "\n";
  os << "vertices\n";
  for (const auto& v : g.vertices) os << detail::point_str(v) << "\n";
  os << "roots " << g.roots.size() << "\n";
  for (const auto& v : g.roots) os << detail::point_str(v) << "\n";
  os << "polygon " << g.polygon.size() << "\n";
  for (const auto& v : g.polygon) os << detail::point_str(v) << "\n";
  os << "components " << g.components.size() << "\n";
  for (const auto& c : g.components)
    os << detail::point_str(c.p1) << " " << detail::point_str(c.p2) << (c.empty ? " empty" : "") << "\n";
  os << "nodes " << rule.nodes.size() << " (x y weight)\n";
  char buf[96];
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", rule.nodes[i].x(), rule.nodes[i].y(), rule.weights[i]);
    os << buf;
  }
}

// The cell, Q_K, the chords, the interface (sampled from phi) and the nodes
// (blue: positive weight, red: negative).
template <class LocalField>
void write_cell_svg(std::ostream& os, const CutCellGeometry& g, const CutRule& rule, const LocalField& phi) {
  const double S = 480, pad = 20;
  Vec2 lo = g.vertices[0], hi = g.vertices[0];
  for (const auto& v : g.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double ext = std::max(hi.x() - lo.x(), hi.y() - lo.y());
  auto X = [&](const Vec2& p) { return pad + (p.x() - lo.x()) / ext * (S - 2 * pad); };
  auto Y = [&](const Vec2& p) { return S - pad - (p.y() - lo.y()) / ext * (S - 2 * pad); };
  char buf[160];
  auto poly = [&](const std::vector<Vec2>& pts, const char* style) {
    os << "<polygon points=\"";
    for (const auto& p : pts) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", X(p), Y(p));
      os << buf;
    }
    os << "\" " << style << "/>\n";
  };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << S << "\" height=\"" << S << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  poly({g.vertices.begin(), g.vertices.end()}, "fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"");
  if (g.polygon.size() >= 3) poly(g.polygon, "fill=\"#dde8f5\" stroke=\"#1f77b4\"");
  for (const auto& c : g.components) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#2ca02c\" stroke-dasharray=\"4,3\"/>\n",
                  X(c.p1), Y(c.p1), X(c.p2), Y(c.p2));
    os << buf;
  }
  // Interface: sign changes on a sampling grid over the bounding box.
  const int n = 160;
  const double d = ext / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec2 p = lo + Vec2((i + 0.5) * d, (j + 0.5) * d);
      if (!g.contains_in_cell(p, 1e-9)) continue;
      double a = g.cut.oriented(phi.value(p));
      double b = g.cut.oriented(phi.value(p + Vec2(d, 0.0)));
      double c = g.cut.oriented(phi.value(p + Vec2(0.0, d)));
      if ((a < 0.0) != (b < 0.0) || (a < 0.0) != (c < 0.0)) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"0.8\" fill=\"#ff7f0e\"/>\n", X(p), Y(p));
        os << buf;
      }
    }
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\"/>\n", X(rule.nodes[k]),
                  Y(rule.nodes[k]), rule.weights[k] >= 0.0 ? "#1f77b4" : "#d62728");
    os << buf;
  }
  os << "</svg>\n";
}

}  // namespace cutint
