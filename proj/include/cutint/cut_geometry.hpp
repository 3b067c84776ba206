#pragma once

// Geometry of one cut cell Q = K ∩ {inside}: edge intersection points, the
// convex polygon Q_K, its fan triangulation, the chords bounding the
// curvilinear remainders and the straight pieces of the boundary of Q.

#include "classify.hpp"
#include "levelset.hpp"
#include "mesh.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace cutint {

// One curvilinear remainder: the region between the chord p1 -> p2 (an edge
// of Q_K, traversed counterclockwise) and the interface arc joining them.
// `normal` is the outward normal of Q_K on the chord.
struct RemainderComponent {
  Vec2 p1, p2;
  Vec2 normal;
  double length = 0.0;
  bool empty = false;  // interface coincides with the chord
};

// Piece of the cell boundary lying inside Q, with the cell's outward normal.
struct StraightPiece {
  Vec2 a, b;
  Vec2 normal;
};

struct CutCellGeometry {
  int cell = -1;
  LevelCut cut;
  double h = 0.0;  // cell diameter
  std::array<Vec2, 3> vertices;
  std::vector<Vec2> roots;    // intersections with the cell edges, boundary order
  std::vector<Vec2> polygon;  // Q_K, counterclockwise
  std::vector<std::array<Vec2, 3>> fan;
  std::vector<RemainderComponent> components;
  std::vector<StraightPiece> pieces;
  std::size_t phi_evals = 0;

  bool contains_in_cell(const Vec2& x, double tol = 1e-13) const {
    const double a = signed_area2(vertices[0], vertices[1], vertices[2]);
    for (int e = 0; e < 3; ++e)
      if (signed_area2(vertices[e], vertices[(e + 1) % 3], x) / a < -tol) return false;
    return true;
  }
  bool contains_in_polygon(const Vec2& x, double tol = 1e-13) const {
    if (polygon.size() < 3) return false;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = polygon[i];
      const Vec2& b = polygon[(i + 1) % n];
      double len = (b - a).norm();
      if (len == 0.0) continue;
      if (cross(b - a, x - a) / len < -tol * h) return false;
    }
    return true;
  }
  // Distance from x to the cell boundary along direction d (|d| = 1), for x in K.
  double exit_distance(const Vec2& x, const Vec2& d) const {
    double t = std::numeric_limits<double>::infinity();
    for (int e = 0; e < 3; ++e) {
      const Vec2& a = vertices[e];
      const Vec2& b = vertices[(e + 1) % 3];
      Vec2 n = perp_right(b - a).normalized();  // outward for a counterclockwise cell
      double dn = d.dot(n);
      if (dn <= 0.0) continue;
      t = std::min(t, std::max(0.0, (a - x).dot(n) / dn));
    }
    return t;
  }
};

struct GeometryOptions {
  double root_tol = 1e-14;
  // Degenerate cut: |grad psi| * h below this fraction of max |psi| at the vertices.
  double min_gradient = 1e-6;
};

// Oriented field psi = ±(phi - level): negative inside.
template <class LocalField>
struct OrientedField {
  const LocalField& phi;
  LevelCut cut;
  mutable std::size_t evals = 0;

  double value(const Vec2& x) const {
    ++evals;
    return cut.oriented(phi.value(x));
  }
  Vec2 gradient(const Vec2& x) const { return cut.orientation() * phi.gradient(x); }
};

template <class LocalField>
CutCellGeometry build_cut_geometry(const LocalField& phi, const std::array<Vec2, 3>& vertices, const LevelCut& cut,
                                   int sub_intervals, int cell = -1, const GeometryOptions& opt = {}) {
  CutCellGeometry g;
  g.cell = cell;
  g.cut = cut;
  g.vertices = vertices;
  g.h = std::max({(vertices[1] - vertices[0]).norm(), (vertices[2] - vertices[1]).norm(),
                  (vertices[0] - vertices[2]).norm()});
  OrientedField<LocalField> psi{phi, cut};
  RootOptions ropt;
  ropt.tol = opt.root_tol;

  struct BoundaryPoint {
    Vec2 x;
    bool root;
    bool inside;  // vertices: inside flag; roots: true when Q continues after it
    int edge;
  };
  std::vector<BoundaryPoint> seq;
  std::array<double, 3> vval;
  for (int e = 0; e < 3; ++e) vval[e] = tie_broken(psi.value(vertices[e]), g.h);

  const double psi_scale = std::max({std::abs(vval[0]), std::abs(vval[1]), std::abs(vval[2])});
  auto degenerate = [&](const Vec2& x) { return psi.gradient(x).norm() * g.h < opt.min_gradient * psi_scale; };
  const int S = std::max(1, sub_intervals);
  for (int e = 0; e < 3; ++e) {
    const Vec2& a = vertices[e];
    const Vec2& b = vertices[(e + 1) % 3];
    seq.push_back({a, false, vval[e] < 0.0, e});
    double t0 = 0.0, f0 = vval[e];
    for (int k = 1; k <= S; ++k) {
      double t1 = double(k) / S;
      double f1 = k == S ? vval[(e + 1) % 3] : tie_broken(psi.value(a + t1 * (b - a)), g.h);
      if ((f0 < 0.0) != (f1 < 0.0)) {
        auto line = [&](double t) { return psi.value(a + t * (b - a)); };
        double t = solve_bracketed(line, t0, t1, f0, f1, ropt);
        Vec2 x = a + t * (b - a);
        if (degenerate(x))
          throw Error(ErrorCode::degenerate_cut, "vanishing level-set gradient on cell " + std::to_string(cell));
        seq.push_back({x, true, f1 < 0.0, e});
        g.roots.push_back(x);
      }
      t0 = t1;
      f0 = f1;
    }
  }
  g.phi_evals = psi.evals;
  if (g.roots.empty())
    throw Error(ErrorCode::no_intersection, "no interface crossing on the edges of cell " + std::to_string(cell));

  // Walk the boundary; Q_K keeps inside vertices and all roots.
  const std::size_t n = seq.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = seq[i];
    if (p.root || p.inside) g.polygon.push_back(p.x);
    const auto& q = seq[(i + 1) % n];
    bool piece_inside = p.inside;
    if (piece_inside && (q.x - p.x).norm() > 0.0) {
      const Vec2& a = vertices[p.edge];
      const Vec2& b = vertices[(p.edge + 1) % 3];
      g.pieces.push_back({p.x, q.x, perp_right(b - a).normalized()});
    }
  }
  // Chords: each exit root pairs with the next root along the boundary.
  for (std::size_t i = 0; i < n; ++i) {
    if (!seq[i].root || seq[i].inside) continue;
    std::size_t j = (i + 1) % n;
    while (!seq[j].root) j = (j + 1) % n;
    RemainderComponent c;
    c.p1 = seq[i].x;
    c.p2 = seq[j].x;
    Vec2 d = c.p2 - c.p1;
    c.length = d.norm();
    if (!(c.length > 1e-14 * g.h)) continue;
    c.normal = perp_right(d) / c.length;
    c.empty = true;
    for (int k = 1; k <= 5; ++k) {
      Vec2 x = c.p1 + (k / 6.0) * d;
      double v = psi.value(x);
      double gn = psi.gradient(x).norm();
      if (degenerate(x))
        throw Error(ErrorCode::degenerate_cut, "vanishing level-set gradient on cell " + std::to_string(cell));
      if (std::abs(v) > 1e-13 * g.h * gn) c.empty = false;
    }
    g.components.push_back(c);
  }
  for (std::size_t k = 1; k + 1 < g.polygon.size(); ++k) {
    std::array<Vec2, 3> t{g.polygon[0], g.polygon[k], g.polygon[k + 1]};
    if (signed_area2(t[0], t[1], t[2]) > 0.0) g.fan.push_back(t);
  }
  g.phi_evals = psi.evals;
  return g;
}

template <ScalarField F>
CutCellGeometry build_cut_geometry(const Mesh& mesh, int cell, const F& field, const LevelCut& cut,
                                   const GeometryOptions& opt = {}) {
  const auto& local = restrict_to_cell(field, mesh, cell);
  return build_cut_geometry(local, mesh.cell_vertices(cell), cut, sampling_degree(field), cell, opt);
}

}  // namespace cutint
