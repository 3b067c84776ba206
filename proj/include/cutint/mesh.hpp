#pragma once

// Uniform triangulations of a rectangle with edge adjacency and O(1) point
// location through the underlying square grid.

#include "core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <unordered_map>
#include <vector>

namespace cutint {

struct Rect {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool contains(const Vec2& x, double tol = 0.0) const {
    return x.x() >= xmin - tol && x.x() <= xmax + tol && x.y() >= ymin - tol && x.y() <= ymax + tol;
  }
};

// Which diagonal splits every grid square.
//   main: lower-left to upper-right, cells (v00,v10,v11) and (v00,v11,v01)
//   anti: lower-right to upper-left, cells (v00,v10,v01) and (v10,v11,v01)
enum class Diagonal { main, anti };

struct Edge {
  std::array<int, 2> vertices;  // vertices[0] < vertices[1]
  std::array<int, 2> cells;     // cells[1] == -1 on the bulk boundary
};

class Mesh {
 public:
  Rect bulk;
  double h = 0.0;  // grid spacing requested by the caller
  int nx = 0, ny = 0;
  double hx = 0.0, hy = 0.0;
  Diagonal diagonal = Diagonal::main;

  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;       // counterclockwise
  std::vector<std::array<int, 3>> cell_edges;  // local edge e joins local vertices e and (e+1)%3
  std::vector<Edge> edges;

  std::size_t num_cells() const { return cells.size(); }
  std::size_t num_vertices() const { return vertices.size(); }

  std::array<Vec2, 3> cell_vertices(int c) const {
    const auto& t = cells[c];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }

  double cell_area(int c) const {
    auto v = cell_vertices(c);
    return 0.5 * signed_area2(v[0], v[1], v[2]);
  }

  double cell_diameter(int c) const {
    auto v = cell_vertices(c);
    return std::max({(v[1] - v[0]).norm(), (v[2] - v[1]).norm(), (v[0] - v[2]).norm()});
  }

  // Diameter of the inscribed circle.
  double cell_inradius_diameter(int c) const {
    auto v = cell_vertices(c);
    double per = (v[1] - v[0]).norm() + (v[2] - v[1]).norm() + (v[0] - v[2]).norm();
    return 4.0 * cell_area(c) / per;
  }

  double max_diameter() const {
    double d = 0.0;
    for (std::size_t c = 0; c < num_cells(); ++c) d = std::max(d, cell_diameter(static_cast<int>(c)));
    return d;
  }

  // Shape-regularity ratio: max diameter over min inscribed diameter.
  double shape_ratio() const {
    double dmax = 0.0, rmin = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < num_cells(); ++c) {
      dmax = std::max(dmax, cell_diameter(static_cast<int>(c)));
      rmin = std::min(rmin, cell_inradius_diameter(static_cast<int>(c)));
    }
    return dmax / rmin;
  }

  Vec2 centroid(int c) const {
    auto v = cell_vertices(c);
    return (v[0] + v[1] + v[2]) / 3.0;
  }

  // Barycentric coordinates of x with respect to cell c.
  std::array<double, 3> barycentric(int c, const Vec2& x) const {
    auto v = cell_vertices(c);
    double a = signed_area2(v[0], v[1], v[2]);
    return {signed_area2(x, v[1], v[2]) / a, signed_area2(v[0], x, v[2]) / a, signed_area2(v[0], v[1], x) / a};
  }

  // Id of a cell containing x. Points on shared edges or vertices resolve to
  // the lowest containing id.
  int locate(const Vec2& x) const {
    constexpr double tol = 1e-12;
    if (!bulk.contains(x, tol * std::max(hx, hy)))
      throw Error(ErrorCode::point_outside_bulk, "point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) + ")");
    double s = (x.x() - bulk.xmin) / hx;
    double t = (x.y() - bulk.ymin) / hy;
    int i = std::clamp(static_cast<int>(std::ceil(s - tol)) - 1, 0, nx - 1);
    int j = std::clamp(static_cast<int>(std::ceil(t - tol)) - 1, 0, ny - 1);
    double u = s - i, v = t - j;
    int base = 2 * (j * nx + i);
    if (diagonal == Diagonal::main) return u >= v - tol ? base : base + 1;
    return u + v <= 1.0 + tol ? base : base + 1;
  }
};

inline Mesh build_uniform(const Rect& bulk, double h, Diagonal diagonal = Diagonal::main) {
  if (!(h > 0.0)) throw Error(ErrorCode::invalid_argument, "mesh size must be positive");
  if (!(bulk.width() > 0.0) || !(bulk.height() > 0.0))
    throw Error(ErrorCode::invalid_argument, "degenerate bulk rectangle");
  Mesh mesh;
  mesh.bulk = bulk;
  mesh.h = h;
  mesh.diagonal = diagonal;
  mesh.nx = std::max(1, static_cast<int>(std::ceil(bulk.width() / h - 1e-10)));
  mesh.ny = std::max(1, static_cast<int>(std::ceil(bulk.height() / h - 1e-10)));
  mesh.hx = bulk.width() / mesh.nx;
  mesh.hy = bulk.height() / mesh.ny;
  const int nx = mesh.nx, ny = mesh.ny;

  mesh.vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      // Snap the last row/column onto the rectangle exactly.
      double x = i == nx ? bulk.xmax : bulk.xmin + i * mesh.hx;
      double y = j == ny ? bulk.ymax : bulk.ymin + j * mesh.hy;
      mesh.vertices.emplace_back(x, y);
    }

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.cells.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      if (diagonal == Diagonal::main) {
        mesh.cells.push_back({v00, v10, v11});
        mesh.cells.push_back({v00, v11, v01});
      } else {
        mesh.cells.push_back({v00, v10, v01});
        mesh.cells.push_back({v10, v11, v01});
      }
    }

  std::unordered_map<long long, int> lookup;
  lookup.reserve(mesh.cells.size() * 2);
  mesh.cell_edges.resize(mesh.cells.size());
  const long long nv = static_cast<long long>(mesh.vertices.size());
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    for (int e = 0; e < 3; ++e) {
      int a = mesh.cells[c][e], b = mesh.cells[c][(e + 1) % 3];
      int lo = std::min(a, b), hi = std::max(a, b);
      long long key = lo * nv + hi;
      auto it = lookup.find(key);
      if (it == lookup.end()) {
        int id = static_cast<int>(mesh.edges.size());
        mesh.edges.push_back({{lo, hi}, {static_cast<int>(c), -1}});
        lookup.emplace(key, id);
        mesh.cell_edges[c][e] = id;
      } else {
        mesh.edges[it->second].cells[1] = static_cast<int>(c);
        mesh.cell_edges[c][e] = it->second;
      }
    }
  }
  return mesh;
}

// Plain-text node/element dump: one vertex per line "x y" and one triangle
// per line "v0 v1 v2".
inline void write_mesh(std::ostream& nodes, std::ostream& elements, const Mesh& mesh) {
  char buf[64];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x(), v.y());
    nodes << buf;
  }
  for (const auto& t : mesh.cells) elements << t[0] << " " << t[1] << " " << t[2] << "\n";
}

}  // namespace cutint
