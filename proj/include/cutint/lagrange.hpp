#pragma once

// Degree-r Lagrange elements on triangles and the continuous dof numbering
// over a Mesh: vertices first, then r-1 nodes per edge, then cell interiors.

#include "core.hpp"
#include "mesh.hpp"

#include <array>
#include <vector>

namespace cutint {

// Lagrange basis on the reference triangle. Local nodes are the lattice
// points (i/r, j/r), enumerated with j outer and i inner.
class LagrangeTriangle {
 public:
  static constexpr int max_degree = 4;
  static constexpr int max_nodes = (max_degree + 1) * (max_degree + 2) / 2;

  explicit LagrangeTriangle(int degree) : r_(degree) {
    if (degree < 1 || degree > max_degree)
      throw Error(ErrorCode::unsupported_degree, "Lagrange degree must be 1.." + std::to_string(max_degree));
    for (int j = 0; j <= r_; ++j)
      for (int i = 0; i + j <= r_; ++i) lattice_.push_back({r_ - i - j, i, j});
  }

  int degree() const { return r_; }
  int size() const { return static_cast<int>(lattice_.size()); }

  // Barycentric lattice indices (k0, k1, k2), k0+k1+k2 = r, of local node n.
  const std::array<int, 3>& lattice(int n) const { return lattice_[n]; }

  Vec2 node(int n) const { return Vec2(double(lattice_[n][1]) / r_, double(lattice_[n][2]) / r_); }

  // Values (and optionally reference gradients / Hessians as xx,xy,yy) at xi.
  void eval(const Vec2& xi, double* values, Vec2* grads = nullptr, std::array<double, 3>* hessians = nullptr) const {
    const std::array<double, 3> lam{1.0 - xi.x() - xi.y(), xi.x(), xi.y()};
    static constexpr double dlam[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
    // 1D factors L_k(lam) = prod_{l<k} (r lam - l)/(l+1) and derivatives.
    double L[3][max_degree + 1], dL[3][max_degree + 1], ddL[3][max_degree + 1];
    for (int a = 0; a < 3; ++a) {
      L[a][0] = 1.0;
      dL[a][0] = 0.0;
      ddL[a][0] = 0.0;
      for (int k = 1; k <= r_; ++k) {
        double g = (r_ * lam[a] - (k - 1)) / k;
        double dg = double(r_) / k;
        L[a][k] = L[a][k - 1] * g;
        dL[a][k] = dL[a][k - 1] * g + L[a][k - 1] * dg;
        ddL[a][k] = ddL[a][k - 1] * g + 2.0 * dL[a][k - 1] * dg;
      }
    }
    for (int n = 0; n < size(); ++n) {
      const auto& k = lattice_[n];
      double f0 = L[0][k[0]], f1 = L[1][k[1]], f2 = L[2][k[2]];
      values[n] = f0 * f1 * f2;
      if (!grads && !hessians) continue;
      // Derivatives of the three factors with respect to their own lambda.
      double d[3] = {dL[0][k[0]] * f1 * f2, f0 * dL[1][k[1]] * f2, f0 * f1 * dL[2][k[2]]};
      if (grads) {
        Vec2 g = Vec2::Zero();
        for (int a = 0; a < 3; ++a) g += d[a] * Vec2(dlam[a][0], dlam[a][1]);
        grads[n] = g;
      }
      if (hessians) {
        // Second derivatives with respect to (lam_a, lam_b).
        double s[3][3];
        double f[3] = {f0, f1, f2};
        double df[3] = {dL[0][k[0]], dL[1][k[1]], dL[2][k[2]]};
        double ddf[3] = {ddL[0][k[0]], ddL[1][k[1]], ddL[2][k[2]]};
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            double v = 1.0;
            for (int c = 0; c < 3; ++c) {
              if (a == b && c == a) v *= ddf[c];
              else if (c == a || c == b) v *= df[c];
              else v *= f[c];
            }
            s[a][b] = v;
          }
        std::array<double, 3> hs{0.0, 0.0, 0.0};
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            hs[0] += s[a][b] * dlam[a][0] * dlam[b][0];
            hs[1] += s[a][b] * dlam[a][0] * dlam[b][1];
            hs[2] += s[a][b] * dlam[a][1] * dlam[b][1];
          }
        hessians[n] = hs;
      }
    }
  }

 private:
  int r_;
  std::vector<std::array<int, 3>> lattice_;
};

// Affine map from the reference triangle onto a mesh cell.
struct AffineMap {
  Vec2 origin;
  Mat2 jacobian;      // columns v1 - v0, v2 - v0
  Mat2 inverse;
  double det = 0.0;   // positive for counterclockwise cells

  AffineMap() = default;
  AffineMap(const Vec2& v0, const Vec2& v1, const Vec2& v2) : origin(v0) {
    jacobian.col(0) = v1 - v0;
    jacobian.col(1) = v2 - v0;
    det = jacobian.determinant();
    if (!(std::abs(det) > 0.0)) throw Error(ErrorCode::degenerate_cell, "zero-area cell");
    inverse = jacobian.inverse();
  }

  Vec2 to_physical(const Vec2& xi) const { return origin + jacobian * xi; }
  Vec2 to_reference(const Vec2& x) const { return inverse * (x - origin); }
  // Reference gradient -> physical gradient.
  Vec2 push_gradient(const Vec2& g) const { return inverse.transpose() * g; }
};

inline AffineMap cell_map(const Mesh& mesh, int c) {
  auto v = mesh.cell_vertices(c);
  return AffineMap(v[0], v[1], v[2]);
}

// Continuous degree-r Lagrange numbering on a mesh.
class LagrangeDofMap {
 public:
  LagrangeDofMap(const Mesh& mesh, int degree) : element_(degree) {
    const int r = degree;
    const int nv = static_cast<int>(mesh.num_vertices());
    const int ne = static_cast<int>(mesh.edges.size());
    const int n_interior = (r - 1) * (r - 2) / 2;
    num_dofs_ = nv + ne * (r - 1) + static_cast<int>(mesh.num_cells()) * n_interior;
    const int nloc = element_.size();
    cell_dofs_.resize(mesh.num_cells() * nloc);
    coords_.resize(num_dofs_);

    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const auto& tri = mesh.cells[c];
      AffineMap map = cell_map(mesh, static_cast<int>(c));
      int interior_count = 0;
      for (int n = 0; n < nloc; ++n) {
        const auto& k = element_.lattice(n);
        int dof = -1;
        int zeros = (k[0] == 0) + (k[1] == 0) + (k[2] == 0);
        if (zeros == 2) {
          for (int a = 0; a < 3; ++a)
            if (k[a] == r) dof = tri[a];
        } else if (zeros == 1) {
          int a = -1, b = -1;
          for (int q = 0; q < 3; ++q) {
            if (k[q] == 0) continue;
            if (a < 0) a = q;
            else b = q;
          }
          // Local edge joining local vertices a and b.
          int le = (b == a + 1) ? a : (a == 0 && b == 2 ? 2 : -1);
          int edge = mesh.cell_edges[c][le];
          int hi_local = tri[a] > tri[b] ? a : b;
          dof = nv + edge * (r - 1) + (k[hi_local] - 1);
        } else {
          dof = nv + ne * (r - 1) + static_cast<int>(c) * n_interior + interior_count++;
        }
        cell_dofs_[c * nloc + n] = dof;
        coords_[dof] = map.to_physical(element_.node(n));
      }
    }
  }

  const LagrangeTriangle& element() const { return element_; }
  int degree() const { return element_.degree(); }
  int num_dofs() const { return num_dofs_; }
  int dofs_per_cell() const { return element_.size(); }
  const int* cell_dofs(int c) const { return &cell_dofs_[static_cast<std::size_t>(c) * element_.size()]; }
  const Vec2& coordinate(int dof) const { return coords_[dof]; }
  const std::vector<Vec2>& coordinates() const { return coords_; }

 private:
  LagrangeTriangle element_;
  int num_dofs_ = 0;
  std::vector<int> cell_dofs_;
  std::vector<Vec2> coords_;
};

}  // namespace cutint
