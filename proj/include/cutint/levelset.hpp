#pragma once

// Level-set fields: closed-form fields with exact derivatives and
// closest-point maps, and piecewise-polynomial Lagrange interpolants.

#include "core.hpp"
#include "lagrange.hpp"
#include "mesh.hpp"

#include <cmath>
#include <concepts>
#include <limits>
#include <memory>
#include <vector>

namespace cutint {

template <class F>
concept ScalarField = requires(const F& f, const Vec2& x) {
  { f.value(x) } -> std::convertible_to<double>;
  { f.gradient(x) } -> std::convertible_to<Vec2>;
};

// phi(x) = a . x + b
class LinearLevelSet {
 public:
  LinearLevelSet(Vec2 a, double b) : a_(std::move(a)), b_(b) {}
  double value(const Vec2& x) const { return a_.dot(x) + b_; }
  Vec2 gradient(const Vec2&) const { return a_; }
  Mat2 hessian(const Vec2&) const { return Mat2::Zero(); }

 private:
  Vec2 a_;
  double b_;
};

// Signed distance to a circle: phi(x) = |x - c| - R.
class CircleLevelSet {
 public:
  explicit CircleLevelSet(double radius = 1.0, Vec2 center = Vec2::Zero()) : radius_(radius), center_(std::move(center)) {}

  double radius() const { return radius_; }
  const Vec2& center() const { return center_; }

  double value(const Vec2& x) const { return (x - center_).norm() - radius_; }
  Vec2 gradient(const Vec2& x) const {
    Vec2 d = x - center_;
    double r = d.norm();
    return r > 0.0 ? Vec2(d / r) : Vec2(1.0, 0.0);
  }
  Mat2 hessian(const Vec2& x) const {
    Vec2 d = x - center_;
    double r = d.norm();
    if (!(r > 0.0)) return Mat2::Zero();
    Vec2 n = d / r;
    return (Mat2::Identity() - n * n.transpose()) / r;
  }
  Vec2 normal(const Vec2& x) const { return gradient(x); }
  Vec2 closest_point(const Vec2& x) const { return center_ + radius_ * gradient(x); }

 private:
  double radius_;
  Vec2 center_;
};

// phi(x) = ||x| - R| - w: the annulus R-w < |x| < R+w is {phi < 0}.
class AnnulusLevelSet {
 public:
  explicit AnnulusLevelSet(double radius = 1.0, double half_width = 0.1) : radius_(radius), half_width_(half_width) {}

  double value(const Vec2& x) const { return std::abs(x.norm() - radius_) - half_width_; }
  Vec2 gradient(const Vec2& x) const {
    double r = x.norm();
    Vec2 n = r > 0.0 ? Vec2(x / r) : Vec2(1.0, 0.0);
    return r >= radius_ ? n : Vec2(-n);
  }
  Mat2 hessian(const Vec2& x) const {
    double r = x.norm();
    if (!(r > 0.0)) return Mat2::Zero();
    Vec2 n = x / r;
    Mat2 h = (Mat2::Identity() - n * n.transpose()) / r;
    return r >= radius_ ? h : Mat2(-h);
  }
  Vec2 normal(const Vec2& x) const { return gradient(x); }
  Vec2 closest_point(const Vec2& x) const { return x - value(x) * gradient(x); }

 private:
  double radius_;
  double half_width_;
};

// v^e(x) = v(p(x)): extension of a surface function constant along normals.
template <class Provider, class F>
auto extend_along_normals(const Provider& provider, F v) {
  return [&provider, v](const Vec2& x) { return v(provider.closest_point(x)); };
}

// The polynomial of a discrete field on one cell, evaluated anywhere in the
// plane (used for root finding restricted to that cell).
class CellPolynomial {
 public:
  CellPolynomial(const LagrangeTriangle& element, const AffineMap& map, const double* coefficients)
      : element_(&element), map_(map) {
    for (int n = 0; n < element.size(); ++n) coef_[n] = coefficients[n];
  }

  double value(const Vec2& x) const {
    double v[LagrangeTriangle::max_nodes];
    element_->eval(map_.to_reference(x), v);
    double s = 0.0;
    for (int n = 0; n < element_->size(); ++n) s += coef_[n] * v[n];
    return s;
  }
  Vec2 gradient(const Vec2& x) const {
    double v[LagrangeTriangle::max_nodes];
    Vec2 g[LagrangeTriangle::max_nodes];
    element_->eval(map_.to_reference(x), v, g);
    Vec2 s = Vec2::Zero();
    for (int n = 0; n < element_->size(); ++n) s += coef_[n] * g[n];
    return map_.push_gradient(s);
  }
  Mat2 hessian(const Vec2& x) const {
    double v[LagrangeTriangle::max_nodes];
    std::array<double, 3> hs[LagrangeTriangle::max_nodes];
    element_->eval(map_.to_reference(x), v, nullptr, hs);
    Mat2 ref = Mat2::Zero();
    for (int n = 0; n < element_->size(); ++n) {
      ref(0, 0) += coef_[n] * hs[n][0];
      ref(0, 1) += coef_[n] * hs[n][1];
      ref(1, 1) += coef_[n] * hs[n][2];
    }
    ref(1, 0) = ref(0, 1);
    return map_.inverse.transpose() * ref * map_.inverse;
  }
  int degree() const { return element_->degree(); }

 private:
  const LagrangeTriangle* element_;
  AffineMap map_;
  double coef_[LagrangeTriangle::max_nodes];
};

// Continuous piecewise polynomial field of degree q on a mesh.
class DiscreteLevelSet {
 public:
  DiscreteLevelSet(const Mesh& mesh, int degree, std::vector<double> coefficients)
      : mesh_(&mesh), dofs_(std::make_shared<LagrangeDofMap>(mesh, degree)), coef_(std::move(coefficients)) {
    if (static_cast<int>(coef_.size()) != dofs_->num_dofs())
      throw Error(ErrorCode::invalid_argument, "coefficient count does not match the degree-q dof count");
  }

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return dofs_->degree(); }
  const LagrangeDofMap& dofs() const { return *dofs_; }
  const std::vector<double>& coefficients() const { return coef_; }

  CellPolynomial on_cell(int c) const {
    double local[LagrangeTriangle::max_nodes];
    const int* d = dofs_->cell_dofs(c);
    for (int n = 0; n < dofs_->dofs_per_cell(); ++n) local[n] = coef_[d[n]];
    return CellPolynomial(dofs_->element(), cell_map(*mesh_, c), local);
  }

  double value(const Vec2& x) const { return on_cell(mesh_->locate(x)).value(x); }
  // On shared edges the lowest-index containing cell supplies the gradient.
  Vec2 gradient(const Vec2& x) const { return on_cell(mesh_->locate(x)).gradient(x); }
  Mat2 hessian(const Vec2& x) const { return on_cell(mesh_->locate(x)).hessian(x); }

 private:
  const Mesh* mesh_;
  std::shared_ptr<const LagrangeDofMap> dofs_;
  std::vector<double> coef_;
};

// Nodal Lagrange interpolant of degree q.
template <ScalarField F>
DiscreteLevelSet interpolate(const F& phi, const Mesh& mesh, int q) {
  if (q < 1 || q > 3) throw Error(ErrorCode::unsupported_degree, "level-set interpolation degree must be 1..3");
  LagrangeDofMap dofs(mesh, q);
  std::vector<double> coef(dofs.num_dofs());
  for (int i = 0; i < dofs.num_dofs(); ++i) coef[i] = phi.value(dofs.coordinate(i));
  return DiscreteLevelSet(mesh, q, std::move(coef));
}

// Cell-local view used by the cut-cell machinery: closed-form fields are
// used as they are, discrete fields by the polynomial of the cell.
template <ScalarField F>
const F& restrict_to_cell(const F& field, const Mesh&, int) {
  return field;
}
inline CellPolynomial restrict_to_cell(const DiscreteLevelSet& field, const Mesh&, int c) { return field.on_cell(c); }

// Lattice degree used when sampling a field for sign changes on a cell.
template <ScalarField F>
int sampling_degree(const F&) {
  return 3;
}
inline int sampling_degree(const DiscreteLevelSet& f) { return std::max(f.degree() + 1, 3); }

struct RootOptions {
  double tol = 1e-12;          // relative residual tolerance
  int max_secant_steps = 50;   // before falling back to pure bisection
  int max_bisection_steps = 400;
};

// Root of g on [ta, tb] given opposite-signed end values; returns t with
// |g(t)| <= tol * max(1, |ga|, |gb|) unless the bracket collapses to
// rounding level first.
template <class G>
double solve_bracketed(G&& g, double ta, double tb, double ga, double gb, const RootOptions& opt = {}) {
  if (ga == 0.0) return ta;
  if (gb == 0.0) return tb;
  if ((ga > 0.0) == (gb > 0.0)) throw Error(ErrorCode::no_sign_change, "root is not bracketed");
  const double target = opt.tol * std::max({1.0, std::abs(ga), std::abs(gb)});
  double lo = ta, hi = tb, glo = ga, ghi = gb;
  double x0 = ta, f0 = ga, x1 = tb, f1 = gb;
  auto collapsed = [&] {
    return std::abs(hi - lo) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi));
  };
  auto best = [&] { return std::abs(glo) <= std::abs(ghi) ? lo : hi; };
  double width = std::abs(hi - lo);
  int stalls = 0;
  for (int step = 0; step < opt.max_secant_steps + opt.max_bisection_steps; ++step) {
    double x;
    bool secant = step < opt.max_secant_steps && stalls < 3 && f1 != f0;
    if (secant) {
      x = x1 - f1 * (x1 - x0) / (f1 - f0);
      double a = std::min(lo, hi), b = std::max(lo, hi);
      if (!(x > a && x < b)) x = 0.5 * (lo + hi);
    } else {
      x = 0.5 * (lo + hi);
      stalls = 0;
    }
    double fx = g(x);
    if (std::abs(fx) <= target) return x;
    if ((fx > 0.0) == (glo > 0.0)) {
      lo = x;
      glo = fx;
    } else {
      hi = x;
      ghi = fx;
    }
    x0 = x1;
    f0 = f1;
    x1 = x;
    f1 = fx;
    double w = std::abs(hi - lo);
    stalls = (w > 0.5 * width) ? stalls + 1 : 0;
    width = std::min(width, w);
    if (collapsed()) return best();
  }
  throw Error(ErrorCode::max_iterations, "root finding did not converge");
}

// Point on [a, b] where field - level vanishes.
template <ScalarField F>
Vec2 find_root_on_segment(const F& field, const Vec2& a, const Vec2& b, double level, double tol = 1e-12) {
  auto g = [&](double t) { return field.value(a + t * (b - a)) - level; };
  double ga = g(0.0), gb = g(1.0);
  if ((ga > 0.0 && gb > 0.0) || (ga < 0.0 && gb < 0.0))
    throw Error(ErrorCode::no_sign_change, "segment endpoints have the same sign");
  RootOptions opt;
  opt.tol = tol;
  double t = solve_bracketed(g, 0.0, 1.0, ga, gb, opt);
  return a + t * (b - a);
}

}  // namespace cutint
