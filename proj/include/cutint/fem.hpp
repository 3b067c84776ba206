#pragma once

// Unfitted P_r finite elements on the bulk mesh: the Poisson system on Ω_h,
// the narrow-band Laplace–Beltrami system, optional edge stabilization and a
// direct symmetric solve.

#include "domain_quadrature.hpp"
#include "lagrange.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cstdio>
#include <memory>
#include <ostream>
#include <vector>

namespace cutint {

struct FeSpace {
  const Mesh* mesh = nullptr;
  std::shared_ptr<const LagrangeDofMap> dofs;
  std::vector<char> active;  // per global dof

  int degree() const { return dofs->degree(); }
  int num_dofs() const { return dofs->num_dofs(); }
  int num_active() const {
    int n = 0;
    for (char a : active) n += a != 0;
    return n;
  }
};

inline FeSpace build_space(const Mesh& mesh, int r) {
  if (r < 1 || r > 3) throw Error(ErrorCode::unsupported_degree, "finite element degree must be 1..3");
  FeSpace s;
  s.mesh = &mesh;
  s.dofs = std::make_shared<LagrangeDofMap>(mesh, r);
  s.active.assign(s.dofs->num_dofs(), 1);
  return s;
}

// A dof is active iff it belongs to a non-exterior cell.
inline void mark_active(FeSpace& space, const CellClassification& cls) {
  space.active.assign(space.num_dofs(), 0);
  const int n = space.dofs->dofs_per_cell();
  for (std::size_t c = 0; c < space.mesh->num_cells(); ++c) {
    if (cls.tags[c] == CellTag::exterior) continue;
    const int* d = space.dofs->cell_dofs(static_cast<int>(c));
    for (int k = 0; k < n; ++k) space.active[d[k]] = 1;
  }
}

// Degree-r Lagrange interpolant of u.
template <class U>
std::vector<double> interpolate_function(const FeSpace& space, U&& u) {
  std::vector<double> out(space.num_dofs());
  for (int i = 0; i < space.num_dofs(); ++i) out[i] = u(space.dofs->coordinate(i));
  return out;
}

// Values and physical gradients of the local basis at x in cell c.
struct BasisAt {
  int n = 0;
  double values[LagrangeTriangle::max_nodes];
  Vec2 grads[LagrangeTriangle::max_nodes];
};

inline BasisAt eval_basis(const FeSpace& space, const AffineMap& map, const Vec2& x) {
  BasisAt b;
  const auto& el = space.dofs->element();
  b.n = el.size();
  Vec2 ref[LagrangeTriangle::max_nodes];
  el.eval(map.to_reference(x), b.values, ref);
  for (int k = 0; k < b.n; ++k) b.grads[k] = map.push_gradient(ref[k]);
  return b;
}

// Finite element function: coefficients over the global dofs.
struct FeFunction {
  const FeSpace* space = nullptr;
  std::vector<double> coefficients;

  double value(int c, const Vec2& x) const {
    BasisAt b = eval_basis(*space, cell_map(*space->mesh, c), x);
    const int* d = space->dofs->cell_dofs(c);
    double s = 0.0;
    for (int k = 0; k < b.n; ++k) s += coefficients[d[k]] * b.values[k];
    return s;
  }
  Vec2 gradient(int c, const Vec2& x) const {
    BasisAt b = eval_basis(*space, cell_map(*space->mesh, c), x);
    const int* d = space->dofs->cell_dofs(c);
    Vec2 s = Vec2::Zero();
    for (int k = 0; k < b.n; ++k) s += coefficients[d[k]] * b.grads[k];
    return s;
  }
  double value(const Vec2& x) const { return value(space->mesh->locate(x), x); }
  Vec2 gradient(const Vec2& x) const { return gradient(space->mesh->locate(x), x); }
};

struct AssemblyStats {
  std::size_t evals_total = 0;
  std::size_t evals_cut = 0;
  std::size_t cut_cells = 0;
  int fallbacks = 0;
  bool mc_converged = true;
  double max_fit_residual = 0.0;
};

struct FeSystem {
  Eigen::SparseMatrix<double> matrix;  // over active dofs
  Eigen::VectorXd load;
  std::vector<int> active_to_global;
  std::vector<int> global_to_active;   // -1 for inactive dofs
  AssemblyStats stats;
};

struct AssemblyOptions {
  DomainRuleOptions rules;  // interior_exactness 0 means 2r+2
  bool stabilization = false;
  double sigma = 1.0;
};

// Pointwise data of the weak form: ∫ (D∇u·∇v + κ u v) = ∫ s v.
struct PointData {
  Mat2 diffusion = Mat2::Identity();
  double reaction = 0.0;
  double source = 0.0;
};

// LP Gauss points for finite element integrands: the accuracy-driven count
// ceil((m-1)/2), raised to r+1 so that products of two degree-r basis
// functions are integrated exactly along each direction of a straight
// remainder. With fewer points the negative remainder weights of concave
// cuts can make the assembled matrix indefinite.
inline int fe_lp_points(int m, int r) { return std::max(m / 2, r + 1); }

namespace detail {

inline void index_active(const FeSpace& space, FeSystem& sys) {
  sys.global_to_active.assign(space.num_dofs(), -1);
  sys.active_to_global.clear();
  for (int i = 0; i < space.num_dofs(); ++i)
    if (space.active[i]) {
      sys.global_to_active[i] = static_cast<int>(sys.active_to_global.size());
      sys.active_to_global.push_back(i);
    }
}

}  // namespace detail

inline std::vector<Eigen::Triplet<double>> edge_stabilization_triplets(const FeSpace& space,
                                                                       const CellClassification& cls, double sigma,
                                                                       const std::vector<int>& global_to_active);

// Generic assembly; data(local_field, x) returns the PointData at x, where
// local_field is the level-set restricted to the current cell.
template <ScalarField Field, class Data>
FeSystem assemble_system(const FeSpace& space, const Field& field, const CellClassification& cls, Data&& data,
                         AssemblyOptions opt) {
  const Mesh& mesh = *space.mesh;
  const int r = space.degree();
  if (opt.rules.interior_exactness <= 0) opt.rules.interior_exactness = 2 * r + 2;
  if (opt.rules.cut.polygon_exactness <= 0) opt.rules.cut.polygon_exactness = 2 * r + 2;
  if (opt.rules.cut.lp_points <= 0) opt.rules.cut.lp_points = fe_lp_points(opt.rules.cut.m, r);
  if (opt.rules.cut.method == Method::MC && !opt.rules.cut.mc_driver)
    opt.rules.cut.mc_driver = [](const Vec2&) { return 1.0; };
  FeSystem sys;
  detail::index_active(space, sys);
  const int n = space.dofs->dofs_per_cell();
  std::vector<Eigen::Triplet<double>> trip;
  sys.load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.active_to_global.size()));
  Eigen::MatrixXd Ke(n, n);
  Eigen::VectorXd Fe(n);
  for (std::size_t cc = 0; cc < mesh.num_cells(); ++cc) {
    const int c = static_cast<int>(cc);
    if (cls.tags[c] == CellTag::exterior) continue;
    CellRule rule = domain_cell_rule(mesh, field, cls, c, opt.rules);
    sys.stats.evals_total += rule.evals();
    if (rule.cut) {
      sys.stats.evals_cut += rule.evals();
      ++sys.stats.cut_cells;
    }
    sys.stats.fallbacks += rule.fallbacks;
    sys.stats.mc_converged = sys.stats.mc_converged && rule.mc_converged;
    sys.stats.max_fit_residual =
        std::max({sys.stats.max_fit_residual, rule.fit.surface_residual, rule.fit.area_residual});
    const AffineMap map = cell_map(mesh, c);
    const auto& local = restrict_to_cell(field, mesh, c);
    Ke.setZero();
    Fe.setZero();
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const Vec2& x = rule.nodes[k];
      const double w = rule.weights[k];
      PointData pd = data(local, x);
      BasisAt b = eval_basis(space, map, x);
      for (int i = 0; i < n; ++i) {
        Vec2 Dg = pd.diffusion * b.grads[i];
        Fe(i) += w * pd.source * b.values[i];
        for (int j = 0; j < n; ++j) Ke(i, j) += w * (Dg.dot(b.grads[j]) + pd.reaction * b.values[i] * b.values[j]);
      }
    }
    const int* d = space.dofs->cell_dofs(c);
    for (int i = 0; i < n; ++i) {
      const int ai = sys.global_to_active[d[i]];
      sys.load(ai) += Fe(i);
      for (int j = 0; j < n; ++j) trip.emplace_back(ai, sys.global_to_active[d[j]], Ke(i, j));
    }
  }
  if (opt.stabilization) {
    auto st = edge_stabilization_triplets(space, cls, opt.sigma, sys.global_to_active);
    trip.insert(trip.end(), st.begin(), st.end());
  }
  const auto na = static_cast<Eigen::Index>(sys.active_to_global.size());
  sys.matrix.resize(na, na);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

// ∫_{Ω_h} ∇u·∇v + α u v = ∫_{Ω_h} f v
template <ScalarField Field, class Alpha, class Source>
FeSystem assemble_poisson(const FeSpace& space, const Field& field, const CellClassification& cls, Alpha&& alpha,
                          Source&& f, const AssemblyOptions& opt) {
  auto data = [&](const auto&, const Vec2& x) {
    PointData pd;
    pd.reaction = alpha(x);
    pd.source = f(x);
    return pd;
  };
  return assemble_system(space, field, cls, data, opt);
}

// Pointwise narrow-band coefficients from φ_h (per cell) and a Hessian H.
template <class Hessian>
struct NarrowBandCoefficients {
  Hessian hessian;

  struct At {
    double phi;
    Mat2 H;
    double mu;         // det(I − φH)
    Mat2 coefficient;  // (I − φH)^{-2}
  };

  template <class LocalField>
  At operator()(const LocalField& local, const Vec2& x) const {
    At a;
    a.phi = local.value(x);
    a.H = hessian(x);
    Mat2 A = Mat2::Identity() - a.phi * a.H;
    a.mu = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    if (!(a.mu > 0.0)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "det(I - phi H) = %.3e at (%.6f, %.6f); narrow the band", a.mu, x.x(), x.y());
      throw Error(ErrorCode::nonpositive_metric, buf);
    }
    Mat2 inv;
    inv << A(1, 1), -A(0, 1), -A(1, 0), A(0, 0);
    inv /= a.mu;
    a.coefficient = inv * inv;
    return a;
  }
};

template <class Hessian>
NarrowBandCoefficients<Hessian> narrow_band_coefficients(Hessian h) {
  return {std::move(h)};
}

// ∫_{band} [(I−φ_hH)^{-2}∇u·∇v + α u v] μ_h = ∫_{band} g μ_h v
template <ScalarField Field, class Hessian, class Alpha, class Source>
FeSystem assemble_narrowband(const FeSpace& space, const Field& field, const CellClassification& band,
                             const NarrowBandCoefficients<Hessian>& coeffs, Alpha&& alpha, Source&& g,
                             const AssemblyOptions& opt) {
  auto data = [&](const auto& local, const Vec2& x) {
    auto a = coeffs(local, x);
    PointData pd;
    pd.diffusion = a.mu * a.coefficient;
    pd.reaction = a.mu * alpha(x);
    pd.source = a.mu * g(x);
    return pd;
  };
  return assemble_system(space, field, band, data, opt);
}

// Σ_F σ ∫_F [n·∇u][n·∇v] over edges shared by two cut cells.
inline std::vector<Eigen::Triplet<double>> edge_stabilization_triplets(const FeSpace& space,
                                                                       const CellClassification& cls, double sigma,
                                                                       const std::vector<int>& global_to_active) {
  const Mesh& mesh = *space.mesh;
  const int n = space.dofs->dofs_per_cell();
  const QuadRule1D gauss = gauss_1d(space.degree() + 1);
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> dofs(2 * n);
  std::vector<double> jump(2 * n);
  for (int e : cls.boundary_faces) {
    const Edge& edge = mesh.edges[e];
    const Vec2& a = mesh.vertices[edge.vertices[0]];
    const Vec2& b = mesh.vertices[edge.vertices[1]];
    const double len = (b - a).norm();
    const Vec2 nf = perp_right(b - a) / len;
    const int c0 = edge.cells[0], c1 = edge.cells[1];
    const AffineMap m0 = cell_map(mesh, c0), m1 = cell_map(mesh, c1);
    for (int k = 0; k < n; ++k) {
      dofs[k] = space.dofs->cell_dofs(c0)[k];
      dofs[n + k] = space.dofs->cell_dofs(c1)[k];
    }
    for (std::size_t q = 0; q < gauss.nodes.size(); ++q) {
      const Vec2 x = a + gauss.nodes[q] * (b - a);
      BasisAt b0 = eval_basis(space, m0, x), b1 = eval_basis(space, m1, x);
      for (int k = 0; k < n; ++k) {
        jump[k] = nf.dot(b0.grads[k]);
        jump[n + k] = -nf.dot(b1.grads[k]);
      }
      const double w = sigma * len * gauss.weights[q];
      for (int i = 0; i < 2 * n; ++i)
        for (int j = 0; j < 2 * n; ++j) {
          const int ai = global_to_active[dofs[i]], aj = global_to_active[dofs[j]];
          if (ai < 0 || aj < 0) continue;
          trip.emplace_back(ai, aj, w * jump[i] * jump[j]);
        }
    }
  }
  return trip;
}

// Stabilization matrix over all dofs of the space (global numbering).
inline Eigen::SparseMatrix<double> assemble_edge_stabilization(const FeSpace& space, const CellClassification& cls,
                                                               double sigma = 1.0) {
  std::vector<int> ident(space.num_dofs());
  for (int i = 0; i < space.num_dofs(); ++i) ident[i] = i;
  auto trip = edge_stabilization_triplets(space, cls, sigma, ident);
  Eigen::SparseMatrix<double> J(space.num_dofs(), space.num_dofs());
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

struct SolveReport {
  bool dense = false;
  int nonpositive_pivots = 0;
  int first_nonpositive_pivot = -1;  // active-dof index
  double min_pivot = 0.0;
  double relative_residual = 0.0;
  int refinement_steps = 0;
};

struct SolveOptions {
  int dense_below = 2000;
  double residual_target = 1e-10;
  int max_refinement = 5;
};

// Pivoted LDLᵀ: dense below the size threshold, sparse (AMD-ordered) above.
inline Eigen::VectorXd solve(const FeSystem& sys, SolveReport* report = nullptr, const SolveOptions& opt = {}) {
  SolveReport rep;
  const Eigen::Index n = sys.matrix.rows();
  const Eigen::VectorXd& b = sys.load;
  if (n == 0) {
    if (report) *report = rep;
    return Eigen::VectorXd();
  }
  auto scan_pivots = [&](const Eigen::VectorXd& D, auto&& index_of) {
    rep.min_pivot = D.minCoeff();
    for (Eigen::Index i = 0; i < D.size(); ++i) {
      if (!std::isfinite(D(i)) || D(i) == 0.0)
        throw Error(ErrorCode::singular_matrix, "zero pivot at active dof " + std::to_string(index_of(i)));
      if (D(i) < 0.0) {
        if (rep.first_nonpositive_pivot < 0) rep.first_nonpositive_pivot = index_of(i);
        ++rep.nonpositive_pivots;
      }
    }
  };
  Eigen::VectorXd x;
  auto refine = [&](auto&& apply_inverse) {
    x = apply_inverse(b);
    const double bn = std::max(b.norm(), std::numeric_limits<double>::min());
    Eigen::VectorXd res = b - sys.matrix * x;
    rep.relative_residual = res.norm() / bn;
    while (rep.relative_residual > opt.residual_target && rep.refinement_steps < opt.max_refinement) {
      x += apply_inverse(res);
      res = b - sys.matrix * x;
      rep.relative_residual = res.norm() / bn;
      ++rep.refinement_steps;
    }
  };
  if (n < opt.dense_below) {
    rep.dense = true;
    Eigen::MatrixXd A = Eigen::MatrixXd(sys.matrix);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::singular_matrix, "dense LDLT failed");
    Eigen::VectorXi perm = ldlt.transpositionsP() * Eigen::VectorXi::LinSpaced(n, 0, static_cast<int>(n) - 1);
    scan_pivots(ldlt.vectorD(), [&](Eigen::Index i) { return perm(i); });
    refine([&](const Eigen::VectorXd& r) { return Eigen::VectorXd(ldlt.solve(r)); });
  } else {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    ldlt.compute(sys.matrix);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::singular_matrix, "sparse LDLT failed");
    const auto& P = ldlt.permutationPinv();
    scan_pivots(ldlt.vectorD(), [&](Eigen::Index i) { return P.indices()(i); });
    refine([&](const Eigen::VectorXd& r) { return Eigen::VectorXd(ldlt.solve(r)); });
  }
  if (report) *report = rep;
  return x;
}

// Active-dof vector scattered back to the global numbering (inactive dofs 0).
inline FeFunction expand(const FeSpace& space, const FeSystem& sys, const Eigen::VectorXd& x) {
  FeFunction u{&space, std::vector<double>(space.num_dofs(), 0.0)};
  for (std::size_t a = 0; a < sys.active_to_global.size(); ++a) u.coefficients[sys.active_to_global[a]] = x(a);
  return u;
}

// "row col value" lines, one per stored nonzero, 0-based active indices.
inline void write_matrix(std::ostream& os, const Eigen::SparseMatrix<double>& A) {
  char buf[96];
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", static_cast<int>(it.row()), static_cast<int>(it.col()),
                    it.value());
      os << buf;
    }
}

// "x y value" lines for every active dof.
inline void write_solution(std::ostream& os, const FeFunction& u) {
  char buf[96];
  for (int i = 0; i < u.space->num_dofs(); ++i) {
    if (!u.space->active[i]) continue;
    const Vec2& p = u.space->dofs->coordinate(i);
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), u.coefficients[i]);
    os << buf;
  }
}

}  // namespace cutint
