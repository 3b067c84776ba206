#pragma once

// Per-cell quadrature over Ω_h ∩ K for every non-exterior cell: the mapped
// triangle rule on interior cells and the cut rules on cut cells. A cell cut
// by both levels of a band gets rule_1 + rule_2 − full-cell rule, since the
// two one-sided regions cover K and intersect in the band part.

#include "classify.hpp"
#include "cut_rules.hpp"

#include <vector>

namespace cutint {

struct DomainRuleOptions {
  CutRuleOptions cut;           // method, m, seed, ...; cut.h defaults to the mesh size
  int interior_exactness = 4;   // mapped triangle rule on interior cells
  GeometryOptions geometry;
};

struct CellRule {
  std::vector<Vec2> nodes;
  std::vector<double> weights;
  bool cut = false;
  int fallbacks = 0;
  double mc_stddev = 0.0;
  bool mc_converged = true;
  MomentFitDiagnostics fit;

  std::size_t evals() const { return nodes.size(); }
  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

template <ScalarField F>
CellRule domain_cell_rule(const Mesh& mesh, const F& field, const CellClassification& cls, int c,
                          const DomainRuleOptions& opt) {
  CellRule out;
  const auto v = mesh.cell_vertices(c);
  auto append = [&](const std::vector<Vec2>& x, const std::vector<double>& w, double sign) {
    out.nodes.insert(out.nodes.end(), x.begin(), x.end());
    for (double wi : w) out.weights.push_back(sign * wi);
  };
  const QuadRule2D full = map_to_cell(triangle_rule(std::clamp(opt.interior_exactness, 1, 10)), v[0], v[1], v[2]);
  if (cls.tags[c] == CellTag::exterior) return out;
  if (cls.tags[c] == CellTag::interior) {
    append(full.nodes, full.weights, 1.0);
    return out;
  }
  out.cut = true;
  const auto& local = restrict_to_cell(field, mesh, c);
  const auto levels = cls.levels_cutting(c);
  CutRuleOptions copt = opt.cut;
  if (!(copt.h > 0.0)) copt.h = mesh.h;
  double var = 0.0;
  for (int l : levels) {
    CutCellGeometry geom =
        build_cut_geometry(local, v, cls.levels[l].cut, sampling_degree(field), c, opt.geometry);
    CutRuleOptions o = copt;
    o.seed = copt.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(l);
    CutRule r = build_cut_rule(geom, local, o);
    append(r.nodes, r.weights, 1.0);
    out.fallbacks += r.fallbacks;
    var += r.mc_stddev * r.mc_stddev;
    out.mc_converged = out.mc_converged && r.mc_converged;
    out.fit.surface_rank = std::max(out.fit.surface_rank, r.fit.surface_rank);
    out.fit.area_rank = std::max(out.fit.area_rank, r.fit.area_rank);
    out.fit.surface_residual = std::max(out.fit.surface_residual, r.fit.surface_residual);
    out.fit.area_residual = std::max(out.fit.area_residual, r.fit.area_residual);
  }
  for (std::size_t k = 1; k < levels.size(); ++k) append(full.nodes, full.weights, -1.0);
  out.mc_stddev = std::sqrt(var);
  return out;
}

struct DomainIntegral {
  double value = 0.0;
  std::size_t evals_total = 0;
  std::size_t evals_cut = 0;
  std::size_t cut_cells = 0;
  double mc_stddev = 0.0;
  bool mc_converged = true;
  int fallbacks = 0;
};

// Integral of f over Ω_h. MC steers its sample growth by f unless a driver
// is set in the options.
template <ScalarField Field, class Fn>
DomainIntegral integrate_domain(const Mesh& mesh, const Field& field, const CellClassification& cls, Fn&& f,
                                DomainRuleOptions opt) {
  if (opt.cut.method == Method::MC && !opt.cut.mc_driver)
    opt.cut.mc_driver = [&f](const Vec2& x) { return static_cast<double>(f(x)); };
  DomainIntegral out;
  double var = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    if (cls.tags[c] == CellTag::exterior) continue;
    CellRule r = domain_cell_rule(mesh, field, cls, static_cast<int>(c), opt);
    out.value += r.integrate(f);
    out.evals_total += r.evals();
    if (r.cut) {
      out.evals_cut += r.evals();
      ++out.cut_cells;
    }
    var += r.mc_stddev * r.mc_stddev;
    out.mc_converged = out.mc_converged && r.mc_converged;
    out.fallbacks += r.fallbacks;
  }
  out.mc_stddev = std::sqrt(var);
  return out;
}

}  // namespace cutint
