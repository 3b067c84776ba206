#pragma once

// The three model problems and their mesh sweeps: integration over an
// annulus, Poisson with Neumann data on the unit disc, and Laplace–Beltrami
// on the unit circle by the narrow-band method.

#include "analysis.hpp"
#include "domain_quadrature.hpp"
#include "fem.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace cutint {

enum class Experiment { integrate_annulus, poisson_disc, laplace_beltrami_circle };

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::integrate_annulus: return "integrate-annulus";
    case Experiment::poisson_disc: return "poisson-disc";
    case Experiment::laplace_beltrami_circle: return "laplace-beltrami-circle";
  }
  return "?";
}

inline Experiment parse_experiment(const std::string& s) {
  for (Experiment e : {Experiment::integrate_annulus, Experiment::poisson_disc, Experiment::laplace_beltrami_circle})
    if (s == to_string(e)) return e;
  throw Error(ErrorCode::invalid_argument, "unknown experiment '" + s + "'");
}

struct ExperimentConfig {
  Experiment experiment = Experiment::integrate_annulus;
  Method method = Method::LP;
  int m = 0;            // 0: 4 for integration, min(q, r) + 2 otherwise
  int r = 2;            // finite element degree
  int q = 0;            // level-set interpolation degree; 0 means r
  int level_min = -1;   // -1: experiment default
  int level_max = -1;
  double base_h = 0.0;  // 0: 0.1 for integration, 0.5 otherwise
  std::uint64_t seed = 1;
  double band_factor = 2.0;  // band half-width d_h = band_factor * h
  bool stabilization = false;
  double sigma = 1.0;
  bool timing = true;        // false writes zero seconds for byte-identical reruns
  double mc_tolerance = 0.1;
  double eval_budget = 1e8;  // compare: skip a level whose predicted eval count exceeds this
  std::string out = "out";

  int effective_q() const { return q > 0 ? q : r; }
  int effective_m() const {
    if (m > 0) return m;
    return experiment == Experiment::integrate_annulus ? 4 : std::min(effective_q(), r) + 2;
  }
  int effective_level_min() const {
    if (level_min >= 0) return level_min;
    return experiment == Experiment::laplace_beltrami_circle ? 1 : 0;
  }
  int effective_level_max() const {
    if (level_max >= 0) return level_max;
    switch (experiment) {
      case Experiment::integrate_annulus: return 4;
      case Experiment::poisson_disc: return 5;
      case Experiment::laplace_beltrami_circle: return 6;
    }
    return 4;
  }
  double effective_base_h() const {
    if (base_h > 0.0) return base_h;
    return experiment == Experiment::integrate_annulus ? 0.1 : 0.5;
  }
  double level_h(int i) const { return effective_base_h() * std::ldexp(1.0, -i); }

  void validate() const {
    auto bad = [](const std::string& field, const std::string& why) {
      throw Error(ErrorCode::invalid_argument, field + ": " + why);
    };
    if (r < 1 || r > 3) bad("r", "must be 1, 2 or 3");
    if (q < 0 || q > 3) bad("q", "must be 1, 2 or 3 (0 means r)");
    if (m < 0 || m > 12) bad("m", "must be 1..12 (0 means default)");
    if (effective_level_min() > effective_level_max()) bad("levels", "empty range");
    if (effective_level_max() - effective_level_min() + 1 < 2) bad("levels", "at least two levels are needed for rates");
    if (effective_level_max() > 12) bad("levels", "finest level must be <= 12");
    if (!(base_h >= 0.0)) bad("h", "must be positive");
    if (!(band_factor > 0.0)) bad("band", "must be positive");
    if (!(sigma >= 0.0)) bad("sigma", "must be nonnegative");
    if (!(mc_tolerance > 0.0)) bad("mc_tolerance", "must be positive");
    if (!(eval_budget > 0.0)) bad("budget", "must be positive");
  }
};

// ---------------------------------------------------------------- annulus

struct AnnulusProblem {
  double radius = 1.0;
  double half_width = 0.1;
  double amplitude = 1e5;
  int angular = 21;
  double radial = 5.0 * std::numbers::pi;

  double f(const Vec2& x) const {
    const double r = x.norm();
    return amplitude * std::sin(angular * std::atan2(x.y(), x.x())) * std::sin(radial * r);
  }
  Rect bulk() const { return {0.0, 1.0, 0.0, 1.0}; }

  // Untruncated quarter annulus: the angular factor integrates to 1/k.
  double quarter_closed_form() const {
    const double a = radius - half_width, b = radius + half_width, w = radial;
    auto F = [w](double r) { return std::sin(w * r) / (w * w) - r * std::cos(w * r) / w; };
    return amplitude / angular * (F(b) - F(a));
  }

  // ∫ over annulus ∩ (0,1)² in polar form. For r <= 1 the angular range is
  // the full quarter; beyond it the square leaves θ ∈ [acos(1/r), asin(1/r)].
  // The substitution r = 1 + u² removes the square-root behaviour at r = 1.
  double reference() const {
    const QuadRule1D g = gauss_1d(10);
    const double k = angular;
    auto theta_integral = [&](double lo, double hi) { return (std::cos(k * lo) - std::cos(k * hi)) / k; };
    const double a = radius - half_width, b = radius + half_width;
    const int panels = 128;
    double inner = 0.0;
    const double inner_top = std::min(b, 1.0);
    for (int p = 0; p < panels; ++p) {
      const double r0 = a + (inner_top - a) * p / panels, r1 = a + (inner_top - a) * (p + 1) / panels;
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double r = r0 + g.nodes[i] * (r1 - r0);
        inner += (r1 - r0) * g.weights[i] * r * std::sin(radial * r) * theta_integral(0.0, std::numbers::pi / 2);
      }
    }
    double outer = 0.0;
    if (b > 1.0) {
      const double umax = std::sqrt(b - 1.0);
      for (int p = 0; p < panels; ++p) {
        const double u0 = umax * p / panels, u1 = umax * (p + 1) / panels;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
          const double u = u0 + g.nodes[i] * (u1 - u0);
          const double r = 1.0 + u * u;
          const double lo = std::acos(1.0 / r), hi = std::asin(1.0 / r);
          outer += (u1 - u0) * g.weights[i] * 2.0 * u * r * std::sin(radial * r) * theta_integral(lo, hi);
        }
      }
    }
    return amplitude * (inner + outer);
  }
};

// --------------------------------------------------------------- Poisson

// u = sin(a r) sin θ + cos(c r) with −Δu + u = f and zero normal flux on r = 1.
struct PoissonDiscProblem {
  double a = 3.5 * std::numbers::pi;
  double c = 3.0 * std::numbers::pi;
  double alpha = 1.0;

  Rect bulk() const { return {-1.5, 1.5, -1.5, 1.5}; }

  // sin(a r)/r, (sin z − z cos z)/r³ with z = a r, and sin(c r)/r, with
  // series near the origin.
  double s_of(double r) const {
    const double z = a * r;
    return std::abs(z) < 1e-3 ? a * (1.0 - z * z / 6.0) : std::sin(z) / r;
  }
  double q_of(double r) const {
    const double z = a * r;
    if (std::abs(z) < 1e-2) return a * a * a * (1.0 / 3.0 - z * z / 30.0 + z * z * z * z / 840.0);
    return (std::sin(z) - z * std::cos(z)) / (r * r * r);
  }
  double t_of(double r) const {
    const double z = c * r;
    return std::abs(z) < 1e-3 ? c * (1.0 - z * z / 6.0) : std::sin(z) / r;
  }

  double u(const Vec2& x) const { return s_of(x.norm()) * x.y() + std::cos(c * x.norm()); }
  Vec2 grad(const Vec2& x) const {
    const double r = x.norm(), q = q_of(r), s = s_of(r), t = t_of(r);
    return Vec2(-q * x.x() * x.y(), -q * x.y() * x.y() + s) - c * t * x;
  }
  double f(const Vec2& x) const {
    const double r = x.norm();
    return (a * a + alpha) * s_of(r) * x.y() + q_of(r) * x.y() + (c * c + alpha) * std::cos(c * r) + c * t_of(r);
  }
};

// ------------------------------------------------------- Laplace–Beltrami

// u = cos(kθ) on the unit circle, −Δ_Γ u + u = (k² + 1) cos(kθ).
struct LaplaceBeltramiProblem {
  int k = 8;
  double alpha = 1.0;
  double radius = 1.0;

  Rect bulk() const { return {-1.5, 1.5, -1.5, 1.5}; }
  double u_theta(double th) const { return std::cos(k * th); }
  double du_theta(double th) const { return -k * std::sin(k * th); }
  // Extensions constant along normals.
  double u(const Vec2& x) const { return u_theta(std::atan2(x.y(), x.x())); }
  double g(const Vec2& x) const {
    return (k * k / (radius * radius) + alpha) * std::cos(k * std::atan2(x.y(), x.x()));
  }
  Mat2 hessian(const Vec2& x) const { return CircleLevelSet(radius).hessian(x); }
};

// ------------------------------------------------------------------ sweeps

using LevelCallback = std::function<void(const LevelRecord&)>;

namespace detail {

inline DomainRuleOptions rule_options(const ExperimentConfig& cfg, double h) {
  DomainRuleOptions o;
  o.cut.method = cfg.method;
  o.cut.m = cfg.effective_m();
  o.cut.seed = cfg.seed;
  o.cut.h = h;
  o.cut.mc_tolerance = cfg.mc_tolerance;
  return o;
}

template <class Body>
LevelRecord run_level(const ExperimentConfig& cfg, int i, Body&& body) {
  LevelRecord rec;
  rec.level = i;
  rec.h = cfg.level_h(i);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(rec);
  } catch (const Error& e) {
    rec.ok = false;
    rec.note = e.what();
  }
  rec.seconds = cfg.timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() : 0.0;
  return rec;
}

inline std::string solve_note(const SolveReport& s, const AssemblyStats& st) {
  std::string note;
  char buf[160];
  if (s.nonpositive_pivots > 0) {
    std::snprintf(buf, sizeof buf, "nonpositive pivots: %d (first at active dof %d); ", s.nonpositive_pivots,
                  s.first_nonpositive_pivot);
    note += buf;
  }
  if (s.relative_residual > 1e-10) {
    std::snprintf(buf, sizeof buf, "residual %.2e above target; ", s.relative_residual);
    note += buf;
  }
  if (st.fallbacks > 0) note += "LP fallbacks: " + std::to_string(st.fallbacks) + "; ";
  if (!st.mc_converged) note += "MC sample cap reached; ";
  return note;
}

}  // namespace detail

struct IntegrationLevel {
  double value = 0.0;
  double reference = 0.0;
  double mc_stddev = 0.0;
};

inline double annulus_reference() {
  static const double value = AnnulusProblem{}.reference();
  return value;
}

inline LevelRecord integration_level(const ExperimentConfig& cfg, int i, IntegrationLevel* details = nullptr) {
  AnnulusProblem prob;
  AnnulusLevelSet phi(prob.radius, prob.half_width);
  const double reference = annulus_reference();
  return detail::run_level(cfg, i, [&](LevelRecord& r) {
    Mesh mesh = build_uniform(prob.bulk(), r.h);
    CellClassification cls = classify(mesh, phi, 0.0);
    DomainRuleOptions o = detail::rule_options(cfg, mesh.h);
    o.interior_exactness = cfg.effective_m();
    o.cut.polygon_exactness = std::max(1, cfg.effective_m() - 2);
    DomainIntegral I = integrate_domain(mesh, phi, cls, [&](const Vec2& x) { return prob.f(x); }, o);
    if (details) *details = {I.value, reference, I.mc_stddev};
    r.metrics = {std::abs(I.value - reference)};
    r.evals_total = I.evals_total;
    r.evals_cut = I.evals_cut;
    if (I.fallbacks > 0) r.note += "LP fallbacks: " + std::to_string(I.fallbacks) + "; ";
    if (!I.mc_converged) r.note += "MC sample cap reached; ";
  });
}

// Mesh, φ_h, classification and solution of one finite element level.
struct FeLevel {
  Mesh mesh;
  std::unique_ptr<DiscreteLevelSet> phi;
  CellClassification cls;
  FeSpace space;
  FeSystem system;
  SolveReport solve;
  FeFunction uh;
};

namespace detail {

inline std::unique_ptr<FeLevel> prepare_level(const ExperimentConfig& cfg, const Rect& bulk, double h) {
  auto L = std::make_unique<FeLevel>();
  L->mesh = build_uniform(bulk, h);
  L->phi = std::make_unique<DiscreteLevelSet>(interpolate(CircleLevelSet(1.0), L->mesh, cfg.effective_q()));
  if (cfg.experiment == Experiment::laplace_beltrami_circle)
    L->cls = classify_band(L->mesh, *L->phi, cfg.band_factor * h);
  else
    L->cls = classify(L->mesh, *L->phi, 0.0);
  L->space = build_space(L->mesh, cfg.r);
  mark_active(L->space, L->cls);
  return L;
}

inline AssemblyOptions assembly_options(const ExperimentConfig& cfg, double h) {
  AssemblyOptions ao;
  ao.rules = rule_options(cfg, h);
  ao.stabilization = cfg.stabilization;
  ao.sigma = cfg.sigma;
  return ao;
}

inline void finish_level(FeLevel& L) {
  Eigen::VectorXd x = solve(L.system, &L.solve);
  L.uh = expand(L.space, L.system, x);
}

}  // namespace detail

// Poisson on the disc {φ_h < 0} with the given reaction and source.
template <class Alpha, class Source>
std::unique_ptr<FeLevel> solve_poisson_level(const ExperimentConfig& cfg, double h, Alpha&& alpha, Source&& f) {
  auto L = detail::prepare_level(cfg, PoissonDiscProblem{}.bulk(), h);
  L->system = assemble_poisson(L->space, *L->phi, L->cls, alpha, f, detail::assembly_options(cfg, h));
  detail::finish_level(*L);
  return L;
}

// Narrow-band Laplace–Beltrami on the band |φ_h| < band_factor·h.
template <class Alpha, class Source>
std::unique_ptr<FeLevel> solve_narrowband_level(const ExperimentConfig& cfg, double h, Alpha&& alpha, Source&& g) {
  LaplaceBeltramiProblem prob;
  ExperimentConfig c = cfg;
  c.experiment = Experiment::laplace_beltrami_circle;
  auto L = detail::prepare_level(c, prob.bulk(), h);
  auto coeffs = narrow_band_coefficients([prob](const Vec2& x) { return prob.hessian(x); });
  L->system = assemble_narrowband(L->space, *L->phi, L->cls, coeffs, alpha, g, detail::assembly_options(cfg, h));
  detail::finish_level(*L);
  return L;
}

inline LevelRecord poisson_level(const ExperimentConfig& cfg, int i) {
  PoissonDiscProblem prob;
  return detail::run_level(cfg, i, [&](LevelRecord& r) {
    auto L = solve_poisson_level(
        cfg, r.h, [&](const Vec2&) { return prob.alpha; }, [&](const Vec2& x) { return prob.f(x); });
    ErrorNorms e = bulk_errors(
        L->uh, [&](const Vec2& x) { return prob.u(x); }, [&](const Vec2& x) { return prob.grad(x); }, *L->phi, L->cls,
        detail::rule_options(cfg, r.h));
    r.metrics = {e.L2, e.H1};
    r.evals_total = L->system.stats.evals_total;
    r.evals_cut = L->system.stats.evals_cut;
    r.note += detail::solve_note(L->solve, L->system.stats);
  });
}

inline LevelRecord laplace_beltrami_level(const ExperimentConfig& cfg, int i) {
  LaplaceBeltramiProblem prob;
  return detail::run_level(cfg, i, [&](LevelRecord& r) {
    auto L = solve_narrowband_level(
        cfg, r.h, [&](const Vec2&) { return prob.alpha; }, [&](const Vec2& x) { return prob.g(x); });
    ErrorNorms e = surface_errors(
        L->uh, [&](double t) { return prob.u_theta(t); }, [&](double t) { return prob.du_theta(t); }, L->cls,
        prob.radius);
    r.metrics = {e.L2, e.H1};
    r.evals_total = L->system.stats.evals_total;
    r.evals_cut = L->system.stats.evals_cut;
    r.note += detail::solve_note(L->solve, L->system.stats);
  });
}

inline LevelRecord run_level(const ExperimentConfig& cfg, int i) {
  switch (cfg.experiment) {
    case Experiment::integrate_annulus: return integration_level(cfg, i);
    case Experiment::poisson_disc: return poisson_level(cfg, i);
    case Experiment::laplace_beltrami_circle: return laplace_beltrami_level(cfg, i);
  }
  throw Error(ErrorCode::invalid_argument, "unknown experiment");
}

inline std::vector<std::string> metric_names(Experiment e) {
  switch (e) {
    case Experiment::integrate_annulus: return {"error"};
    case Experiment::poisson_disc: return {"L2", "H1"};
    case Experiment::laplace_beltrami_circle: return {"L2_surface", "H1_surface"};
  }
  return {};
}

// Full sweep over the configured levels; failed levels are recorded and the
// sweep continues.
inline ConvergenceReport run(const ExperimentConfig& cfg, const LevelCallback& cb = {}) {
  cfg.validate();
  ConvergenceReport rep;
  rep.label = to_string(cfg.method);
  rep.metric_names = metric_names(cfg.experiment);
  for (int i = cfg.effective_level_min(); i <= cfg.effective_level_max(); ++i) {
    rep.records.push_back(run_level(cfg, i));
    if (cb) cb(rep.records.back());
  }
  return rep;
}

// Eval count predicted for the next level from the last two (or ×4 from one).
inline double predicted_evals(const ConvergenceReport& rep) {
  std::vector<double> done;
  for (const auto& r : rep.records)
    if (r.ok) done.push_back(static_cast<double>(r.evals_total));
  if (done.empty()) return 0.0;
  if (done.size() == 1) return 4.0 * done.back();
  const double last = done.back(), prev = done[done.size() - 2];
  return prev > 0.0 ? last * (last / prev) : 4.0 * last;
}

struct Comparison {
  std::vector<Method> methods;
  std::vector<ConvergenceReport> reports;  // one per method
  std::vector<int> levels;
  std::vector<double> hs;
};

// One sweep per method; a method stops once its predicted eval count for the
// next level exceeds the budget.
inline Comparison compare(const std::vector<Method>& methods, const ExperimentConfig& base,
                          const std::function<void(Method, const LevelRecord&)>& cb = {}) {
  if (methods.empty()) throw Error(ErrorCode::invalid_argument, "methods: empty list");
  base.validate();
  Comparison out;
  out.methods = methods;
  for (int i = base.effective_level_min(); i <= base.effective_level_max(); ++i) {
    out.levels.push_back(i);
    out.hs.push_back(base.level_h(i));
  }
  for (Method m : methods) {
    ExperimentConfig cfg = base;
    cfg.method = m;
    ConvergenceReport rep;
    rep.label = to_string(m);
    rep.metric_names = metric_names(base.experiment);
    for (int i : out.levels) {
      if (!rep.records.empty() && predicted_evals(rep) > base.eval_budget) break;
      rep.records.push_back(run_level(cfg, i));
      if (cb) cb(m, rep.records.back());
    }
    out.reports.push_back(std::move(rep));
  }
  return out;
}

}  // namespace cutint
