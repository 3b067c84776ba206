#pragma once

// Quadrature on cut cells. A rule for Q is the fan rule on Q_K plus a signed
// rule for each curvilinear remainder, built by one of
//   LP  local parametrization over the chord (tensor Gauss along normals),
//   ST  sub-triangulation by a fan of rays from a basis point,
//   MC  Monte Carlo on a chord-aligned strip with a variance stopping rule,
// or, for MF, a moment-fitted rule for Q at fixed points of K.

#include "cut_geometry.hpp"
#include "moment_fitting.hpp"
#include "quadrules.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace cutint {

enum class Method { MC, ST, MF, LP };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::MC: return "MC";
    case Method::ST: return "ST";
    case Method::MF: return "MF";
    case Method::LP: return "LP";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::MC, Method::ST, Method::MF, Method::LP})
    if (s == to_string(m)) return m;
  throw Error(ErrorCode::invalid_argument, "unknown method '" + s + "' (expected MC, ST, MF or LP)");
}

struct CutRuleOptions {
  Method method = Method::LP;
  int m = 4;                  // target local order: error O(h^m) per cut cell
  double h = 0.0;             // mesh size for resolution and tolerances; 0 uses the cell diameter
  int polygon_exactness = 0;  // exactness of the fan rule on Q_K; 0 uses m
  int m_prime = 0;            // ST interface resolution h^m'; 0 uses m - 2
  int lp_points = 0;          // LP Gauss points per direction; 0 uses ceil((m-1)/2)
  std::uint64_t seed = 1;     // MC
  double mc_tolerance = 0.1;  // MC stops when the standard error is below this * h^m * max(1, max|f|)
  std::size_t mc_initial = 1024;
  std::size_t mc_max_samples = 100000000;
  // Integrand that steers the MC sample growth when a reusable rule is
  // built; unset means f = 1.
  std::function<double(const Vec2&)> mc_driver;
};

struct CutRule {
  std::vector<Vec2> nodes;
  std::vector<double> weights;
  Method method = Method::LP;
  int order = 0;
  std::size_t phi_evals = 0;
  int fallbacks = 0;            // LP components handed to ST
  double mc_stddev = 0.0;
  bool mc_converged = true;
  std::size_t mc_samples = 0;   // total strip samples drawn
  MomentFitDiagnostics fit;

  std::size_t evals() const { return nodes.size(); }

  void append(const QuadRule2D& r) {
    nodes.insert(nodes.end(), r.nodes.begin(), r.nodes.end());
    weights.insert(weights.end(), r.weights.begin(), r.weights.end());
  }
  void append(const Vec2& x, double w) {
    nodes.push_back(x);
    weights.push_back(w);
  }
  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
  double sum_weights() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

// Fan rule on Q_K.
inline QuadRule2D polygon_rule(const CutCellGeometry& geom, int exactness) {
  QuadRule2D ref = triangle_rule(std::clamp(exactness, 1, 10));
  QuadRule2D out;
  out.exactness = ref.exactness;
  for (const auto& t : geom.fan) {
    QuadRule2D r = map_to_cell(ref, t[0], t[1], t[2]);
    out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
    out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
  }
  return out;
}

template <class F>
double integrate_polygon(const CutCellGeometry& geom, F&& f, int exactness = 8) {
  return polygon_rule(geom, exactness).integrate(f);
}

namespace detail {

// Nearest root of psi on the ray x + t*dir, t in (0, tmax], found by scanning
// `scans` equal sub-intervals for the first sign change against psi(x).
template <class Psi>
bool nearest_root_on_ray(const Psi& psi, const Vec2& x, double fx, const Vec2& dir, double tmax, int scans, double& t) {
  if (!(tmax > 0.0)) return false;
  RootOptions opt;
  opt.tol = 1e-14;
  double t0 = 0.0, f0 = fx;
  for (int k = 1; k <= scans; ++k) {
    double t1 = tmax * k / scans;
    double f1 = psi.value(x + t1 * dir);
    if (f1 == 0.0) {
      t = t1;
      return true;
    }
    if ((f0 < 0.0) != (f1 < 0.0)) {
      t = solve_bracketed([&](double s) { return psi.value(x + s * dir); }, t0, t1, f0, f1, opt);
      return true;
    }
    t0 = t1;
    f0 = f1;
  }
  return false;
}

// Signed offset along the chord normal from a chord point to the interface;
// positive where the remainder lies outside Q_K.
template <class Psi>
bool normal_offset(const CutCellGeometry& g, const Psi& psi, const RemainderComponent& c, const Vec2& q, double& alpha) {
  double fq = psi.value(q);
  if (std::abs(fq) <= 1e-15 * g.h * psi.gradient(q).norm()) {
    alpha = 0.0;
    return true;
  }
  Vec2 dir = fq < 0.0 ? c.normal : Vec2(-c.normal);
  double t;
  if (!nearest_root_on_ray(psi, q, fq, dir, g.exit_distance(q, dir), 4, t)) return false;
  alpha = fq < 0.0 ? t : -t;
  return true;
}

inline void append_triangle(CutRule& rule, const QuadRule2D& ref, const Vec2& a, const Vec2& b, const Vec2& c,
                            double sign) {
  double jac = signed_area2(a, b, c);
  if (jac == 0.0) return;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const Vec2& r = ref.nodes[i];
    rule.append(a + r.x() * (b - a) + r.y() * (c - a), sign * jac * ref.weights[i]);
  }
}

template <class Psi>
void st_component(const CutCellGeometry& g, const Psi& psi, const RemainderComponent& c, double resolution,
                  int exactness, CutRule& rule) {
  const int n = std::max(2, static_cast<int>(std::ceil(c.length / resolution - 1e-12)));
  // Basis point: the vertex of Q_K farthest from the chord on the Q_K side.
  Vec2 b = 0.5 * (c.p1 + c.p2) - 0.5 * c.length * c.normal;
  double best = 1e-12 * g.h;
  for (const auto& v : g.polygon) {
    double dist = -(v - c.p1).dot(c.normal);
    if (dist > best) {
      best = dist;
      b = v;
    }
  }
  std::vector<Vec2> x(n + 1);
  x[0] = c.p1;
  x[n] = c.p2;
  for (int k = 1; k < n; ++k) {
    Vec2 ck = c.p1 + (double(k) / n) * (c.p2 - c.p1);
    double fc = psi.value(ck);
    Vec2 u = (ck - b).normalized();
    double t;
    if (std::abs(fc) <= 1e-15 * g.h * psi.gradient(ck).norm()) {
      x[k] = ck;
    } else if (fc < 0.0) {
      if (!nearest_root_on_ray(psi, ck, fc, u, g.exit_distance(ck, u), 4, t))
        throw Error(ErrorCode::ray_root_not_found, "forward ray on cell " + std::to_string(g.cell));
      x[k] = ck + t * u;
    } else {
      if (!nearest_root_on_ray(psi, ck, fc, Vec2(-u), (ck - b).norm(), 4, t))
        throw Error(ErrorCode::ray_root_not_found, "backward ray on cell " + std::to_string(g.cell));
      x[k] = ck - t * u;
    }
  }
  QuadRule2D ref = triangle_rule(std::clamp(exactness, 1, 10));
  for (int k = 0; k < n; ++k) {
    Vec2 ck = c.p1 + (double(k) / n) * (c.p2 - c.p1);
    Vec2 ck1 = c.p1 + (double(k + 1) / n) * (c.p2 - c.p1);
    // Strips beyond the chord come out clockwise and get positive weight.
    append_triangle(rule, ref, ck, ck1, x[k + 1], -1.0);
    append_triangle(rule, ref, ck, x[k + 1], x[k], -1.0);
  }
}

template <class Psi>
bool lp_component(const CutCellGeometry& g, const Psi& psi, const RemainderComponent& c, int P, CutRule& rule) {
  const QuadRule1D gauss = gauss_1d(P);
  std::vector<double> alpha(P);
  std::vector<Vec2> q(P);
  for (int i = 0; i < P; ++i) {
    q[i] = c.p1 + gauss.nodes[i] * (c.p2 - c.p1);
    if (!normal_offset(g, psi, c, q[i], alpha[i])) return false;
  }
  for (int i = 0; i < P; ++i) {
    if (alpha[i] == 0.0) continue;
    for (int j = 0; j < P; ++j)
      rule.append(q[i] + gauss.nodes[j] * alpha[i] * c.normal, c.length * alpha[i] * gauss.weights[i] * gauss.weights[j]);
  }
  return true;
}

inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <class Psi, class Driver>
void mc_component(const CutCellGeometry& g, const Psi& psi, const RemainderComponent& c, const CutRuleOptions& opt,
                  double h, std::mt19937_64& rng, Driver&& driver, CutRule& rule) {
  // Strip extent from sampled interface offsets, widened by 1.5.
  double amin = 0.0, amax = 0.0;
  for (int k = 0; k < 32; ++k) {
    double a;
    if (normal_offset(g, psi, c, c.p1 + ((k + 0.5) / 32.0) * (c.p2 - c.p1), a)) {
      amin = std::min(amin, a);
      amax = std::max(amax, a);
    }
  }
  const double lo = 1.5 * amin, hi = 1.5 * amax;
  if (!(hi > lo)) return;
  const double area = c.length * (hi - lo);
  const Vec2 e = (c.p2 - c.p1) / c.length;
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  struct Sample {
    Vec2 x;
    double sign;
  };
  std::vector<Sample> hits;
  double sum = 0.0, sum2 = 0.0, fmax = 1.0, se = 0.0;
  std::size_t drawn = 0, batch = std::max<std::size_t>(opt.mc_initial, 1);
  const double eps_base = opt.mc_tolerance * std::pow(h, opt.m);
  bool converged = false;
  while (true) {
    for (std::size_t s = 0; s < batch; ++s) {
      double u = uniform(), v = uniform();
      double t = lo + v * (hi - lo);
      Vec2 y = c.p1 + u * c.length * e + t * c.normal;
      if (!g.contains_in_cell(y)) continue;
      double sign = 0.0;
      bool in_q = psi.value(y) < 0.0;
      if (t > 0.0 && in_q) sign = 1.0;
      else if (t < 0.0 && !in_q && g.contains_in_polygon(y)) sign = -1.0;
      if (sign == 0.0) continue;
      double fy = driver(y);
      fmax = std::max(fmax, std::abs(fy));
      double gy = sign * fy;
      sum += gy;
      sum2 += gy * gy;
      hits.push_back({y, sign});
    }
    drawn += batch;
    double M = static_cast<double>(drawn);
    se = area * std::sqrt(std::abs(sum * sum / M - sum2)) / M;
    if (se <= eps_base * fmax) {
      converged = true;
      break;
    }
    if (drawn >= opt.mc_max_samples) break;
    batch = std::min(drawn, opt.mc_max_samples - drawn);
  }
  const double w = area / static_cast<double>(drawn);
  for (const auto& s : hits) rule.append(s.x, s.sign * w);
  rule.mc_stddev = std::sqrt(rule.mc_stddev * rule.mc_stddev + se * se);
  rule.mc_converged = rule.mc_converged && converged;
  rule.mc_samples += drawn;
}

}  // namespace detail

template <class LocalField>
CutRule build_cut_rule(const CutCellGeometry& geom, const LocalField& phi, const CutRuleOptions& opt) {
  if (opt.m < 1) throw Error(ErrorCode::invalid_argument, "target order must be positive");
  OrientedField<LocalField> psi{phi, geom.cut};
  const double h = opt.h > 0.0 ? opt.h : geom.h;
  CutRule rule;
  rule.method = opt.method;
  rule.order = opt.m;

  if (opt.method == Method::MF) {
    QuadRule2D fitted = moment_fit_area_weights(geom, phi, std::max(0, opt.m - 2), &rule.fit);
    rule.append(fitted);
    return rule;
  }

  rule.append(polygon_rule(geom, opt.polygon_exactness > 0 ? opt.polygon_exactness : opt.m));
  const int m_prime = opt.m_prime > 0 ? opt.m_prime : std::max(1, opt.m - 2);
  const double resolution = std::pow(h, m_prime);
  const int st_exactness = std::max(2, opt.m - 2);
  std::mt19937_64 rng(detail::mix_seed(opt.seed ^ detail::mix_seed(static_cast<std::uint64_t>(geom.cell + 1))));
  auto unit = [](const Vec2&) { return 1.0; };

  for (const auto& c : geom.components) {
    if (c.empty) continue;
    switch (opt.method) {
      case Method::LP: {
        const int P = opt.lp_points > 0 ? opt.lp_points : std::max(1, opt.m / 2);
        std::size_t before = rule.nodes.size();
        if (!detail::lp_component(geom, psi, c, P, rule)) {
          rule.nodes.resize(before);
          rule.weights.resize(before);
          ++rule.fallbacks;
          detail::st_component(geom, psi, c, resolution, st_exactness, rule);
        }
        break;
      }
      case Method::ST:
        detail::st_component(geom, psi, c, resolution, st_exactness, rule);
        break;
      case Method::MC:
        if (opt.mc_driver) detail::mc_component(geom, psi, c, opt, h, rng, opt.mc_driver, rule);
        else detail::mc_component(geom, psi, c, opt, h, rng, unit, rule);
        break;
      case Method::MF:
        break;
    }
  }
  rule.phi_evals = psi.evals;
  return rule;
}

// Remainder-only rules, one per method.
template <class LocalField>
CutRule local_param_quadrature(const CutCellGeometry& geom, const LocalField& phi, int P, double h = 0.0, int m = 4) {
  OrientedField<LocalField> psi{phi, geom.cut};
  CutRule rule;
  rule.method = Method::LP;
  rule.order = m;
  for (const auto& c : geom.components) {
    if (c.empty) continue;
    std::size_t before = rule.nodes.size();
    if (!detail::lp_component(geom, psi, c, P, rule)) {
      rule.nodes.resize(before);
      rule.weights.resize(before);
      ++rule.fallbacks;
      detail::st_component(geom, psi, c, std::pow(h > 0.0 ? h : geom.h, std::max(1, m - 2)), std::max(2, m - 2), rule);
    }
  }
  rule.phi_evals = psi.evals;
  return rule;
}

template <class LocalField>
CutRule subtriangulate_remainder(const CutCellGeometry& geom, const LocalField& phi, int m, int m_prime, double h = 0.0) {
  OrientedField<LocalField> psi{phi, geom.cut};
  CutRule rule;
  rule.method = Method::ST;
  rule.order = m;
  const double resolution = std::pow(h > 0.0 ? h : geom.h, m_prime);
  for (const auto& c : geom.components)
    if (!c.empty) detail::st_component(geom, psi, c, resolution, std::max(2, m - 2), rule);
  rule.phi_evals = psi.evals;
  return rule;
}

template <class LocalField, class F>
CutRule mc_remainder(const CutCellGeometry& geom, const LocalField& phi, F&& f, int m, std::uint64_t seed,
                     double h = 0.0) {
  OrientedField<LocalField> psi{phi, geom.cut};
  CutRuleOptions opt;
  opt.method = Method::MC;
  opt.m = m;
  opt.seed = seed;
  CutRule rule;
  rule.method = Method::MC;
  rule.order = m;
  std::mt19937_64 rng(detail::mix_seed(seed ^ detail::mix_seed(static_cast<std::uint64_t>(geom.cell + 1))));
  for (const auto& c : geom.components)
    if (!c.empty) detail::mc_component(geom, psi, c, opt, h > 0.0 ? h : geom.h, rng, f, rule);
  rule.phi_evals = psi.evals;
  return rule;
}

struct CutIntegral {
  double value = 0.0;
  std::size_t evals = 0;
  double stddev = 0.0;
  bool converged = true;
  int fallbacks = 0;
};

// Integral of f over the cut cell; MC steers its sample growth by f itself
// unless a driver is set in the options.
template <class LocalField, class F>
CutIntegral integrate_cut_cell(const CutCellGeometry& geom, const LocalField& phi, F&& f, const CutRuleOptions& opt) {
  CutRule rule;
  if (opt.method == Method::MC && !opt.mc_driver) {
    CutRuleOptions o = opt;
    o.mc_driver = [&f](const Vec2& x) { return static_cast<double>(f(x)); };
    rule = build_cut_rule(geom, phi, o);
  } else {
    rule = build_cut_rule(geom, phi, opt);
  }
  return {rule.integrate(f), rule.evals(), rule.mc_stddev, rule.mc_converged, rule.fallbacks};
}

}  // namespace cutint
