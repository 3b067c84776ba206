#pragma once

// Error norms on Ω_h and on a circle, convergence-rate fitting, and CSV/SVG
// reports of mesh sweeps.

#include "fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cutint {

struct ErrorNorms {
  double L2 = 0.0;
  double H1 = 0.0;  // full norm: value plus gradient
};

// ‖u − u_h‖ over Ω_h with the same per-cell rules as the assembly.
template <ScalarField Field, class U, class GradU>
ErrorNorms bulk_errors(const FeFunction& uh, U&& u, GradU&& grad_u, const Field& field, const CellClassification& cls,
                       DomainRuleOptions opt) {
  const FeSpace& space = *uh.space;
  const Mesh& mesh = *space.mesh;
  const int r = space.degree();
  if (opt.interior_exactness <= 0) opt.interior_exactness = 2 * r + 2;
  if (opt.cut.polygon_exactness <= 0) opt.cut.polygon_exactness = 2 * r + 2;
  if (opt.cut.lp_points <= 0) opt.cut.lp_points = fe_lp_points(opt.cut.m, r);
  if (opt.cut.method == Method::MC && !opt.cut.mc_driver) opt.cut.mc_driver = [](const Vec2&) { return 1.0; };
  double l2 = 0.0, g2 = 0.0;
  const int n = space.dofs->dofs_per_cell();
  for (std::size_t cc = 0; cc < mesh.num_cells(); ++cc) {
    const int c = static_cast<int>(cc);
    if (cls.tags[c] == CellTag::exterior) continue;
    CellRule rule = domain_cell_rule(mesh, field, cls, c, opt);
    const AffineMap map = cell_map(mesh, c);
    const int* d = space.dofs->cell_dofs(c);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const Vec2& x = rule.nodes[k];
      BasisAt b = eval_basis(space, map, x);
      double v = 0.0;
      Vec2 g = Vec2::Zero();
      for (int i = 0; i < n; ++i) {
        v += uh.coefficients[d[i]] * b.values[i];
        g += uh.coefficients[d[i]] * b.grads[i];
      }
      const double e = u(x) - v;
      const Vec2 ge = Vec2(grad_u(x)) - g;
      l2 += rule.weights[k] * e * e;
      g2 += rule.weights[k] * ge.squaredNorm();
    }
  }
  // Signed rules (MF, band differences) can produce a negative sum; such a
  // norm is reported as NaN rather than clipped.
  auto root = [](double v) { return v >= 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN(); };
  return {root(l2), root(l2 + g2)};
}

struct SurfaceErrorOptions {
  int gauss_points = 8;       // per sub-arc
  int min_samples = 1024;     // total samples at least max(min_samples, 16/h)
};

// Parameter angles in [0, 2π) where the circle crosses the mesh lines.
inline std::vector<double> circle_mesh_crossings(const Mesh& mesh, const Vec2& center, double R) {
  std::vector<double> t;
  auto add_line = [&](const Vec2& p, const Vec2& dir) {
    // |p + s dir − center| = R
    Vec2 w = p - center;
    double a = dir.squaredNorm(), b = 2.0 * w.dot(dir), c = w.squaredNorm() - R * R;
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return;
    double sq = std::sqrt(disc);
    for (double s : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
      Vec2 y = w + s * dir;
      double th = std::atan2(y.y(), y.x());
      if (th < 0.0) th += 2.0 * std::numbers::pi;
      t.push_back(th);
    }
  };
  const Rect& B = mesh.bulk;
  for (int i = 0; i <= mesh.nx; ++i) add_line(Vec2(B.xmin + i * mesh.hx, 0.0), Vec2(0.0, 1.0));
  for (int j = 0; j <= mesh.ny; ++j) add_line(Vec2(0.0, B.ymin + j * mesh.hy), Vec2(1.0, 0.0));
  const Vec2 diag = mesh.diagonal == Diagonal::main ? Vec2(mesh.hx, mesh.hy) : Vec2(-mesh.hx, mesh.hy);
  for (int k = -mesh.ny; k <= mesh.nx + mesh.ny; ++k) {
    add_line(Vec2(B.xmin + k * mesh.hx, B.ymin), diag);
  }
  t.push_back(0.0);
  std::sort(t.begin(), t.end());
  std::vector<double> out;
  for (double v : t)
    if (out.empty() || v - out.back() > 1e-13) out.push_back(v);
  return out;
}

// Errors on the circle |x − center| = R, using the exact parametrization.
// u(θ) and dudtheta(θ) give the exact surface function and its θ-derivative.
template <class U, class DU>
ErrorNorms surface_errors(const FeFunction& uh, U&& u, DU&& dudtheta, const CellClassification& cls, double R,
                          const Vec2& center = Vec2::Zero(), const SurfaceErrorOptions& opt = {}) {
  const Mesh& mesh = *uh.space->mesh;
  std::vector<double> cuts = circle_mesh_crossings(mesh, center, R);
  cuts.push_back(2.0 * std::numbers::pi);
  const int target = std::max(opt.min_samples, static_cast<int>(std::ceil(16.0 / mesh.h)));
  const int arcs = static_cast<int>(cuts.size()) - 1;
  const int split = std::max(1, (target + arcs * opt.gauss_points - 1) / (arcs * opt.gauss_points));
  const QuadRule1D gauss = gauss_1d(opt.gauss_points);
  double l2 = 0.0, g2 = 0.0;
  for (int a = 0; a < arcs; ++a) {
    for (int s = 0; s < split; ++s) {
      const double t0 = cuts[a] + (cuts[a + 1] - cuts[a]) * s / split;
      const double t1 = cuts[a] + (cuts[a + 1] - cuts[a]) * (s + 1) / split;
      if (!(t1 > t0)) continue;
      const double tm = 0.5 * (t0 + t1);
      const int c = mesh.locate(center + R * Vec2(std::cos(tm), std::sin(tm)));
      if (cls.tags[c] == CellTag::exterior)
        throw Error(ErrorCode::band_too_narrow, "surface sample in exterior cell " + std::to_string(c));
      for (std::size_t k = 0; k < gauss.nodes.size(); ++k) {
        const double th = t0 + gauss.nodes[k] * (t1 - t0);
        const Vec2 n(std::cos(th), std::sin(th));
        const Vec2 tan(-n.y(), n.x());
        const Vec2 x = center + R * n;
        const double w = R * (t1 - t0) * gauss.weights[k];
        const double e = u(th) - uh.value(c, x);
        const Vec2 gh = uh.gradient(c, x);
        const Vec2 ge = (dudtheta(th) / R) * tan - (gh - n * n.dot(gh));
        l2 += w * e * e;
        g2 += w * ge.squaredNorm();
      }
    }
  }
  return {std::sqrt(l2), std::sqrt(l2 + g2)};
}

struct RateFit {
  std::vector<std::optional<double>> step_rates;  // between consecutive records
  std::optional<double> slope;                    // least squares of log e vs log h
  int points = 0;
  std::vector<std::string> notices;
};

// Per-step rates log(e_i/e_{i+1}) / log(h_i/h_{i+1}) and the least-squares
// slope; the coarsest record is left out of the slope when three or more
// usable records remain.
inline RateFit fit_rates(const std::vector<double>& h, const std::vector<double>& e, bool exclude_coarsest = true) {
  if (h.size() != e.size()) throw Error(ErrorCode::invalid_argument, "fit_rates: size mismatch");
  RateFit fit;
  auto usable = [&](std::size_t i) { return std::isfinite(e[i]) && e[i] > 0.0 && h[i] > 0.0; };
  for (std::size_t i = 0; i < e.size(); ++i)
    if (!usable(i)) fit.notices.push_back("record " + std::to_string(i) + " excluded (nonpositive or missing error)");
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    if (usable(i) && usable(i + 1) && h[i] != h[i + 1])
      fit.step_rates.push_back(std::log(e[i] / e[i + 1]) / std::log(h[i] / h[i + 1]));
    else
      fit.step_rates.push_back(std::nullopt);
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (usable(i)) idx.push_back(i);
  if (exclude_coarsest && idx.size() >= 3) {
    std::size_t coarsest = idx[0];
    for (auto i : idx)
      if (h[i] > h[coarsest]) coarsest = i;
    idx.erase(std::find(idx.begin(), idx.end(), coarsest));
  }
  fit.points = static_cast<int>(idx.size());
  if (idx.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (auto i : idx) {
      mx += std::log(h[i]);
      my += std::log(e[i]);
    }
    mx /= idx.size();
    my /= idx.size();
    double sxy = 0.0, sxx = 0.0;
    for (auto i : idx) {
      double dx = std::log(h[i]) - mx;
      sxy += dx * (std::log(e[i]) - my);
      sxx += dx * dx;
    }
    if (sxx > 0.0) fit.slope = sxy / sxx;
  }
  return fit;
}

struct LevelRecord {
  int level = 0;
  double h = 0.0;
  std::vector<double> metrics;  // NaN when unavailable
  std::size_t evals_total = 0;
  std::size_t evals_cut = 0;
  double seconds = 0.0;
  bool ok = true;
  std::string note;  // failure message or numerical warnings
};

struct ConvergenceReport {
  std::string label;
  std::vector<std::string> metric_names;
  std::vector<LevelRecord> records;  // decreasing h

  std::vector<double> hs() const {
    std::vector<double> out;
    for (const auto& r : records) out.push_back(r.h);
    return out;
  }
  std::vector<double> metric(std::size_t k) const {
    std::vector<double> out;
    for (const auto& r : records)
      out.push_back(r.ok && k < r.metrics.size() ? r.metrics[k] : std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  RateFit fit(std::size_t k) const { return fit_rates(hs(), metric(k)); }
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}
inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt("%.4f", *v) : std::string(); }
inline std::string fmt_metric(double v) { return std::isfinite(v) ? fmt("%.10e", v) : std::string(); }

}  // namespace detail

// Columns h,error_or_L2,H1,rate_L2,rate_H1,evals_total,evals_cut,seconds.
inline void write_csv(std::ostream& os, const ConvergenceReport& rep, bool with_timing = true) {
  os << "h,error_or_L2,H1,rate_L2,rate_H1,evals_total,evals_cut,seconds\n";
  const std::size_t nm = rep.metric_names.size();
  RateFit f0 = rep.fit(0);
  std::optional<RateFit> f1;
  if (nm > 1) f1 = rep.fit(1);
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const auto& r = rep.records[i];
    os << detail::fmt("%.10g", r.h) << ',';
    os << detail::fmt_metric(rep.metric(0)[i]) << ',';
    os << (nm > 1 ? detail::fmt_metric(rep.metric(1)[i]) : "") << ',';
    os << (i > 0 ? detail::fmt_opt(f0.step_rates[i - 1]) : "") << ',';
    os << (i > 0 && f1 ? detail::fmt_opt(f1->step_rates[i - 1]) : "") << ',';
    if (r.ok) os << r.evals_total << ',' << r.evals_cut << ',';
    else os << ",,";
    os << (with_timing ? detail::fmt("%.3f", r.seconds) : "0") << '\n';
  }
}

struct SvgSeries {
  std::string name;
  std::vector<double> h, e;
};

// Log-log plot of error series with dashed reference-slope guides.
inline void write_svg(std::ostream& os, const std::vector<SvgSeries>& series, const std::vector<int>& guide_slopes,
                      const std::string& title) {
  const double W = 640, H = 480, L = 70, R = 150, T = 40, B = 50;
  double hmin = 1e300, hmax = -1e300, emin = 1e300, emax = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.h.size(); ++i)
      if (std::isfinite(s.e[i]) && s.e[i] > 0.0) {
        hmin = std::min(hmin, s.h[i]);
        hmax = std::max(hmax, s.h[i]);
        emin = std::min(emin, s.e[i]);
        emax = std::max(emax, s.e[i]);
      }
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  if (!(hmax > hmin) || !(emax > 0.0)) {
    os << "</svg>\n";
    return;
  }
  const double lx0 = std::log10(hmin) - 0.1, lx1 = std::log10(hmax) + 0.1;
  const double ly0 = std::floor(std::log10(emin)), ly1 = std::ceil(std::log10(emax));
  auto px = [&](double h) { return L + (std::log10(h) - lx0) / (lx1 - lx0) * (W - L - R); };
  auto py = [&](double e) { return T + (ly1 - std::log10(e)) / std::max(ly1 - ly0, 1.0) * (H - T - B); };
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = static_cast<int>(ly0); k <= static_cast<int>(ly1); ++k)
    os << "<text x=\"" << L - 8 << "\" y=\"" << detail::fmt("%.1f", py(std::pow(10.0, k)) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">1e" << k << "</text>\n";
  for (const auto& s : series)
    for (double h : s.h)
      os << "<text x=\"" << detail::fmt("%.1f", px(h)) << "\" y=\"" << H - B + 14
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">" << detail::fmt("%.4g", h)
         << "</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  int ci = 0;
  for (const auto& s : series) {
    const char* col = colors[ci++ % 6];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.h.size(); ++i)
      if (std::isfinite(s.e[i]) && s.e[i] > 0.0)
        os << detail::fmt("%.1f", px(s.h[i])) << ',' << detail::fmt("%.1f", py(s.e[i])) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * ci << "\" fill=\"" << col
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.name << "</text>\n";
  }
  // Guides anchored at the coarsest point of the first series.
  if (!series.empty() && !series[0].h.empty() && std::isfinite(series[0].e[0]) && series[0].e[0] > 0.0) {
    const double h0 = series[0].h[0], e0 = series[0].e[0];
    for (int p : guide_slopes) {
      double h1 = hmin;
      double e1 = e0 * std::pow(h1 / h0, p);
      const double floor = std::pow(10.0, ly0);
      if (e1 < floor) {
        h1 = h0 * std::pow(floor / e0, 1.0 / p);
        e1 = floor;
      }
      os << "<line x1=\"" << detail::fmt("%.1f", px(h0)) << "\" y1=\"" << detail::fmt("%.1f", py(e0)) << "\" x2=\""
         << detail::fmt("%.1f", px(h1)) << "\" y2=\"" << detail::fmt("%.1f", py(e1))
         << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
      os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (++ci) << "\" fill=\"gray\""
         << " font-family=\"sans-serif\" font-size=\"12\">slope " << p << "</text>\n";
    }
  }
  os << "</svg>\n";
}

}  // namespace cutint
