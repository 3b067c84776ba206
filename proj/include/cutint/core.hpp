#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace cutint {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class ErrorCode {
  point_outside_bulk,
  unsupported_degree,
  no_sign_change,
  max_iterations,
  degenerate_cell,
  degenerate_cut,
  no_intersection,
  ray_root_not_found,
  rank_deficient,
  nonpositive_metric,
  singular_matrix,
  band_too_narrow,
  invalid_argument,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::point_outside_bulk: return "point-outside-bulk";
    case ErrorCode::unsupported_degree: return "unsupported-degree";
    case ErrorCode::no_sign_change: return "no-sign-change";
    case ErrorCode::max_iterations: return "max-iterations-exceeded";
    case ErrorCode::degenerate_cell: return "degenerate-cell";
    case ErrorCode::degenerate_cut: return "degenerate-cut";
    case ErrorCode::no_intersection: return "no-intersection-found";
    case ErrorCode::ray_root_not_found: return "ray-root-not-found";
    case ErrorCode::rank_deficient: return "rank-deficient";
    case ErrorCode::nonpositive_metric: return "nonpositive-metric";
    case ErrorCode::singular_matrix: return "singular-matrix";
    case ErrorCode::band_too_narrow: return "band-too-narrow";
    case ErrorCode::invalid_argument: return "invalid-argument";
  }
  return "unknown";
}

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Which side of a level value is "inside": {phi < level} or {phi > level}.
enum class Side { negative, positive };

struct LevelCut {
  double level = 0.0;
  Side inside = Side::negative;

  // Oriented distance: negative inside, positive outside.
  double oriented(double phi) const {
    return inside == Side::negative ? phi - level : level - phi;
  }
  double orientation() const { return inside == Side::negative ? 1.0 : -1.0; }
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Twice the signed area of (a, b, c); positive for counterclockwise order.
inline double signed_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross(b - a, c - a);
}

inline Vec2 perp_right(const Vec2& d) { return Vec2(d.y(), -d.x()); }

}  // namespace cutint
