#pragma once

// Planar helpers for verification and plotting: polygon vertices of bounded
// 2-D H-polytopes and point/segment distances to convex polygons.

#include "neuralparc/hpolytope.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace neuralparc {

using Point2 = Eigen::Vector2d;

/// Counter-clockwise hull (Andrew's monotone chain), collinear points dropped.
inline std::vector<Point2> convex_hull_2d(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) { return (a - b).norm() < 1e-12; }),
            pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
    return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
  };
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 1e-14) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lo = k + 1; i-- > 0;) {
    while (k >= lo && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-14) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Vertices of a bounded planar H-polytope from pairwise row intersections.
inline std::vector<Point2> polygon_vertices(const HPolytope& P, double tol = 1e-9) {
  require(P.dim() == 2, "polygon_vertices: planar polytope expected");
  const auto& A = P.A();
  const auto& b = P.b();
  std::vector<Point2> pts;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = i + 1; j < A.rows(); ++j) {
      Eigen::Matrix2d M;
      M << A.row(i), A.row(j);
      const double det = M.determinant();
      if (std::abs(det) < 1e-12 * (A.row(i).norm() * A.row(j).norm())) continue;
      const Point2 x = M.partialPivLu().solve(Eigen::Vector2d(b(i), b(j)));
      bool ok = true;
      for (Eigen::Index r = 0; r < A.rows() && ok; ++r) ok = A.row(r).dot(x) <= b(r) + tol * (1.0 + std::abs(b(r)));
      if (ok) pts.push_back(x);
    }
  return convex_hull_2d(std::move(pts));
}

/// Outline of the projection of P onto its first two coordinates, from
/// support points in `directions` evenly spaced directions.
inline std::vector<Point2> projected_outline(const HPolytope& P, int directions = 64) {
  require(P.dim() >= 2, "projected_outline: need at least two coordinates");
  if (P.dim() == 2) return polygon_vertices(P);
  std::vector<Point2> pts;
  for (int i = 0; i < directions; ++i) {
    const double a = 2.0 * M_PI * i / directions;
    Vector c = Vector::Zero(P.dim());
    c(0) = std::cos(a);
    c(1) = std::sin(a);
    const auto out = solve({c, P.A(), P.b(), std::nullopt, std::nullopt});
    if (out.optimal()) pts.emplace_back(out.witness(0), out.witness(1));
  }
  return convex_hull_2d(std::move(pts));
}

inline double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

inline bool segments_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  auto orient = [](const Point2& o, const Point2& p, const Point2& q) {
    return (p - o).x() * (q - o).y() - (p - o).y() * (q - o).x();
  };
  const double d1 = orient(c, d, a), d2 = orient(c, d, b), d3 = orient(a, b, c), d4 = orient(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

/// Counter-clockwise convex polygon membership (boundary included).
inline bool polygon_contains(const std::vector<Point2>& poly, const Point2& p) {
  if (poly.size() < 3) return false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    if ((b - a).x() * (p - a).y() - (b - a).y() * (p - a).x() < 0.0) return false;
  }
  return true;
}

/// Euclidean distance between segment [a, b] and a convex polygon; zero when
/// they touch or overlap.
inline double segment_polygon_distance(const Point2& a, const Point2& b, const std::vector<Point2>& poly) {
  if (poly.empty()) return std::numeric_limits<double>::infinity();
  if (poly.size() == 1) return point_segment_distance(poly[0], a, b);
  if (polygon_contains(poly, a) || polygon_contains(poly, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& c = poly[i];
    const Point2& d = poly[(i + 1) % poly.size()];
    if (segments_intersect(a, b, c, d)) return 0.0;
    best = std::min({best, point_segment_distance(c, a, b), point_segment_distance(d, a, b),
                     point_segment_distance(a, c, d), point_segment_distance(b, c, d)});
  }
  return best;
}

/// Parameter interval of {a + s (b - a) : s ∈ [0, 1]} inside {A x <= b}
/// (Cyrus-Beck clipping); nullopt when the segment misses the set.
inline std::optional<std::pair<double, double>> clip_segment(const HPolytope& P, const Vector& a, const Vector& b,
                                                             double tol = 0.0) {
  double lo = 0.0, hi = 1.0;
  const Vector dir = b - a;
  for (Eigen::Index i = 0; i < P.A().rows(); ++i) {
    const double num = P.b()(i) + tol * P.A().row(i).norm() - P.A().row(i).dot(a);
    const double den = P.A().row(i).dot(dir);
    if (std::abs(den) < 1e-15) {
      if (num < 0.0) return std::nullopt;
      continue;
    }
    const double s = num / den;
    if (den > 0.0) hi = std::min(hi, s);
    else lo = std::max(lo, s);
    if (lo > hi) return std::nullopt;
  }
  return std::make_pair(lo, hi);
}

}  // namespace neuralparc
