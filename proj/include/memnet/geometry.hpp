#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace memnet {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Twice the signed area of (a, b, c); positive for counter-clockwise order.
inline double orient2d(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

struct BoundingBox {
  Point2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Point2 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void expand(Point2 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  bool contains(Point2 p, double tol = 0.0) const {
    return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol;
  }
  bool overlaps(const BoundingBox& o, double tol = 0.0) const {
    return lo.x <= o.hi.x + tol && o.lo.x <= hi.x + tol && lo.y <= o.hi.y + tol &&
           o.lo.y <= hi.y + tol;
  }
  double diameter() const { return distance(lo, hi); }
};

/// Closest point to p on the closed segment [a, b].
inline Point2 closest_on_segment(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
  return a + t * d;
}

/// Andrew's monotone chain; returns the hull counter-clockwise without
/// collinear points.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(),
            [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point2& p : pts) {
    while (k >= 2 && orient2d(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Point2 p = pts[i];
    while (k >= lower && orient2d(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

struct Disk {
  Point2 center;
  double radius = 1.0;
};

/// Convex polygon, vertices counter-clockwise.
struct ConvexPolygon {
  std::vector<Point2> vertices;
};

/// Closed convex region used to keep network points inside the domain.
class ConvexDomain {
 public:
  ConvexDomain() = default;
  explicit ConvexDomain(Disk d) : shape_(d) {
    if (!(d.radius > 0.0)) throw std::invalid_argument("disk radius must be positive");
  }
  explicit ConvexDomain(ConvexPolygon poly) {
    poly.vertices = convex_hull(std::move(poly.vertices));
    if (poly.vertices.size() < 3) throw std::invalid_argument("polygon domain needs 3 vertices");
    shape_ = std::move(poly);
  }

  bool contains(Point2 p, double tol = 0.0) const {
    if (const auto* d = std::get_if<Disk>(&shape_)) return distance(p, d->center) <= d->radius + tol;
    const auto& v = std::get<ConvexPolygon>(shape_).vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point2 a = v[i], b = v[(i + 1) % v.size()];
      if (orient2d(a, b, p) < -tol * distance(a, b)) return false;
    }
    return true;
  }

  Point2 closest_point(Point2 p) const {
    if (const auto* d = std::get_if<Disk>(&shape_)) {
      const Point2 r = p - d->center;
      const double n = norm(r);
      if (n <= d->radius) return p;
      return d->center + (d->radius / n) * r;
    }
    if (contains(p)) return p;
    const auto& v = std::get<ConvexPolygon>(shape_).vertices;
    Point2 best = v.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point2 q = closest_on_segment(p, v[i], v[(i + 1) % v.size()]);
      const double dq = distance(p, q);
      if (dq < best_d) {
        best_d = dq;
        best = q;
      }
    }
    return best;
  }

  BoundingBox bounding_box() const {
    BoundingBox box;
    if (const auto* d = std::get_if<Disk>(&shape_)) {
      box.expand({d->center.x - d->radius, d->center.y - d->radius});
      box.expand({d->center.x + d->radius, d->center.y + d->radius});
    } else {
      for (Point2 p : std::get<ConvexPolygon>(shape_).vertices) box.expand(p);
    }
    return box;
  }

  double diameter() const {
    if (const auto* d = std::get_if<Disk>(&shape_)) return 2.0 * d->radius;
    const auto& v = std::get<ConvexPolygon>(shape_).vertices;
    double best = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j) best = std::max(best, distance(v[i], v[j]));
    return best;
  }

  bool is_disk() const { return std::holds_alternative<Disk>(shape_); }

 private:
  std::variant<Disk, ConvexPolygon> shape_{Disk{}};
};

}  // namespace memnet
