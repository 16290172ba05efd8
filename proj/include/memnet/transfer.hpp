#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "memnet/fem.hpp"
#include "memnet/network.hpp"
#include "memnet/spatial_index.hpp"

namespace memnet {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter interval of segment a + t (b - a) inside a triangle. `edge` is
/// the local edge the piece lies on, or -1 for a piece through the interior.
struct ClipResult {
  double t0 = 0.0;
  double t1 = 0.0;
  int edge = -1;

  bool empty() const { return !(t1 > t0); }
};

/// Closed segment [a, b] clipped against a closed triangle. A segment lying
/// along an edge (both endpoints within `tol` of the edge line) is reported
/// as the overlap with that edge; otherwise half-planes are clipped exactly.
inline ClipResult clip_segment_triangle(Point2 a, Point2 b, const std::array<Point2, 3>& tri,
                                        double tol) {
  const double sign = orient2d(tri[0], tri[1], tri[2]) >= 0.0 ? 1.0 : -1.0;
  const Point2 d = b - a;
  const double dd = dot(d, d);
  if (dd == 0.0) return {};
  for (int i = 0; i < 3; ++i) {
    const Point2 p = tri[i], q = tri[(i + 1) % 3];
    const Point2 e = q - p;
    const double elen = norm(e);
    if (std::abs(cross(e, a - p)) <= tol * elen && std::abs(cross(e, b - p)) <= tol * elen) {
      // Project the edge endpoints onto the segment's parameter line.
      double s0 = dot(p - a, d) / dd, s1 = dot(q - a, d) / dd;
      if (s0 > s1) std::swap(s0, s1);
      ClipResult r{std::max(0.0, s0), std::min(1.0, s1), i};
      if (r.empty()) return {};
      return r;
    }
  }
  double t0 = 0.0, t1 = 1.0;
  for (int i = 0; i < 3; ++i) {
    const Point2 p = tri[i], q = tri[(i + 1) % 3];
    const Point2 inward{-(q - p).y * sign, (q - p).x * sign};
    const double num = dot(inward, a - p);  // >= 0 inside
    const double den = dot(inward, d);
    if (den == 0.0) {
      if (num < 0.0) return {};
      continue;
    }
    const double t = -num / den;
    if (den > 0.0)
      t0 = std::max(t0, t);
    else
      t1 = std::min(t1, t);
    if (t0 >= t1) return {};
  }
  return {t0, t1, -1};
}

/// Length of [a, b] inside the closed triangle.
inline double segment_triangle_length(Point2 a, Point2 b, const std::array<Point2, 3>& tri,
                                      double tol = -1.0) {
  if (tol < 0.0) {
    BoundingBox box;
    for (Point2 p : tri) box.expand(p);
    tol = 1e-9 * box.diameter();
  }
  const ClipResult r = clip_segment_triangle(a, b, tri, tol);
  return r.empty() ? 0.0 : (r.t1 - r.t0) * distance(a, b);
}

/// One arc restricted to one triangle.
struct ArcPiece {
  std::size_t arc = 0;
  std::int32_t triangle = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  double length = 0.0;
};

/// Decomposes every arc into its pieces inside mesh triangles. A piece lying
/// on an edge shared by two triangles is attributed to the lower index only.
inline std::vector<ArcPiece> arc_pieces(const SpatialIndex& index, const std::vector<Segment>& segs) {
  const TriangleMesh& mesh = index.mesh();
  const double tol = index.tolerance();
  std::vector<ArcPiece> pieces;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const Segment& seg = segs[s];
    const double len = seg.length();
    if (len == 0.0) continue;
    for (Point2 end : {seg.a, seg.b})
      if (!index.locate(end))
        throw GeometryError("arc " + std::to_string(s) + " endpoint (" + std::to_string(end.x) +
                            ", " + std::to_string(end.y) + ") lies outside the mesh");
    for (auto t : index.segment_candidates(seg.a, seg.b)) {
      const ClipResult r = clip_segment_triangle(seg.a, seg.b, mesh.corners(t), tol);
      if (r.empty()) continue;
      if (r.edge >= 0) {
        const auto other = index.neighbor(t, r.edge);
        if (other >= 0 && other < t) continue;
      }
      pieces.push_back({s, t, r.t0, r.t1, (r.t1 - r.t0) * len});
    }
  }
  return pieces;
}

/// Per-triangle theta-weighted network length.
inline Vector accumulate_vlengths(const SpatialIndex& index, const WeightedNetwork& net) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(index.mesh().num_triangles()));
  const auto segs = net.segments();
  for (const ArcPiece& p : arc_pieces(index, segs)) v[p.triangle] += segs[p.arc].theta * p.length;
  return v;
}

struct ConstantLoad {
  double value = 1.0;
};
struct NodalLoad {
  std::vector<double> values;  // one sample per mesh vertex
};
struct PointLoad {
  Point2 at;
  double weight = 1.0;
};
struct DiracLoad {
  std::vector<PointLoad> points;
};

using LoadSpec = std::variant<ConstantLoad, NodalLoad, DiracLoad>;

/// Barycentric coordinates of p in triangle t.
inline std::array<double, 3> barycentric(const TriangleMesh& mesh, std::size_t t, Point2 p) {
  const auto c = mesh.corners(t);
  const double area = orient2d(c[0], c[1], c[2]);
  return {orient2d(p, c[1], c[2]) / area, orient2d(c[0], p, c[2]) / area,
          orient2d(c[0], c[1], p) / area};
}

/// Right-hand side b. Smooth loads use b = M F with F the nodal samples; a
/// point load spreads its weight over the containing triangle's vertices by
/// barycentric coordinates, so b.U equals the weight times the P1 value.
inline Vector assemble_load(const TriangleMesh& mesh, const FemSystem& fem, const SpatialIndex& index,
                            const LoadSpec& load) {
  const auto np = static_cast<Eigen::Index>(mesh.num_vertices());
  if (const auto* c = std::get_if<ConstantLoad>(&load)) {
    if (!std::isfinite(c->value)) throw std::invalid_argument("load value must be finite");
    return fem.M * Vector::Constant(np, c->value);
  }
  if (const auto* n = std::get_if<NodalLoad>(&load)) {
    if (static_cast<Eigen::Index>(n->values.size()) != np)
      throw std::invalid_argument("nodal load needs one sample per vertex");
    return fem.M * Eigen::Map<const Vector>(n->values.data(), np);
  }
  Vector b = Vector::Zero(np);
  for (const PointLoad& pl : std::get<DiracLoad>(load).points) {
    if (!std::isfinite(pl.weight) || !is_finite(pl.at))
      throw std::invalid_argument("point load must be finite");
    const auto t = index.locate(pl.at);
    if (!t)
      throw GeometryError("point load at (" + std::to_string(pl.at.x) + ", " +
                          std::to_string(pl.at.y) + ") lies outside the mesh");
    const auto lam = barycentric(mesh, *t, pl.at);
    const Triangle& tri = mesh.triangles[*t];
    for (int i = 0; i < 3; ++i) b[tri[i]] += pl.weight * lam[i];
  }
  return b;
}

inline Vector assemble_load(const TriangleMesh& mesh, const FemSystem& fem, const LoadSpec& load) {
  return assemble_load(mesh, fem, SpatialIndex(mesh), load);
}

}  // namespace memnet
