#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "memnet/mesh.hpp"

namespace memnet {

/// Parameter range [t0, t1] of segment a + t (b - a) inside the box, if any.
inline std::optional<std::pair<double, double>> clip_segment_to_box(Point2 a, Point2 b,
                                                                     const BoundingBox& box,
                                                                     double tol = 0.0) {
  double t0 = 0.0, t1 = 1.0;
  const Point2 d = b - a;
  const double lo[2] = {box.lo.x - tol, box.lo.y - tol};
  const double hi[2] = {box.hi.x + tol, box.hi.y + tol};
  const double p[2] = {a.x, a.y};
  const double dir[2] = {d.x, d.y};
  for (int k = 0; k < 2; ++k) {
    if (dir[k] == 0.0) {
      if (p[k] < lo[k] || p[k] > hi[k]) return std::nullopt;
      continue;
    }
    double ta = (lo[k] - p[k]) / dir[k];
    double tb = (hi[k] - p[k]) / dir[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

/// Point location over a fixed mesh: a quadtree on triangle bounding boxes,
/// a hash grid on vertices, and triangle adjacency across edges.
class SpatialIndex {
 public:
  explicit SpatialIndex(const TriangleMesh& mesh, std::size_t leaf_capacity = 8,
                        int max_depth = 24)
      : mesh_(&mesh), leaf_capacity_(leaf_capacity), max_depth_(max_depth) {
    const BoundingBox box = mesh.bounding_box();
    diameter_ = box.diameter();
    tol_ = 1e-9 * diameter_;
    boxes_.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
      for (Point2 p : mesh.corners(t)) boxes_[t].expand(p);
    std::vector<std::int32_t> all(mesh.num_triangles());
    for (std::size_t t = 0; t < all.size(); ++t) all[t] = static_cast<std::int32_t>(t);
    nodes_.push_back(Node{box, {}, {-1, -1, -1, -1}});
    build(0, std::move(all), 0);
    build_vertex_grid();
    build_neighbors();
  }

  const TriangleMesh& mesh() const { return *mesh_; }
  double tolerance() const { return tol_; }
  double diameter() const { return diameter_; }

  /// True when p lies in the closed triangle t (up to the geometric tolerance).
  bool triangle_contains(std::size_t t, Point2 p) const {
    const auto c = mesh_->corners(t);
    for (int i = 0; i < 3; ++i) {
      const Point2 a = c[i], b = c[(i + 1) % 3];
      if (orient2d(a, b, p) < -tol_ * distance(a, b)) return false;
    }
    return true;
  }

  /// Lowest-index triangle containing p, or nullopt when p is outside.
  std::optional<std::int32_t> locate(Point2 p) const {
    if (!nodes_[0].box.contains(p, tol_)) return std::nullopt;
    std::optional<std::int32_t> best;
    visit_point(0, p, best);
    return best;
  }

  /// Triangles whose bounding boxes meet the segment [a, b], ascending.
  std::vector<std::int32_t> segment_candidates(Point2 a, Point2 b) const {
    std::vector<std::int32_t> out;
    visit_segment(0, a, b, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::int32_t nearest_vertex(Point2 p) const {
    const auto [ci, cj] = cell_of(p);
    std::int32_t best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int ring = 0;; ++ring) {
      for (int i = ci - ring; i <= ci + ring; ++i)
        for (int j = cj - ring; j <= cj + ring; ++j) {
          if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
          if (i < 0 || j < 0 || i >= grid_n_ || j >= grid_n_) continue;
          for (auto v : grid_[i * grid_n_ + j]) {
            const double d = distance(p, mesh_->vertices[v]);
            if (d < best_d || (d == best_d && v < best)) {
              best_d = d;
              best = v;
            }
          }
        }
      // Any vertex outside this ring is farther than ring * cell_ from p.
      if (best >= 0 && best_d <= ring * cell_) return best;
      if (ring > 2 * grid_n_) return best;
    }
  }

  /// Triangle sharing local edge (i, i+1) of triangle t, or -1 on the boundary.
  std::int32_t neighbor(std::size_t t, int local_edge) const { return neighbors_[t][local_edge]; }

 private:
  struct Node {
    BoundingBox box;
    std::vector<std::int32_t> items;
    std::array<std::int32_t, 4> child;
    bool leaf() const { return child[0] < 0; }
  };

  void build(std::size_t node, std::vector<std::int32_t> items, int depth) {
    if (items.size() <= leaf_capacity_ || depth >= max_depth_) {
      nodes_[node].items = std::move(items);
      return;
    }
    const BoundingBox box = nodes_[node].box;
    const Point2 mid = 0.5 * (box.lo + box.hi);
    std::array<BoundingBox, 4> quads;
    quads[0] = {box.lo, mid};
    quads[1] = {{mid.x, box.lo.y}, {box.hi.x, mid.y}};
    quads[2] = {{box.lo.x, mid.y}, {mid.x, box.hi.y}};
    quads[3] = {mid, box.hi};
    std::array<std::vector<std::int32_t>, 4> parts;
    for (auto t : items)
      for (int q = 0; q < 4; ++q)
        if (quads[q].overlaps(boxes_[t], tol_)) parts[q].push_back(t);
    // Stop splitting when children would not shrink the candidate lists.
    std::size_t largest = 0;
    for (const auto& p : parts) largest = std::max(largest, p.size());
    if (largest == items.size()) {
      nodes_[node].items = std::move(items);
      return;
    }
    for (int q = 0; q < 4; ++q) {
      nodes_[node].child[q] = static_cast<std::int32_t>(nodes_.size());
      nodes_.push_back(Node{quads[q], {}, {-1, -1, -1, -1}});
    }
    for (int q = 0; q < 4; ++q) build(nodes_[node].child[q], std::move(parts[q]), depth + 1);
  }

  void visit_point(std::size_t node, Point2 p, std::optional<std::int32_t>& best) const {
    const Node& n = nodes_[node];
    if (!n.box.contains(p, tol_)) return;
    if (n.leaf()) {
      for (auto t : n.items)
        if ((!best || t < *best) && boxes_[t].contains(p, tol_) && triangle_contains(t, p))
          best = t;
      return;
    }
    for (auto c : n.child) visit_point(c, p, best);
  }

  void visit_segment(std::size_t node, Point2 a, Point2 b, std::vector<std::int32_t>& out) const {
    const Node& n = nodes_[node];
    if (!clip_segment_to_box(a, b, n.box, tol_)) return;
    if (n.leaf()) {
      for (auto t : n.items)
        if (clip_segment_to_box(a, b, boxes_[t], tol_)) out.push_back(t);
      return;
    }
    for (auto c : n.child) visit_segment(c, a, b, out);
  }

  std::pair<int, int> cell_of(Point2 p) const {
    const auto clampi = [this](double v) {
      return std::clamp(static_cast<int>(std::floor(v)), 0, grid_n_ - 1);
    };
    return {clampi((p.x - origin_.x) / cell_), clampi((p.y - origin_.y) / cell_)};
  }

  void build_vertex_grid() {
    const BoundingBox box = nodes_[0].box;
    const double side = std::max({box.hi.x - box.lo.x, box.hi.y - box.lo.y, 1e-300});
    grid_n_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh_->num_vertices()))));
    cell_ = side / grid_n_;
    origin_ = box.lo;
    grid_.assign(static_cast<std::size_t>(grid_n_) * grid_n_, {});
    for (std::size_t v = 0; v < mesh_->num_vertices(); ++v) {
      const auto [i, j] = cell_of(mesh_->vertices[v]);
      grid_[i * grid_n_ + j].push_back(static_cast<std::int32_t>(v));
    }
  }

  void build_neighbors() {
    const auto edges = edge_triangles(*mesh_);
    neighbors_.resize(mesh_->num_triangles());
    for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
      const Triangle& tri = mesh_->triangles[t];
      for (int i = 0; i < 3; ++i) {
        const auto& users = edges.at(edge_key(tri[i], tri[(i + 1) % 3]));
        neighbors_[t][i] = -1;
        for (auto u : users)
          if (u != static_cast<std::int32_t>(t)) neighbors_[t][i] = u;
      }
    }
  }

  const TriangleMesh* mesh_;
  std::size_t leaf_capacity_;
  int max_depth_;
  double diameter_ = 0.0;
  double tol_ = 0.0;
  std::vector<BoundingBox> boxes_;
  std::vector<Node> nodes_;
  std::vector<std::array<std::int32_t, 3>> neighbors_;
  std::vector<std::vector<std::int32_t>> grid_;
  int grid_n_ = 1;
  double cell_ = 1.0;
  Point2 origin_;
};

inline SpatialIndex build_spatial_index(const TriangleMesh& mesh) { return SpatialIndex(mesh); }

}  // namespace memnet
