#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "memnet/geometry.hpp"

namespace memnet {

class DegenerateInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Optimizer genotype: movable points, raw per-arc weights and the scale h_s.
struct NetworkParams {
  std::vector<Point2> points;
  std::vector<double> weights;  // one per MST edge, before projection
  double h_s = 0.5;

  std::size_t num_points() const { return points.size(); }

  void validate() const {
    if (points.size() < 2) throw std::invalid_argument("network needs at least 2 points");
    if (weights.size() + 1 != points.size())
      throw std::invalid_argument("network needs exactly n_d - 1 weights");
    for (Point2 p : points)
      if (!is_finite(p)) throw std::invalid_argument("network point is not finite");
    for (double w : weights)
      if (!std::isfinite(w)) throw std::invalid_argument("network weight is not finite");
    if (!(h_s > 0.0 && h_s <= 1.0)) throw std::invalid_argument("h_s must lie in (0, 1]");
  }
};

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
};

struct SpanningTree {
  /// edges[k] joins point k+1 to its parent when the tree is rooted at point 0.
  std::vector<Edge> edges;
  std::vector<double> lengths;

  double total_length() const { return std::accumulate(lengths.begin(), lengths.end(), 0.0); }
};

struct Segment {
  Point2 a;
  Point2 b;
  double theta = 1.0;

  double length() const { return distance(a, b); }
};

/// Admissible phenotype: a tree over `points` with a multiplicity per edge.
struct WeightedNetwork {
  std::vector<Point2> points;
  std::vector<Edge> edges;
  std::vector<double> theta;

  std::size_t num_segments() const { return edges.size(); }
  Segment segment(std::size_t i) const { return {points[edges[i].a], points[edges[i].b], theta[i]}; }

  std::vector<Segment> segments() const {
    std::vector<Segment> out;
    out.reserve(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) out.push_back(segment(i));
    return out;
  }

  double geometric_length() const {
    double s = 0.0;
    for (std::size_t i = 0; i < edges.size(); ++i) s += segment(i).length();
    return s;
  }

  /// Sum of length * theta over the arcs.
  double mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i < edges.size(); ++i) s += segment(i).length() * theta[i];
    return s;
  }

  void validate() const {
    if (edges.size() != theta.size())
      throw std::invalid_argument("network needs one theta per edge");
    for (const Edge& e : edges)
      if (e.a >= points.size() || e.b >= points.size())
        throw std::invalid_argument("network edge references a missing point");
    for (double t : theta)
      if (!std::isfinite(t) || t < 0.0)
        throw std::invalid_argument("network theta must be finite and non-negative");
  }
};

/// Representative index for every point: the first earlier point within eps.
inline std::vector<std::size_t> deduplicate(const std::vector<Point2>& points, double eps) {
  std::vector<std::size_t> rep(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    rep[i] = i;
    for (std::size_t j = 0; j < i; ++j)
      if (rep[j] == j && distance(points[i], points[j]) <= eps) {
        rep[i] = j;
        break;
      }
  }
  return rep;
}

/// Euclidean minimum spanning tree (Prim, O(n^2)), ties broken by
/// (length, min index, max index). Points closer than `eps` are merged and
/// joined by zero-length edges.
inline SpanningTree build_mst(const std::vector<Point2>& points, double eps) {
  const std::size_t n = points.size();
  if (n < 2) throw DegenerateInput("spanning tree needs at least 2 points");
  const auto rep = deduplicate(points, eps);
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < n; ++i) distinct += rep[i] == i;
  if (distinct < 2) throw DegenerateInput("spanning tree needs at least 2 distinct points");

  auto dist = [&](std::size_t i, std::size_t j) { return distance(points[rep[i]], points[rep[j]]); };
  using Key = std::tuple<double, std::size_t, std::size_t>;
  const Key none{std::numeric_limits<double>::infinity(), n, n};
  auto key = [&](std::size_t i, std::size_t j) {
    return Key{dist(i, j), std::min(i, j), std::max(i, j)};
  };

  std::vector<bool> in_tree(n, false);
  std::vector<Key> best(n, none);
  std::vector<std::size_t> parent(n, n);
  in_tree[0] = true;
  for (std::size_t j = 1; j < n; ++j) {
    best[j] = key(0, j);
    parent[j] = 0;
  }
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t j = 0; j < n; ++j)
      if (!in_tree[j] && (next == n || best[j] < best[next])) next = j;
    in_tree[next] = true;
    for (std::size_t j = 0; j < n; ++j)
      if (!in_tree[j]) {
        const Key k = key(next, j);
        if (k < best[j]) {
          best[j] = k;
          parent[j] = next;
        }
      }
  }
  SpanningTree tree;
  tree.edges.reserve(n - 1);
  tree.lengths.reserve(n - 1);
  for (std::size_t j = 1; j < n; ++j) {
    tree.edges.push_back({parent[j], j});
    tree.lengths.push_back(dist(parent[j], j));
  }
  return tree;
}

inline SpanningTree build_mst(const std::vector<Point2>& points) {
  BoundingBox box;
  for (Point2 p : points) box.expand(p);
  return build_mst(points, 1e-12 * box.diameter());
}

inline std::vector<Point2> apply_homothety(const std::vector<Point2>& points, Point2 center,
                                           double ratio) {
  if (!(ratio > 0.0)) throw std::invalid_argument("homothety ratio must be positive");
  std::vector<Point2> out;
  out.reserve(points.size());
  for (Point2 p : points) out.push_back(center + ratio * (p - center));
  return out;
}

inline std::vector<Point2> clamp_to_domain(const std::vector<Point2>& points,
                                           const ConvexDomain& domain) {
  std::vector<Point2> out;
  out.reserve(points.size());
  for (Point2 p : points) out.push_back(domain.closest_point(p));
  return out;
}

/// Inserts points along the arcs (proportionally to arc length, largest
/// remainder) until there are `target_nd` points. Each sub-arc inherits the
/// multiplicity of its arc. The weights follow the rooted-MST edge order of
/// the new point set, and h_s is chosen so that re-projection is the identity.
inline NetworkParams resample_network(const WeightedNetwork& net, std::size_t target_nd,
                                      double L) {
  net.validate();
  const std::size_t n = net.points.size();
  if (target_nd < n) throw std::invalid_argument("resample target is below the current point count");
  const std::size_t extra = target_nd - n;
  const auto segs = net.segments();
  const double total = net.geometric_length();
  std::vector<std::size_t> count(segs.size(), 0);
  if (extra > 0 && total > 0.0) {
    std::vector<std::pair<double, std::size_t>> remainder;
    std::size_t used = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const double share = extra * segs[i].length() / total;
      count[i] = static_cast<std::size_t>(std::floor(share));
      used += count[i];
      remainder.emplace_back(share - count[i], i);
    }
    std::stable_sort(remainder.begin(), remainder.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (std::size_t k = 0; used < extra; ++k, ++used) count[remainder[k % remainder.size()].second]++;
  }
  NetworkParams out;
  out.points = net.points;
  for (std::size_t i = 0; i < segs.size(); ++i)
    for (std::size_t k = 1; k <= count[i]; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(count[i] + 1);
      out.points.push_back(segs[i].a + t * (segs[i].b - segs[i].a));
    }
  while (out.points.size() < target_nd) out.points.push_back(out.points.back());

  // theta of each new MST edge: the arc that contains the edge midpoint.
  const SpanningTree tree = build_mst(out.points);
  out.weights.reserve(tree.edges.size());
  for (const Edge& e : tree.edges) {
    const Point2 mid = 0.5 * (out.points[e.a] + out.points[e.b]);
    double best_d = std::numeric_limits<double>::infinity();
    double theta = 1.0;
    for (const Segment& s : segs) {
      const double d = distance(mid, closest_on_segment(mid, s.a, s.b));
      if (d < best_d) {
        best_d = d;
        theta = s.theta;
      }
    }
    out.weights.push_back(theta);
  }
  out.h_s = std::clamp(tree.total_length() / L, std::numeric_limits<double>::min(), 1.0);
  return out;
}

// Network file format: {"points":[[x,y],...],"edges":[[i,j],...],"theta":[...]}

inline nlohmann::json network_to_json(const WeightedNetwork& net) {
  nlohmann::json j;
  j["points"] = nlohmann::json::array();
  for (Point2 p : net.points) j["points"].push_back({p.x, p.y});
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : net.edges) j["edges"].push_back({e.a, e.b});
  j["theta"] = net.theta;
  return j;
}

inline WeightedNetwork network_from_json(const nlohmann::json& j) {
  WeightedNetwork net;
  try {
    for (const auto& p : j.at("points")) net.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& e : j.at("edges")) net.edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>()});
    net.theta = j.at("theta").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed network: ") + e.what());
  }
  net.validate();
  return net;
}

inline WeightedNetwork load_network(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open network file '" + path + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("cannot parse network file '" + path + "': " + e.what());
  }
  return network_from_json(j);
}

inline void save_network(const WeightedNetwork& net, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << network_to_json(net).dump(2) << '\n';
}

}  // namespace memnet
