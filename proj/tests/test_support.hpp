#pragma once

// Hand-rolled generators and brute-force oracles shared by the suites.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <tuple>
#include <vector>

#include "memnet/memnet.hpp"

namespace testing_support {

using memnet::Point2;

inline Point2 random_point_in_disk(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    const Point2 p{u(rng), u(rng)};
    if (memnet::norm(p) <= 1.0) return radius * p;
  }
}

inline std::vector<Point2> random_points(std::mt19937_64& rng, std::size_t n, double radius) {
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(random_point_in_disk(rng, radius));
  return pts;
}

/// Kruskal over all pairs with union-find; returns the total tree length.
inline double kruskal_length(const std::vector<Point2>& pts) {
  const std::size_t n = pts.size();
  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(memnet::distance(pts[i], pts[j]), i, j);
  std::sort(edges.begin(), edges.end());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  double total = 0.0;
  for (const auto& [d, i, j] : edges) {
    const auto a = find(i), b = find(j);
    if (a == b) continue;
    parent[a] = b;
    total += d;
  }
  return total;
}

/// Projection onto {theta >= 1, sum l theta = L} by enumerating every
/// active set and keeping the closest feasible candidate.
inline std::vector<double> active_set_projection(const std::vector<double>& l,
                                                 const std::vector<double>& w, double L) {
  const std::size_t n = l.size();
  std::vector<double> best;
  double best_d = INFINITY;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    double fixed = 0.0, wl = 0.0, ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) {
        wl += w[i] * l[i];
        ll += l[i] * l[i];
      } else {
        fixed += l[i];
      }
    }
    if (ll == 0.0) continue;
    const double lambda = (L - fixed - wl) / ll;
    std::vector<double> theta(n, 1.0);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) {
        theta[i] = w[i] + lambda * l[i];
        ok = ok && theta[i] >= 1.0 - 1e-12;
      }
    if (!ok) continue;
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) d += (theta[i] - w[i]) * (theta[i] - w[i]);
    if (d < best_d) {
      best_d = d;
      best = theta;
    }
  }
  return best;
}

/// Random admissible-looking network inside the unit disk (radius 0.95).
inline memnet::WeightedNetwork random_network(std::mt19937_64& rng, std::size_t n_points, double L) {
  memnet::NetworkParams p;
  p.points = random_points(rng, n_points, 0.95);
  std::uniform_real_distribution<double> w(0.5, 3.0), h(0.2, 1.0);
  for (std::size_t i = 0; i + 1 < n_points; ++i) p.weights.push_back(w(rng));
  p.h_s = h(rng);
  return memnet::make_admissible(p, L, memnet::ConvexDomain(memnet::Disk{{0.0, 0.0}, 0.95}));
}

}  // namespace testing_support
