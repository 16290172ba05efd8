#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "memnet/network.hpp"

namespace memnet {

class InfeasibleProjection : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Candidate whose points all coincide; evaluation maps it to the worst cost.
class DegenerateCandidate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Euclidean projection of `weights` onto {theta >= 1, sum lengths*theta = L}.
///
/// The solution is theta_i(lambda) = max(1, w_i + lambda * l_i) for the unique
/// multiplier with sum l_i theta_i(lambda) = L. The mass is piecewise linear
/// and nondecreasing in lambda, so the multiplier is found exactly by sorting
/// the breakpoints (1 - w_i) / l_i and solving on the bracketing piece.
inline std::vector<double> project_weights(std::span<const double> lengths,
                                           std::span<const double> weights, double L) {
  const std::size_t n = lengths.size();
  if (weights.size() != n) throw std::invalid_argument("lengths and weights differ in size");
  if (!(L > 0.0)) throw std::invalid_argument("mass budget L must be positive");
  double base = 0.0;
  for (double l : lengths) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("edge lengths must be >= 0");
    base += l;
  }
  const double slack = 1e-12 * std::max(1.0, L);
  if (base > L + slack)
    throw InfeasibleProjection("weighted projection infeasible: tree length " +
                               std::to_string(base) + " exceeds L = " + std::to_string(L));

  std::vector<double> out(n);
  if (base >= L - slack) {
    // Only theta == 1 on positive-length edges meets the budget.
    for (std::size_t i = 0; i < n; ++i) out[i] = lengths[i] > 0.0 ? 1.0 : std::max(1.0, weights[i]);
    return out;
  }

  struct Breakpoint {
    double lambda;
    std::size_t i;
  };
  std::vector<Breakpoint> bps;
  bps.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (lengths[i] > 0.0) bps.push_back({(1.0 - weights[i]) / lengths[i], i});
  std::sort(bps.begin(), bps.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });

  // Sweep lambda upwards. Below every breakpoint all edges sit at theta = 1;
  // after passing breakpoint k, edge k is free: theta = w + lambda l.
  double fixed_mass = base;  // sum of l over edges still at the bound
  double free_wl = 0.0;      // sum of w l over free edges
  double free_ll = 0.0;      // sum of l^2 over free edges
  double lambda = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= bps.size(); ++k) {
    const double upper = k < bps.size() ? bps[k].lambda : std::numeric_limits<double>::infinity();
    if (free_ll > 0.0) {
      // Mass on this piece: fixed_mass + free_wl + lambda * free_ll.
      const double candidate = (L - fixed_mass - free_wl) / free_ll;
      if (candidate <= upper) {
        lambda = candidate;
        break;
      }
    }
    if (k == bps.size()) break;
    const std::size_t i = bps[k].i;
    fixed_mass -= lengths[i];
    free_wl += weights[i] * lengths[i];
    free_ll += lengths[i] * lengths[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(1.0, weights[i] + lambda * lengths[i]);
  return out;
}

/// Parametrized admissible network: rescale the spanning tree to length
/// h_s * L about the centroid of the points, clamp into the domain, then
/// project the weights against the resulting edge lengths.
inline WeightedNetwork make_admissible(const NetworkParams& params, double L,
                                       const ConvexDomain& domain) {
  params.validate();
  if (!(L > 0.0)) throw std::invalid_argument("mass budget L must be positive");
  const double eps = 1e-12 * domain.diameter();
  SpanningTree tree;
  try {
    tree = build_mst(params.points, eps);
  } catch (const DegenerateInput& e) {
    throw DegenerateCandidate(e.what());
  }
  const double tree_length = tree.total_length();
  if (!(tree_length > 0.0)) throw DegenerateCandidate("candidate tree has zero length");

  Point2 center{0.0, 0.0};
  for (Point2 p : params.points) center = center + p;
  center = (1.0 / static_cast<double>(params.points.size())) * center;

  WeightedNetwork net;
  net.points = clamp_to_domain(apply_homothety(params.points, center, params.h_s * L / tree_length), domain);
  net.edges = tree.edges;
  std::vector<double> lengths;
  lengths.reserve(net.edges.size());
  for (const Edge& e : net.edges) lengths.push_back(distance(net.points[e.a], net.points[e.b]));
  net.theta = project_weights(lengths, params.weights, L);
  return net;
}

}  // namespace memnet
