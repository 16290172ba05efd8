#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "memnet/solver.hpp"

namespace memnet {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }

  void validate() const {
    if (lower.size() != upper.size() || lower.empty())
      throw ConfigError("bounds must be non-empty and of equal length");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] <= upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
        throw ConfigError("bound " + std::to_string(i) + " is not well ordered");
  }

  bool contains(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] < lower[i] || x[i] > upper[i]) return false;
    return true;
  }

  /// Mirrors a coordinate back into [lower, upper].
  double reflect(std::size_t i, double v) const {
    const double lo = lower[i], hi = upper[i], w = hi - lo;
    if (w <= 0.0 || !std::isfinite(v)) return lo;
    if (v >= lo && v <= hi) return v;
    double r = std::fmod(v - lo, 2.0 * w);
    if (r < 0.0) r += 2.0 * w;
    return std::clamp(r <= w ? lo + r : hi - (r - w), lo, hi);
  }
};

/// Maximization objective evaluated a whole batch at a time.
using BatchObjective = std::function<std::vector<double>(const std::vector<std::vector<double>>&)>;

/// Wraps a per-point objective; with threads > 1 the batch is split
/// round-robin over workers, each receiving its worker id.
inline BatchObjective make_batch(std::function<double(const std::vector<double>&, std::size_t)> f,
                                 std::size_t threads = 1) {
  threads = std::max<std::size_t>(1, threads);
  return [f = std::move(f), threads](const std::vector<std::vector<double>>& xs) {
    std::vector<double> out(xs.size());
    if (threads == 1 || xs.size() < 2) {
      for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i], 0);
      return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < xs.size(); i += threads) out[i] = f(xs[i], w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    return out;
  };
}

struct HistoryPoint {
  std::size_t evaluation = 0;
  double best = 0.0;
};

struct SearchResult {
  std::vector<double> best_x;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<HistoryPoint> history;
  std::size_t evaluations = 0;
};

namespace detail {

/// Budget accounting shared by the optimizers.
class Tracker {
 public:
  Tracker(BatchObjective f, std::size_t budget) : f_(std::move(f)), budget_(budget) {}

  std::size_t remaining() const { return budget_ - result_.evaluations; }

  /// Evaluates as many of `xs` as the budget allows.
  std::vector<double> eval(std::vector<std::vector<double>> xs) {
    if (xs.size() > remaining()) xs.resize(remaining());
    if (xs.empty()) return {};
    std::vector<double> fs = f_(xs);
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (std::isnan(fs[i])) fs[i] = -std::numeric_limits<double>::infinity();
      ++result_.evaluations;
      if (result_.best_x.empty() || fs[i] > result_.best_value) {
        result_.best_value = fs[i];
        result_.best_x = xs[i];
        result_.history.push_back({result_.evaluations, result_.best_value});
      }
    }
    return fs;
  }

  SearchResult& result() { return result_; }

 private:
  BatchObjective f_;
  std::size_t budget_;
  SearchResult result_;
};

}  // namespace detail

struct IsresOptions {
  std::size_t budget = 0;
  std::size_t population = 0;  // 0: 20 (n + 1)
  std::uint64_t seed = 0;
  std::vector<double> x0;      // optional first individual
  double survivor_fraction = 1.0 / 7.0;
  double gamma = 0.85;         // differential variation step
  double alpha = 0.2;          // step-size smoothing
};

inline std::size_t default_population(std::size_t dim) { return 20 * (dim + 1); }

/// Stochastic-ranking evolution strategy: a (mu, lambda) scheme with
/// log-normal self-adaptive step sizes, differential variation among the
/// best survivors, and bound handling by reflection. Every constraint of the
/// network problem is enforced inside the objective, so ranking is by
/// objective value alone. All random draws of a generation happen before its
/// batch is evaluated.
inline SearchResult isres_maximize(const Box& box, const BatchObjective& f, const IsresOptions& opt) {
  box.validate();
  const std::size_t n = box.dim();
  const std::size_t lambda = opt.population ? opt.population : default_population(n);
  if (lambda < 2) throw ConfigError("population must be at least 2");
  if (opt.budget < lambda)
    throw ConfigError("budget (" + std::to_string(opt.budget) + ") is smaller than the population (" +
                      std::to_string(lambda) + ")");
  const std::size_t mu = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(lambda * opt.survivor_fraction)), 1, lambda);
  const double tau = 1.0 / std::sqrt(2.0 * std::sqrt(static_cast<double>(n)));
  const double tau_global = 1.0 / std::sqrt(2.0 * static_cast<double>(n));

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<double> sigma_max(n);
  for (std::size_t j = 0; j < n; ++j) sigma_max[j] = (box.upper[j] - box.lower[j]) / std::sqrt(double(n));

  std::vector<std::vector<double>> xs(lambda, std::vector<double>(n));
  std::vector<std::vector<double>> sigmas(lambda, sigma_max);
  for (std::size_t k = 0; k < lambda; ++k)
    for (std::size_t j = 0; j < n; ++j)
      xs[k][j] = box.lower[j] + uniform(rng) * (box.upper[j] - box.lower[j]);
  if (!opt.x0.empty()) {
    if (opt.x0.size() != n) throw ConfigError("x0 has the wrong dimension");
    for (std::size_t j = 0; j < n; ++j) xs[0][j] = box.reflect(j, opt.x0[j]);
  }

  detail::Tracker tracker(f, opt.budget);
  std::vector<std::size_t> rank(lambda);
  while (tracker.remaining() > 0) {
    const std::vector<double> fs = tracker.eval(xs);
    if (fs.size() < lambda) break;
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return fs[a] > fs[b]; });
    std::vector<std::vector<double>> next_x(lambda), next_sigma(lambda);
    for (std::size_t k = 0; k < lambda; ++k) {
      const std::size_t parent = rank[k % mu];
      std::vector<double> x = xs[parent];
      std::vector<double> s = sigmas[parent];
      if (k + 1 < mu) {
        const auto& best = xs[rank[0]];
        const auto& other = xs[rank[k + 1]];
        for (std::size_t j = 0; j < n; ++j) x[j] = box.reflect(j, x[j] + opt.gamma * (best[j] - other[j]));
      } else {
        const double global = tau_global * normal(rng);
        for (std::size_t j = 0; j < n; ++j) {
          const double mutated = std::min(sigma_max[j], s[j] * std::exp(global + tau * normal(rng)));
          x[j] = box.reflect(j, x[j] + mutated * normal(rng));
          s[j] += opt.alpha * (mutated - s[j]);
        }
      }
      next_x[k] = std::move(x);
      next_sigma[k] = std::move(s);
    }
    xs = std::move(next_x);
    sigmas = std::move(next_sigma);
  }
  return std::move(tracker.result());
}

struct LocalOptions {
  std::size_t budget = 0;
  double initial_radius = 0.1;  // fraction of each bound range
  double min_radius = 1e-6;     // fraction of each bound range
  std::size_t block = 0;        // coordinates probed per iteration; 0 = all
  std::uint64_t seed = 1;       // drives block selection
};

/// Bound-constrained derivative-free trust region. Each iteration fits a
/// separable quadratic model from coordinate probes around the incumbent,
/// maximizes it over the box intersected with the trust region, and updates
/// the per-coordinate radii from the agreement ratio. With opt.block > 0 only
/// a random block of still-active coordinates is probed per iteration, which
/// buys many more steps per evaluation in high dimension. Never returns a
/// point worse than start.
inline SearchResult trust_region_maximize(const Box& box, const BatchObjective& f,
                                          const std::vector<double>& start, const LocalOptions& opt) {
  box.validate();
  const std::size_t n = box.dim();
  if (start.size() != n) throw ConfigError("start point has the wrong dimension");
  if (!box.contains(start)) throw ConfigError("start point lies outside the bounds");
  std::vector<double> range(n);
  for (std::size_t j = 0; j < n; ++j) range[j] = box.upper[j] - box.lower[j];

  detail::Tracker tracker(f, opt.budget);
  const auto f0 = tracker.eval({start});
  if (f0.empty()) return std::move(tracker.result());
  std::vector<double> x = start;
  double fx = f0[0];
  std::vector<double> radius(n, opt.initial_radius);
  std::mt19937_64 rng(opt.seed);

  while (tracker.remaining() > 0) {
    std::vector<std::size_t> coords;
    for (std::size_t j = 0; j < n; ++j)
      if (range[j] > 0.0 && radius[j] >= opt.min_radius) coords.push_back(j);
    if (coords.empty()) break;
    if (opt.block > 0 && opt.block < coords.size()) {
      for (std::size_t i = 0; i < opt.block; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, coords.size() - 1);
        std::swap(coords[i], coords[pick(rng)]);
      }
      coords.resize(opt.block);
      std::sort(coords.begin(), coords.end());
    }

    // Probe +-h e_j inside the box.
    std::vector<std::vector<double>> probes;
    std::vector<std::pair<std::size_t, double>> which;  // coordinate, step
    for (std::size_t j : coords) {
      const double up = std::min(radius[j] * range[j], box.upper[j] - x[j]);
      const double down = std::min(radius[j] * range[j], x[j] - box.lower[j]);
      for (double h : {up, -down}) {
        if (h == 0.0) continue;
        probes.push_back(x);
        probes.back()[j] = std::clamp(x[j] + h, box.lower[j], box.upper[j]);
        which.emplace_back(j, probes.back()[j] - x[j]);
      }
    }
    const std::vector<double> fp = tracker.eval(probes);
    if (fp.size() < probes.size()) break;

    std::vector<double> g(n, 0.0), curv(n, 0.0);
    std::size_t best_probe = probes.size();
    for (std::size_t p = 0; p < fp.size(); ++p)
      if (fp[p] > fx && (best_probe == probes.size() || fp[p] > fp[best_probe])) best_probe = p;
    for (std::size_t p = 0; p < which.size();) {
      const std::size_t j = which[p].first;
      if (p + 1 < which.size() && which[p + 1].first == j) {
        const double hp = which[p].second, hm = -which[p + 1].second;  // both > 0
        const double dp = fp[p] - fx, dm = fp[p + 1] - fx;
        // Quadratic through (-hm, fm), (0, fx), (hp, fp).
        curv[j] = 2.0 * (dp / hp + dm / hm) / (hp + hm);
        g[j] = (dp * hm * hm - dm * hp * hp) / (hp * hm * (hp + hm));
        p += 2;
      } else {
        g[j] = (fp[p] - fx) / which[p].second;
        p += 1;
      }
    }
    std::vector<double> step(n, 0.0);
    double predicted = 0.0;
    for (std::size_t j : coords) {
      const double lo = std::max(-radius[j] * range[j], box.lower[j] - x[j]);
      const double hi = std::min(radius[j] * range[j], box.upper[j] - x[j]);
      auto model = [&](double s) { return g[j] * s + 0.5 * curv[j] * s * s; };
      double s = model(hi) >= model(lo) ? hi : lo;
      if (curv[j] < 0.0) {
        const double interior = std::clamp(-g[j] / curv[j], lo, hi);
        if (model(interior) > model(s)) s = interior;
      }
      if (model(s) <= 0.0) s = 0.0;
      step[j] = s;
      predicted += model(s);
    }
    std::vector<double> trial = x;
    for (std::size_t j : coords) trial[j] = std::clamp(x[j] + step[j], box.lower[j], box.upper[j]);

    double f_trial = -std::numeric_limits<double>::infinity();
    if (predicted > 0.0) {
      const auto ft = tracker.eval({trial});
      if (ft.empty()) break;
      f_trial = ft[0];
    }
    const double f_probe = best_probe < probes.size() ? fp[best_probe] : -std::numeric_limits<double>::infinity();
    if (f_trial > fx && f_trial >= f_probe) {
      const double rho = (f_trial - fx) / predicted;
      x = std::move(trial);
      fx = f_trial;
      for (std::size_t j : coords) {
        if (rho > 0.75) radius[j] = std::min(2.0 * radius[j], 0.5);
        else if (rho < 0.25) radius[j] *= 0.5;
      }
    } else if (f_probe > fx) {
      x = probes[best_probe];
      fx = f_probe;
    } else {
      for (std::size_t j : coords) radius[j] *= 0.5;
    }
  }
  return std::move(tracker.result());
}

// ---------------------------------------------------------------------------
// Network problem

struct OptimConfig {
  double L = 1.0;
  double m = 0.5;
  FactorConvention factor = FactorConvention::energy_consistent;
  std::size_t n_d = 20;
  std::size_t budget = 20000;
  std::uint64_t seed = 1;
  std::size_t population = 0;  // 0: 20 (3 n_d + 1)
  std::size_t local_budget = 15000;
  std::size_t refine_nd = 50;
  std::size_t local_block = 10;  // coordinates probed per local iteration; 0: all
  std::size_t threads = 1;
  double h_s_min = 0.05;

  void validate() const {
    if (!(L > 0.0)) throw ConfigError("L must be positive");
    if (!(m >= 0.0)) throw ConfigError("m must be non-negative");
    if (n_d < 2) throw ConfigError("n_d must be at least 2");
    const std::size_t pop = population ? population : default_population(3 * n_d);
    if (budget < pop)
      throw ConfigError("budget (" + std::to_string(budget) + ") is smaller than the population (" +
                        std::to_string(pop) + ")");
    if (refine_nd != 0 && refine_nd < n_d) throw ConfigError("refine_nd must be 0 or >= n_d");
    if (!(h_s_min > 0.0 && h_s_min <= 1.0)) throw ConfigError("h_s_min must lie in (0, 1]");
  }
};

/// Layout [x1, y1, ..., xn, yn, theta1, ..., theta_{n-1}, h_s].
inline std::vector<double> encode(const NetworkParams& p) {
  std::vector<double> v;
  v.reserve(3 * p.points.size());
  for (Point2 q : p.points) {
    v.push_back(q.x);
    v.push_back(q.y);
  }
  v.insert(v.end(), p.weights.begin(), p.weights.end());
  v.push_back(p.h_s);
  return v;
}

inline NetworkParams decode(const std::vector<double>& v, std::size_t n_d) {
  if (n_d < 2 || v.size() != 3 * n_d)
    throw std::invalid_argument("parameter vector has length " + std::to_string(v.size()) +
                                ", expected " + std::to_string(3 * n_d));
  NetworkParams p;
  p.points.reserve(n_d);
  for (std::size_t i = 0; i < n_d; ++i) p.points.push_back({v[2 * i], v[2 * i + 1]});
  p.weights.assign(v.begin() + 2 * n_d, v.begin() + 3 * n_d - 1);
  p.h_s = v.back();
  return p;
}

/// Points in the domain's bounding box, weights in [1, theta_max], h_s in [h_s_min, 1].
inline Box network_bounds(std::size_t n_d, const ConvexDomain& domain, double theta_max, double h_s_min) {
  const BoundingBox bb = domain.bounding_box();
  Box box;
  for (std::size_t i = 0; i < n_d; ++i) {
    box.lower.insert(box.lower.end(), {bb.lo.x, bb.lo.y});
    box.upper.insert(box.upper.end(), {bb.hi.x, bb.hi.y});
  }
  for (std::size_t i = 0; i + 1 < n_d; ++i) {
    box.lower.push_back(1.0);
    box.upper.push_back(std::max(1.0, theta_max));
  }
  box.lower.push_back(h_s_min);
  box.upper.push_back(1.0);
  return box;
}

struct OptimResult {
  NetworkParams best_params;
  WeightedNetwork best_network;
  double best_energy = -std::numeric_limits<double>::infinity();
  std::vector<HistoryPoint> history;
  std::size_t evaluations_used = 0;
};

/// Energy objective over encoded parameters, one evaluator workspace per worker.
inline BatchObjective network_objective(const Evaluator& ev, double L, std::size_t n_d, std::size_t threads) {
  auto workspaces = std::make_shared<std::vector<Evaluator::Workspace>>(std::max<std::size_t>(1, threads));
  return make_batch(
      [&ev, L, n_d, workspaces](const std::vector<double>& x, std::size_t worker) {
        const CostReport rep = ev.evaluate(decode(x, n_d), L, (*workspaces)[worker], false);
        return rep.degenerate ? -std::numeric_limits<double>::infinity() : rep.energy;
      },
      threads);
}

inline OptimResult to_optim_result(const Evaluator& ev, double L, std::size_t n_d, const SearchResult& s) {
  OptimResult r;
  r.best_params = decode(s.best_x, n_d);
  r.best_energy = s.best_value;
  r.history = s.history;
  r.evaluations_used = s.evaluations;
  try {
    r.best_network = make_admissible(r.best_params, L, ev.domain());
  } catch (const DegenerateCandidate&) {
  }
  return r;
}

/// Global stage on the network problem.
inline OptimResult global_search(const OptimConfig& cfg, const Evaluator& ev) {
  cfg.validate();
  const Box box = network_bounds(cfg.n_d, ev.domain(), cfg.L, cfg.h_s_min);
  IsresOptions opt;
  opt.budget = cfg.budget;
  opt.population = cfg.population;
  opt.seed = cfg.seed;
  return to_optim_result(ev, cfg.L, cfg.n_d,
                         isres_maximize(box, network_objective(ev, cfg.L, cfg.n_d, cfg.threads), opt));
}

/// Local stage from `start` on the network problem.
inline OptimResult local_refine(const NetworkParams& start, const OptimConfig& cfg, const Evaluator& ev) {
  const std::size_t n_d = start.points.size();
  double theta_max = cfg.L;
  for (double w : start.weights) theta_max = std::max(theta_max, w);
  Box box = network_bounds(n_d, ev.domain(), theta_max, std::min(cfg.h_s_min, start.h_s));
  std::vector<double> x0 = encode(start);
  for (std::size_t j = 0; j < x0.size(); ++j) x0[j] = std::clamp(x0[j], box.lower[j], box.upper[j]);
  LocalOptions opt;
  opt.budget = cfg.local_budget;
  opt.block = cfg.local_block;
  opt.seed = cfg.seed;
  return to_optim_result(ev, cfg.L, n_d,
                         trust_region_maximize(box, network_objective(ev, cfg.L, n_d, cfg.threads), x0, opt));
}

struct PipelineResult {
  OptimResult global;
  OptimResult local;
  OptimResult best;  // combined: best of both stages, history over all evaluations
};

/// Global search at n_d, resampling to refine_nd points, then local refinement.
inline PipelineResult optimize(const OptimConfig& cfg, const Evaluator& ev) {
  cfg.validate();
  PipelineResult out;
  out.global = global_search(cfg, ev);
  out.best = out.global;
  if (cfg.local_budget == 0 || out.global.best_network.edges.empty()) return out;
  const NetworkParams start =
      cfg.refine_nd > 0 ? resample_network(out.global.best_network, cfg.refine_nd, cfg.L) : out.global.best_params;
  out.local = local_refine(start, cfg, ev);
  out.best.evaluations_used = out.global.evaluations_used + out.local.evaluations_used;
  for (HistoryPoint h : out.local.history)
    if (h.best > out.best.history.back().best)
      out.best.history.push_back({out.global.evaluations_used + h.evaluation, h.best});
  if (out.local.best_energy > out.global.best_energy) {
    out.best.best_params = out.local.best_params;
    out.best.best_network = out.local.best_network;
    out.best.best_energy = out.local.best_energy;
  }
  return out;
}

inline nlohmann::json history_to_json(const std::vector<HistoryPoint>& h) {
  auto j = nlohmann::json::array();
  for (const auto& p : h) j.push_back({p.evaluation, p.best});
  return j;
}

inline nlohmann::json optim_result_to_json(const OptimResult& r) {
  nlohmann::json j;
  j["best_energy"] = r.best_energy;
  j["evaluations_used"] = r.evaluations_used;
  j["best_network"] = network_to_json(r.best_network);
  nlohmann::json p;
  p["points"] = nlohmann::json::array();
  for (Point2 q : r.best_params.points) p["points"].push_back({q.x, q.y});
  p["weights"] = r.best_params.weights;
  p["h_s"] = r.best_params.h_s;
  j["best_params"] = p;
  j["history"] = history_to_json(r.history);
  return j;
}

inline nlohmann::json pipeline_to_json(const OptimConfig& cfg, const PipelineResult& r) {
  nlohmann::json j;
  j["config"] = {{"L", cfg.L},
                 {"m", cfg.m},
                 {"factor", cfg.factor == FactorConvention::energy_consistent ? "energy" : "paper"},
                 {"n_d", cfg.n_d},
                 {"budget", cfg.budget},
                 {"seed", cfg.seed},
                 {"population", cfg.population ? cfg.population : default_population(3 * cfg.n_d)},
                 {"local_budget", cfg.local_budget},
                 {"refine_nd", cfg.refine_nd},
                 {"local_block", cfg.local_block}};
  j["best_energy"] = r.best.best_energy;
  j["best_network"] = network_to_json(r.best.best_network);
  j["history"] = history_to_json(r.best.history);
  j["evaluations_used"] = r.best.evaluations_used;
  j["global"] = optim_result_to_json(r.global);
  j["local"] = optim_result_to_json(r.local);
  return j;
}

}  // namespace memnet
