#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "memnet/solver.hpp"

namespace memnet {

// ---------------------------------------------------------------------------
// Reference networks on the unit disk (theta = 1 everywhere)

inline WeightedNetwork radius_network(double r = 1.0) {
  return {{{0.0, 0.0}, {r, 0.0}}, {{0, 1}}, {1.0}};
}

inline WeightedNetwork diameter_network(double r = 1.0) {
  return {{{-r, 0.0}, {r, 0.0}}, {{0, 1}}, {1.0}};
}

/// Three arms from the origin at 120 degrees.
inline WeightedNetwork star_network(double r = 1.0) {
  WeightedNetwork net;
  net.points.push_back({0.0, 0.0});
  for (int k = 0; k < 3; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 3.0;
    net.points.push_back({r * std::cos(a), r * std::sin(a)});
    net.edges.push_back({0, static_cast<std::size_t>(k + 1)});
    net.theta.push_back(1.0);
  }
  return net;
}

/// Two orthogonal diameters, split at the centre.
inline WeightedNetwork cross_network(double r = 1.0) {
  return {{{0.0, 0.0}, {r, 0.0}, {0.0, r}, {-r, 0.0}, {0.0, -r}},
          {{0, 1}, {0, 2}, {0, 3}, {0, 4}},
          {1.0, 1.0, 1.0, 1.0}};
}

// ---------------------------------------------------------------------------
// Tangential gradient along the network

struct ProfilePiece {
  std::size_t arc = 0;
  std::int32_t triangle = 0;
  double theta = 1.0;
  Point2 a;  // piece endpoints
  Point2 b;
  double length = 0.0;
  double grad_tau = 0.0;  // |grad u . tau|
};

struct TangentialProfile {
  std::vector<ProfilePiece> pieces;
  std::vector<double> arc_mean;  // length-weighted |grad_tau u| per arc
};

inline TangentialProfile tangential_profile(const SpatialIndex& index, const FemSystem& fem,
                                            const Vector& U, const WeightedNetwork& net) {
  const auto segs = net.segments();
  TangentialProfile prof;
  prof.arc_mean.assign(segs.size(), 0.0);
  std::vector<double> covered(segs.size(), 0.0);
  for (const ArcPiece& p : arc_pieces(index, segs)) {
    const Segment& s = segs[p.arc];
    const Point2 d = s.b - s.a;
    const Point2 tau = (1.0 / norm(d)) * d;
    ProfilePiece piece;
    piece.arc = p.arc;
    piece.triangle = p.triangle;
    piece.theta = s.theta;
    piece.a = s.a + p.t0 * d;
    piece.b = s.a + p.t1 * d;
    piece.length = p.length;
    piece.grad_tau = tangential_gradient(fem, U, index.mesh(), p.triangle, tau);
    prof.arc_mean[p.arc] += piece.grad_tau * piece.length;
    covered[p.arc] += piece.length;
    prof.pieces.push_back(piece);
  }
  for (std::size_t s = 0; s < segs.size(); ++s)
    if (covered[s] > 0.0) prof.arc_mean[s] /= covered[s];
  return prof;
}

/// Descriptive check of the optimality structure: |grad_tau u| should be a
/// constant c where theta > 1 and at most c where theta = 1.
struct OptimalityReport {
  bool c_defined = false;
  double c_est = 0.0;         // length-weighted mean over theta > threshold
  double cv_on_Splus = 0.0;   // coefficient of variation there
  double max_on_Sminus = 0.0; // max over theta <= threshold
  double length_Splus = 0.0;
  double length_Sminus = 0.0;
};

inline OptimalityReport optimality_report(const TangentialProfile& prof, double theta_threshold = 1.0 + 1e-6) {
  if (prof.pieces.empty()) throw std::invalid_argument("empty tangential profile");
  OptimalityReport rep;
  double s1 = 0.0, s2 = 0.0;
  for (const ProfilePiece& p : prof.pieces) {
    if (p.theta > theta_threshold) {
      rep.length_Splus += p.length;
      s1 += p.grad_tau * p.length;
      s2 += p.grad_tau * p.grad_tau * p.length;
    } else {
      rep.length_Sminus += p.length;
      rep.max_on_Sminus = std::max(rep.max_on_Sminus, p.grad_tau);
    }
  }
  if (rep.length_Splus > 0.0) {
    rep.c_defined = true;
    rep.c_est = s1 / rep.length_Splus;
    const double var = std::max(0.0, s2 / rep.length_Splus - rep.c_est * rep.c_est);
    rep.cv_on_Splus = rep.c_est > 0.0 ? std::sqrt(var) / rep.c_est : 0.0;
  }
  return rep;
}

/// Polyline CSV: x0,y0,x1,y1,theta,grad_tau per piece.
inline void write_profile_csv(const TangentialProfile& prof, std::ostream& os) {
  os << "x0,y0,x1,y1,theta,grad_tau\n" << std::setprecision(17);
  for (const ProfilePiece& p : prof.pieces)
    os << p.a.x << ',' << p.a.y << ',' << p.b.x << ',' << p.b.y << ',' << p.theta << ',' << p.grad_tau << '\n';
}

// ---------------------------------------------------------------------------
// One-dimensional oscillating reinforcement

/// Minimum of int_{-1}^{1} (a(s)/2) |u'|^2 - s u ds over H^1(-1, 1) with P1
/// elements on a uniform grid; `coef(s)` is sampled at element midpoints.
template <typename Coef>
double min_energy_1d(std::size_t elements, Coef&& coef) {
  if (elements < 1) throw std::invalid_argument("need at least one element");
  const double h = 2.0 / static_cast<double>(elements);
  const std::size_t nn = elements + 1;
  std::vector<double> diag(nn, 0.0), off(elements, 0.0), b(nn, 0.0), x(nn);
  for (std::size_t i = 0; i <= elements; ++i) x[i] = -1.0 + h * static_cast<double>(i);
  x[elements] = 1.0;
  for (std::size_t e = 0; e < elements; ++e) {
    const double k = coef(0.5 * (x[e] + x[e + 1])) / h;
    diag[e] += k;
    diag[e + 1] += k;
    off[e] -= k;
    // Exact integrals of s * phi for the linear load.
    b[e] += h * (2.0 * x[e] + x[e + 1]) / 6.0;
    b[e + 1] += h * (x[e] + 2.0 * x[e + 1]) / 6.0;
  }
  // The load has zero mean, so pinning u(-1) = 0 selects one minimizer.
  // Thomas algorithm on nodes 1..elements.
  std::vector<double> c(nn, 0.0), d(nn, 0.0), u(nn, 0.0);
  for (std::size_t i = 1; i < nn; ++i) {
    const double lower = i > 1 ? off[i - 1] : 0.0;
    const double denom = diag[i] - (i > 1 ? lower * c[i - 1] : 0.0);
    c[i] = i < elements ? off[i] / denom : 0.0;
    d[i] = (b[i] - (i > 1 ? lower * d[i - 1] : 0.0)) / denom;
  }
  for (std::size_t i = elements; i >= 1; --i) u[i] = d[i] - (i < elements ? c[i] * u[i + 1] : 0.0);
  double bu = 0.0;
  for (std::size_t i = 0; i < nn; ++i) bu += b[i] * u[i];
  return -0.5 * bu;
}

struct Homog1dRecord {
  std::size_t periods = 0;
  double E_n = 0.0;
  double E_harmonic = 0.0;    // constant coefficient 4/3
  double E_arithmetic = 0.0;  // constant coefficient 3/2
};

/// Closed-form minimum for a constant coefficient a: -2 / (15 a).
inline double homog1d_exact(double a) { return -2.0 / (15.0 * a); }

/// theta_n alternates 1, 2 on 2n equal cells of [-1, 1] (1 on the first).
inline Homog1dRecord homog1d(std::size_t periods, std::size_t elements_per_period) {
  if (periods < 1) throw std::invalid_argument("periods must be >= 1");
  if (elements_per_period < 2 || elements_per_period % 2 != 0)
    throw std::invalid_argument("elements_per_period must be even and >= 2");
  const std::size_t elements = periods * elements_per_period;
  const double n = static_cast<double>(periods);
  Homog1dRecord r;
  r.periods = periods;
  r.E_n = min_energy_1d(elements, [n](double s) {
    const auto cell = static_cast<long long>(std::floor((s + 1.0) * n));
    return cell % 2 == 0 ? 1.0 : 2.0;
  });
  // The constant-coefficient references are smooth; a fixed fine grid keeps
  // them accurate to well below 1e-6 whatever the period count.
  const std::size_t fine = std::max<std::size_t>(elements, 4096);
  r.E_harmonic = min_energy_1d(fine, [](double) { return 4.0 / 3.0; });
  r.E_arithmetic = min_energy_1d(fine, [](double) { return 1.5; });
  return r;
}

// ---------------------------------------------------------------------------
// Refinement studies

struct LevelEnergy {
  int level = 0;
  std::size_t triangles = 0;
  double h = 0.0;
  double energy = 0.0;
};

/// Limit estimate from the last three levels of a geometrically refined
/// sequence (Aitken delta-squared, i.e. Richardson with the observed order).
/// Falls back to the last value when the differences do not contract.
inline double extrapolate(const std::vector<double>& e) {
  if (e.empty()) throw std::invalid_argument("nothing to extrapolate");
  if (e.size() < 3) return e.back();
  const double e0 = e[e.size() - 3], e1 = e[e.size() - 2], e2 = e[e.size() - 1];
  const double d1 = e1 - e0, d2 = e2 - e1;
  const double denom = d2 - d1;
  if (denom == 0.0 || d1 == 0.0 || d2 / d1 <= 0.0 || d2 / d1 >= 1.0) return e2;
  return e2 - d2 * d2 / denom;
}

struct ConvergenceStudy {
  std::vector<LevelEnergy> levels;
  double extrapolated = 0.0;
};

/// Energy of a fixed network (empty when `net` is null) on nested disk meshes.
inline ConvergenceStudy convergence_study(const std::vector<int>& levels, const WeightedNetwork* net,
                                          const LoadSpec& load, const SolveConfig& cfg, double radius = 1.0) {
  ConvergenceStudy study;
  std::vector<double> energies;
  for (int level : levels) {
    const TriangleMesh mesh = generate_disk_mesh(radius, level);
    const Evaluator ev(mesh, load, cfg);
    Evaluator::Workspace ws;
    const double e = net ? ev.evaluate(*net, ws, false).energy : ev.empty_energy(ws);
    study.levels.push_back({level, mesh.num_triangles(), mesh.max_edge_length(), e});
    energies.push_back(e);
  }
  study.extrapolated = extrapolate(energies);
  return study;
}

/// Segment of mass L on the line through A and B: [A, B] itself when
/// L >= |AB| (theta = L / |AB|), else a centred sub-segment of length L.
inline WeightedNetwork dirac_network(Point2 A, Point2 B, double L) {
  const double d = distance(A, B);
  if (!(d > 0.0)) throw std::invalid_argument("Dirac points must differ");
  if (!(L > 0.0)) throw std::invalid_argument("L must be positive");
  if (L >= d) return {{A, B}, {{0, 1}}, {L / d}};
  const Point2 mid = 0.5 * (A + B);
  const Point2 dir = (1.0 / d) * (B - A);
  return {{mid - 0.5 * L * dir, mid + 0.5 * L * dir}, {{0, 1}}, {1.0}};
}

/// Energy under f = delta_A - delta_B for the fixed network of mass L,
/// across nested disk refinements.
inline std::vector<LevelEnergy> dirac_probe(Point2 A, Point2 B, double L, const std::vector<int>& levels,
                                            const SolveConfig& cfg, double radius = 1.0) {
  const WeightedNetwork net = dirac_network(A, B, L);
  const LoadSpec load = DiracLoad{{{A, 1.0}, {B, -1.0}}};
  return convergence_study(levels, &net, load, cfg, radius).levels;
}

// ---------------------------------------------------------------------------
// Reference guesses under both factor conventions

struct GuessRow {
  std::string name;
  double L = 0.0;
  double reference = 0.0;            // reference guess value
  std::vector<double> consistent;    // c = m, per level
  std::vector<double> literal;       // c = m/2, per level
  std::vector<double> hybrid;        // field of the m/2 system, energy with the m/2 network term
  double consistent_limit = 0.0;
  double literal_limit = 0.0;
  double hybrid_limit = 0.0;
};

struct GuessCase {
  std::string name;
  double L;
  double reference;
  WeightedNetwork net;
};

inline std::vector<GuessCase> table1_guesses() {
  return {{"radius", 1.0, -0.179471, radius_network()},
          {"diameter", 2.0, -0.165095, diameter_network()},
          {"star", 3.0, -0.152676, star_network()},
          {"cross", 4.0, -0.141969, cross_network()}};
}

/// Uniform load f = 1 on the unit disk, every guess at every level.
inline std::vector<GuessRow> table1_study(const std::vector<int>& levels, double m) {
  const auto cases = table1_guesses();
  std::vector<GuessRow> rows;
  for (const auto& c : cases) rows.push_back({c.name, c.L, c.reference, {}, {}, {}, 0, 0, 0});
  for (int level : levels) {
    const TriangleMesh mesh = generate_disk_mesh(1.0, level);
    SolveConfig consistent_cfg{m, FactorConvention::energy_consistent};
    SolveConfig literal_cfg{m, FactorConvention::paper_literal};
    const Evaluator consistent(mesh, ConstantLoad{1.0}, consistent_cfg);
    const Evaluator literal(mesh, ConstantLoad{1.0}, literal_cfg);
    Evaluator::Workspace ws1, ws2;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      rows[i].consistent.push_back(consistent.evaluate(cases[i].net, ws1, false).energy);
      const CostReport lit = literal.evaluate(cases[i].net, ws2, false);
      rows[i].literal.push_back(lit.energy);
      rows[i].hybrid.push_back(evaluate_energy(literal.fem(), lit.v_lengths, m, literal.load(), lit.U));
    }
  }
  for (auto& r : rows) {
    r.consistent_limit = extrapolate(r.consistent);
    r.literal_limit = extrapolate(r.literal);
    r.hybrid_limit = extrapolate(r.hybrid);
  }
  return rows;
}

}  // namespace memnet
