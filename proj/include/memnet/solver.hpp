#pragma once

#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memnet/fem.hpp"
#include "memnet/projection.hpp"
#include "memnet/transfer.hpp"

namespace memnet {

/// Which stiffness multiplies the network term. `energy_consistent` uses m,
/// the stationarity condition of the quadratic energy; `paper_literal` uses
/// m/2 as printed in the linear system. Each convention evaluates the energy
/// of its own quadratic model.
enum class FactorConvention { energy_consistent, paper_literal };

enum class SolveMethod { direct_cholesky, conjugate_gradient };

struct SolveConfig {
  double m = 0.5;
  FactorConvention factor = FactorConvention::energy_consistent;
  SolveMethod method = SolveMethod::direct_cholesky;
  double cg_tol = 1e-10;
  int cg_max_iter = 10000;

  /// Coefficient c in A = K + c (Kx' V Kx + Ky' V Ky).
  double network_coefficient() const {
    return factor == FactorConvention::energy_consistent ? m : 0.5 * m;
  }

  void validate() const {
    if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("stiffness m must be >= 0");
    if (method == SolveMethod::conjugate_gradient && !(cg_tol > 0.0 && cg_tol <= 1e-4))
      throw std::invalid_argument("CG tolerance must lie in (0, 1e-4]");
    if (cg_max_iter <= 0) throw std::invalid_argument("CG iteration limit must be positive");
  }
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Fixed sparsity of the Dirichlet-reduced operator. Every triangle couples
/// its three vertices in K, and the network term only adds inside triangles,
/// so the pattern of K covers every assembled system on this mesh.
class SystemPattern {
 public:
  SystemPattern(const TriangleMesh& mesh, const FemSystem& fem) : fem_(&fem) {
    const std::size_t np = mesh.num_vertices();
    reduced_.assign(np, -1);
    for (std::size_t v = 0; v < np; ++v)
      if (!mesh.boundary_vertex[v]) {
        reduced_[v] = static_cast<int>(full_.size());
        full_.push_back(static_cast<int>(v));
      }
    const auto n = static_cast<Eigen::Index>(full_.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * mesh.num_triangles());
    for (const Triangle& tri : mesh.triangles)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const int ri = reduced_[tri[i]], rj = reduced_[tri[j]];
          if (ri >= 0 && rj >= 0) trip.emplace_back(ri, rj, 0.0);
        }
    base_.resize(n, n);
    base_.setFromTriplets(trip.begin(), trip.end());
    base_.makeCompressed();
    // Copy K's values into the reduced pattern.
    for (int k = 0; k < fem.K.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(fem.K, k); it; ++it) {
        const int ri = reduced_[it.row()], rj = reduced_[it.col()];
        if (ri >= 0 && rj >= 0) base_.coeffRef(ri, rj) += it.value();
      }
    slots_.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const Triangle& tri = mesh.triangles[t];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const int ri = reduced_[tri[i]], rj = reduced_[tri[j]];
          slots_[t][3 * i + j] =
              (ri >= 0 && rj >= 0) ? static_cast<int>(&base_.coeffRef(ri, rj) - base_.valuePtr()) : -1;
        }
    }
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(full_.size()); }
  /// Reduced index of a mesh vertex, -1 on the boundary.
  int reduced_index(std::size_t vertex) const { return reduced_[vertex]; }
  int full_index(Eigen::Index r) const { return full_[r]; }
  const SparseMatrix& stiffness() const { return base_; }

  /// Writes K + c (Kx' V Kx + Ky' V Ky), Dirichlet-reduced, into `A`, which
  /// must carry this pattern (e.g. a copy of stiffness()).
  void assemble_into(SparseMatrix& A, const Vector& v_lengths, double c) const {
    std::copy(base_.valuePtr(), base_.valuePtr() + base_.nonZeros(), A.valuePtr());
    double* values = A.valuePtr();
    for (Eigen::Index t = 0; t < v_lengths.size(); ++t) {
      const double w = c * v_lengths[t];
      if (w == 0.0) continue;
      const ElementGradients& g = fem_->gradients[t];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const int s = slots_[t][3 * i + j];
          if (s >= 0) values[s] += w * (g.dx[i] * g.dx[j] + g.dy[i] * g.dy[j]);
        }
    }
  }

  Vector restrict(const Vector& full) const {
    Vector r(size());
    for (Eigen::Index i = 0; i < size(); ++i) r[i] = full[full_[i]];
    return r;
  }

  Vector extend(const Vector& reduced, Eigen::Index np) const {
    Vector u = Vector::Zero(np);
    for (Eigen::Index i = 0; i < size(); ++i) u[full_[i]] = reduced[i];
    return u;
  }

 private:
  const FemSystem* fem_;
  std::vector<int> reduced_;
  std::vector<int> full_;
  SparseMatrix base_;
  std::vector<std::array<int, 9>> slots_;
};

inline void check_vlengths(const Vector& v_lengths) {
  for (Eigen::Index t = 0; t < v_lengths.size(); ++t)
    if (!(v_lengths[t] >= 0.0))
      throw std::invalid_argument("V_lengths entry " + std::to_string(t) + " is negative");
}

/// Dirichlet-reduced SPD operator of the reinforced membrane.
inline SparseMatrix assemble_system(const SystemPattern& pattern, const Vector& v_lengths,
                                    const SolveConfig& cfg) {
  cfg.validate();
  check_vlengths(v_lengths);
  SparseMatrix A = pattern.stiffness();
  pattern.assemble_into(A, v_lengths, cfg.network_coefficient());
  return A;
}

using Cholesky = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

struct SolveResult {
  Vector u;  // reduced unknowns
  double residual = 0.0;
  int iterations = 0;
};

inline double relative_residual(const SparseMatrix& A, const Vector& u, const Vector& b) {
  const double bn = b.norm();
  const double rn = (A * u - b).norm();
  return bn > 0.0 ? rn / bn : rn;
}

/// Direct solve with an already factorized operator; up to two steps of
/// iterative refinement if the residual misses the target.
inline SolveResult solve_direct(const Cholesky& chol, const SparseMatrix& A, const Vector& b,
                                double tol = 1e-10) {
  SolveResult r;
  if (b.norm() == 0.0) {
    r.u = Vector::Zero(b.size());
    return r;
  }
  r.u = chol.solve(b);
  r.residual = relative_residual(A, r.u, b);
  for (int k = 0; k < 2 && r.residual > tol; ++k) {
    r.u += chol.solve(b - A * r.u);
    r.residual = relative_residual(A, r.u, b);
  }
  return r;
}

/// Preconditioned conjugate gradients. `precond` approximates A^{-1}.
template <typename Precond>
SolveResult solve_pcg(const SparseMatrix& A, const Vector& b, const Precond& precond, double tol,
                      int max_iter, const Vector* guess = nullptr) {
  SolveResult r;
  const double bn = b.norm();
  r.u = guess ? *guess : Vector::Zero(b.size());
  if (bn == 0.0) {
    r.u.setZero();
    return r;
  }
  Vector res = b - A * r.u;
  Vector z = precond(res);
  Vector p = z;
  double rz = res.dot(z);
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    r.residual = res.norm() / bn;
    if (r.residual <= tol) return r;
    const Vector Ap = A * p;
    const double alpha = rz / p.dot(Ap);
    r.u += alpha * p;
    res -= alpha * Ap;
    z = precond(res);
    const double rz_next = res.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  r.residual = relative_residual(A, r.u, b);
  if (r.residual <= tol) return r;
  throw SolverError("conjugate gradients did not converge in " + std::to_string(max_iter) +
                        " iterations (relative residual " + std::to_string(r.residual) + ")",
                    r.residual);
}

/// Standalone solve of A u = b (reduced vectors) per the configured method.
/// CG is preconditioned with the Dirichlet-reduced stiffness `K_bc` when
/// given, plain otherwise.
inline SolveResult solve(const SparseMatrix& A, const Vector& b, const SolveConfig& cfg,
                         const SparseMatrix* K_bc = nullptr) {
  cfg.validate();
  if (cfg.method == SolveMethod::direct_cholesky) {
    Cholesky chol(A);
    if (chol.info() != Eigen::Success) throw SolverError("Cholesky factorization failed", NAN);
    return solve_direct(chol, A, b);
  }
  if (K_bc) {
    Cholesky pre(*K_bc);
    if (pre.info() != Eigen::Success) throw SolverError("preconditioner factorization failed", NAN);
    return solve_pcg(A, b, [&](const Vector& r) -> Vector { return pre.solve(r); }, cfg.cg_tol,
                     cfg.cg_max_iter);
  }
  return solve_pcg(A, b, [](const Vector& r) -> Vector { return r; }, cfg.cg_tol, cfg.cg_max_iter);
}

/// Network quadratic form U' (Kx' V Kx + Ky' V Ky) U.
inline double network_form(const FemSystem& fem, const Vector& v_lengths, const Vector& U) {
  const Vector gx = fem.Kx * U;
  const Vector gy = fem.Ky * U;
  return (v_lengths.array() * (gx.array().square() + gy.array().square())).sum();
}

/// 1/2 U'KU + (c/2) U'(Kx' V Kx + Ky' V Ky)U - b'U, where c is the network
/// coefficient of the convention that produced U.
inline double evaluate_energy(const FemSystem& fem, const Vector& v_lengths, double c, const Vector& b,
                              const Vector& U) {
  return 0.5 * U.dot(fem.K * U) + 0.5 * c * network_form(fem, v_lengths, U) - b.dot(U);
}

struct ArcGradientStats {
  std::size_t arc = 0;
  double theta = 1.0;
  double length = 0.0;
  double mean_abs_grad_tau = 0.0;  // length-weighted
  double min_abs_grad_tau = 0.0;
  double max_abs_grad_tau = 0.0;
};

struct CostReport {
  double energy = -std::numeric_limits<double>::infinity();
  bool degenerate = false;
  Vector U;
  Vector v_lengths;
  WeightedNetwork network;
  double residual_norm = 0.0;
  std::vector<ArcGradientStats> per_arc_tangential_gradient;
  double wall_time = 0.0;
};

/// |grad u . tau| per arc piece, tau the unit arc direction.
inline double tangential_gradient(const FemSystem& fem, const Vector& U, const TriangleMesh& mesh,
                                  std::int32_t t, Point2 tau) {
  const ElementGradients& g = fem.gradients[t];
  const Triangle& tri = mesh.triangles[t];
  double gx = 0.0, gy = 0.0;
  for (int i = 0; i < 3; ++i) {
    gx += g.dx[i] * U[tri[i]];
    gy += g.dy[i] * U[tri[i]];
  }
  return std::abs(gx * tau.x + gy * tau.y);
}

inline std::vector<ArcGradientStats> arc_gradient_stats(const SpatialIndex& index, const FemSystem& fem,
                                                        const WeightedNetwork& net, const Vector& U) {
  const auto segs = net.segments();
  std::vector<ArcGradientStats> stats(segs.size());
  for (std::size_t s = 0; s < segs.size(); ++s) {
    stats[s].arc = s;
    stats[s].theta = segs[s].theta;
    stats[s].length = segs[s].length();
    stats[s].min_abs_grad_tau = std::numeric_limits<double>::infinity();
  }
  for (const ArcPiece& p : arc_pieces(index, segs)) {
    const Segment& seg = segs[p.arc];
    const Point2 tau = (1.0 / seg.length()) * (seg.b - seg.a);
    const double g = tangential_gradient(fem, U, index.mesh(), p.triangle, tau);
    auto& st = stats[p.arc];
    st.mean_abs_grad_tau += g * p.length;
    st.min_abs_grad_tau = std::min(st.min_abs_grad_tau, g);
    st.max_abs_grad_tau = std::max(st.max_abs_grad_tau, g);
  }
  for (auto& st : stats) {
    if (st.length > 0.0) st.mean_abs_grad_tau /= st.length;
    if (!std::isfinite(st.min_abs_grad_tau)) st.min_abs_grad_tau = 0.0;
  }
  return stats;
}

/// Reusable cost evaluation on a fixed mesh and load. Shared state is
/// read-only; each thread evaluates with its own Workspace.
class Evaluator {
 public:
  struct Workspace {
    SparseMatrix A;
    Cholesky chol;
    bool analyzed = false;
  };

  Evaluator(const TriangleMesh& mesh, const LoadSpec& load, SolveConfig cfg)
      : Evaluator(mesh, load, cfg, boundary_hull(mesh)) {}

  Evaluator(const TriangleMesh& mesh, const LoadSpec& load, SolveConfig cfg, ConvexDomain domain)
      : mesh_(std::make_shared<TriangleMesh>(mesh)),
        fem_(std::make_shared<FemSystem>(assemble_fem(*mesh_))),
        index_(std::make_shared<SpatialIndex>(*mesh_)),
        pattern_(std::make_shared<SystemPattern>(*mesh_, *fem_)),
        domain_(std::move(domain)),
        cfg_(cfg) {
    cfg_.validate();
    b_ = assemble_load(*mesh_, *fem_, *index_, load);
    for (std::size_t v = 0; v < mesh_->num_vertices(); ++v)
      if (mesh_->boundary_vertex[v]) b_[v] = 0.0;
    b_reduced_ = pattern_->restrict(b_);
    if (cfg_.method == SolveMethod::conjugate_gradient) {
      precond_ = std::make_shared<Cholesky>(pattern_->stiffness());
      if (precond_->info() != Eigen::Success) throw SolverError("preconditioner factorization failed", NAN);
    }
  }

  const TriangleMesh& mesh() const { return *mesh_; }
  const FemSystem& fem() const { return *fem_; }
  const SpatialIndex& index() const { return *index_; }
  const SystemPattern& pattern() const { return *pattern_; }
  const ConvexDomain& domain() const { return domain_; }
  const SolveConfig& config() const { return cfg_; }
  const Vector& load() const { return b_; }

  /// Solves for a given V_lengths vector; returns full nodal values.
  Vector solve_field(const Vector& v_lengths, Workspace& ws, double* residual = nullptr) const {
    check_vlengths(v_lengths);
    if (ws.A.nonZeros() == 0) ws.A = pattern_->stiffness();
    pattern_->assemble_into(ws.A, v_lengths, cfg_.network_coefficient());
    SolveResult r;
    if (cfg_.method == SolveMethod::direct_cholesky) {
      if (!ws.analyzed) {
        ws.chol.analyzePattern(ws.A);
        ws.analyzed = true;
      }
      ws.chol.factorize(ws.A);
      if (ws.chol.info() != Eigen::Success) throw SolverError("Cholesky factorization failed", NAN);
      r = solve_direct(ws.chol, ws.A, b_reduced_);
    } else {
      r = solve_pcg(ws.A, b_reduced_, [this](const Vector& x) -> Vector { return precond_->solve(x); },
                    cfg_.cg_tol, cfg_.cg_max_iter);
    }
    if (residual) *residual = r.residual;
    return pattern_->extend(r.u, static_cast<Eigen::Index>(mesh_->num_vertices()));
  }

  /// Energy of an already admissible network.
  CostReport evaluate(const WeightedNetwork& net, Workspace& ws, bool with_stats = true) const {
    const auto start = std::chrono::steady_clock::now();
    CostReport rep;
    rep.network = net;
    rep.v_lengths = accumulate_vlengths(*index_, net);
    rep.U = solve_field(rep.v_lengths, ws, &rep.residual_norm);
    rep.energy = evaluate_energy(*fem_, rep.v_lengths, cfg_.network_coefficient(), b_, rep.U);
    if (with_stats) rep.per_arc_tangential_gradient = arc_gradient_stats(*index_, *fem_, net, rep.U);
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  }

  /// Full cost of a raw parameter triplet; degenerate candidates get -inf.
  CostReport evaluate(const NetworkParams& params, double L, Workspace& ws, bool with_stats = true) const {
    const auto start = std::chrono::steady_clock::now();
    WeightedNetwork net;
    try {
      net = make_admissible(params, L, domain_);
    } catch (const DegenerateCandidate&) {
      CostReport rep;
      rep.degenerate = true;
      rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return rep;
    }
    CostReport rep = evaluate(net, ws, with_stats);
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  }

  /// Unreinforced energy (V_lengths = 0).
  double empty_energy(Workspace& ws) const {
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(mesh_->num_triangles()));
    const Vector U = solve_field(zero, ws);
    return evaluate_energy(*fem_, zero, cfg_.network_coefficient(), b_, U);
  }

 private:
  std::shared_ptr<const TriangleMesh> mesh_;
  std::shared_ptr<const FemSystem> fem_;
  std::shared_ptr<const SpatialIndex> index_;
  std::shared_ptr<const SystemPattern> pattern_;
  std::shared_ptr<const Cholesky> precond_;
  ConvexDomain domain_;
  SolveConfig cfg_;
  Vector b_;
  Vector b_reduced_;
};

/// One-shot cost evaluation of a parameter triplet.
inline CostReport evaluate_cost(const TriangleMesh& mesh, const NetworkParams& params, double L,
                                const LoadSpec& load, const SolveConfig& cfg) {
  Evaluator ev(mesh, load, cfg);
  Evaluator::Workspace ws;
  return ev.evaluate(params, L, ws);
}

inline void write_solution_csv(const TriangleMesh& mesh, const Vector& U, std::ostream& os) {
  os << "vertex_index,x,y,u\n" << std::setprecision(17);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    os << v << ',' << mesh.vertices[v].x << ',' << mesh.vertices[v].y << ',' << U[v] << '\n';
}

inline nlohmann::json cost_report_to_json(const CostReport& rep, const SolveConfig& cfg) {
  nlohmann::json j;
  j["energy"] = rep.degenerate ? nlohmann::json(nullptr) : nlohmann::json(rep.energy);
  j["degenerate"] = rep.degenerate;
  j["m"] = cfg.m;
  j["factor"] = cfg.factor == FactorConvention::energy_consistent ? "energy" : "paper";
  j["residual_norm"] = rep.residual_norm;
  j["wall_time"] = rep.wall_time;
  j["network"] = network_to_json(rep.network);
  j["mass"] = rep.network.mass();
  auto& arcs = j["per_arc_tangential_gradient"] = nlohmann::json::array();
  for (const auto& a : rep.per_arc_tangential_gradient)
    arcs.push_back({{"arc", a.arc},
                    {"theta", a.theta},
                    {"length", a.length},
                    {"mean", a.mean_abs_grad_tau},
                    {"min", a.min_abs_grad_tau},
                    {"max", a.max_abs_grad_tau}});
  return j;
}

}  // namespace memnet
