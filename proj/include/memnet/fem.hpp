#pragma once

#include <Eigen/Sparse>
#include <array>
#include <string>
#include <vector>

#include "memnet/mesh.hpp"

namespace memnet {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

enum class MassQuadrature { exact, lumped };

/// Constant gradients of the three P1 basis functions on one triangle.
struct ElementGradients {
  std::array<double, 3> dx;
  std::array<double, 3> dy;
};

/// P1 operators on a fixed mesh. Immutable after assembly.
struct FemSystem {
  SparseMatrix K;   // stiffness, n_p x n_p
  SparseMatrix M;   // mass, n_p x n_p
  SparseMatrix Kx;  // d/dx per triangle, n_t x n_p
  SparseMatrix Ky;  // d/dy per triangle, n_t x n_p
  Vector areas;     // n_t
  std::vector<ElementGradients> gradients;
};

inline ElementGradients element_gradients(const std::array<Point2, 3>& c) {
  const double twice_area = orient2d(c[0], c[1], c[2]);
  ElementGradients g{};
  for (int i = 0; i < 3; ++i) {
    const Point2 pj = c[(i + 1) % 3], pk = c[(i + 2) % 3];
    g.dx[i] = (pj.y - pk.y) / twice_area;
    g.dy[i] = (pk.x - pj.x) / twice_area;
  }
  return g;
}

inline FemSystem assemble_fem(const TriangleMesh& mesh,
                              MassQuadrature quadrature = MassQuadrature::exact) {
  const auto np = static_cast<Eigen::Index>(mesh.num_vertices());
  const auto nt = static_cast<Eigen::Index>(mesh.num_triangles());
  FemSystem fem;
  fem.areas.resize(nt);
  fem.gradients.resize(nt);
  std::vector<Eigen::Triplet<double>> k, m, kx, ky;
  k.reserve(9 * nt);
  m.reserve(9 * nt);
  kx.reserve(3 * nt);
  ky.reserve(3 * nt);
  for (Eigen::Index t = 0; t < nt; ++t) {
    const double area = mesh.triangle_area(t);
    if (!(area > 0.0))
      throw MeshError("cannot assemble: triangle " + std::to_string(t) +
                      " has non-positive area");
    const Triangle& tri = mesh.triangles[t];
    const ElementGradients g = element_gradients(mesh.corners(t));
    fem.areas[t] = area;
    fem.gradients[t] = g;
    for (int i = 0; i < 3; ++i) {
      kx.emplace_back(t, tri[i], g.dx[i]);
      ky.emplace_back(t, tri[i], g.dy[i]);
      for (int j = 0; j < 3; ++j) {
        k.emplace_back(tri[i], tri[j], area * (g.dx[i] * g.dx[j] + g.dy[i] * g.dy[j]));
        if (quadrature == MassQuadrature::exact)
          m.emplace_back(tri[i], tri[j], area * (i == j ? 2.0 : 1.0) / 12.0);
        else if (i == j)
          m.emplace_back(tri[i], tri[j], area / 3.0);
      }
    }
  }
  fem.K.resize(np, np);
  fem.M.resize(np, np);
  fem.Kx.resize(nt, np);
  fem.Ky.resize(nt, np);
  fem.K.setFromTriplets(k.begin(), k.end());
  fem.M.setFromTriplets(m.begin(), m.end());
  fem.Kx.setFromTriplets(kx.begin(), kx.end());
  fem.Ky.setFromTriplets(ky.begin(), ky.end());
  return fem;
}

}  // namespace memnet
