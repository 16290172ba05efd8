#include <gtest/gtest.h>

#include <map>

#include "test_support.hpp"

using namespace memnet;

namespace {

const std::array<Point2, 3> kUnit{{{0, 0}, {1, 0}, {0, 1}}};

}  // namespace

TEST(SegmentTriangle, ClipsAgainstAllThreeSides) {
  EXPECT_NEAR(segment_triangle_length({-0.5, 0.25}, {1.5, 0.25}, kUnit), 0.75, 1e-15);
  EXPECT_NEAR(segment_triangle_length({0.1, 0.1}, {0.3, 0.2}, kUnit), distance({0.1, 0.1}, {0.3, 0.2}), 1e-15);
  EXPECT_EQ(segment_triangle_length({2, 2}, {3, 1}, kUnit), 0.0);
  EXPECT_EQ(segment_triangle_length({0.2, 0.2}, {0.2, 0.2}, kUnit), 0.0);
}

TEST(SegmentTriangle, SegmentAlongAnEdge) {
  const ClipResult r = clip_segment_triangle({-1, 0}, {0.5, 0}, kUnit, 1e-12);
  EXPECT_EQ(r.edge, 0);
  EXPECT_NEAR((r.t1 - r.t0) * 1.5, 0.5, 1e-15);
  EXPECT_NEAR(segment_triangle_length({1, 0}, {0, 1}, kUnit), std::sqrt(2.0), 1e-15);
}

TEST(SegmentTriangle, SymmetricAdditiveAndTranslationInvariant) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 5000; ++k) {
    const Point2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
    std::array<Point2, 3> tri{{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}}};
    if (std::abs(orient2d(tri[0], tri[1], tri[2])) < 1e-3) continue;
    const double len = segment_triangle_length(a, b, tri);
    EXPECT_NEAR(segment_triangle_length(b, a, tri), len, 1e-12);
    const Point2 mid = 0.5 * (a + b);
    EXPECT_NEAR(segment_triangle_length(a, mid, tri) + segment_triangle_length(mid, b, tri), len, 1e-12);
    const Point2 shift{0.375, -0.625};
    std::array<Point2, 3> moved = tri;
    for (Point2& p : moved) p = p + shift;
    EXPECT_NEAR(segment_triangle_length(a + shift, b + shift, moved), len, 1e-12);
    EXPECT_LE(len, distance(a, b) + 1e-12);
  }
}

class VLengthsTest : public ::testing::Test {
 protected:
  TriangleMesh coarse = generate_disk_mesh(1.0, 0);
  SpatialIndex coarse_index{coarse};
  TriangleMesh mesh = generate_disk_mesh(1.0, 4);
  SpatialIndex index{mesh};
};

TEST_F(VLengthsTest, SegmentInsideOneTriangle) {
  const WeightedNetwork net{{{0.3, 0.1}, {0.6, 0.1}}, {{0, 1}}, {2.0}};
  const Vector v = accumulate_vlengths(coarse_index, net);
  const auto t = *coarse_index.locate({0.45, 0.1});
  EXPECT_NEAR(v[t], 0.6, 1e-15);
  EXPECT_NEAR(v.sum(), 0.6, 1e-15);
  EXPECT_EQ((v.array() > 0.0).count(), 1);
}

TEST_F(VLengthsTest, SharedEdgeCountedOnce) {
  const WeightedNetwork net{{{0, 0}, {0.8, 0}}, {{0, 1}}, {1.0}};
  const Vector v = accumulate_vlengths(coarse_index, net);
  EXPECT_NEAR(v.sum(), 0.8, 1e-15);
  EXPECT_EQ((v.array() > 0.0).count(), 1);

  // The same on the fine mesh, where the radius runs along many edges.
  const WeightedNetwork radius{{{0, 0}, {1, 0}}, {{0, 1}}, {1.0}};
  EXPECT_NEAR(accumulate_vlengths(index, radius).sum(), 1.0, 1e-12);
}

TEST_F(VLengthsTest, EndpointOutsideMeshIsAGeometryError) {
  const WeightedNetwork net{{{0, 0}, {1.2, 0}}, {{0, 1}}, {1.0}};
  EXPECT_THROW(accumulate_vlengths(index, net), GeometryError);
}

TEST_F(VLengthsTest, MassEqualsBudgetOnRandomNetworks) {
  std::mt19937_64 rng(4242);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double L = 1.0 + (k % 6);
    const WeightedNetwork net = testing_support::random_network(rng, 2 + k % 30, L);
    worst = std::max(worst, std::abs(accumulate_vlengths(index, net).sum() - L));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST_F(VLengthsTest, AgreesWithStratifiedLineQuadrature) {
  // Sample each arc at N cell midpoints and locate samples by brute force;
  // per triangle each arc's sampled length can miss by at most one cell per
  // boundary crossing.
  std::mt19937_64 rng(8);
  const int N = 5000;
  for (int trial = 0; trial < 10; ++trial) {
    const WeightedNetwork net = testing_support::random_network(rng, 8, 2.5);
    const Vector v = accumulate_vlengths(index, net);
    std::map<std::size_t, double> sampled;
    double max_cell = 0.0;
    for (const Segment& s : net.segments()) {
      const double cell = s.length() / N;
      max_cell = std::max(max_cell, s.theta * cell);
      for (int i = 0; i < N; ++i) {
        const Point2 p = s.a + ((i + 0.5) / N) * (s.b - s.a);
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
          if (index.triangle_contains(t, p)) {
            sampled[t] += s.theta * cell;
            break;
          }
      }
    }
    for (Eigen::Index t = 0; t < v.size(); ++t) {
      const double want = sampled.count(t) ? sampled[t] : 0.0;
      EXPECT_NEAR(v[t], want, 2.0 * net.num_segments() * max_cell + 1e-12) << "triangle " << t;
    }
  }
}

TEST(Load, ConstantLoadIsMassTimesOnes) {
  const TriangleMesh mesh = generate_disk_mesh(1.0, 3);
  const FemSystem fem = assemble_fem(mesh);
  const Vector b = assemble_load(mesh, fem, ConstantLoad{1.0});
  EXPECT_NEAR(b.sum(), mesh.total_area(), 1e-12);
  std::vector<double> ones(mesh.num_vertices(), 1.0);
  EXPECT_LE((assemble_load(mesh, fem, NodalLoad{ones}) - b).norm(), 1e-15);
  EXPECT_THROW(assemble_load(mesh, fem, NodalLoad{{1.0}}), std::invalid_argument);
}

TEST(Load, DiracLoads) {
  const TriangleMesh mesh = generate_disk_mesh(1.0, 3);
  const FemSystem fem = assemble_fem(mesh);
  const SpatialIndex index(mesh);

  const Vector at_vertex = assemble_load(mesh, fem, index, DiracLoad{{{mesh.vertices[5], 1.0}}});
  EXPECT_NEAR(at_vertex[5], 1.0, 1e-14);
  EXPECT_NEAR(at_vertex.cwiseAbs().sum(), 1.0, 1e-14);

  const Vector pair = assemble_load(mesh, fem, index, DiracLoad{{{{-0.5, 0.03}, 1.0}, {{0.5, 0.01}, -1.0}}});
  EXPECT_NEAR(pair.sum(), 0.0, 1e-15);
  EXPECT_GT(pair.cwiseAbs().maxCoeff(), 0.0);

  const Vector cancel = assemble_load(mesh, fem, index, DiracLoad{{{{-0.5, 0}, 1.0}, {{-0.5, 0}, -1.0}}});
  EXPECT_EQ(cancel.cwiseAbs().maxCoeff(), 0.0);

  EXPECT_THROW(assemble_load(mesh, fem, index, DiracLoad{{{{1.5, 0}, 1.0}}}), GeometryError);
}

TEST(Load, PointLoadPairsWithP1Value) {
  // b.U equals the weight times the P1 interpolant of U at the point.
  const TriangleMesh mesh = generate_disk_mesh(1.0, 3);
  const FemSystem fem = assemble_fem(mesh);
  Vector U(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    U[v] = 1.0 + 2.0 * mesh.vertices[v].x - 0.5 * mesh.vertices[v].y;
  const Point2 p{0.31, -0.27};
  const Vector b = assemble_load(mesh, fem, DiracLoad{{{p, 2.0}}});
  EXPECT_NEAR(b.dot(U), 2.0 * (1.0 + 2.0 * p.x - 0.5 * p.y), 1e-13);
}
