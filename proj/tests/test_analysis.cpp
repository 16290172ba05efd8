#include <gtest/gtest.h>

#include <map>
#include <numbers>
#include <sstream>

#include "test_support.hpp"

using namespace memnet;

namespace {

// With a(s) u' = (1 - s^2) / 2 the 1D minimum is -1/8 int (1 - s^2)^2 / a ds;
// on cells with constant a the integrand has the antiderivative below.
double poly_antiderivative(double s) { return s - 2.0 * s * s * s / 3.0 + std::pow(s, 5) / 5.0; }

double homog1d_closed_form(std::size_t periods) {
  const std::size_t cells = 2 * periods;
  double sum = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double s0 = -1.0 + 2.0 * c / cells, s1 = -1.0 + 2.0 * (c + 1) / cells;
    const double a = c % 2 == 0 ? 1.0 : 2.0;
    sum += (poly_antiderivative(s1) - poly_antiderivative(s0)) / a;
  }
  return -sum / 8.0;
}

Vector affine_field(const TriangleMesh& mesh, Point2 g) {
  Vector U(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) U[v] = 0.3 + dot(g, mesh.vertices[v]);
  return U;
}

}  // namespace

TEST(ReferenceNetworks, LengthsMatchBudgets) {
  EXPECT_NEAR(radius_network().mass(), 1.0, 1e-15);
  EXPECT_NEAR(diameter_network().mass(), 2.0, 1e-15);
  EXPECT_NEAR(star_network().mass(), 3.0, 1e-15);
  EXPECT_NEAR(cross_network().mass(), 4.0, 1e-15);
  for (const auto& c : table1_guesses()) EXPECT_NEAR(c.net.mass(), c.L, 1e-15);
}

class ProfileTest : public ::testing::Test {
 protected:
  TriangleMesh mesh = generate_disk_mesh(1.0, 3);
  FemSystem fem = assemble_fem(mesh);
  SpatialIndex index{mesh};
};

TEST_F(ProfileTest, AffineFieldIsExact) {
  const Point2 g{0.8, -0.45};
  const Vector U = affine_field(mesh, g);
  const WeightedNetwork net{{{-0.6, -0.2}, {0.5, 0.4}, {0.1, -0.7}}, {{0, 1}, {1, 2}}, {1.0, 2.0}};
  const TangentialProfile prof = tangential_profile(index, fem, U, net);
  ASSERT_FALSE(prof.pieces.empty());
  for (const ProfilePiece& p : prof.pieces) {
    const Segment s = net.segment(p.arc);
    const Point2 tau = (1.0 / s.length()) * (s.b - s.a);
    EXPECT_NEAR(p.grad_tau, std::abs(dot(g, tau)), 1e-12);
  }
  for (std::size_t a = 0; a < 2; ++a) {
    const Segment s = net.segment(a);
    EXPECT_NEAR(prof.arc_mean[a], std::abs(dot(g, (1.0 / s.length()) * (s.b - s.a))), 1e-12);
  }
}

TEST_F(ProfileTest, OrthogonalArcSeesNothing) {
  const Vector U = affine_field(mesh, {0.0, 1.0});
  const WeightedNetwork net{{{-0.7, 0.2}, {0.6, 0.2}}, {{0, 1}}, {1.0}};
  for (const ProfilePiece& p : tangential_profile(index, fem, U, net).pieces) EXPECT_NEAR(p.grad_tau, 0.0, 1e-12);
}

TEST_F(ProfileTest, DiameterProfileIsSymmetric) {
  const Evaluator ev(mesh, ConstantLoad{1.0}, SolveConfig{});
  Evaluator::Workspace ws;
  const WeightedNetwork net = diameter_network();
  const CostReport rep = ev.evaluate(net, ws);
  const TangentialProfile prof = tangential_profile(ev.index(), ev.fem(), rep.U, net);
  std::map<long long, double> by_mid;
  for (const ProfilePiece& p : prof.pieces)
    if (p.length > 1e-12) by_mid[std::llround(0.5 * (p.a.x + p.b.x) * 1e9)] = p.grad_tau;
  ASSERT_GT(by_mid.size(), 4u);
  for (const auto& [key, value] : by_mid) {
    ASSERT_TRUE(by_mid.count(-key)) << key;
    EXPECT_NEAR(value, by_mid.at(-key), 1e-8);
  }
}

TEST_F(ProfileTest, CsvHasOneRowPerPiece) {
  const Vector U = affine_field(mesh, {1.0, 0.0});
  const TangentialProfile prof = tangential_profile(index, fem, U, radius_network(0.9));
  std::ostringstream os;
  write_profile_csv(prof, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "x0,y0,x1,y1,theta,grad_tau");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, prof.pieces.size());
}

TEST(OptimalityReport, ConstantValueOnThickPart) {
  TangentialProfile prof;
  for (int i = 0; i < 5; ++i) prof.pieces.push_back({0, i, 1.5, {}, {}, 0.1 * (i + 1), 0.42});
  prof.pieces.push_back({1, 9, 1.0, {}, {}, 0.2, 0.3});
  const OptimalityReport rep = optimality_report(prof);
  EXPECT_TRUE(rep.c_defined);
  EXPECT_NEAR(rep.c_est, 0.42, 1e-15);
  EXPECT_NEAR(rep.cv_on_Splus, 0.0, 1e-7);
  EXPECT_EQ(rep.max_on_Sminus, 0.3);
  EXPECT_NEAR(rep.length_Splus, 1.5, 1e-15);
}

TEST(OptimalityReport, UnitMultiplicityLeavesConstantUndefined) {
  TangentialProfile prof;
  prof.pieces.push_back({0, 0, 1.0, {}, {}, 0.5, 0.2});
  prof.pieces.push_back({0, 1, 1.0 + 1e-9, {}, {}, 0.5, 0.7});
  const OptimalityReport rep = optimality_report(prof);
  EXPECT_FALSE(rep.c_defined);
  EXPECT_EQ(rep.max_on_Sminus, 0.7);
  EXPECT_THROW(optimality_report(TangentialProfile{}), std::invalid_argument);
}

TEST(Homog1d, ConstantCoefficientMinimaMatchClosedForm) {
  EXPECT_NEAR(homog1d_exact(4.0 / 3.0), -0.1, 1e-15);
  EXPECT_NEAR(homog1d_exact(1.5), -0.0888888888888889, 1e-15);
  for (std::size_t p : {1u, 8u, 64u}) {
    const Homog1dRecord r = homog1d(p, 16);
    EXPECT_NEAR(r.E_harmonic, -0.1, 1e-6);
    EXPECT_NEAR(r.E_arithmetic, -2.0 / 22.5, 1e-6);
  }
}

TEST(Homog1d, OscillatingCoefficientMatchesClosedForm) {
  // 4096 elements in total: the P1 error is O(h^2), far below the tolerance.
  for (std::size_t p : {1u, 2u, 4u, 8u, 16u, 32u, 64u})
    EXPECT_NEAR(homog1d(p, 4096 / p).E_n, homog1d_closed_form(p), 1e-7) << p << " periods";
  // Mirror cells carry opposite coefficients and (1 - s^2)^2 is even, so the
  // exact minimum is the harmonic-mean value for every period count.
  for (std::size_t p : {1u, 3u, 64u}) EXPECT_NEAR(homog1d_closed_form(p), -0.1, 1e-15);
}

TEST(Homog1d, LimitIsTheHarmonicMean) {
  const Homog1dRecord r = homog1d(64, 16);
  EXPECT_NEAR(r.E_n, -0.1, 1e-3);
  EXPECT_LT(r.E_n, -0.088889 + 1e-6);
  EXPECT_LT(r.E_n, r.E_arithmetic);
}

TEST(Homog1d, SecondOrderConvergence) {
  const double e1 = homog1d(4, 4).E_n, e2 = homog1d(4, 8).E_n, e3 = homog1d(4, 16).E_n;
  EXPECT_NEAR((e2 - e1) / (e3 - e2), 4.0, 0.2);
}

TEST(Homog1d, RejectsBadArguments) {
  EXPECT_THROW(homog1d(0, 4), std::invalid_argument);
  EXPECT_THROW(homog1d(2, 3), std::invalid_argument);
  EXPECT_THROW(min_energy_1d(0, [](double) { return 1.0; }), std::invalid_argument);
}

TEST(Extrapolate, GeometricSequenceIsExact) {
  EXPECT_NEAR(extrapolate({1.0 + 0.5, 1.0 + 0.125, 1.0 + 0.03125}), 1.0, 1e-14);
  EXPECT_EQ(extrapolate({3.0, 2.0}), 2.0);
  EXPECT_EQ(extrapolate({1.0, 2.0, 4.0}), 4.0);  // diverging: no extrapolation
  EXPECT_THROW(extrapolate({}), std::invalid_argument);
}

TEST(Convergence, UnreinforcedDiskExtrapolatesToAnalyticValue) {
  const ConvergenceStudy s = convergence_study({4, 5, 6}, nullptr, ConstantLoad{1.0}, SolveConfig{});
  ASSERT_EQ(s.levels.size(), 3u);
  EXPECT_NEAR(s.extrapolated, -std::numbers::pi / 16.0, 2e-4);
}

TEST(Convergence, RadiusEnergiesDecreaseUnderRefinement) {
  const WeightedNetwork net = radius_network();
  const ConvergenceStudy s = convergence_study({2, 3, 4, 5}, &net, ConstantLoad{1.0}, SolveConfig{});
  for (std::size_t i = 1; i < s.levels.size(); ++i) {
    EXPECT_LT(s.levels[i].energy, s.levels[i - 1].energy);
    EXPECT_EQ(s.levels[i].triangles, 4 * s.levels[i - 1].triangles);
    EXPECT_LT(s.levels[i].h, s.levels[i - 1].h);
  }
}

TEST(Dirac, NetworkShape) {
  const WeightedNetwork full = dirac_network({-0.5, 0}, {0.5, 0}, 1.0);
  EXPECT_EQ(full.points[0], (Point2{-0.5, 0}));
  EXPECT_EQ(full.theta[0], 1.0);
  const WeightedNetwork part = dirac_network({-0.5, 0}, {0.5, 0}, 0.5);
  EXPECT_NEAR(part.points[0].x, -0.25, 1e-15);
  EXPECT_NEAR(part.points[1].x, 0.25, 1e-15);
  EXPECT_NEAR(dirac_network({-0.5, 0}, {0.5, 0}, 2.0).mass(), 2.0, 1e-15);
  EXPECT_THROW(dirac_network({0, 0}, {0, 0}, 1.0), std::invalid_argument);
}

TEST(Dirac, ShortNetworkEnergyDecreases) {
  const auto rows = dirac_probe({-0.5, 0}, {0.5, 0}, 0.5, {2, 3, 4, 5}, SolveConfig{});
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].energy, rows[i - 1].energy);
}

TEST(Dirac, CancellingPairHasZeroEnergy) {
  const TriangleMesh mesh = generate_disk_mesh(1.0, 3);
  const Evaluator ev(mesh, DiracLoad{{{{-0.5, 0}, 1.0}, {{-0.5, 0}, -1.0}}}, SolveConfig{});
  Evaluator::Workspace ws;
  EXPECT_EQ(ev.load().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(ev.evaluate(radius_network(0.5), ws).energy, 0.0);
}

TEST(Table1Study, ConventionsAreOrdered) {
  // Literal minimizes a smaller quadratic form; the hybrid evaluates the
  // larger form at a non-minimizer.
  const auto rows = table1_study({2, 3, 4}, 0.5);
  ASSERT_EQ(rows.size(), 4u);
  for (const GuessRow& r : rows) {
    ASSERT_EQ(r.consistent.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_LT(r.literal[i], r.consistent[i]);
      EXPECT_GE(r.hybrid[i], r.consistent[i] - 1e-14);
    }
  }
}
