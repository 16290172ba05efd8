#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "memnet/cli.hpp"

namespace fs = std::filesystem;
using namespace memnet;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "memnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

double energy_of(const std::string& out) {
  const auto pos = out.find("energy ");
  return std::stod(out.substr(pos + 7));
}

class CliTest : public ::testing::Test {
 protected:
  fs::path dir;
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("memnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_F(CliTest, MeshLevelZeroHasSixTriangles) {
  const CliRun r = run_cli({"mesh", "--shape", "disk", "--radius", "1", "--refine", "0", "--out", path("m.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const TriangleMesh mesh = load_mesh(path("m.txt"));
  EXPECT_EQ(mesh.num_triangles(), 6u);
  EXPECT_EQ(slurp(path("m.txt")).substr(0, 4), "7 6\n");
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run_cli({"mesh", "--refine", "0"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"eval", "--refine", "1"}).code, 2);
  EXPECT_EQ(run_cli({"eval", "--refine", "1", "--empty", "--factor", "half"}).code, 2);
  EXPECT_EQ(run_cli({"eval", "--refine", "1", "--empty", "--load", "gauss:1"}).code, 2);
  EXPECT_EQ(run_cli({"mesh", "--refine", "-1", "--out", path("m.txt")}).code, 2);
}

TEST_F(CliTest, RuntimeErrorsExitWithOne) {
  EXPECT_EQ(run_cli({"eval", "--mesh", path("missing.txt"), "--empty"}).code, 1);
  EXPECT_EQ(run_cli({"eval", "--refine", "1", "--network", path("missing.json")}).code, 1);
  std::ofstream(path("bad.txt")) << "3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 7\n";
  EXPECT_EQ(run_cli({"eval", "--mesh", path("bad.txt"), "--empty"}).code, 1);
}

TEST_F(CliTest, EvalEmptyAndZeroStiffnessAgree) {
  save_network(radius_network(), path("radius.json"));
  const CliRun empty = run_cli({"eval", "--refine", "4", "--empty"});
  ASSERT_EQ(empty.code, 0) << empty.err;
  const CliRun soft = run_cli({"eval", "--refine", "4", "--network", path("radius.json"), "--m", "0"});
  ASSERT_EQ(soft.code, 0) << soft.err;
  EXPECT_EQ(energy_of(empty.out), energy_of(soft.out));
  EXPECT_NEAR(energy_of(empty.out), -std::numbers::pi / 16.0, 5e-3);
}

TEST_F(CliTest, EvalWritesReportSolutionAndProfile) {
  save_network(diameter_network(), path("d.json"));
  const CliRun r = run_cli({"eval", "--refine", "3", "--network", path("d.json"), "--L", "2", "--report",
                         path("rep.json"), "--solution", path("u.csv"), "--profile", path("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = nlohmann::json::parse(slurp(path("rep.json")));
  EXPECT_NEAR(rep.at("energy").get<double>(), energy_of(r.out), 1e-9);
  EXPECT_EQ(slurp(path("u.csv")).substr(0, 18), "vertex_index,x,y,u");
  EXPECT_EQ(slurp(path("p.csv")).substr(0, 26), "x0,y0,x1,y1,theta,grad_tau");
  // Mass check against --L.
  EXPECT_EQ(run_cli({"eval", "--refine", "3", "--network", path("d.json"), "--L", "3"}).code, 1);
}

TEST_F(CliTest, EvalDiracLoadAndCg) {
  save_network(dirac_network({-0.5, 0}, {0.5, 0}, 1.0), path("ab.json"));
  const CliRun direct = run_cli({"eval", "--refine", "3", "--network", path("ab.json"), "--load", "dirac:-0.5,0,1;0.5,0,-1"});
  const CliRun cg = run_cli({"eval", "--refine", "3", "--network", path("ab.json"), "--load", "dirac:-0.5,0,1;0.5,0,-1",
                          "--method", "cg"});
  ASSERT_EQ(direct.code, 0) << direct.err;
  ASSERT_EQ(cg.code, 0) << cg.err;
  EXPECT_NEAR(energy_of(direct.out), energy_of(cg.out), 1e-8);
  EXPECT_LT(energy_of(direct.out), 0.0);
}

TEST_F(CliTest, OptimizeRejectsZeroBudget) {
  const CliRun r = run_cli({"optimize", "--refine", "2", "--L", "1", "--budget", "0"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("budget"), std::string::npos);
}

TEST_F(CliTest, OptimizeIsDeterministicPerSeed) {
  const std::vector<std::string> base{"optimize", "--refine", "2", "--L", "1.5", "--nd", "3", "--population", "20",
                                      "--budget", "60", "--local-budget", "30", "--refine-nd", "4", "--seed", "5"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", path("a.json")});
  b.insert(b.end(), {"--out", path("b.json")});
  ASSERT_EQ(run_cli(a).code, 0);
  ::setenv("MEMNET_THREADS", "2", 1);
  ASSERT_EQ(run_cli(b).code, 0);
  ::unsetenv("MEMNET_THREADS");
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const auto j = nlohmann::json::parse(slurp(path("a.json")));
  EXPECT_EQ(j.at("evaluations_used").get<int>(), 90);
  EXPECT_EQ(j.at("config").at("seed").get<int>(), 5);
}

TEST_F(CliTest, ConfigFileSuppliesFlags) {
  std::ofstream(path("cfg.ini")) << "[mesh]\nrefine=1\nout=\"" << path("cfg_mesh.txt") << "\"\n";
  const CliRun r = run_cli({"--config", path("cfg.ini"), "mesh"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_mesh(path("cfg_mesh.txt")).num_triangles(), 24u);
}

TEST_F(CliTest, Homog1dLastRowApproachesHarmonicLimit) {
  const CliRun r = run_cli({"homog1d", "--periods", "1,2,4,...,64"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 8u);  // header + 7 period counts
  EXPECT_EQ(rows.back()[0], "64");
  EXPECT_NEAR(std::stod(rows.back()[1]), -0.1, 1e-3);
  EXPECT_EQ(run_cli({"homog1d", "--epp", "3"}).code, 1);
}

TEST_F(CliTest, DiracShortNetworkColumnDecreases) {
  const CliRun r = run_cli({"dirac", "--L", "0.5", "--levels", "2,3,4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][3]), std::stod(rows[i - 1][3]));
}

TEST_F(CliTest, Table1PrintsEveryGuess) {
  const CliRun r = run_cli({"table1", "--levels", "2,3,4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[1][0], "radius");
  EXPECT_EQ(rows[4][0], "cross");
  EXPECT_NE(r.out.find("# within 5e-3"), std::string::npos);
}

TEST(CliParsing, PeriodsLoadsAndLevels) {
  EXPECT_EQ(cli::parse_periods("1,2,4,...,64"), (std::vector<std::size_t>{1, 2, 4, 8, 16, 32, 64}));
  EXPECT_EQ(cli::parse_periods("3,5"), (std::vector<std::size_t>{3, 5}));
  EXPECT_THROW(cli::parse_periods("1,...,8"), cli::UsageError);
  EXPECT_THROW(cli::parse_periods("0"), cli::UsageError);
  EXPECT_EQ(cli::parse_levels("6,7,8"), (std::vector<int>{6, 7, 8}));
  EXPECT_THROW(cli::parse_levels("1.5"), cli::UsageError);
  EXPECT_EQ(std::get<ConstantLoad>(cli::parse_load("const:2.5")).value, 2.5);
  EXPECT_EQ(std::get<DiracLoad>(cli::parse_load("dirac:0,0,1;0.1,0,-1")).points.size(), 2u);
  EXPECT_THROW(cli::parse_load("dirac:0,0"), cli::UsageError);
  EXPECT_THROW(cli::parse_load("const:x"), cli::UsageError);
  EXPECT_EQ(cli::parse_factor("paper"), FactorConvention::paper_literal);
}
