#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "memnet/memnet.hpp"

namespace memnet::cli {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline FactorConvention parse_factor(const std::string& s) {
  if (s == "energy") return FactorConvention::energy_consistent;
  if (s == "paper") return FactorConvention::paper_literal;
  throw UsageError("--factor must be 'energy' or 'paper'");
}

inline std::vector<double> parse_numbers(const std::string& s, char sep) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("cannot parse number '" + tok + "'");
    }
  }
  return out;
}

/// "const:V" or "dirac:x,y,w;x,y,w;..."
inline LoadSpec parse_load(const std::string& s) {
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (kind == "const") {
    const auto v = parse_numbers(body.empty() ? "1" : body, ',');
    if (v.size() != 1) throw UsageError("const load takes one value");
    return ConstantLoad{v[0]};
  }
  if (kind == "dirac") {
    DiracLoad d;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ';')) {
      const auto v = parse_numbers(item, ',');
      if (v.size() != 3) throw UsageError("dirac load entries are 'x,y,w'");
      d.points.push_back({{v[0], v[1]}, v[2]});
    }
    if (d.points.empty()) throw UsageError("dirac load needs at least one point");
    return d;
  }
  throw UsageError("unknown load '" + s + "' (expected const:V or dirac:x,y,w;...)");
}

inline std::vector<int> parse_levels(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_numbers(s, ',')) {
    if (v < 0 || v != std::floor(v)) throw UsageError("refinement levels must be integers >= 0");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

/// "1,2,4,...,64" expands a doubling sequence between the given ends.
inline std::vector<std::size_t> parse_periods(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  std::vector<std::string> toks;
  while (std::getline(ss, tok, ',')) toks.push_back(tok);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i] == "..." || toks[i] == "…") {
      if (out.size() < 2 || i + 1 >= toks.size()) throw UsageError("'...' needs two leading values and an end");
      const double ratio = static_cast<double>(out[out.size() - 1]) / static_cast<double>(out[out.size() - 2]);
      const auto end = static_cast<std::size_t>(parse_numbers(toks[i + 1], ',').at(0));
      for (double v = out.back() * ratio; v < end; v *= ratio) out.push_back(static_cast<std::size_t>(v));
      continue;
    }
    const double v = parse_numbers(toks[i], ',').at(0);
    if (v < 1 || v != std::floor(v)) throw UsageError("periods must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

struct MeshSource {
  std::string path;
  int refine = 5;
  double radius = 1.0;

  TriangleMesh build() const {
    if (!path.empty()) return load_mesh(path);
    return generate_disk_mesh(radius, refine);
  }
};

inline void add_mesh_source(CLI::App* cmd, MeshSource& src) {
  cmd->add_option("--mesh", src.path, "Mesh file (default: generated disk)");
  cmd->add_option("--refine", src.refine, "Disk refinement level when no --mesh is given")->check(CLI::NonNegativeNumber);
  cmd->add_option("--radius", src.radius, "Disk radius when no --mesh is given")->check(CLI::PositiveNumber);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << text;
}

/// Runs the CLI; returns the process exit code (0 ok, 1 runtime error, 2 usage error).
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal one-dimensional reinforcement of an elastic membrane"};
  app.set_config("--config", "", "Config file (TOML/INI) supplying any flag");
  app.require_subcommand(1);

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "Generate a disk mesh");
  std::string shape = "disk", mesh_out;
  double mesh_radius = 1.0;
  int mesh_refine = 0;
  mesh_cmd->add_option("--shape", shape, "Domain shape")->check(CLI::IsMember({"disk"}));
  mesh_cmd->add_option("--radius", mesh_radius, "Disk radius")->check(CLI::PositiveNumber);
  mesh_cmd->add_option("--refine", mesh_refine, "Uniform refinement level")->check(CLI::NonNegativeNumber);
  mesh_cmd->add_option("--out", mesh_out, "Output mesh file")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate the energy of a network");
  MeshSource eval_mesh;
  add_mesh_source(eval_cmd, eval_mesh);
  std::string network_path, factor = "energy", load_str = "const:1", method = "direct";
  std::string report_path, solution_path, profile_path;
  std::optional<double> eval_L;
  double m = 0.5;
  bool empty = false;
  eval_cmd->add_option("--network", network_path, "Network file");
  eval_cmd->add_flag("--empty", empty, "Evaluate the unreinforced membrane");
  eval_cmd->add_option("--L", eval_L, "Expected network mass (checked)");
  eval_cmd->add_option("--m", m, "Reinforcement stiffness")->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--factor", factor, "energy | paper");
  eval_cmd->add_option("--load", load_str, "const:V | dirac:x,y,w;...");
  eval_cmd->add_option("--method", method, "direct | cg")->check(CLI::IsMember({"direct", "cg"}));
  eval_cmd->add_option("--report", report_path, "Write the cost report (JSON)");
  eval_cmd->add_option("--solution", solution_path, "Write the solution field (CSV)");
  eval_cmd->add_option("--profile", profile_path, "Write the tangential-gradient polyline (CSV)");

  // optimize
  auto* opt_cmd = app.add_subcommand("optimize", "Search for an optimal network");
  MeshSource opt_mesh;
  add_mesh_source(opt_cmd, opt_mesh);
  OptimConfig ocfg;
  std::string opt_out, opt_factor = "energy", opt_load = "const:1";
  opt_cmd->add_option("--L", ocfg.L, "Total mass")->required();
  opt_cmd->add_option("--m", ocfg.m, "Reinforcement stiffness");
  opt_cmd->add_option("--factor", opt_factor, "energy | paper");
  opt_cmd->add_option("--load", opt_load, "const:V | dirac:x,y,w;...");
  opt_cmd->add_option("--nd", ocfg.n_d, "Points in the global stage");
  opt_cmd->add_option("--budget", ocfg.budget, "Global-stage cost evaluations");
  opt_cmd->add_option("--local-budget", ocfg.local_budget, "Local-stage cost evaluations");
  opt_cmd->add_option("--refine-nd", ocfg.refine_nd, "Points in the local stage (0: keep n_d)");
  opt_cmd->add_option("--local-block", ocfg.local_block, "Coordinates probed per local iteration (0: all)");
  opt_cmd->add_option("--population", ocfg.population, "Population (0: 20 (3 n_d + 1))");
  opt_cmd->add_option("--seed", ocfg.seed, "RNG seed");
  opt_cmd->add_option("--threads", ocfg.threads, "Parallel evaluations")->envname("MEMNET_THREADS");
  opt_cmd->add_option("--out", opt_out, "Result file (JSON)");

  // table1
  auto* t1_cmd = app.add_subcommand("table1", "Reference guesses under both factor conventions");
  std::string t1_levels = "6,7,8";
  double t1_m = 0.5;
  t1_cmd->add_option("--levels", t1_levels, "Disk refinement levels (comma separated)");
  t1_cmd->add_option("--m", t1_m, "Reinforcement stiffness");

  // dirac
  auto* dirac_cmd = app.add_subcommand("dirac", "Refinement sweep under f = delta_A - delta_B");
  double dirac_L = 0.5;
  std::string dirac_levels = "3,4,5,6", dirac_factor = "energy";
  double dirac_m = 0.5;
  dirac_cmd->add_option("--L", dirac_L, "Network mass")->check(CLI::PositiveNumber);
  dirac_cmd->add_option("--levels", dirac_levels, "Disk refinement levels");
  dirac_cmd->add_option("--m", dirac_m, "Reinforcement stiffness");
  dirac_cmd->add_option("--factor", dirac_factor, "energy | paper");

  // homog1d
  auto* h_cmd = app.add_subcommand("homog1d", "Oscillating 1D reinforcement study");
  std::string periods = "1,2,4,...,64";
  std::size_t epp = 16;
  h_cmd->add_option("--periods", periods, "Period counts, e.g. 1,2,4,...,64");
  h_cmd->add_option("--epp", epp, "Elements per period (even)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    out << std::setprecision(10);
    if (*mesh_cmd) {
      const TriangleMesh mesh = generate_disk_mesh(mesh_radius, mesh_refine);
      save_mesh(mesh, mesh_out);
      out << "wrote " << mesh.num_vertices() << " vertices, " << mesh.num_triangles() << " triangles to "
          << mesh_out << '\n';
    } else if (*eval_cmd) {
      if (empty == !network_path.empty()) throw UsageError("eval needs exactly one of --network or --empty");
      SolveConfig cfg;
      cfg.m = m;
      cfg.factor = parse_factor(factor);
      cfg.method = method == "cg" ? SolveMethod::conjugate_gradient : SolveMethod::direct_cholesky;
      const TriangleMesh mesh = eval_mesh.build();
      const Evaluator ev(mesh, parse_load(load_str), cfg);
      Evaluator::Workspace ws;
      const WeightedNetwork net = empty ? WeightedNetwork{} : load_network(network_path);
      if (eval_L && std::abs(net.mass() - *eval_L) > 1e-8 * std::max(1.0, *eval_L))
        throw std::runtime_error("network mass " + std::to_string(net.mass()) + " differs from --L " +
                                 std::to_string(*eval_L));
      const CostReport rep = ev.evaluate(net, ws);
      out << "energy " << std::setprecision(10) << rep.energy << '\n';
      if (!report_path.empty()) write_text(report_path, cost_report_to_json(rep, cfg).dump(2) + "\n");
      if (!solution_path.empty()) {
        std::ostringstream os;
        write_solution_csv(mesh, rep.U, os);
        write_text(solution_path, os.str());
      }
      if (!profile_path.empty()) {
        std::ostringstream os;
        write_profile_csv(tangential_profile(ev.index(), ev.fem(), rep.U, net), os);
        write_text(profile_path, os.str());
      }
    } else if (*opt_cmd) {
      ocfg.factor = parse_factor(opt_factor);
      ocfg.validate();
      SolveConfig cfg;
      cfg.m = ocfg.m;
      cfg.factor = ocfg.factor;
      const Evaluator ev(opt_mesh.build(), parse_load(opt_load), cfg);
      const PipelineResult res = optimize(ocfg, ev);
      out << "global best " << res.global.best_energy << " after " << res.global.evaluations_used
          << " evaluations\n";
      out << "best_energy " << res.best.best_energy << " after " << res.best.evaluations_used << " evaluations\n";
      if (!opt_out.empty()) write_text(opt_out, pipeline_to_json(ocfg, res).dump(2) + "\n");
    } else if (*t1_cmd) {
      const auto rows = table1_study(parse_levels(t1_levels), t1_m);
      out << "network,L,reference,energy_consistent,paper_literal,hybrid,err_consistent,err_literal\n";
      bool consistent_ok = true, literal_ok = true;
      for (const auto& r : rows) {
        const double ec = std::abs(r.consistent_limit - r.reference);
        const double el = std::abs(r.literal_limit - r.reference);
        consistent_ok = consistent_ok && ec <= 5e-3;
        literal_ok = literal_ok && el <= 5e-3;
        out << r.name << ',' << r.L << ',' << r.reference << ',' << r.consistent_limit << ',' << r.literal_limit
            << ',' << r.hybrid_limit << ',' << ec << ',' << el << '\n';
      }
      out << "# within 5e-3 on every row: energy_consistent=" << (consistent_ok ? "yes" : "no")
          << " paper_literal=" << (literal_ok ? "yes" : "no") << '\n';
    } else if (*dirac_cmd) {
      SolveConfig cfg;
      cfg.m = dirac_m;
      cfg.factor = parse_factor(dirac_factor);
      const auto rows = dirac_probe({-0.5, 0.0}, {0.5, 0.0}, dirac_L, parse_levels(dirac_levels), cfg);
      out << "level,triangles,h,energy\n";
      for (const auto& r : rows) out << r.level << ',' << r.triangles << ',' << r.h << ',' << r.energy << '\n';
    } else if (*h_cmd) {
      out << "periods,E_n,E_harmonic,E_arithmetic\n";
      for (std::size_t n : parse_periods(periods)) {
        const auto r = homog1d(n, epp);
        out << r.periods << ',' << r.E_n << ',' << r.E_harmonic << ',' << r.E_arithmetic << '\n';
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace memnet::cli
