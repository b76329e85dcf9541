// ordcomp: command-line front end for the order-completion solver library.
//
// Subcommands: regularize, sup, inf, leq, converge, chain-check, solve,
// verify, demo-ns. Every run is a pure function of its config, input files
// and seed; all floating-point output carries 17 significant digits.
// Exit codes: 0 pass, 2 input error, 3 solve failure, 4 internal error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ordcomp/io.hpp"
#include "ordcomp/lattice.hpp"
#include "ordcomp/ordsolve.hpp"

using namespace ordcomp;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path);
  out << text;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const std::string& tok : split_list(s, ',')) out.push_back(std::stod(tok));
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (const std::string& tok : split_list(s, ',')) out.push_back(std::stoi(tok));
  return out;
}

bool all_have_suffix(const std::vector<std::string>& paths, const std::string& suffix) {
  for (const std::string& p : paths)
    if (p.size() < suffix.size() || p.compare(p.size() - suffix.size(), suffix.size(), suffix) != 0)
      return false;
  return true;
}

std::vector<FnValue> load_family(const std::vector<std::string>& paths) {
  if (paths.empty()) throw InputError("no input files given");
  if (all_have_suffix(paths, ".csv")) {
    std::vector<FnValue> out;
    for (const std::string& p : paths) out.emplace_back(read_gridfn_csv_file(p));
    return out;
  }
  if (all_have_suffix(paths, ".json")) {
    std::vector<FnValue> out;
    for (const std::string& p : paths) out.emplace_back(read_pwexpr_json_file(p));
    return out;
  }
  throw InputError("inputs must be all GridFn .csv or all piecewise .json, not a mix");
}

struct SolveArgs {
  std::string system_path;
  std::string system_text;
  std::string rhs = "0";
  std::string domain_lo;
  std::string domain_hi;
  std::string u0;
  std::string u0_unknowns;
  std::string n_list;
  std::string cells = "1";
  std::string out = "solution.json";
  std::string dump;
  int dump_density = 4;
  SolveCfg cfg;
  JetSolverCfg jcfg;
};

void add_solver_flags(CLI::App* cmd, SolveArgs& a) {
  cmd->add_option("--system", a.system_path, "path to the equation DSL file");
  cmd->add_option("--system-text", a.system_text, "inline equation DSL");
  cmd->add_option("--rhs", a.rhs, "right-hand side expressions, ';'-separated");
  cmd->add_option("--domain-lo", a.domain_lo, "domain lower corner, comma-separated")->required();
  cmd->add_option("--domain-hi", a.domain_hi, "domain upper corner, comma-separated")->required();
  cmd->add_option("--u0", a.u0, "initial data expressions, ';'-separated");
  cmd->add_option("--u0-unknowns", a.u0_unknowns, "unknowns carrying initial data (default: all)");
  cmd->add_option("--eps", a.cfg.eps, "band width epsilon");
  cmd->add_option("--n-list", a.n_list, "defect sequence: run eps = 1/n for each n");
  cmd->add_option("--theta", a.cfg.theta, "band target offset fraction");
  cmd->add_option("--cells", a.cells, "initial cells per axis, comma-separated");
  cmd->add_option("--max-depth", a.cfg.max_depth, "maximum bisection depth");
  cmd->add_option("--samples", a.cfg.verify_density, "verification samples per axis per cell");
  cmd->add_option("--cert-density", a.cfg.cert_density, "certificate sampling density");
  cmd->add_option("--seed", a.cfg.seed, "verification seed");
  cmd->add_option("--degree", a.cfg.degree, "patch polynomial degree");
  cmd->add_flag("--neighbor-matching", a.cfg.neighbor_matching,
                "bias free value slots toward solved neighbors");
  cmd->add_option("--threads", a.cfg.threads, "worker cap (default: ORDCOMP_THREADS or 1)");
  cmd->add_option("--jet-tol", a.jcfg.tolerance, "jet solver residual tolerance");
  cmd->add_option("--jet-iters", a.jcfg.max_iterations, "jet solver iteration cap");
  cmd->add_option("--u0-tol", a.cfg.u0_tol, "initial defect tolerance");
  cmd->add_option("--out", a.out, "solution JSON output path");
  cmd->add_option("--dump", a.dump, "plot-ready sample dump CSV path");
  cmd->add_option("--dump-density", a.dump_density, "sample dump density");
}

Box parse_domain(const SolveArgs& a) {
  return Box{Point(parse_doubles(a.domain_lo)), Point(parse_doubles(a.domain_hi))};
}

int run_solve_common(const PdeSystem& sys, const Box& domain, const SolveArgs& a) {
  const Rhs g = Rhs::from_exprs(parse_scalar_exprs(a.rhs, sys.n, sys.has_time),
                                split_list(a.rhs, ';'));
  if (g.components() != sys.m())
    throw InputError("rhs must provide one expression per equation");

  std::optional<InitialData> u0;
  if (!a.u0.empty()) {
    std::vector<std::string> unknowns;
    if (!a.u0_unknowns.empty()) {
      unknowns = split_list(a.u0_unknowns, ',');
    } else if (!sys.initial_unknowns.empty()) {
      unknowns = sys.initial_unknowns;
    } else {
      unknowns = sys.jet.unknowns;
    }
    u0 = InitialData::from_exprs(unknowns, split_list(a.u0, ';'), sys.n_spatial());
  }

  SolveCfg cfg = a.cfg;
  cfg.initial_cells = parse_ints(a.cells);

  const auto t0 = std::chrono::steady_clock::now();
  if (!a.n_list.empty()) {
    const SequenceResult seq =
        solution_sequence(sys, domain, g, u0, parse_ints(a.n_list), cfg, a.jcfg);
    bool all_pass = true;
    std::string base = a.out;
    if (base.size() > 5 && base.ends_with(".json")) base = base.substr(0, base.size() - 5);
    for (size_t i = 0; i < seq.solutions.size(); ++i) {
      spit(base + "_n" + std::to_string(parse_ints(a.n_list)[i]) + ".json",
           write_solution_json(seq.solutions[i]));
      all_pass = all_pass && seq.solutions[i].certificate.pass;
    }
    bool conv = true;
    for (size_t k = 0; k < seq.convergence.size(); ++k) {
      std::cout << write_converge_report_json(seq.convergence[k], seq.check_cfg) << "\n";
      conv = conv && seq.convergence[k].converged;
    }
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
    std::cerr << "wall time " << dt.count() << " s\n";
    return (all_pass && conv) ? 0 : 3;
  }

  const ApproxSolution sol = assemble(sys, domain, g, u0, a.jcfg.use_hooks ? cfg : cfg, a.jcfg);
  spit(a.out, write_solution_json(sol));
  if (!a.dump.empty()) spit(a.dump, write_sample_dump_csv(sol, a.dump_density));
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);

  const Certificate& c = sol.certificate;
  std::cout << "cells " << c.cells.size() << "  worst_margin " << fmt_double(c.worst_margin)
            << "  initial_defect " << fmt_double(c.initial_defect) << "  pass "
            << (c.pass ? "true" : "false") << "\n";
  std::cerr << "wall time " << dt.count() << " s\n";
  return c.pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"order-completion solver toolkit"};
  app.set_config("--config", "", "flat key=value config file; flags override");
  app.require_subcommand(1);

  // ---- regularize ----
  std::string reg_in, reg_out;
  int r_inner = 1, r_outer = 2;
  CLI::App* reg = app.add_subcommand("regularize", "apply the discrete lower-of-upper envelope");
  reg->add_option("--in", reg_in)->required();
  reg->add_option("--out", reg_out)->required();
  reg->add_option("--r-inner", r_inner);
  reg->add_option("--r-outer", r_outer);

  // ---- sup / inf ----
  std::vector<std::string> family_paths;
  std::string fam_out;
  LatticeCfg lat_cfg;
  CLI::App* sup = app.add_subcommand("sup", "regularized least upper bound of a family");
  CLI::App* inf = app.add_subcommand("inf", "regularized greatest lower bound of a family");
  for (CLI::App* c : {sup, inf}) {
    c->add_option("inputs", family_paths, "input files (all .csv or all .json)")->required();
    c->add_option("--out", fam_out)->required();
    c->add_option("--r-inner", lat_cfg.r_inner);
    c->add_option("--r-outer", lat_cfg.r_outer);
  }

  // ---- leq ----
  std::vector<std::string> leq_paths;
  int leq_density = 4;
  double leq_tol = 1e-9;
  CLI::App* leq = app.add_subcommand("leq", "sample-scale order test f <= g");
  leq->add_option("inputs", leq_paths, "two piecewise .json files")->expected(2);
  leq->add_option("--density", leq_density);
  leq->add_option("--tol", leq_tol);

  // ---- converge ----
  std::vector<std::string> conv_paths;
  std::string conv_candidate;
  std::string conv_report;
  LatticeCfg conv_cfg;
  CLI::App* conv = app.add_subcommand("converge", "order-convergence check of a sequence");
  conv->add_option("inputs", conv_paths, "sequence files, in order")->required();
  conv->add_option("--candidate", conv_candidate, "candidate limit file")->required();
  conv->add_option("--gap-tol", conv_cfg.gap_tol);
  conv->add_option("--candidate-tol", conv_cfg.candidate_tol);
  conv->add_option("--density", conv_cfg.density);
  conv->add_option("--r-inner", conv_cfg.r_inner);
  conv->add_option("--r-outer", conv_cfg.r_outer);
  conv->add_option("--report", conv_report, "also write the verdict JSON here");

  // ---- chain-check ----
  std::string chain_spec;
  std::string chain_report;
  LatticeCfg chain_cfg;
  CLI::App* chain = app.add_subcommand("chain-check", "pinching test for interval chains");
  chain->add_option("--spec", chain_spec, "chain spec JSON")->required();
  chain->add_option("--gap-tol", chain_cfg.gap_tol);
  chain->add_option("--density", chain_cfg.density);
  chain->add_option("--report", chain_report);

  // ---- solve ----
  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "certified band solve of a PDE system");
  add_solver_flags(solve, solve_args);

  // ---- verify ----
  std::string ver_solution;
  std::string ver_out;
  int ver_density = 8;
  std::uint64_t ver_seed = 2;
  double ver_eps = -1;
  CLI::App* ver = app.add_subcommand("verify", "re-check a solution at fresh samples");
  ver->add_option("--solution", ver_solution)->required();
  ver->add_option("--density", ver_density);
  ver->add_option("--seed", ver_seed);
  ver->add_option("--eps", ver_eps, "override the band width");
  ver->add_option("--out", ver_out, "write the fresh certificate JSON here");

  // ---- demo-ns ----
  SolveArgs ns_args;
  double ns_nu = 0.01;
  std::string ns_f = "0;0;0";
  std::string ns_convective = "printed";
  CLI::App* demo = app.add_subcommand("demo-ns", "Navier-Stokes initial-value demo");
  ns_args.rhs.clear();
  ns_args.domain_lo = "0,0,0,0";
  ns_args.domain_hi = "1,1,1,0.25";
  ns_args.u0 = "0.1*x2;-0.1*x1;0";
  ns_args.cells = "2,2,2,2";
  ns_args.cfg.eps = 0.25;
  ns_args.cfg.max_depth = 3;
  ns_args.cfg.verify_density = 3;
  ns_args.out = "ns_solution.json";
  demo->add_option("--nu", ns_nu, "viscosity");
  demo->add_option("--f", ns_f, "momentum forcing expressions, ';'-separated");
  demo->add_option("--convective", ns_convective, "printed | standard");
  demo->add_option("--domain-lo", ns_args.domain_lo);
  demo->add_option("--domain-hi", ns_args.domain_hi);
  demo->add_option("--u0", ns_args.u0, "divergence-free initial velocity");
  demo->add_option("--eps", ns_args.cfg.eps);
  demo->add_option("--theta", ns_args.cfg.theta);
  demo->add_option("--cells", ns_args.cells);
  demo->add_option("--max-depth", ns_args.cfg.max_depth);
  demo->add_option("--samples", ns_args.cfg.verify_density);
  demo->add_option("--seed", ns_args.cfg.seed);
  demo->add_option("--threads", ns_args.cfg.threads);
  demo->add_option("--out", ns_args.out);
  demo->add_option("--dump", ns_args.dump);

  try {
    app.parse(argc, argv);

    if (*reg) {
      const GridFn u = read_gridfn_csv_file(reg_in);
      const GridFn v = nlsc_regularize(u, r_inner, r_outer);
      write_gridfn_csv_file(v, reg_out);
      size_t changed = 0;
      for (size_t i = 0; i < u.values.size(); ++i)
        if (!(u.values[i] == v.values[i])) ++changed;
      std::cout << "regularized " << u.values.size() << " nodes, " << changed << " changed\n";
      return 0;
    }

    if (*sup || *inf) {
      const std::vector<FnValue> family = load_family(family_paths);
      const FnValue res = *sup ? dedekind_sup(family, lat_cfg) : dedekind_inf(family, lat_cfg);
      if (const GridFn* g = std::get_if<GridFn>(&res)) {
        write_gridfn_csv_file(*g, fam_out);
      } else {
        spit(fam_out, write_pwexpr_json(std::get<PwExpr>(res)));
      }
      std::cout << "{\"op\":\"" << (*sup ? "sup" : "inf")
                << "\",\"inputs\":" << family_paths.size() << ",\"mode\":\""
                << (std::holds_alternative<GridFn>(res) ? "grid" : "exact-pw")
                << "\",\"r_inner\":" << lat_cfg.r_inner << ",\"r_outer\":" << lat_cfg.r_outer
                << "}\n";
      return 0;
    }

    if (*leq) {
      const PwExpr f = read_pwexpr_json_file(leq_paths[0]);
      const PwExpr g = read_pwexpr_json_file(leq_paths[1]);
      const LeqResult r = leq_samples(f, g, leq_density, leq_tol);
      if (r.holds) {
        std::cout << "{\"verdict\":\"True\",\"density\":" << leq_density << "}\n";
      } else {
        std::cout << "{\"verdict\":\"CounterexampleAt\",\"point\":[";
        for (int i = 0; i < r.witness.dim(); ++i)
          std::cout << (i ? "," : "") << fmt_double(r.witness[i]);
        std::cout << "],\"gap\":" << fmt_double(r.gap) << "}\n";
      }
      return 0;
    }

    if (*conv) {
      const std::vector<FnValue> seq = load_family(conv_paths);
      const FnValue candidate = load_family({conv_candidate}).front();
      const ConvergeResult r = order_converges(seq, candidate, conv_cfg);
      const std::string report = write_converge_report_json(r, conv_cfg);
      std::cout << report << "\n";
      if (!conv_report.empty()) spit(conv_report, report);
      return 0;
    }

    if (*chain) {
      const nlohmann::json spec = nlohmann::json::parse(slurp(chain_spec));
      std::vector<IntervalChain> chains;
      for (const auto& cj : spec.at("chains")) {
        std::vector<OrderInterval> intervals;
        for (const auto& ij : cj.at("intervals")) {
          FnValue lo = load_family({ij.at("lo").get<std::string>()}).front();
          FnValue hi = load_family({ij.at("hi").get<std::string>()}).front();
          intervals.emplace_back(std::move(lo), std::move(hi), chain_cfg);
        }
        chains.emplace_back(std::move(intervals), chain_cfg);
      }
      std::vector<Box> opens;
      for (const auto& oj : spec.at("opens")) {
        std::vector<double> lo, hi;
        for (const auto& v : oj.at("lo")) lo.push_back(v.get<double>());
        for (const auto& v : oj.at("hi")) hi.push_back(v.get<double>());
        opens.emplace_back(Point(std::move(lo)), Point(std::move(hi)));
      }
      const auto verdicts = chain_check(chains, opens, chain_cfg);
      const std::string report = write_chain_report_json(verdicts, chain_cfg);
      std::cout << report << "\n";
      if (!chain_report.empty()) spit(chain_report, report);
      return 0;
    }

    if (*solve) {
      std::string text = solve_args.system_text;
      if (text.empty() && !solve_args.system_path.empty()) text = slurp(solve_args.system_path);
      if (text.empty()) throw InputError("solve: give --system or --system-text");
      const Box domain = parse_domain(solve_args);
      const PdeSystem probe = parse_operator(text);
      const bool has_time = probe.has_time || !solve_args.u0.empty();
      const int ns = domain.dim() - (has_time ? 1 : 0);
      if (ns < 0) throw InputError("solve: domain dimension too small for a time axis");
      const PdeSystem sys = parse_operator(text, ns, has_time ? 1 : 0);
      return run_solve_common(sys, domain, solve_args);
    }

    if (*ver) {
      ApproxSolution sol = read_solution_json_file(ver_solution);
      if (ver_eps > 0) sol.eps = ver_eps;
      const Certificate cert = verify(sol, ver_density, ver_seed);
      const std::string report = write_certificate_json(cert);
      std::cout << report << "\n";
      if (!ver_out.empty()) spit(ver_out, report);
      return cert.pass ? 0 : 3;
    }

    if (*demo) {
      if (ns_convective != "printed" && ns_convective != "standard")
        throw InputError("demo-ns: --convective must be printed or standard");
      const PdeSystem ns = ns_system(ns_nu, ns_convective == "standard");
      if (split_list(ns_f, ';').size() != 3)
        throw InputError("demo-ns: --f needs three expressions");
      ns_args.rhs = ns_f + ";0";
      ns_args.u0_unknowns = "u1,u2,u3";
      const Box domain = parse_domain(ns_args);
      if (domain.dim() != 4) throw InputError("demo-ns: domain must be 3+1 dimensional");
      return run_solve_common(ns, domain, ns_args);
    }

    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      (void)app.exit(e);
      return 0;
    }
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const SolveError& e) {
    std::cerr << "solve failure: " << e.what() << "\n";
    return 3;
  } catch (const InternalError& e) {
    std::cerr << "internal invariant violation: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
