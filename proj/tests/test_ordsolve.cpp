#include <doctest.h>

#include <random>
#include <sstream>

#include "ordcomp/io.hpp"
#include "ordcomp/ordsolve.hpp"
#include "oracles.hpp"

using namespace ordcomp;

namespace {

Rhs rhs_of(const std::string& text, const PdeSystem& sys) {
  return Rhs::from_exprs(parse_scalar_exprs(text, sys.n, sys.has_time),
                         [&] {
                           std::vector<std::string> ts;
                           std::string cur;
                           std::istringstream in(text);
                           while (std::getline(in, cur, ';')) ts.push_back(cur);
                           return ts;
                         }());
}

}  // namespace

TEST_CASE("jet_solve: linear slot, closed form, and empty range") {
  SUBCASE("linear derivative slot") {
    const PdeSystem sys = parse_operator("dx1(u1) = f", 1, 0);
    JetSolverCfg cfg;
    const std::vector<double> jet = jet_solve(sys, Point({0.5}), {0.95}, cfg);
    const int slot = sys.jet.slot_index("u1", MultiIndex({1}));
    CHECK(jet[static_cast<size_t>(slot)] == doctest::Approx(0.95).epsilon(1e-9));
    CHECK(eval_F(sys, Point({0.5}), jet)[0] == doctest::Approx(0.95).epsilon(1e-9));
  }
  SUBCASE("NS closed-form hook hits the target exactly") {
    const PdeSystem ns = ns_system(0.01);
    JetSolverCfg cfg;
    const std::vector<double> target{-0.05, -0.05, -0.05, -0.05};
    const std::vector<double> jet = jet_solve(ns, Point({0.2, 0.3, 0.4, 0.1}), target, cfg);
    const std::vector<double> F = eval_F(ns, Point({0.2, 0.3, 0.4, 0.1}), jet);
    for (int k = 0; k < 4; ++k) CHECK(F[static_cast<size_t>(k)] == doctest::Approx(-0.05));
    // the constructed jet: velocities zero, time slots carry the targets
    CHECK(jet[static_cast<size_t>(ns.jet.slot_index("u1", MultiIndex::zeros(4)))] == 0.0);
    CHECK(jet[static_cast<size_t>(ns.jet.slot_index("u1", MultiIndex::unit(4, 3)))] == -0.05);
    CHECK(jet[static_cast<size_t>(ns.jet.slot_index("u1", MultiIndex::unit(4, 0)))] == -0.05);
    // cross-check against the hand-coded residual
    const auto hand = oracles::ns_residual_by_hand(ns.jet, jet, 0.01);
    for (int k = 0; k < 4; ++k) CHECK(hand[static_cast<size_t>(k)] == doctest::Approx(-0.05));
  }
  SUBCASE("square of a derivative cannot reach below zero") {
    const PdeSystem sys = parse_operator("dx1(u1)^2 = f", 1, 0);
    JetSolverCfg cfg;
    cfg.max_iterations = 60;
    CHECK_THROWS_AS((void)jet_solve(sys, Point({0.5}), {-0.05}, cfg), NoJetFound);
  }
}

TEST_CASE("taylor_patch reproduces the jet exactly") {
  const PdeSystem sys = parse_operator("dt(u1) + dxx1(u1) = f");
  std::vector<double> jet(static_cast<size_t>(sys.jet.K()));
  jet[static_cast<size_t>(sys.jet.slot_index("u1", MultiIndex({0, 1})))] = 3.0;
  jet[static_cast<size_t>(sys.jet.slot_index("u1", MultiIndex({2, 0})))] = 4.0;
  const Point center({1.0, 0.5});
  const std::vector<Poly> v = taylor_patch(jet, center, sys.jet, 2);
  REQUIRE(v.size() == 1);
  for (size_t s = 0; s < sys.jet.slots.size(); ++s)
    CHECK(v[0].deriv(center, sys.jet.slots[s].alpha) == jet[s]);
  CHECK_THROWS_AS(taylor_patch(jet, center, sys.jet, 1), DegreeTooLow);

  // 1D worked example: jet {value 2, d 3, d2 4} at center 1 is
  // 2 + 3(x-1) + 2(x-1)^2
  std::map<MultiIndex, double> c{{MultiIndex({0}), 2.0}, {MultiIndex({1}), 3.0},
                                 {MultiIndex({2}), 4.0}};
  const Poly p(Point({1.0}), c);
  CHECK(p.eval(Point({2.0})) == doctest::Approx(2 + 3 + 2));
  CHECK(p.eval(Point({0.0})) == doctest::Approx(2 - 3 + 2));
}

TEST_CASE("patch_with_initial pins the t=0 trace") {
  const PdeSystem sys = parse_operator("dt(u1) = f", 1, 1);
  SUBCASE("zero initial data, pure decay") {
    std::vector<double> jet(static_cast<size_t>(sys.jet.K()), 0.0);
    jet[static_cast<size_t>(sys.jet.slot_index("u1", MultiIndex({0, 1})))] = -0.05;
    const Poly u0 = Poly::constant(Point({0.5, 0.0}), 0.0);
    const auto v = patch_with_initial(jet, Point({0.5, 0.0}), {u0}, {"u1"}, sys.jet, 2);
    REQUIRE(v.size() == 1);
    CHECK(v[0].eval(Point({0.3, 0.0})) == 0.0);
    CHECK(v[0].eval(Point({0.3, 1.0})) == doctest::Approx(-0.05));
  }
  SUBCASE("linear initial data held for all time") {
    // u0 = x, zero time slots: u(x,t) = x
    std::vector<double> jet(static_cast<size_t>(sys.jet.K()), 0.0);
    std::map<MultiIndex, double> c{{MultiIndex({0, 0}), 0.5}, {MultiIndex({1, 0}), 1.0}};
    const Poly u0(Point({0.5, 0.0}), c);  // x recentered at 0.5
    const auto v = patch_with_initial(jet, Point({0.5, 0.0}), {u0}, {"u1"}, sys.jet, 2);
    for (double x : {0.1, 0.5, 0.9})
      for (double t : {0.0, 0.5, 1.0})
        CHECK(v[0].eval(Point({x, t})) == doctest::Approx(x).epsilon(1e-15));
  }
  SUBCASE("center must sit on the initial face") {
    std::vector<double> jet(static_cast<size_t>(sys.jet.K()), 0.0);
    const Poly u0 = Poly::constant(Point({0.5, 0.1}), 0.0);
    CHECK_THROWS_AS(
        (void)patch_with_initial(jet, Point({0.5, 0.1}), {u0}, {"u1"}, sys.jet, 2),
        CenterNotOnInitialFace);
  }
}

TEST_CASE("assemble: single-cell linear transport") {
  const PdeSystem sys = parse_operator("dx1(u1) = f", 1, 0);
  SolveCfg cfg;
  cfg.eps = 0.1;
  cfg.initial_cells = {1};
  const Box dom{Point({0.0}), Point({1.0})};
  const ApproxSolution sol = assemble(sys, dom, rhs_of("1", sys), std::nullopt, cfg, {});
  CHECK(sol.certificate.pass);
  CHECK(sol.w[0].complex().size() == 1);
  // residual is identically 0.95: margins are 0.05 on both sides
  CHECK(sol.certificate.worst_margin == doctest::Approx(0.05).epsilon(1e-8));
  const double slope = deriv_eval(sol.w[0], Point({0.3}), MultiIndex({1}));
  CHECK(slope == doctest::Approx(0.95).epsilon(1e-8));
}

TEST_CASE("assemble: pure-time ODE holds its constant initial value") {
  const PdeSystem sys = parse_operator("dt(u1) = f", 0, 1);
  CHECK(sys.n == 1);  // time only
  SolveCfg cfg;
  cfg.eps = 0.1;
  cfg.initial_cells = {2};
  const Box dom{Point({0.0}), Point({1.0})};
  const auto u0 = InitialData::from_exprs({"u1"}, {"0"}, 0);
  const ApproxSolution sol = assemble(sys, dom, rhs_of("1", sys), u0, cfg, {});
  CHECK(sol.certificate.pass);
  CHECK(sol.certificate.initial_defect == 0.0);
  // u(t) = 0.95 t on the initial layer
  CHECK(eval_nlsc(sol.w[0], Point({0.25})) == doctest::Approx(0.95 * 0.25).epsilon(1e-8));
}

TEST_CASE("assemble: space-time ODE with exact linear initial data") {
  const PdeSystem sys = parse_operator("dt(u1) = f", 1, 1);
  SolveCfg cfg;
  cfg.eps = 0.1;
  cfg.initial_cells = {1, 2};
  const Box dom{Point({0.0, 0.0}), Point({1.0, 1.0})};
  const auto u0 = InitialData::from_exprs({"u1"}, {"x1"}, 1);
  const ApproxSolution sol = assemble(sys, dom, rhs_of("1", sys), u0, cfg, {});
  CHECK(sol.certificate.pass);
  CHECK(sol.certificate.initial_defect == 0.0);
  // u(x, t) = x + 0.95 t on the initial layer
  CHECK(eval_nlsc(sol.w[0], Point({0.25, 0.25})) == doctest::Approx(0.25 + 0.95 * 0.25));
  const Certificate rev = verify(sol, 5, 999);
  CHECK(rev.pass);
  CHECK(rev.initial_defect == 0.0);
}

TEST_CASE("assemble: oscillatory right-hand side forces subdivision") {
  const PdeSystem sys = parse_operator("dx1(u1) = f", 1, 0);
  SolveCfg cfg;
  cfg.eps = 0.05;
  cfg.initial_cells = {8};
  cfg.max_depth = 14;
  const Box dom{Point({0.0}), Point({6.283185307179586})};
  const ApproxSolution sol = assemble(sys, dom, rhs_of("cos(5*x1)", sys), std::nullopt, cfg, {});
  CHECK(sol.certificate.pass);
  CHECK(sol.w[0].complex().size() > 8);

  // independent verification at a fresh seed and doubled density
  const Certificate rev = verify(sol, 2 * cfg.verify_density, 4242);
  CHECK(rev.pass);
  CHECK(rev.worst_margin > 0.0);

  // each sampled residual lies strictly inside (g - eps, g)
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> u(0.0, 6.283185307179586);
  for (int i = 0; i < 500; ++i) {
    const Point x({u(rng)});
    const size_t ci = sol.w[0].complex().interior_cell(x);
    if (ci == CellComplex::npos) continue;
    const double r = deriv_eval(sol.w[0], x, MultiIndex({1}));
    const double g = std::cos(5 * x[0]);
    CHECK(r > g - 0.05);
    CHECK(r < g);
  }
}

TEST_CASE("assemble failure modes") {
  SUBCASE("NoJetFound propagates with the cell") {
    const PdeSystem sys = parse_operator("dx1(u1)^2 = f", 1, 0);
    SolveCfg cfg;
    cfg.eps = 0.1;
    JetSolverCfg jcfg;
    jcfg.max_iterations = 40;
    const Box dom{Point({0.0}), Point({1.0})};
    CHECK_THROWS_AS(
        (void)assemble(sys, dom, rhs_of("0-1", sys), std::nullopt, cfg, jcfg), NoJetFound);
  }
  SUBCASE("DepthExhausted reports the worst margin") {
    const PdeSystem sys = parse_operator("dx1(u1) = f", 1, 0);
    SolveCfg cfg;
    cfg.eps = 1e-6;  // band far too thin for two bisections
    cfg.max_depth = 2;
    cfg.initial_cells = {2};
    const Box dom{Point({0.0}), Point({6.283185307179586})};
    CHECK_THROWS_AS(
        (void)assemble(sys, dom, rhs_of("cos(5*x1)", sys), std::nullopt, cfg, {}),
        DepthExhausted);
  }
}

TEST_CASE("certificates are deterministic") {
  const PdeSystem sys = parse_operator("dx1(u1) = f", 1, 0);
  SolveCfg cfg;
  cfg.eps = 0.05;
  cfg.initial_cells = {4};
  cfg.max_depth = 14;
  const Box dom{Point({0.0}), Point({3.0})};
  const ApproxSolution a = assemble(sys, dom, rhs_of("cos(5*x1)", sys), std::nullopt, cfg, {});
  const ApproxSolution b = assemble(sys, dom, rhs_of("cos(5*x1)", sys), std::nullopt, cfg, {});
  CHECK(write_solution_json(a) == write_solution_json(b));
  CHECK(write_certificate_json(verify(a, 3, 7)) == write_certificate_json(verify(b, 3, 7)));
}

TEST_CASE("verify: band geometry and stricter bands") {
  const PdeSystem sys = parse_operator("dx1(u1) = f", 1, 0);
  SolveCfg cfg;
  cfg.eps = 0.1;
  cfg.initial_cells = {1};
  const Box dom{Point({0.0}), Point({1.0})};
  ApproxSolution sol = assemble(sys, dom, rhs_of("1", sys), std::nullopt, cfg, {});

  const Certificate ok = verify(sol, 4, 11);
  CHECK(ok.pass);
  CHECK(ok.worst_margin == doctest::Approx(0.05).epsilon(1e-8));

  // the same solution fails a band four times thinner: 0.95 < 0.99
  sol.eps = 0.01;
  const Certificate bad = verify(sol, 4, 11);
  CHECK_FALSE(bad.pass);

  // monotone in eps: any wider band certified by the same theta-target
  sol.eps = 0.25;
  CHECK(verify(sol, 4, 11).pass);
}

TEST_CASE("zeroth-order operator: constant-solution sequence") {
  const PdeSystem sys = parse_operator("u1 = f", 1, 0);
  SolveCfg cfg;
  cfg.initial_cells = {4};
  cfg.seq_grid_nodes = {129};
  cfg.seq_gap_slack = 1e-9;
  const Box dom{Point({0.0}), Point({1.0})};
  const SequenceResult seq =
      solution_sequence(sys, dom, rhs_of("0", sys), std::nullopt, {2, 4, 8, 16}, cfg, {});
  REQUIRE(seq.solutions.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    const int n = 2 << i;
    CHECK(seq.solutions[i].certificate.pass);
    // w_n is the constant -theta/n
    const double v = eval_nlsc(seq.solutions[i].w[0], Point({0.4}));
    CHECK(v == doctest::Approx(-0.5 / n).epsilon(1e-8));
  }
  REQUIRE(seq.convergence.size() == 1);
  CHECK(seq.convergence[0].converged);
  REQUIRE(seq.chains.size() == 1);
}

TEST_CASE("solution_sequence: transport residuals order-converge to g") {
  const PdeSystem sys = parse_operator("dx1(u1) = f", 1, 0);
  SolveCfg cfg;
  cfg.initial_cells = {2};
  cfg.seq_grid_nodes = {257};
  cfg.seq_gap_slack = 1e-9;  // constants: no regularization drift
  const Box dom{Point({0.0}), Point({1.0})};
  const SequenceResult seq =
      solution_sequence(sys, dom, rhs_of("1", sys), std::nullopt, {2, 4, 8, 16}, cfg, {});
  for (size_t i = 0; i < 4; ++i) {
    const int n = 2 << i;
    // residual is g - theta/n everywhere
    const double r = deriv_eval(seq.solutions[i].w[0], Point({0.3}), MultiIndex({1}));
    CHECK(r == doctest::Approx(1.0 - 0.5 / n).epsilon(1e-8));
  }
  CHECK(seq.convergence[0].converged);
  CHECK(seq.convergence[0].witness.residual <= 0.5 / 8 - 0.5 / 16 + 1e-9);
}

TEST_CASE("neighbor matching biases free value slots") {
  // dx1(u1) = 1 leaves the value slot free; neighbor matching keeps it at
  // the mean of already-solved neighbors instead of zero
  const PdeSystem sys = parse_operator("u1*0 + dx1(u1) = f", 1, 0);
  SolveCfg cfg;
  cfg.eps = 0.1;
  cfg.initial_cells = {2};
  cfg.neighbor_matching = true;
  const Box dom{Point({0.0}), Point({1.0})};
  const ApproxSolution sol = assemble(sys, dom, rhs_of("1", sys), std::nullopt, cfg, {});
  CHECK(sol.certificate.pass);
}

TEST_CASE("small NS run: certificate passes with strict bands") {
  const PdeSystem ns = ns_system(0.01);
  SolveCfg cfg;
  cfg.eps = 0.25;
  cfg.initial_cells = {2, 2, 2, 2};
  cfg.max_depth = 3;
  cfg.verify_density = 3;
  const Box dom{Point({0.0, 0.0, 0.0, 0.0}), Point({1.0, 1.0, 1.0, 0.25})};
  const auto u0 = InitialData::from_exprs({"u1", "u2", "u3"}, {"0.1*x2", "-0.1*x1", "0"}, 3);
  const ApproxSolution sol = assemble(ns, dom, rhs_of("0;0;0;0", ns), u0, cfg, {});
  CHECK(sol.certificate.pass);
  CHECK(sol.certificate.initial_defect == 0.0);
  CHECK(sol.certificate.worst_margin > 0.0);
  const Certificate rev = verify(sol, 3, 555);
  CHECK(rev.pass);
  CHECK(rev.initial_defect == 0.0);
}
