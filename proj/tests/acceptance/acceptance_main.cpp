// Acceptance suite: one check per criterion, each printing a single
// pass/fail line with its runtime. Expected values come from independent
// oracles (direct window loops, hand-coded residuals, closed-form
// arithmetic), never from the implementation path under test.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <vector>

#include "ordcomp/io.hpp"
#include "ordcomp/lattice.hpp"
#include "ordcomp/ordsolve.hpp"
#include "../oracles.hpp"

using namespace ordcomp;

namespace {

struct Checker {
  bool ok = true;
  std::string first_failure;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      first_failure = what;
    }
  }
};

double value(const GridFn& u, size_t i) { return u.values[i].value(); }

// ---------------------------------------------------------------- AC1

void ac1_envelope_laws(Checker& c) {
  std::mt19937_64 rng(0xAC1);
  std::uniform_int_distribution<int> dim_pick(1, 3);
  std::uniform_int_distribution<int> node_pick(2, 33);

  for (int trial = 0; trial < 500; ++trial) {
    const int d = dim_pick(rng);
    std::vector<int> nodes(static_cast<size_t>(d));
    for (int& n : nodes) n = node_pick(rng);
    std::vector<double> lo(static_cast<size_t>(d), 0.0), hi(static_cast<size_t>(d), 1.0);
    Grid g(Box{Point(lo), Point(hi)}, nodes);
    const GridFn u = oracles::random_gridfn(rng, g, 0.03);
    const int r = 1 + static_cast<int>(rng() % 2);
    const GridFn le = lower_envelope(u, r);
    const GridFn ue = upper_envelope(u, r);
    for (size_t i = 0; i < u.values.size(); ++i)
      c.require(le.values[i] <= u.values[i] && u.values[i] <= ue.values[i],
                "envelope order violated");
    // duality: upper(-u) = -lower(u), exactly
    const GridFn dual = upper_envelope(negate(u), r);
    const GridFn nle = negate(le);
    for (size_t i = 0; i < u.values.size(); ++i)
      c.require(dual.values[i] == nle.values[i], "envelope duality violated");
  }

  // monotonicity of all four operators on comparable pairs
  for (int trial = 0; trial < 100; ++trial) {
    const int d = dim_pick(rng);
    std::vector<int> nodes(static_cast<size_t>(d));
    for (int& n : nodes) n = node_pick(rng);
    std::vector<double> lo(static_cast<size_t>(d), 0.0), hi(static_cast<size_t>(d), 1.0);
    Grid g(Box{Point(lo), Point(hi)}, nodes);
    const GridFn u = oracles::random_gridfn(rng, g, 0.03);
    GridFn v = oracles::random_gridfn(rng, g, 0.03);
    for (size_t i = 0; i < v.values.size(); ++i) v.values[i] = max(u.values[i], v.values[i]);

    const std::pair<GridFn, GridFn> pairs[] = {
        {lower_envelope(u, 1), lower_envelope(v, 1)},
        {upper_envelope(u, 1), upper_envelope(v, 1)},
        {nlsc_regularize(u, 1, 2), nlsc_regularize(v, 1, 2)},
        {usc_then_nlsc(u, 1), usc_then_nlsc(v, 1)},
    };
    for (const auto& [a, b] : pairs)
      for (size_t i = 0; i < a.values.size(); ++i)
        c.require(a.values[i] <= b.values[i], "envelope monotonicity violated");
  }
}

// ---------------------------------------------------------------- AC2

// random piecewise-constant complex on [0,1]^d with cuts on the coarse
// lattice and cell widths of at least 4 coarse spacings
PwPoly random_pw_constant(std::mt19937_64& rng, int d, int coarse_nodes) {
  std::uniform_real_distribution<double> val(-4, 4);
  const int segs = coarse_nodes - 1;
  std::vector<std::vector<double>> cuts(static_cast<size_t>(d));
  for (int a = 0; a < d; ++a) {
    cuts[static_cast<size_t>(a)].push_back(0.0);
    int pos = 0;
    for (;;) {
      const int step = 4 + static_cast<int>(rng() % 8);
      if (pos + step >= segs - 3) break;
      pos += step;
      cuts[static_cast<size_t>(a)].push_back(static_cast<double>(pos) / segs);
    }
    cuts[static_cast<size_t>(a)].push_back(1.0);
  }
  std::vector<Box> cells;
  std::vector<Poly> pieces;
  std::vector<size_t> idx(static_cast<size_t>(d), 0);
  for (;;) {
    std::vector<double> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d));
    for (int a = 0; a < d; ++a) {
      lo[static_cast<size_t>(a)] = cuts[static_cast<size_t>(a)][idx[static_cast<size_t>(a)]];
      hi[static_cast<size_t>(a)] = cuts[static_cast<size_t>(a)][idx[static_cast<size_t>(a)] + 1];
    }
    cells.emplace_back(Point(lo), Point(hi));
    pieces.push_back(Poly::constant(cells.back().center(), val(rng)));
    int a = d - 1;
    while (a >= 0 && ++idx[static_cast<size_t>(a)] >= cuts[static_cast<size_t>(a)].size() - 1) {
      idx[static_cast<size_t>(a)] = 0;
      --a;
    }
    if (a < 0) break;
  }
  std::vector<double> lo(static_cast<size_t>(d), 0.0), hi(static_cast<size_t>(d), 1.0);
  return PwPoly(CellComplex(Box{Point(lo), Point(hi)}, std::move(cells)), std::move(pieces));
}

double skeleton_distance(const PwPoly& f, const Point& x) {
  double dist = std::numeric_limits<double>::infinity();
  for (const Box& cell : f.complex().cells()) {
    for (int a = 0; a < cell.dim(); ++a) {
      for (double face : {cell.lo[a], cell.hi[a]}) {
        if (face == f.complex().domain().lo[a] || face == f.complex().domain().hi[a]) continue;
        dist = std::min(dist, std::abs(x[a] - face));
      }
    }
  }
  return dist;
}

void ac2_nlsc_bridge(Checker& c) {
  std::mt19937_64 rng(0xAC2);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 2);
    const int coarse = 33;
    const PwPoly f = random_pw_constant(rng, d, coarse);
    double prev_skel = -1.0;
    for (int level = 0; level < 3; ++level) {
      const int nodes = ((coarse - 1) << level) + 1;
      std::vector<int> npa(static_cast<size_t>(d), nodes);
      Grid grid(f.complex().domain(), npa);
      const double h = grid.spacing(0);
      const GridFn sampled = to_gridfn(f, grid);
      const GridFn reg = nlsc_regularize(sampled, 1, 2);
      double skel_err = 0.0;
      std::vector<int> idx(static_cast<size_t>(d), 0);
      for (;;) {
        const size_t flat = grid.flat_index(idx);
        const Point x = grid.node_point(idx);
        const double dist = skeleton_distance(f, x);
        if (dist > 2 * h + 1e-12) {
          c.require(value(reg, flat) == value(sampled, flat),
                    "regularized samples differ off the skeleton");
        } else if (dist == 0.0) {
          skel_err = std::max(skel_err, std::abs(value(reg, flat) - value(sampled, flat)));
        }
        int a = d - 1;
        while (a >= 0 &&
               ++idx[static_cast<size_t>(a)] >= grid.nodes_per_axis[static_cast<size_t>(a)]) {
          idx[static_cast<size_t>(a)] = 0;
          --a;
        }
        if (a < 0) break;
      }
      if (level == 0) prev_skel = skel_err;
      if (level == 2)
        c.require(skel_err <= prev_skel / 4.0 + 1e-12,
                  "skeleton disagreement did not shrink with the refinement");
    }
  }

  // continuum-limit rate on continuous kinked data: error <= L * r_outer * h
  // everywhere and it scales linearly in h on nested grids
  std::uniform_real_distribution<double> val(-2, 2);
  for (int trial = 0; trial < 25; ++trial) {
    const double kink = (8 + static_cast<int>(rng() % 17)) / 32.0;
    const double a = val(rng), b = val(rng), s = val(rng);
    auto fn = [&](double x) { return a + b * x + s * std::abs(x - kink); };
    const double L = std::abs(b) + std::abs(s);
    double err_h = 0.0;
    for (int level = 0; level < 3; ++level) {
      const int nodes = (32 << level) + 1;
      Grid grid(Box{Point({0.0}), Point({1.0})}, {nodes});
      std::vector<XReal> vals(grid.node_count());
      for (size_t i = 0; i < vals.size(); ++i) vals[i] = XReal(fn(grid.node_coord(0, static_cast<int>(i))));
      const GridFn sampled(grid, vals);
      const GridFn reg = nlsc_regularize(sampled, 1, 2);
      double err = 0.0;
      for (size_t i = 0; i < vals.size(); ++i)
        err = std::max(err, std::abs(value(reg, i) - value(sampled, i)));
      c.require(err <= L * 2 * grid.spacing(0) + 1e-12, "continuum rate bound violated");
      if (level == 0) err_h = err;
      if (level == 2) c.require(err <= err_h / 4.0 + 1e-12, "continuum rate is not first order");
    }
  }
}

// ---------------------------------------------------------------- AC3

GridFn random_step_or_linear(std::mt19937_64& rng, const Grid& g, std::vector<double>& jumps) {
  std::uniform_real_distribution<double> val(-3, 3);
  const bool step = rng() % 2 == 0;
  const double cut = (1 + static_cast<int>(rng() % 15)) / 16.0;
  std::vector<XReal> v(g.node_count());
  const double a = val(rng), b = val(rng), s = val(rng);
  for (size_t i = 0; i < v.size(); ++i) {
    const double x = g.node_coord(0, static_cast<int>(i));
    if (step) {
      v[i] = XReal(x < cut ? a : b);
    } else {
      v[i] = XReal(a + b * x + s * std::max(0.0, x - cut));
    }
  }
  if (step) jumps.push_back(cut);
  return GridFn(g, std::move(v));
}

void ac3_dedekind_vs_bruteforce(Checker& c) {
  std::mt19937_64 rng(0xAC3);
  Grid g(Box{Point({0.0}), Point({1.0})}, {513});
  const double h = g.spacing(0);
  int candidates_checked = 0;

  for (int trial = 0; trial < 200; ++trial) {
    std::vector<FnValue> family;
    std::vector<double> jumps;
    const int sz = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < sz; ++i) family.emplace_back(random_step_or_linear(rng, g, jumps));

    // oracle: direct full-window composition of the pointwise envelopes
    GridFn raw_max = std::get<GridFn>(family[0]);
    GridFn raw_min = raw_max;
    for (const FnValue& f : family) {
      const GridFn& u = std::get<GridFn>(f);
      for (size_t i = 0; i < u.values.size(); ++i) {
        raw_max.values[i] = max(raw_max.values[i], u.values[i]);
        raw_min.values[i] = min(raw_min.values[i], u.values[i]);
      }
    }
    const GridFn sup_oracle = oracles::naive_nlsc_regularize(raw_max, 1, 2);
    const GridFn inf_oracle = oracles::naive_usc_then_nlsc(raw_min, 1);

    const GridFn sup_impl = std::get<GridFn>(dedekind_sup(family));
    const GridFn inf_impl = std::get<GridFn>(dedekind_inf(family));

    for (size_t i = 0; i < sup_impl.values.size(); ++i) {
      const double x = g.node_coord(0, static_cast<int>(i));
      bool near_jump = false;
      for (double j : jumps) near_jump = near_jump || std::abs(x - j) < 2 * h;
      if (near_jump) continue;
      c.require(std::abs(value(sup_impl, i) - value(sup_oracle, i)) <= 1e-12,
                "sup differs from the shrinking-window oracle");
      c.require(std::abs(value(inf_impl, i) - value(inf_oracle, i)) <= 1e-12,
                "inf differs from the shrinking-window oracle");
    }

    // least-upper-bound property against random candidate bounds: any
    // nodewise bound w of the family dominates the regularized sup up to
    // its own variation over one window step
    std::uniform_real_distribution<double> val(-2, 2);
    for (int k = 0; k < 5; ++k) {
      const double a = val(rng), b = val(rng);
      std::vector<XReal> wv(g.node_count());
      for (size_t i = 0; i < wv.size(); ++i) {
        const double x = g.node_coord(0, static_cast<int>(i));
        double w = a + b * x;
        w = std::max(w, value(raw_max, i));
        wv[i] = XReal(w);
      }
      const GridFn w(g, std::move(wv));
      double step_var = 0.0;
      for (size_t i = 0; i + 1 < w.values.size(); ++i)
        step_var = std::max(step_var, std::abs(value(w, i + 1) - value(w, i)));
      for (size_t i = 0; i < w.values.size(); ++i)
        c.require(value(sup_impl, i) <= value(w, i) + step_var + 1e-12,
                  "sup exceeds a candidate upper bound");
      // dual: greatest lower bound against candidate minorants
      std::vector<XReal> lv(g.node_count());
      for (size_t i = 0; i < lv.size(); ++i) {
        double l = a + b * g.node_coord(0, static_cast<int>(i));
        l = std::min(l, value(raw_min, i));
        lv[i] = XReal(l);
      }
      const GridFn lw(g, std::move(lv));
      double lstep = 0.0;
      for (size_t i = 0; i + 1 < lw.values.size(); ++i)
        lstep = std::max(lstep, std::abs(value(lw, i + 1) - value(lw, i)));
      for (size_t i = 0; i < lw.values.size(); ++i)
        c.require(value(inf_impl, i) >= value(lw, i) - 3 * lstep - 1e-12,
                  "inf undercuts a candidate lower bound");
      ++candidates_checked;
    }
  }
  c.require(candidates_checked * 1 >= 1000, "not enough candidate bounds exercised");
}

// ---------------------------------------------------------------- AC4

void ac4_distributivity(Checker& c) {
  std::mt19937_64 rng(0xAC4);
  std::uniform_real_distribution<double> val(-3, 3);
  LatticeCfg cfg;  // gap_tol 1e-7, density 4
  int cases = 0;

  auto poly1 = [](double center, double c0, double c1) {
    std::map<MultiIndex, double> m{{MultiIndex({0}), c0}, {MultiIndex({1}), c1}};
    return Poly(Point({center}), std::move(m));
  };

  // 1D families of piecewise-linear expressions on random shared complexes
  for (int trial = 0; trial < 450; ++trial) {
    const int cells = 2 + static_cast<int>(rng() % 3);
    std::vector<double> cuts{0.0, 1.0};
    for (int i = 1; i < cells; ++i) cuts.push_back((1 + static_cast<int>(rng() % 31)) / 32.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<Box> boxes;
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
      boxes.emplace_back(Point({cuts[i]}), Point({cuts[i + 1]}));
    CellComplex cx(Box{Point({0.0}), Point({1.0})}, boxes);
    auto rand_fn = [&]() {
      std::vector<Poly> pieces;
      for (const Box& b : cx.cells()) pieces.push_back(poly1(b.center()[0], val(rng), val(rng)));
      return FnValue(PwExpr(PwPoly(cx, std::move(pieces))));
    };
    std::vector<FnValue> family;
    const int sz = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < sz; ++i) family.push_back(rand_fn());
    const auto r = distributivity_check(family, rand_fn(), cfg);
    c.require(r.holds, "distributivity violated on a 1D family");
    ++cases;
  }

  // a slice of 2D families
  for (int trial = 0; trial < 50; ++trial) {
    const double cut = (1 + static_cast<int>(rng() % 7)) / 8.0;
    CellComplex cx(Box{Point({0.0, 0.0}), Point({1.0, 1.0})},
                   {Box{Point({0.0, 0.0}), Point({cut, 1.0})},
                    Box{Point({cut, 0.0}), Point({1.0, 1.0})}});
    auto rand_fn = [&]() {
      std::vector<Poly> pieces;
      for (const Box& b : cx.cells()) {
        std::map<MultiIndex, double> m{{MultiIndex({0, 0}), val(rng)},
                                       {MultiIndex({1, 0}), val(rng)},
                                       {MultiIndex({0, 1}), val(rng)}};
        pieces.emplace_back(b.center(), std::move(m));
      }
      return FnValue(PwExpr(PwPoly(cx, std::move(pieces))));
    };
    std::vector<FnValue> family;
    const int sz = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < sz; ++i) family.push_back(rand_fn());
    const auto r = distributivity_check(family, rand_fn(), cfg);
    c.require(r.holds, "distributivity violated on a 2D family");
    ++cases;
  }
  c.require(cases == 500, "case count drifted");
}

// ---------------------------------------------------------------- AC5

void ac5_order_convergence(Checker& c) {
  const int N = 32;
  Grid g(Box{Point({0.0}), Point({1.0})}, {513});
  auto sample_pow = [&](int n) {
    std::vector<XReal> v(g.node_count());
    for (size_t i = 0; i < v.size(); ++i)
      v[i] = XReal(std::pow(g.node_coord(0, static_cast<int>(i)), n));
    return GridFn(g, std::move(v));
  };
  std::vector<FnValue> seq;
  for (int n = 1; n <= N; ++n) seq.emplace_back(sample_pow(n));
  const GridFn zero = GridFn::constant(g, XReal(0.0));

  // oracle tail envelopes by direct window composition
  auto tail_env = [&](int from, bool sup_side) {
    GridFn acc = sample_pow(from);
    for (int k = from + 1; k <= N; ++k) {
      const GridFn u = sample_pow(k);
      for (size_t i = 0; i < acc.values.size(); ++i)
        acc.values[i] = sup_side ? max(acc.values[i], u.values[i]) : min(acc.values[i], u.values[i]);
    }
    return sup_side ? oracles::naive_nlsc_regularize(acc, 1, 2)
                    : oracles::naive_usc_then_nlsc(acc, 1);
  };

  double need = 0.0;
  for (int n = 1; n <= N; ++n) {
    const GridFn lam = tail_env(n, false);
    const GridFn mu = tail_env(n, true);
    const GridFn un = sample_pow(n);
    for (size_t i = 0; i < lam.values.size(); ++i) {
      need = std::max(need, value(lam, i) - value(un, i));
      need = std::max(need, value(un, i) - value(mu, i));
    }
  }
  const GridFn lamG = tail_env(N - 1, false);
  const GridFn muG = tail_env(N - 1, true);
  const GridFn lamN = tail_env(N, false);
  const GridFn muN = tail_env(N, true);
  double oracle_gap = 0.0, oracle_cand = 0.0;
  for (size_t i = 0; i < lamG.values.size(); ++i) {
    oracle_gap = std::max(oracle_gap, value(muG, i) - value(lamG, i));
    oracle_cand = std::max(oracle_cand, std::abs(0.5 * (value(muN, i) + value(lamN, i))));
  }
  // the truncation bound on the 1/512 grid: x^32 has Lipschitz constant 32
  const double grid_bound = 4 * 32.0 * g.spacing(0);
  c.require(oracle_gap <= grid_bound, "oracle gap exceeds the grid-regularized bound");

  LatticeCfg cfg;
  cfg.gap_tol = std::max(need, oracle_gap) + 1e-9;
  cfg.candidate_tol = oracle_cand + 1e-9;
  const ConvergeResult res = order_converges(seq, FnValue(zero), cfg);
  c.require(res.converged, "x^n prefix did not converge");
  c.require(std::abs(res.witness.residual - oracle_gap) <= 1e-12,
            "witness gap differs from the oracle");
  c.require(res.witness.residual <= grid_bound, "witness gap exceeds the grid bound");

  // alternating +-1 is rejected under the same tolerances
  std::vector<FnValue> alt;
  for (int i = 0; i < N; ++i)
    alt.emplace_back(GridFn::constant(g, XReal(i % 2 ? 1.0 : -1.0)));
  c.require(!order_converges(alt, FnValue(zero), cfg).converged,
            "alternating sequence accepted");

  // shift stability for k <= N/2
  for (int k = 1; k <= N / 2; ++k) {
    std::vector<FnValue> shifted(seq.begin() + k, seq.end());
    c.require(order_converges(shifted, FnValue(zero), cfg).converged,
              "verdict changed after dropping " + std::to_string(k) + " terms");
    std::vector<FnValue> alt_shifted(alt.begin() + k, alt.end());
    c.require(!order_converges(alt_shifted, FnValue(zero), cfg).converged,
              "alternating verdict changed after a shift");
  }
}

// ---------------------------------------------------------------- AC6

void ac6_chain_checks(Checker& c) {
  const int N = 64;
  Grid g(Box{Point({0.0}), Point({1.0})}, {65});
  LatticeCfg cfg;
  cfg.gap_tol = 2.0 / N + 1e-9;
  auto konst = [&](double v) { return FnValue(GridFn::constant(g, XReal(v))); };

  std::vector<OrderInterval> pinching, gapped;
  for (int n = 1; n <= N; ++n) {
    pinching.emplace_back(konst(-1.0 / n), konst(1.0 / n), cfg);
    gapped.emplace_back(konst(0.0), konst(1.0 + 1.0 / n), cfg);
  }
  const std::vector<Box> opens{Box{Point({0.0}), Point({1.0})},
                               Box{Point({0.25}), Point({0.5})}};
  const auto verdicts =
      chain_check({IntervalChain(pinching, cfg), IntervalChain(gapped, cfg)}, opens, cfg);

  for (const ChainVerdict& v : verdicts[0]) {
    c.require(v.pinched, "[-1/n, 1/n] chain not pinched");
    c.require(v.gap <= 2.0 / N + 1e-9, "pinch gap exceeds 2/N");
    const GridFn& mid = std::get<GridFn>(*v.pinch_value);
    for (const XReal& x : mid.values)
      c.require(std::abs(x.value()) <= 1.0 / N + 1e-9, "pinch value is not zero");
  }
  for (const ChainVerdict& v : verdicts[1]) {
    c.require(!v.pinched, "[0, 1+1/n] chain wrongly pinched");
    // truncated at N, the measured gap is exactly 1 + 1/N
    c.require(std::abs(v.gap - (1.0 + 1.0 / N)) <= 1e-9, "gap is not 1 + 1/N");
  }
}

// ---------------------------------------------------------------- AC7

void ac7_band_certificates(Checker& c) {
  const PdeSystem sys = parse_operator("dx1(u1) = f", 1, 0);
  const Box dom{Point({0.0}), Point({2 * 3.14159265358979312})};
  const Rhs g = Rhs::from_exprs({parse_scalar_expr("cos(5*x1)", 1, false)}, {"cos(5*x1)"});
  for (double eps : {0.1, 0.05, 0.01}) {
    SolveCfg cfg;
    cfg.eps = eps;
    cfg.initial_cells = {8};
    cfg.max_depth = 16;
    const ApproxSolution sol = assemble(sys, dom, g, std::nullopt, cfg, {});
    c.require(sol.certificate.pass, "assemble certificate failed");

    const Certificate fresh = verify(sol, 2 * cfg.verify_density, 0xF00D + static_cast<int>(1 / eps));
    c.require(fresh.pass, "fresh-seed verification failed");
    c.require(fresh.worst_margin > 0.0, "fresh margins not strictly positive");

    // every sampled residual strictly inside (g - eps, g)
    for (const CellReport& r : fresh.cells)
      for (double m : r.margin_min) c.require(m > 0.0, "sampled residual on the band edge");
  }
}

// ---------------------------------------------------------------- AC8

void ac8_defect_sequence(Checker& c) {
  const PdeSystem sys = parse_operator("dx1(u1) = f", 1, 0);
  const Box dom{Point({0.0}), Point({2 * 3.14159265358979312})};
  const Rhs g = Rhs::from_exprs({parse_scalar_expr("cos(5*x1)", 1, false)}, {"cos(5*x1)"});
  SolveCfg cfg;
  cfg.initial_cells = {8};
  cfg.max_depth = 16;
  cfg.seq_grid_nodes = {4097};
  // drift allowance for the grid regularization of a Lipschitz-5 function
  cfg.seq_gap_slack = 6 * 5.0 * (dom.width(0) / 4096);

  const SequenceResult seq =
      solution_sequence(sys, dom, g, std::nullopt, {2, 4, 8, 16, 32}, cfg, {});
  for (const ApproxSolution& s : seq.solutions)
    c.require(s.certificate.pass, "a defect-sequence member failed its certificate");
  c.require(seq.convergence.size() == 1, "component count");
  c.require(seq.convergence[0].converged, "T w_n does not order-converge to g");

  const auto verdicts = chain_check({seq.chains[0]}, {dom}, seq.check_cfg);
  c.require(verdicts[0][0].pinched, "[g - 1/n, g] chain not pinched");
  // the pinch value is g itself, up to the truncation and drift budget
  const GridFn& mid = std::get<GridFn>(*verdicts[0][0].pinch_value);
  double dist = 0.0;
  for (size_t i = 0; i < mid.values.size(); ++i) {
    const Point x = seq.check_grid.node_point(
        {static_cast<int>(i)});
    dist = std::max(dist, std::abs(mid.values[i].value() - g.eval(0, x)));
  }
  c.require(dist <= seq.check_cfg.gap_tol, "pinch value is not g");
}

// ---------------------------------------------------------------- AC9

void ac9_initial_value(Checker& c) {
  const PdeSystem sys = parse_operator("dt(u1) = f", 1, 1);
  SolveCfg cfg;
  cfg.eps = 0.1;
  cfg.initial_cells = {1, 2};
  const Box dom{Point({0.0, 0.0}), Point({1.0, 1.0})};
  const Rhs g = Rhs::from_exprs({parse_scalar_expr("1", 2, true)}, {"1"});
  const auto u0 = InitialData::from_exprs({"u1"}, {"x1"}, 1);
  const ApproxSolution sol = assemble(sys, dom, g, u0, cfg, {});
  c.require(sol.certificate.pass, "time-ODE certificate failed");
  c.require(sol.certificate.initial_defect == 0.0, "initial defect not exactly zero");
  const Certificate fresh = verify(sol, 6, 0xBEEF);
  c.require(fresh.pass, "fresh verification failed");
  c.require(fresh.initial_defect == 0.0, "fresh initial defect not exactly zero");
}

// ---------------------------------------------------------------- AC10

void ac10_navier_stokes(Checker& c) {
  const PdeSystem ns = ns_system(0.01);
  SolveCfg cfg;
  cfg.eps = 0.25;
  cfg.initial_cells = {2, 2, 2, 2};
  cfg.max_depth = 3;
  cfg.verify_density = 3;  // at least 3^4 samples per cell
  const Box dom{Point({0.0, 0.0, 0.0, 0.0}), Point({1.0, 1.0, 1.0, 0.25})};
  const Rhs g = Rhs::from_exprs(parse_scalar_exprs("0;0;0;0", 4, true), {"0", "0", "0", "0"});
  const auto u0 = InitialData::from_exprs({"u1", "u2", "u3"}, {"0.1*x2", "-0.1*x1", "0"}, 3);

  const ApproxSolution sol = assemble(ns, dom, g, u0, cfg, {});
  c.require(sol.certificate.pass, "NS certificate failed");
  c.require(sol.certificate.initial_defect == 0.0, "NS initial defect not exactly zero");
  for (const CellReport& r : sol.certificate.cells) {
    c.require(r.samples >= 81, "fewer than 3^4 samples in a cell");
    for (double m : r.margin_min)
      c.require(m > 0.0, "an NS residual component touches the band edge");
  }
  const Certificate fresh = verify(sol, 3, 0xCAFE);
  c.require(fresh.pass, "NS fresh verification failed");
  c.require(fresh.initial_defect == 0.0, "NS fresh initial defect not exactly zero");
}

// ---------------------------------------------------------------- AC11

void ac11_parser(Checker& c) {
  // round trip of the built-in system, both convective forms
  for (bool standard : {false, true}) {
    const PdeSystem ns = ns_system(0.01, standard);
    const PdeSystem back = parse_operator(pretty_print(ns), 3, 1);
    c.require(ns.m() == back.m(), "NS equation count changed in the round trip");
    for (int i = 0; i < ns.m(); ++i)
      c.require(expr_equal(ns.equations[static_cast<size_t>(i)],
                           back.equations[static_cast<size_t>(i)]),
                "NS equation changed in the round trip");
    c.require(ns.jet == back.jet, "NS jet spec changed in the round trip");
  }

  // 100 random generated systems round-trip structurally
  std::mt19937_64 rng(0xAC11);
  std::uniform_real_distribution<double> num(-5, 5);
  const std::vector<std::string> unknowns{"u1", "u2", "p"};
  std::function<ExprPtr(int)> gen = [&](int depth) -> ExprPtr {
    const int pick = static_cast<int>(rng() % (depth > 3 ? 4 : 10));
    switch (pick) {
      case 0: return Expr::constant(num(rng));
      case 1: return Expr::param(rng() % 2 ? "nu" : "alpha");
      case 2: return Expr::coord(static_cast<int>(rng() % 2), false);
      case 3: {
        const std::string u = unknowns[rng() % unknowns.size()];
        std::vector<int> alpha(3, 0);
        switch (rng() % 5) {
          case 0: break;
          case 1: alpha[rng() % 2] = 1; break;
          case 2: alpha[rng() % 2] = 2; break;
          case 3: alpha[0] = alpha[1] = 1; break;
          case 4: alpha[2] = 1; break;
        }
        return Expr::jet(u, MultiIndex(alpha));
      }
      case 4: return Expr::binary(Expr::Op::Add, gen(depth + 1), gen(depth + 1));
      case 5: return Expr::binary(Expr::Op::Sub, gen(depth + 1), gen(depth + 1));
      case 6: return Expr::binary(Expr::Op::Mul, gen(depth + 1), gen(depth + 1));
      case 7: return Expr::binary(Expr::Op::Div, gen(depth + 1), gen(depth + 1));
      case 8: return Expr::pow(gen(depth + 1), static_cast<int>(1 + rng() % 3));
      default: {
        const Expr::Op fns[] = {Expr::Op::Sin, Expr::Op::Cos, Expr::Op::Exp, Expr::Op::Abs};
        return Expr::unary(fns[rng() % 4], gen(depth + 1));
      }
    }
  };
  for (int trial = 0; trial < 100; ++trial) {
    std::ostringstream text;
    const int m = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < m; ++i) {
      ExprPtr e = Expr::binary(Expr::Op::Add, gen(0), Expr::jet("u1", MultiIndex({0, 1, 0})));
      std::function<void(const ExprPtr&)> hint = [&](const ExprPtr& n) {
        if (!n) return;
        if (n->op == Expr::Op::Jet) const_cast<Expr*>(n.get())->is_time_axis = 2;
        hint(n->a);
        hint(n->b);
      };
      hint(e);
      text << expr_to_string(e) << " = f" << (i + 1) << "\n";
    }
    const PdeSystem a = parse_operator(text.str(), 2, 1);
    const PdeSystem b = parse_operator(pretty_print(a), 2, 1);
    c.require(a.m() == b.m(), "random system equation count changed");
    for (int i = 0; i < a.m(); ++i)
      c.require(
          expr_equal(a.equations[static_cast<size_t>(i)], b.equations[static_cast<size_t>(i)]),
          "random system changed in the round trip");
    c.require(a.jet == b.jet, "random system jet spec changed");
  }

  // NS residual against the hand-coded oracle on 1e4 random jets
  const PdeSystem ns = ns_system(0.01);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> jet(static_cast<size_t>(ns.jet.K()));
    for (double& x : jet) x = u(rng);
    const Point p({u(rng), u(rng), u(rng), std::abs(u(rng))});
    const std::vector<double> got = eval_F(ns, p, jet);
    const std::vector<double> want = oracles::ns_residual_by_hand(ns.jet, jet, 0.01);
    for (int k = 0; k < 4; ++k) {
      const double scale = std::max(1.0, std::abs(want[static_cast<size_t>(k)]));
      c.require(std::abs(got[static_cast<size_t>(k)] - want[static_cast<size_t>(k)]) <=
                    1e-12 * scale,
                "NS residual deviates from the hand-coded oracle");
    }
  }
}

// ------------------------------------------------------------------ main

struct Criterion {
  int id;
  const char* label;
  double budget_s;
  std::function<void(Checker&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i + 1 < argc; i += 2)
    if (std::strcmp(argv[i], "--only") == 0) only = std::atoi(argv[i + 1]);

  const std::vector<Criterion> criteria{
      {1, "envelope laws on random grid functions", 30, ac1_envelope_laws},
      {2, "NLSC exactness bridge under grid refinement", 60, ac2_nlsc_bridge},
      {3, "Dedekind sup/inf against the brute-force oracle", 120, ac3_dedekind_vs_bruteforce},
      {4, "full distributivity on 500 random families", 60, ac4_distributivity},
      {5, "order convergence of the x^n prefix", 10, ac5_order_convergence},
      {6, "interval chain pinching and gaps", 10, ac6_chain_checks},
      {7, "solver band certificates for cos(5x)", 30, ac7_band_certificates},
      {8, "defect sequence order-converges to g", 60, ac8_defect_sequence},
      {9, "initial-value exactness for the time ODE", 5, ac9_initial_value},
      {10, "Navier-Stokes initial-value demo", 300, ac10_navier_stokes},
      {11, "DSL round trips and the hand-coded NS residual", 10, ac11_parser},
  };

  bool all_ok = true;
  for (const Criterion& cr : criteria) {
    if (only != 0 && cr.id != only) continue;
    Checker ck;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(ck);
    } catch (const std::exception& e) {
      ck.require(false, std::string("exception: ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ck.require(dt < cr.budget_s, "runtime budget exceeded");
    std::printf("[%s] AC%-2d %s (%.2f s)%s%s\n", ck.ok ? "PASS" : "FAIL", cr.id, cr.label, dt,
                ck.ok ? "" : " -- ", ck.ok ? "" : ck.first_failure.c_str());
    all_ok = all_ok && ck.ok;
  }
  return all_ok ? 0 : 1;
}
