#include "ordcomp/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ordcomp {

namespace {

enum class Mode { Pw, Grid };

Mode family_mode(const std::vector<FnValue>& family) {
  if (family.empty()) throw EmptyFamily("lattice: empty family");
  const bool pw = std::holds_alternative<PwExpr>(family.front());
  for (const FnValue& f : family) {
    if (std::holds_alternative<PwExpr>(f) != pw)
      throw MixedMode("lattice: family mixes exact-pw and grid representations");
  }
  return pw ? Mode::Pw : Mode::Grid;
}

const Grid& shared_grid(const std::vector<FnValue>& family) {
  const Grid& g = std::get<GridFn>(family.front()).grid;
  for (const FnValue& f : family)
    if (!(std::get<GridFn>(f).grid == g))
      throw GridMismatch("lattice: grid-mode family must share one grid");
  return g;
}

// pointwise max/min of all member pieces on the common refinement
PwExpr pw_tree(const std::vector<FnValue>& family, bool take_max) {
  CellComplex refined = std::get<PwExpr>(family.front()).complex();
  for (size_t i = 1; i < family.size(); ++i)
    refined = common_refinement(refined, std::get<PwExpr>(family[i]).complex());
  std::vector<PwExpr> members;
  members.reserve(family.size());
  for (const FnValue& f : family) members.push_back(refine_to(std::get<PwExpr>(f), refined));
  std::vector<PieceExpr> pieces;
  pieces.reserve(refined.size());
  for (size_t c = 0; c < refined.size(); ++c) {
    std::vector<PieceExpr> kids;
    kids.reserve(members.size());
    for (const PwExpr& m : members) kids.push_back(m.pieces()[c]);
    pieces.push_back(take_max ? PieceExpr::max_of(std::move(kids))
                              : PieceExpr::min_of(std::move(kids)));
  }
  return PwExpr(refined, std::move(pieces));
}

GridFn nodewise(const std::vector<FnValue>& family, bool take_max) {
  const Grid& g = shared_grid(family);
  std::vector<XReal> acc = std::get<GridFn>(family.front()).values;
  for (size_t i = 1; i < family.size(); ++i) {
    const auto& v = std::get<GridFn>(family[i]).values;
    for (size_t k = 0; k < acc.size(); ++k)
      acc[k] = take_max ? max(acc[k], v[k]) : min(acc[k], v[k]);
  }
  return GridFn(g, std::move(acc));
}

}  // namespace

FnValue dedekind_sup(const std::vector<FnValue>& family, const LatticeCfg& cfg) {
  if (family_mode(family) == Mode::Pw) return pw_tree(family, true);
  GridFn raw = nodewise(family, true);
  GridFn reg = nlsc_regularize(raw, cfg.r_inner, cfg.r_outer);
  if (!is_nearly_finite(reg))
    throw NotNearlyFinite("dedekind_sup: supremum is not nearly finite");
  return reg;
}

FnValue dedekind_inf(const std::vector<FnValue>& family, const LatticeCfg& cfg) {
  if (family_mode(family) == Mode::Pw) return pw_tree(family, false);
  GridFn raw = nodewise(family, false);
  GridFn reg = usc_then_nlsc(raw, cfg.r_inner);
  if (!is_nearly_finite(reg))
    throw NotNearlyFinite("dedekind_inf: infimum is not nearly finite");
  return reg;
}

double eval_at(const FnValue& f, const Point& x) {
  if (const PwExpr* p = std::get_if<PwExpr>(&f)) return eval_nlsc(*p, x);
  const GridFn& g = std::get<GridFn>(f);
  // nearest-node lookup; callers sample at node points
  std::vector<int> idx(static_cast<size_t>(g.grid.dim()));
  for (int a = 0; a < g.grid.dim(); ++a) {
    const double h = g.grid.spacing(a);
    const double t = (x[a] - g.grid.box.lo[a]) / h;
    int i = static_cast<int>(std::lround(t));
    i = std::clamp(i, 0, g.grid.nodes_per_axis[static_cast<size_t>(a)] - 1);
    idx[static_cast<size_t>(a)] = i;
  }
  return g.values[g.grid.flat_index(idx)].value();
}

std::vector<Point> sample_points(const FnValue& f, int density) {
  if (const PwExpr* p = std::get_if<PwExpr>(&f)) {
    return sample_cells(p->complex().domain(), p->complex().cells(), density).points;
  }
  const Grid& g = std::get<GridFn>(f).grid;
  std::vector<Point> pts;
  pts.reserve(g.node_count());
  std::vector<int> idx(static_cast<size_t>(g.dim()), 0);
  for (;;) {
    pts.push_back(g.node_point(idx));
    int ax = g.dim() - 1;
    while (ax >= 0 &&
           ++idx[static_cast<size_t>(ax)] >= g.nodes_per_axis[static_cast<size_t>(ax)]) {
      idx[static_cast<size_t>(ax)] = 0;
      --ax;
    }
    if (ax < 0) break;
  }
  return pts;
}

namespace {

// max over sample points of f - g; pw pairs share a domain, grid pairs a grid.
double max_gap(const FnValue& f, const FnValue& g, int density, Point* arg = nullptr) {
  double worst = -std::numeric_limits<double>::infinity();
  if (std::holds_alternative<GridFn>(f) && std::holds_alternative<GridFn>(g)) {
    const GridFn& a = std::get<GridFn>(f);
    const GridFn& b = std::get<GridFn>(g);
    if (!(a.grid == b.grid)) throw GridMismatch("lattice: grid mismatch");
    size_t worst_i = 0;
    for (size_t i = 0; i < a.values.size(); ++i) {
      const double d = a.values[i].value() - b.values[i].value();
      if (d > worst) {
        worst = d;
        worst_i = i;
      }
    }
    if (arg) {
      std::vector<int> idx(static_cast<size_t>(a.grid.dim()));
      size_t rem = worst_i;
      for (int ax = a.grid.dim() - 1; ax >= 0; --ax) {
        const size_t n = static_cast<size_t>(a.grid.nodes_per_axis[static_cast<size_t>(ax)]);
        idx[static_cast<size_t>(ax)] = static_cast<int>(rem % n);
        rem /= n;
      }
      *arg = a.grid.node_point(idx);
    }
    return worst;
  }
  for (const Point& p : sample_points(f, density)) {
    const double d = eval_at(f, p) - eval_at(g, p);
    if (d > worst) {
      worst = d;
      if (arg) *arg = p;
    }
  }
  return worst;
}

bool leq_at_scale(const FnValue& f, const FnValue& g, const LatticeCfg& cfg) {
  return max_gap(f, g, cfg.density) <= cfg.gap_tol;
}

}  // namespace

OrderInterval::OrderInterval(FnValue lo_, FnValue hi_, const LatticeCfg& cfg)
    : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (!leq_at_scale(lo, hi, cfg))
    throw NotNested("OrderInterval: lower end exceeds upper end at sample scale");
}

IntervalChain::IntervalChain(std::vector<OrderInterval> iv, const LatticeCfg& cfg)
    : intervals(std::move(iv)) {
  if (intervals.empty()) throw InvalidValue("IntervalChain: empty chain");
  for (size_t n = 0; n + 1 < intervals.size(); ++n) {
    if (!leq_at_scale(intervals[n].lo, intervals[n + 1].lo, cfg) ||
        !leq_at_scale(intervals[n + 1].hi, intervals[n].hi, cfg))
      throw NotNested("IntervalChain: intervals are not nested");
  }
}

ConvergeResult order_converges(const std::vector<FnValue>& seq, const FnValue& candidate,
                               const LatticeCfg& cfg) {
  const size_t N = seq.size();
  if (N < 3) throw InvalidValue("order_converges: need at least 3 terms");
  family_mode(seq);  // validates uniform representation

  ConvergeResult res;
  ConvergenceWitness& w = res.witness;
  w.target = candidate;
  for (size_t n = 0; n < N; ++n) {
    std::vector<FnValue> tail(seq.begin() + static_cast<long>(n), seq.end());
    w.lambda_seq.push_back(dedekind_inf(tail, cfg));
    w.mu_seq.push_back(dedekind_sup(tail, cfg));
  }

  // Residuals are measured on the deepest tail still containing two terms:
  // the length-one tail [lambda_N, mu_N] always has zero width, so it says
  // nothing about whether the sequence has settled.
  const size_t gap_idx = N - 2;
  w.residual =
      std::max(0.0, max_gap(w.mu_seq[gap_idx], w.lambda_seq[gap_idx], cfg.density));
  double cd = 0.0;
  if (std::holds_alternative<GridFn>(candidate)) {
    const auto& lam = std::get<GridFn>(w.lambda_seq[N - 1]).values;
    const auto& mu = std::get<GridFn>(w.mu_seq[N - 1]).values;
    const auto& c = std::get<GridFn>(candidate).values;
    for (size_t i = 0; i < c.size(); ++i) {
      const double mid = 0.5 * (lam[i].value() + mu[i].value());
      cd = std::max(cd, std::abs(c[i].value() - mid));
    }
  } else {
    for (const Point& p : sample_points(candidate, cfg.density)) {
      const double mid =
          0.5 * (eval_at(w.lambda_seq[N - 1], p) + eval_at(w.mu_seq[N - 1], p));
      cd = std::max(cd, std::abs(eval_at(candidate, p) - mid));
    }
  }
  w.candidate_dist = cd;

  auto fail = [&](std::string why) {
    res.converged = false;
    res.reason = std::move(why);
    return res;
  };

  for (size_t n = 0; n + 1 < N; ++n) {
    if (max_gap(w.lambda_seq[n], w.lambda_seq[n + 1], cfg.density) > cfg.gap_tol)
      return fail("lambda sequence not ascending at step " + std::to_string(n));
    if (max_gap(w.mu_seq[n + 1], w.mu_seq[n], cfg.density) > cfg.gap_tol)
      return fail("mu sequence not descending at step " + std::to_string(n));
  }
  for (size_t n = 0; n < N; ++n) {
    if (max_gap(w.lambda_seq[n], seq[n], cfg.density) > cfg.gap_tol)
      return fail("sandwich violated below at step " + std::to_string(n));
    if (max_gap(seq[n], w.mu_seq[n], cfg.density) > cfg.gap_tol)
      return fail("sandwich violated above at step " + std::to_string(n));
  }

  if (w.residual > cfg.gap_tol)
    return fail("final tail gap " + std::to_string(w.residual) + " exceeds tolerance");
  if (cd > cfg.cand_tol())
    return fail("candidate deviates from the pinch midpoint by " + std::to_string(cd));

  res.converged = true;
  return res;
}

std::vector<std::vector<ChainVerdict>> chain_check(const std::vector<IntervalChain>& chains,
                                                   const std::vector<Box>& test_opens,
                                                   const LatticeCfg& cfg) {
  std::vector<std::vector<ChainVerdict>> out;
  out.reserve(chains.size());
  for (const IntervalChain& chain : chains) {
    std::vector<FnValue> los;
    std::vector<FnValue> his;
    for (const OrderInterval& iv : chain.intervals) {
      los.push_back(iv.lo);
      his.push_back(iv.hi);
    }
    const FnValue a = dedekind_sup(los, cfg);
    const FnValue b = dedekind_inf(his, cfg);

    std::vector<ChainVerdict> row;
    row.reserve(test_opens.size());
    for (const Box& V : test_opens) {
      ChainVerdict v;
      double worst = -std::numeric_limits<double>::infinity();
      // restrict to samples of the ambient representation that fall in V
      std::vector<Point> pts = sample_points(a, cfg.density);
      bool any = false;
      for (const Point& p : pts) {
        if (!V.contains(p)) continue;
        any = true;
        const double gap = eval_at(b, p) - eval_at(a, p);
        if (gap > worst) {
          worst = gap;
          v.witness = p;
        }
      }
      if (!any) throw InvalidValue("chain_check: test open contains no sample points");
      v.gap = std::max(0.0, worst);
      if (v.gap <= cfg.gap_tol) {
        v.pinched = true;
        // common restriction: midpoint of the pinched interval
        if (std::holds_alternative<GridFn>(a)) {
          const GridFn& ga = std::get<GridFn>(a);
          const GridFn& gb = std::get<GridFn>(b);
          std::vector<XReal> mid(ga.values.size());
          for (size_t i = 0; i < mid.size(); ++i)
            mid[i] = XReal(std::midpoint(ga.values[i].value(), gb.values[i].value()));
          v.pinch_value = GridFn(ga.grid, std::move(mid));
        } else {
          v.pinch_value = a;
        }
      }
      row.push_back(std::move(v));
    }
    out.push_back(std::move(row));
  }
  return out;
}

DistributivityResult distributivity_check(const std::vector<FnValue>& family, const FnValue& v,
                                          const LatticeCfg& cfg) {
  if (family.empty()) throw EmptyFamily("distributivity_check: empty family");
  const FnValue sup_a = dedekind_sup(family, cfg);
  const FnValue lhs = dedekind_inf({sup_a, v}, cfg);
  std::vector<FnValue> meets;
  meets.reserve(family.size());
  for (const FnValue& u : family) meets.push_back(dedekind_inf({u, v}, cfg));
  const FnValue rhs = dedekind_sup(meets, cfg);

  DistributivityResult res;
  res.holds = true;
  double worst = -1.0;
  for (const Point& p : sample_points(lhs, cfg.density)) {
    const double l = eval_at(lhs, p);
    const double r = eval_at(rhs, p);
    const double d = std::abs(l - r);
    if (d > worst) {
      worst = d;
      res.witness = p;
      res.lhs = l;
      res.rhs = r;
    }
  }
  res.holds = worst <= cfg.gap_tol;
  return res;
}

}  // namespace ordcomp
