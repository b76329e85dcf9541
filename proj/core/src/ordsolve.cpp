#include "ordcomp/ordsolve.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace ordcomp {

namespace {

std::string box_str(const Box& b) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < b.dim(); ++i) os << (i ? "," : "") << b.lo[i];
  os << "]..[";
  for (int i = 0; i < b.dim(); ++i) os << (i ? "," : "") << b.hi[i];
  os << "]";
  return os.str();
}

}  // namespace

int effective_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ORDCOMP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

// ------------------------------------------------------------------ Rhs

Rhs Rhs::from_exprs(std::vector<ExprPtr> es, std::vector<std::string> texts) {
  Rhs r;
  r.exprs = std::move(es);
  r.texts = std::move(texts);
  if (r.texts.empty())
    for (const ExprPtr& e : r.exprs) r.texts.push_back(expr_to_string(e));
  return r;
}

Rhs Rhs::from_polys(std::vector<PwPoly> ps) {
  Rhs r;
  r.polys = std::move(ps);
  return r;
}

int Rhs::components() const {
  return static_cast<int>(exprs.empty() ? polys.size() : exprs.size());
}

double Rhs::eval(int comp, const Point& p) const {
  if (!exprs.empty()) return eval_scalar(exprs[static_cast<size_t>(comp)], p);
  return eval_nlsc(polys[static_cast<size_t>(comp)], p);
}

InitialData InitialData::from_exprs(std::vector<std::string> unknowns,
                                    std::vector<std::string> expr_texts, int n_spatial) {
  if (unknowns.size() != expr_texts.size())
    throw DimensionMismatch("InitialData: one expression per unknown required");
  InitialData d;
  d.unknowns = std::move(unknowns);
  d.texts = std::move(expr_texts);
  for (const std::string& t : d.texts) {
    // a time-only domain has a zero-dimensional initial face; its data is a
    // constant per unknown, parsed over one dummy axis
    ExprPtr e = parse_scalar_expr(t, std::max(1, n_spatial), /*has_time=*/false);
    auto poly = expr_to_poly(e, std::max(1, n_spatial));
    if (n_spatial == 0 && (!poly || poly->degree() > 0))
      throw InputError("InitialData: time-only problems take constant initial values");
    d.exprs.push_back(e);
    d.polys.push_back(std::move(poly));
    d.evals.push_back([e](const Point& x) { return eval_scalar(e, x); });
  }
  return d;
}

// ------------------------------------------------------------ jet solve

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> residual_at(const PdeSystem& sys, const Point& p,
                                const std::vector<double>& jet,
                                const std::vector<double>& target) {
  std::vector<double> r = eval_F(sys, p, jet);
  for (size_t i = 0; i < r.size(); ++i) r[i] -= target[i];
  return r;
}

}  // namespace

std::vector<double> jet_solve_masked(const PdeSystem& sys, const Point& p,
                                     const std::vector<double>& target,
                                     const JetSolverCfg& cfg, const std::vector<bool>& free_mask,
                                     const std::vector<double>& base_jet) {
  const int K = sys.jet.K();
  const int m = sys.m();
  if (static_cast<int>(target.size()) != m)
    throw DimensionMismatch("jet_solve: target length must equal the equation count");
  std::vector<int> free_idx;
  for (int k = 0; k < K; ++k)
    if (free_mask[static_cast<size_t>(k)]) free_idx.push_back(k);
  const int kf = static_cast<int>(free_idx.size());

  std::vector<double> jet = base_jet;
  if (!cfg.initial_guess.empty()) {
    if (static_cast<int>(cfg.initial_guess.size()) != K)
      throw DimensionMismatch("jet_solve: initial guess length mismatch");
    for (int k : free_idx) jet[static_cast<size_t>(k)] = cfg.initial_guess[static_cast<size_t>(k)];
  }

  std::vector<double> r = residual_at(sys, p, jet, target);
  double r2 = 0.0;
  for (double x : r) r2 += x * x;
  double lambda = cfg.lambda0;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (inf_norm(r) <= cfg.tolerance) return jet;
    if (kf == 0) break;

    Eigen::MatrixXd J(m, kf);
    for (int j = 0; j < kf; ++j) {
      const int k = free_idx[static_cast<size_t>(j)];
      const double x0 = jet[static_cast<size_t>(k)];
      const double h = 1e-6 * std::max(1.0, std::abs(x0));
      jet[static_cast<size_t>(k)] = x0 + h;
      std::vector<double> rp = residual_at(sys, p, jet, target);
      jet[static_cast<size_t>(k)] = x0 - h;
      std::vector<double> rm = residual_at(sys, p, jet, target);
      jet[static_cast<size_t>(k)] = x0;
      for (int i = 0; i < m; ++i) J(i, j) = (rp[static_cast<size_t>(i)] - rm[static_cast<size_t>(i)]) / (2 * h);
    }

    Eigen::VectorXd rv(m);
    for (int i = 0; i < m; ++i) rv(i) = r[static_cast<size_t>(i)];
    Eigen::MatrixXd A = J.transpose() * J;
    A.diagonal().array() += lambda;
    Eigen::VectorXd delta = A.ldlt().solve(-J.transpose() * rv);

    std::vector<double> trial = jet;
    for (int j = 0; j < kf; ++j)
      trial[static_cast<size_t>(free_idx[static_cast<size_t>(j)])] += delta(j);
    std::vector<double> rt = residual_at(sys, p, trial, target);
    double rt2 = 0.0;
    for (double x : rt) rt2 += x * x;
    if (rt2 < r2) {
      jet.swap(trial);
      r.swap(rt);
      r2 = rt2;
      lambda = std::max(lambda * cfg.lambda_down, 1e-14);
    } else {
      lambda *= cfg.lambda_up;
      if (lambda > 1e14) break;  // stalled
    }
  }
  if (inf_norm(r) <= cfg.tolerance) return jet;
  throw NoJetFound("jet_solve: no jet reaches the target (residual " +
                   std::to_string(inf_norm(r)) + ")");
}

std::vector<double> jet_solve(const PdeSystem& sys, const Point& p,
                              const std::vector<double>& target, const JetSolverCfg& cfg) {
  for (double t : target)
    if (!std::isfinite(t)) throw InvalidValue("jet_solve: target must be finite");
  if (cfg.use_hooks && sys.hooks.regular) {
    if (auto jet = sys.hooks.regular(sys, p, target)) {
      if (inf_norm(residual_at(sys, p, *jet, target)) <= cfg.tolerance) return *jet;
    }
  }
  return jet_solve_masked(sys, p, target, cfg,
                          std::vector<bool>(static_cast<size_t>(sys.jet.K()), true),
                          std::vector<double>(static_cast<size_t>(sys.jet.K()), 0.0));
}

// --------------------------------------------------------------- patches

std::vector<Poly> taylor_patch(const std::vector<double>& jet, const Point& center,
                               const JetSpec& spec, int degree) {
  if (static_cast<int>(jet.size()) != spec.K())
    throw DimensionMismatch("taylor_patch: jet length mismatch");
  if (degree < spec.max_order())
    throw DegreeTooLow("taylor_patch: degree " + std::to_string(degree) +
                       " is below the jet order " + std::to_string(spec.max_order()));
  std::vector<Poly> out;
  out.reserve(spec.unknowns.size());
  for (const std::string& u : spec.unknowns) {
    Poly p = Poly::constant(center, 0.0);
    for (size_t s = 0; s < spec.slots.size(); ++s) {
      if (spec.slots[s].unknown != u) continue;
      p.add_term(spec.slots[s].alpha, jet[s]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Poly> patch_with_initial(
    const std::vector<double>& jet, const Point& center, const std::vector<Poly>& u0_cell,
    const std::vector<std::string>& initial_unknowns, const JetSpec& spec, int degree,
    const std::vector<std::vector<double>>* steering) {
  const int n = center.dim();
  const int t_axis = n - 1;  // initial patches presume the last axis is time
  if (center[t_axis] != 0.0)
    throw CenterNotOnInitialFace("patch_with_initial: center must lie on the t=0 face");
  if (degree < spec.max_order())
    throw DegreeTooLow("patch_with_initial: degree below the jet order");
  if (u0_cell.size() != initial_unknowns.size())
    throw DimensionMismatch("patch_with_initial: one initial polynomial per initial unknown");

  std::vector<Poly> out;
  out.reserve(spec.unknowns.size());
  for (size_t ui = 0; ui < spec.unknowns.size(); ++ui) {
    const std::string& u = spec.unknowns[ui];
    const auto it = std::find(initial_unknowns.begin(), initial_unknowns.end(), u);
    if (it == initial_unknowns.end()) {
      Poly p = Poly::constant(center, 0.0);
      for (size_t s = 0; s < spec.slots.size(); ++s)
        if (spec.slots[s].unknown == u) p.add_term(spec.slots[s].alpha, jet[s]);
      out.push_back(std::move(p));
      continue;
    }
    const size_t ii = static_cast<size_t>(it - initial_unknowns.begin());
    Poly p = u0_cell[ii].recenter(center);
    for (size_t s = 0; s < spec.slots.size(); ++s) {
      if (spec.slots[s].unknown != u) continue;
      if (spec.slots[s].alpha[t_axis] == 0) continue;  // spatial slots come from u0
      p.add_term(spec.slots[s].alpha, jet[s]);
    }
    if (steering) {
      const auto& row = (*steering)[ui];
      for (int k = 0; k + 1 < n; ++k) {
        if (row[static_cast<size_t>(k)] == 0.0) continue;
        std::vector<int> o(static_cast<size_t>(n), 0);
        o[static_cast<size_t>(k)] = 1;
        o[static_cast<size_t>(t_axis)] = 1;
        p.add_term(MultiIndex(std::move(o)), row[static_cast<size_t>(k)]);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

// --------------------------------------------------------------- assemble

namespace {

struct DoneCell {
  Box cell;
  int depth = 0;
  bool initial = false;
  std::vector<Poly> polys;      // one per unknown (spec order)
  std::vector<double> jet;
  CellReport report;
  double initial_defect = 0.0;
  double u0_fit = 0.0;
};

struct BandCheck {
  bool pass = true;
  std::vector<double> margin_min;
  std::vector<double> margin_max;
  int samples = 0;
};

// Strict band check on the closed cell: margins must be positive at every
// interior lattice sample, and the per-line quadratic extrapolation of the
// margins onto each face must stay nonnegative (up to rounding). The
// extrapolation is exact for margins linear along an axis, which is how a
// pinned component approaches the band edge at the initial face; for smooth
// residuals its error is third order in the lattice spacing, so cells whose
// true margin dips below zero between samples are sent back for bisection.
BandCheck check_band(const PdeSystem& sys, const Rhs& g, const std::vector<Poly>& cell_polys,
                     const Box& cell, int density, double eps) {
  const int m = sys.m();
  const int n = cell.dim();
  BandCheck bc;
  bc.margin_min.assign(static_cast<size_t>(m), std::numeric_limits<double>::infinity());
  bc.margin_max.assign(static_cast<size_t>(m), -std::numeric_limits<double>::infinity());
  const SampleSet samples = sample_cells(cell, {cell}, density);
  bc.samples = static_cast<int>(samples.points.size());

  // margins per component on the sample lattice, last axis fastest
  std::vector<std::vector<double>> margins(
      static_cast<size_t>(m), std::vector<double>(samples.points.size()));
  for (size_t s = 0; s < samples.points.size(); ++s) {
    const Point& x = samples.points[s];
    const std::vector<double> jet = jet_of_polys(sys.jet, cell_polys, sys.jet.unknowns, x);
    const std::vector<double> F = eval_F(sys, x, jet);
    for (int k = 0; k < m; ++k) {
      const double hi = g.eval(k, x);
      const double lo = hi - eps;
      const double margin =
          std::min(F[static_cast<size_t>(k)] - lo, hi - F[static_cast<size_t>(k)]);
      margins[static_cast<size_t>(k)][s] = margin;
      bc.margin_min[static_cast<size_t>(k)] =
          std::min(bc.margin_min[static_cast<size_t>(k)], margin);
      bc.margin_max[static_cast<size_t>(k)] =
          std::max(bc.margin_max[static_cast<size_t>(k)], margin);
      if (!(margin > 0.0)) bc.pass = false;
    }
  }
  if (!bc.pass || density < 3) return bc;

  const double face_tol = 1e-13 * std::max(1.0, eps);
  std::vector<size_t> stride(static_cast<size_t>(n));
  stride[static_cast<size_t>(n - 1)] = 1;
  for (int a = n - 2; a >= 0; --a)
    stride[static_cast<size_t>(a)] = stride[static_cast<size_t>(a + 1)] * static_cast<size_t>(density);
  for (int k = 0; k < m && bc.pass; ++k) {
    const std::vector<double>& mk = margins[static_cast<size_t>(k)];
    for (int a = 0; a < n && bc.pass; ++a) {
      const size_t st = stride[static_cast<size_t>(a)];
      const size_t lines = mk.size() / static_cast<size_t>(density);
      for (size_t line = 0; line < lines; ++line) {
        // base index of this lattice line along axis a
        const size_t block = line / st;
        const size_t off = line % st;
        const size_t base = block * st * static_cast<size_t>(density) + off;
        const double m0 = mk[base];
        const double m1 = mk[base + st];
        const double m2 = mk[base + 2 * st];
        const size_t last = base + st * static_cast<size_t>(density - 1);
        const double e0 = mk[last];
        const double e1 = mk[last - st];
        const double e2 = mk[last - 2 * st];
        if (3 * m0 - 3 * m1 + m2 < -face_tol || 3 * e0 - 3 * e1 + e2 < -face_tol) {
          bc.pass = false;
          break;
        }
      }
    }
  }
  return bc;
}

// spatial polynomial embedded into the n-dimensional coordinate space
Poly embed_spatial(const Poly& sp, int n) {
  std::map<MultiIndex, double> coeffs;
  for (const auto& [al, c] : sp.coeffs()) {
    std::vector<int> o(static_cast<size_t>(n), 0);
    for (int i = 0; i < al.dim(); ++i) o[static_cast<size_t>(i)] = al[i];
    coeffs[MultiIndex(std::move(o))] = c;
  }
  std::vector<double> ctr(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < sp.dim(); ++i) ctr[static_cast<size_t>(i)] = sp.center()[i];
  return Poly(Point(std::move(ctr)), std::move(coeffs));
}

// canonical per-cell initial polynomials, recentered at the anchor; exact
// for polynomial data, finite-difference Taylor fit otherwise
std::vector<Poly> canonical_u0(const InitialData& u0, const Point& anchor, const Box& cell,
                               int degree) {
  const int n = anchor.dim();
  const int ns = n - 1;
  std::vector<Poly> out;
  out.reserve(u0.unknowns.size());
  if (ns == 0) {
    for (size_t i = 0; i < u0.unknowns.size(); ++i)
      out.push_back(Poly::constant(anchor, u0.evals[i](Point({0.0}))));
    return out;
  }
  for (size_t i = 0; i < u0.unknowns.size(); ++i) {
    if (u0.polys[i]) {
      out.push_back(embed_spatial(*u0.polys[i], n).recenter(anchor));
      continue;
    }
    // FD jet of the closure at the anchor, spatial orders up to min(2, degree)
    const auto& f = u0.evals[i];
    std::vector<double> xs(static_cast<size_t>(ns));
    for (int k = 0; k < ns; ++k) xs[static_cast<size_t>(k)] = anchor[k];
    const Point xa(xs);
    double h = std::numeric_limits<double>::infinity();
    for (int k = 0; k < ns; ++k) h = std::min(h, cell.width(k));
    h *= 1e-3;
    auto at = [&](int k, double d) {
      std::vector<double> y = xs;
      y[static_cast<size_t>(k)] += d;
      return f(Point(std::move(y)));
    };
    Poly p = Poly::constant(anchor, f(xa));
    const int maxo = std::min(2, degree);
    for (int k = 0; k < ns && maxo >= 1; ++k)
      p.add_term(MultiIndex::unit(n, k), (at(k, h) - at(k, -h)) / (2 * h));
    for (int k = 0; k < ns && maxo >= 2; ++k)
      p.add_term(MultiIndex::unit(n, k, 2), (at(k, h) - 2 * f(xa) + at(k, -h)) / (h * h));
    out.push_back(std::move(p));
  }
  return out;
}

struct InitialCheck {
  double defect = 0.0;
  double fit = 0.0;
};

InitialCheck check_initial_face(const std::vector<Poly>& patch,
                                const std::vector<std::string>& unknown_order,
                                const InitialData& u0, const std::vector<Poly>& u0_cell,
                                const Box& cell, int density) {
  // interior spatial lattice on the t = 0 face
  const int n = cell.dim();
  const int ns = n - 1;
  if (ns == 0) {
    InitialCheck ic;
    const Point x({0.0});
    for (size_t i = 0; i < u0.unknowns.size(); ++i) {
      const auto it = std::find(unknown_order.begin(), unknown_order.end(), u0.unknowns[i]);
      const size_t ui = static_cast<size_t>(it - unknown_order.begin());
      ic.defect = std::max(ic.defect, std::abs(patch[ui].eval(x) - u0_cell[i].eval(x)));
      ic.fit = std::max(ic.fit, std::abs(u0_cell[i].eval(x) - u0.evals[i](Point({0.0}))));
    }
    return ic;
  }
  std::vector<double> slo(static_cast<size_t>(ns)), shi(static_cast<size_t>(ns));
  for (int k = 0; k < ns; ++k) {
    slo[static_cast<size_t>(k)] = cell.lo[k];
    shi[static_cast<size_t>(k)] = cell.hi[k];
  }
  const Box face{Point(slo), Point(shi)};
  const SampleSet samples = sample_cells(face, {face}, density);
  InitialCheck ic;
  for (const Point& xs : samples.points) {
    std::vector<double> full = xs.coords;
    full.push_back(0.0);
    const Point x(full);
    for (size_t i = 0; i < u0.unknowns.size(); ++i) {
      const auto it = std::find(unknown_order.begin(), unknown_order.end(), u0.unknowns[i]);
      const size_t ui = static_cast<size_t>(it - unknown_order.begin());
      const double wv = patch[ui].eval(x);
      const double cv = u0_cell[i].eval(x);
      ic.defect = std::max(ic.defect, std::abs(wv - cv));
      ic.fit = std::max(ic.fit, std::abs(cv - u0.evals[i](xs)));
    }
  }
  return ic;
}

std::vector<Box> initial_partition(const Box& domain, std::vector<int> counts) {
  const int n = domain.dim();
  if (counts.empty()) counts.assign(static_cast<size_t>(n), 1);
  if (counts.size() == 1 && n > 1) counts.assign(static_cast<size_t>(n), counts[0]);
  if (static_cast<int>(counts.size()) != n)
    throw DimensionMismatch("assemble: initial_cells must give one count per axis");
  for (int c : counts)
    if (c < 1) throw InvalidValue("assemble: initial cell counts must be >= 1");
  std::vector<Box> cells;
  std::vector<int> idx(static_cast<size_t>(n), 0);
  for (;;) {
    std::vector<double> lo(static_cast<size_t>(n)), hi(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a) {
      const int c = counts[static_cast<size_t>(a)];
      const int i = idx[static_cast<size_t>(a)];
      lo[static_cast<size_t>(a)] =
          i == 0 ? domain.lo[a] : domain.lo[a] + domain.width(a) * (static_cast<double>(i) / c);
      hi[static_cast<size_t>(a)] = i == c - 1
                                       ? domain.hi[a]
                                       : domain.lo[a] + domain.width(a) * (static_cast<double>(i + 1) / c);
    }
    cells.emplace_back(Point(std::move(lo)), Point(std::move(hi)));
    int ax = n - 1;
    while (ax >= 0 && ++idx[static_cast<size_t>(ax)] >= counts[static_cast<size_t>(ax)]) {
      idx[static_cast<size_t>(ax)] = 0;
      --ax;
    }
    if (ax < 0) break;
  }
  return cells;
}

int widest_axis(const Box& b) {
  int ax = 0;
  double w = b.width(0);
  for (int a = 1; a < b.dim(); ++a) {
    if (b.width(a) > w) {
      w = b.width(a);
      ax = a;
    }
  }
  return ax;
}

bool share_face(const Box& a, const Box& b) {
  int touching = -1;
  for (int i = 0; i < a.dim(); ++i) {
    if (a.hi[i] == b.lo[i] || b.hi[i] == a.lo[i]) {
      if (touching >= 0) return false;
      touching = i;
    } else if (a.hi[i] <= b.lo[i] || b.hi[i] <= a.lo[i]) {
      return false;
    }
  }
  return touching >= 0;
}

}  // namespace

ApproxSolution assemble(const PdeSystem& sys, const Box& domain, const Rhs& g,
                        const std::optional<InitialData>& u0, const SolveCfg& cfg,
                        const JetSolverCfg& jcfg) {
  if (domain.dim() != sys.n)
    throw DimensionMismatch("assemble: domain dimension does not match the system");
  if (g.components() != sys.m())
    throw DimensionMismatch("assemble: right-hand side component count mismatch");
  if (!(cfg.eps > 0)) throw InvalidValue("assemble: eps must be positive");
  if (!(cfg.theta > 0 && cfg.theta < 1))
    throw InvalidValue("assemble: theta must lie strictly inside (0,1)");
  if (u0) {
    if (!sys.has_time) throw InvalidValue("assemble: initial data given but no time axis");
    if (domain.lo[sys.time_axis()] != 0.0)
      throw InvalidValue("assemble: initial data requires the time axis to start at 0");
    for (const std::string& u : u0->unknowns)
      if (std::find(sys.jet.unknowns.begin(), sys.jet.unknowns.end(), u) ==
          sys.jet.unknowns.end())
        throw InputError("assemble: initial data names unknown '" + u + "'");
  }

  const int degree = cfg.degree > 0 ? cfg.degree : std::max(2, sys.jet.max_order());
  const int t_axis = sys.time_axis();
  const int threads = cfg.neighbor_matching ? 1 : effective_threads(cfg.threads);

  struct Pending {
    Box cell;
    int depth;
  };
  std::deque<Pending> queue;
  for (Box& b : initial_partition(domain, cfg.initial_cells)) queue.push_back({b, 0});

  std::vector<DoneCell> done;

  struct Outcome {
    bool ok = false;
    DoneCell cell;
    std::string error_kind;  // "nojet" | "depth"
    std::string error_msg;
    Box failed;
    int depth = 0;
    double worst = 0.0;
  };

  auto process = [&](const Pending& task) -> Outcome {
    Outcome out;
    const Box& cell = task.cell;
    const bool is_initial = u0.has_value() && t_axis >= 0 && cell.lo[t_axis] == 0.0;
    Point anchor = cell.center();
    if (is_initial) {
      std::vector<double> c = anchor.coords;
      c[static_cast<size_t>(t_axis)] = 0.0;
      anchor = Point(std::move(c));
    }
    std::vector<double> target(static_cast<size_t>(sys.m()));
    for (int k = 0; k < sys.m(); ++k)
      target[static_cast<size_t>(k)] = g.eval(k, anchor) - cfg.theta * cfg.eps;

    JetSolverCfg jc = jcfg;
    if (cfg.neighbor_matching && jc.initial_guess.empty()) {
      // bias the free value slots toward the mean of solved face-neighbors
      std::vector<double> guess(static_cast<size_t>(sys.jet.K()), 0.0);
      int found = 0;
      for (const DoneCell& d : done) {
        if (!share_face(d.cell, cell)) continue;
        for (size_t s = 0; s < sys.jet.slots.size(); ++s)
          if (sys.jet.slots[s].alpha.total() == 0) guess[s] += d.jet[s];
        ++found;
      }
      if (found > 0) {
        for (double& v : guess) v /= found;
        jc.initial_guess = std::move(guess);
      }
    }

    std::vector<Poly> patch;
    std::vector<double> jet;
    try {
      if (is_initial) {
        const std::vector<Poly> u0_cell = canonical_u0(*u0, anchor, cell, degree);
        std::optional<JetHooks::InitialResult> hook_res;
        if (jc.use_hooks && sys.hooks.initial)
          hook_res = sys.hooks.initial(sys, anchor, target, u0_cell, cell.hi[t_axis]);
        if (hook_res) {
          jet = hook_res->jet;
          patch = patch_with_initial(jet, anchor, u0_cell, u0->unknowns, sys.jet, degree,
                                     &hook_res->steering);
        } else {
          // pin the spatial slots of the initial-data unknowns to u0
          std::vector<double> base(static_cast<size_t>(sys.jet.K()), 0.0);
          std::vector<bool> mask(static_cast<size_t>(sys.jet.K()), true);
          for (size_t s = 0; s < sys.jet.slots.size(); ++s) {
            const auto& slot = sys.jet.slots[s];
            const auto it = std::find(u0->unknowns.begin(), u0->unknowns.end(), slot.unknown);
            if (it == u0->unknowns.end()) continue;
            if (t_axis >= 0 && slot.alpha[t_axis] > 0) continue;
            const size_t ii = static_cast<size_t>(it - u0->unknowns.begin());
            base[s] = u0_cell[ii].deriv(anchor, slot.alpha);
            mask[s] = false;
          }
          jet = jet_solve_masked(sys, anchor, target, jc, mask, base);
          patch = patch_with_initial(jet, anchor, u0_cell, u0->unknowns, sys.jet, degree);
        }
        const BandCheck bc = check_band(sys, g, patch, cell, cfg.verify_density, cfg.eps);
        const InitialCheck ic = check_initial_face(patch, sys.jet.unknowns, *u0, u0_cell, cell,
                                                   cfg.verify_density);
        if (!bc.pass || ic.defect > cfg.u0_tol || ic.fit > cfg.u0_tol) {
          out.ok = false;
          out.failed = cell;
          out.depth = task.depth;
          out.worst = *std::min_element(bc.margin_min.begin(), bc.margin_min.end());
          return out;
        }
        out.ok = true;
        out.cell = DoneCell{cell,  task.depth, true, std::move(patch), std::move(jet),
                            CellReport{cell, task.depth, true, bc.samples, bc.margin_min,
                                       bc.margin_max},
                            ic.defect, ic.fit};
        return out;
      }

      jet = jet_solve(sys, anchor, target, jc);
      patch = taylor_patch(jet, anchor, sys.jet, degree);
      const BandCheck bc = check_band(sys, g, patch, cell, cfg.verify_density, cfg.eps);
      if (!bc.pass) {
        out.ok = false;
        out.failed = cell;
        out.depth = task.depth;
        out.worst = *std::min_element(bc.margin_min.begin(), bc.margin_min.end());
        return out;
      }
      out.ok = true;
      out.cell = DoneCell{cell,  task.depth, false, std::move(patch), std::move(jet),
                          CellReport{cell, task.depth, false, bc.samples, bc.margin_min,
                                     bc.margin_max},
                          0.0, 0.0};
      return out;
    } catch (const NoJetFound& e) {
      out.ok = false;
      out.error_kind = "nojet";
      out.error_msg = std::string(e.what()) + " in cell " + box_str(cell);
      return out;
    }
  };

  while (!queue.empty()) {
    std::vector<Pending> batch(queue.begin(), queue.end());
    queue.clear();
    std::vector<Outcome> results(batch.size());

    if (threads <= 1 || batch.size() == 1) {
      for (size_t i = 0; i < batch.size(); ++i) results[i] = process(batch[i]);
    } else {
      const size_t nw = std::min<size_t>(static_cast<size_t>(threads), batch.size());
      std::vector<std::thread> workers;
      std::atomic<size_t> next{0};
      for (size_t w = 0; w < nw; ++w) {
        workers.emplace_back([&]() {
          for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= batch.size()) return;
            results[i] = process(batch[i]);
          }
        });
      }
      for (std::thread& t : workers) t.join();
    }

    for (size_t i = 0; i < batch.size(); ++i) {
      Outcome& o = results[i];
      if (o.ok) {
        done.push_back(std::move(o.cell));
        continue;
      }
      if (o.error_kind == "nojet") throw NoJetFound(o.error_msg);
      if (batch[i].depth >= cfg.max_depth) {
        std::ostringstream os;
        os << "assemble: bisection depth " << cfg.max_depth << " exhausted in cell "
           << box_str(o.failed) << " (worst margin " << o.worst << ")";
        throw DepthExhausted(os.str());
      }
      auto [left, right] = bisect(batch[i].cell, widest_axis(batch[i].cell));
      queue.push_back({left, batch[i].depth + 1});
      queue.push_back({right, batch[i].depth + 1});
    }
  }

  std::sort(done.begin(), done.end(), [](const DoneCell& a, const DoneCell& b) {
    if (a.cell.lo.coords != b.cell.lo.coords) return a.cell.lo.coords < b.cell.lo.coords;
    return a.cell.hi.coords < b.cell.hi.coords;
  });

  std::vector<Box> cells;
  cells.reserve(done.size());
  for (const DoneCell& d : done) cells.push_back(d.cell);
  CellComplex complex(domain, std::move(cells));

  ApproxSolution sol;
  sol.sys = sys;
  sol.eps = cfg.eps;
  sol.theta = cfg.theta;
  sol.g = g;
  sol.u0 = u0;
  sol.cfg = cfg;
  sol.jcfg = jcfg;
  for (size_t ui = 0; ui < sys.jet.unknowns.size(); ++ui) {
    std::vector<Poly> pieces;
    pieces.reserve(done.size());
    for (const DoneCell& d : done) pieces.push_back(d.polys[ui]);
    sol.w.emplace_back(complex, std::move(pieces));
  }

  Certificate& cert = sol.certificate;
  cert.sample_density = cfg.verify_density;
  cert.seed = cfg.seed;
  cert.worst_margin = std::numeric_limits<double>::infinity();
  for (const DoneCell& d : done) {
    cert.cells.push_back(d.report);
    cert.initial_defect = std::max(cert.initial_defect, d.initial_defect);
    cert.u0_fit_residual = std::max(cert.u0_fit_residual, d.u0_fit);
    for (double m : d.report.margin_min) cert.worst_margin = std::min(cert.worst_margin, m);
    if (static_cast<int>(cert.depth_histogram.size()) <= d.depth)
      cert.depth_histogram.resize(static_cast<size_t>(d.depth) + 1, 0);
    ++cert.depth_histogram[static_cast<size_t>(d.depth)];
  }
  cert.pass = cert.worst_margin > 0.0 && cert.initial_defect <= cfg.u0_tol &&
              cert.u0_fit_residual <= cfg.u0_tol;
  return sol;
}

// ----------------------------------------------------------------- verify

Certificate verify(const ApproxSolution& sol, int density, std::uint64_t seed) {
  const PdeSystem& sys = sol.sys;
  const CellComplex& cx = sol.w.front().complex();
  const int n = cx.domain().dim();
  const int m = sys.m();
  const int t_axis = sys.time_axis();

  Certificate cert;
  cert.sample_density = density;
  cert.seed = seed;
  cert.worst_margin = std::numeric_limits<double>::infinity();

  size_t n_samples = 1;
  for (int a = 0; a < n; ++a) n_samples *= static_cast<size_t>(density);

  for (size_t ci = 0; ci < cx.size(); ++ci) {
    const Box& cell = cx.cells()[ci];
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (ci + 1)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw_interior = [&]() {
      std::vector<double> c(static_cast<size_t>(n));
      for (int a = 0; a < n; ++a) {
        double u = unif(rng);
        while (u == 0.0) u = unif(rng);
        c[static_cast<size_t>(a)] = cell.lo[a] + cell.width(a) * u;
      }
      return Point(std::move(c));
    };

    std::vector<Poly> cell_polys;
    cell_polys.reserve(sol.w.size());
    for (const PwPoly& w : sol.w) cell_polys.push_back(w.pieces()[ci]);

    CellReport rep;
    rep.cell = cell;
    rep.samples = static_cast<int>(n_samples);
    rep.margin_min.assign(static_cast<size_t>(m), std::numeric_limits<double>::infinity());
    rep.margin_max.assign(static_cast<size_t>(m), -std::numeric_limits<double>::infinity());
    for (size_t s = 0; s < n_samples; ++s) {
      const Point x = draw_interior();
      const std::vector<double> jet = jet_of_polys(sys.jet, cell_polys, sys.jet.unknowns, x);
      const std::vector<double> F = eval_F(sys, x, jet);
      for (int k = 0; k < m; ++k) {
        const double hi = sol.g.eval(k, x);
        const double lo = hi - sol.eps;
        const double margin = std::min(F[static_cast<size_t>(k)] - lo, hi - F[static_cast<size_t>(k)]);
        rep.margin_min[static_cast<size_t>(k)] = std::min(rep.margin_min[static_cast<size_t>(k)], margin);
        rep.margin_max[static_cast<size_t>(k)] = std::max(rep.margin_max[static_cast<size_t>(k)], margin);
      }
    }

    const bool is_initial = sol.u0.has_value() && t_axis >= 0 && cell.lo[t_axis] == 0.0;
    rep.initial = is_initial;
    if (is_initial) {
      Point anchor = cell.center();
      std::vector<double> ac = anchor.coords;
      ac[static_cast<size_t>(t_axis)] = 0.0;
      anchor = Point(std::move(ac));
      const std::vector<Poly> u0_cell = canonical_u0(*sol.u0, anchor, cell,
                                                     std::max(2, sys.jet.max_order()));
      for (int s = 0; s < density * density; ++s) {
        std::vector<double> xs(static_cast<size_t>(std::max(1, n - 1)), 0.0);
        for (int a = 0; a + 1 < n; ++a) {
          double u = unif(rng);
          while (u == 0.0) u = unif(rng);
          xs[static_cast<size_t>(a)] = cell.lo[a] + cell.width(a) * u;
        }
        const Point xsp(xs);
        std::vector<double> full(xs.begin(), xs.begin() + std::max(0, n - 1));
        full.push_back(0.0);
        const Point x(full);
        for (size_t i = 0; i < sol.u0->unknowns.size(); ++i) {
          const auto it = std::find(sys.jet.unknowns.begin(), sys.jet.unknowns.end(),
                                    sol.u0->unknowns[i]);
          const size_t ui = static_cast<size_t>(it - sys.jet.unknowns.begin());
          const double wv = cell_polys[ui].eval(x);
          const double cv = u0_cell[i].eval(x);
          cert.initial_defect = std::max(cert.initial_defect, std::abs(wv - cv));
          cert.u0_fit_residual =
              std::max(cert.u0_fit_residual, std::abs(cv - sol.u0->evals[i](xsp)));
        }
      }
    }

    for (double mm : rep.margin_min) cert.worst_margin = std::min(cert.worst_margin, mm);
    cert.cells.push_back(std::move(rep));
  }

  cert.pass = cert.worst_margin > 0.0 && cert.initial_defect <= sol.cfg.u0_tol &&
              cert.u0_fit_residual <= sol.cfg.u0_tol;
  return cert;
}

// ------------------------------------------------------ solution_sequence

SequenceResult solution_sequence(const PdeSystem& sys, const Box& domain, const Rhs& g,
                                 const std::optional<InitialData>& u0,
                                 const std::vector<int>& n_list, const SolveCfg& cfg,
                                 const JetSolverCfg& jcfg) {
  if (n_list.empty()) throw InvalidValue("solution_sequence: empty n list");
  for (size_t i = 0; i + 1 < n_list.size(); ++i)
    if (n_list[i] >= n_list[i + 1])
      throw InvalidValue("solution_sequence: n_list must be ascending");

  SequenceResult res;
  for (int n : n_list) {
    SolveCfg c = cfg;
    c.eps = 1.0 / n;
    res.solutions.push_back(assemble(sys, domain, g, u0, c, jcfg));
  }

  // sampling grid for the order-convergence checks
  std::vector<int> nodes = cfg.seq_grid_nodes;
  if (nodes.empty()) {
    const int def = sys.n == 1 ? 513 : sys.n == 2 ? 65 : sys.n == 3 ? 17 : 9;
    nodes.assign(static_cast<size_t>(sys.n), def);
  } else if (nodes.size() == 1 && sys.n > 1) {
    nodes.assign(static_cast<size_t>(sys.n), nodes[0]);
  }
  const Grid grid(domain, nodes);
  res.check_grid = grid;

  LatticeCfg ccfg;
  ccfg.gap_tol = 1.0 / n_list.back() + cfg.seq_gap_slack;
  ccfg.candidate_tol = ccfg.gap_tol;
  res.check_cfg = ccfg;

  // residual functions T w_n per component, sampled on the grid
  std::vector<std::vector<FnValue>> residual_seq(static_cast<size_t>(sys.m()));
  for (const ApproxSolution& sol : res.solutions) {
    const std::vector<PwExpr> Tw = apply_T(sol.sys, sol.w);
    for (int k = 0; k < sys.m(); ++k)
      residual_seq[static_cast<size_t>(k)].push_back(to_gridfn(Tw[static_cast<size_t>(k)], grid));
  }

  for (int k = 0; k < sys.m(); ++k) {
    // candidate: g sampled on the grid
    std::vector<XReal> gv(grid.node_count());
    std::vector<int> idx(static_cast<size_t>(grid.dim()), 0);
    for (;;) {
      gv[grid.flat_index(idx)] = XReal(g.eval(k, grid.node_point(idx)));
      int ax = grid.dim() - 1;
      while (ax >= 0 &&
             ++idx[static_cast<size_t>(ax)] >= grid.nodes_per_axis[static_cast<size_t>(ax)]) {
        idx[static_cast<size_t>(ax)] = 0;
        --ax;
      }
      if (ax < 0) break;
    }
    GridFn g_grid(grid, std::move(gv));

    res.convergence.push_back(
        order_converges(residual_seq[static_cast<size_t>(k)], g_grid, ccfg));

    std::vector<OrderInterval> intervals;
    for (int n : n_list) {
      std::vector<XReal> lov(g_grid.values.size());
      for (size_t i = 0; i < lov.size(); ++i)
        lov[i] = XReal(g_grid.values[i].value() - 1.0 / n);
      intervals.emplace_back(FnValue(GridFn(grid, std::move(lov))), FnValue(g_grid), ccfg);
    }
    res.chains.emplace_back(std::move(intervals), ccfg);
  }
  return res;
}

}  // namespace ordcomp
