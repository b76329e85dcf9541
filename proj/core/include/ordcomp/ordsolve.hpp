#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ordcomp/lattice.hpp"
#include "ordcomp/pdeop.hpp"
#include "ordcomp/pwpoly.hpp"

namespace ordcomp {

struct JetSolverCfg {
  std::vector<double> initial_guess;  // empty means zeros
  int max_iterations = 200;
  double tolerance = 1e-10;
  // Levenberg-Marquardt damping schedule
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.25;
  bool use_hooks = true;  // prefer a system's closed-form jet construction
};

struct SolveCfg {
  double eps = 0.1;
  double theta = 0.5;                // band target offset fraction, in (0,1)
  std::vector<int> initial_cells;    // cells per axis; empty means 1 per axis
  int max_depth = 12;
  int verify_density = 4;            // band samples per axis per cell (assembly)
  int cert_density = 4;              // certificate sampling density
  std::uint64_t seed = 1;
  int degree = -1;                   // patch degree; -1 means max(2, jet order)
  bool neighbor_matching = false;    // bias free value slots toward solved neighbors
  int threads = 0;                   // 0: honor ORDCOMP_THREADS, else 1
  double u0_tol = 1e-9;              // initial-condition tolerance for pass
  std::vector<int> seq_grid_nodes;   // grid for sequence checks; empty = per-dim default
  double seq_gap_slack = 1e-6;       // added to 1/n_max in sequence verdicts
};

// Right-hand side g: either coordinate expressions or piecewise
// polynomials, one per equation.
struct Rhs {
  std::vector<ExprPtr> exprs;
  std::vector<std::string> texts;  // source of exprs, kept for provenance
  std::vector<PwPoly> polys;

  static Rhs from_exprs(std::vector<ExprPtr> es, std::vector<std::string> texts = {});
  static Rhs from_polys(std::vector<PwPoly> ps);
  int components() const;
  double eval(int comp, const Point& p) const;
};

// Initial data on the t = 0 face: one spatial function per listed unknown.
// Exact polynomials stay exact through per-cell recentering; anything else
// is Taylor-fitted per cell and the fit residual is measured and reported.
struct InitialData {
  std::vector<std::string> unknowns;
  std::vector<ExprPtr> exprs;               // spatial expressions (may be empty)
  std::vector<std::string> texts;
  std::vector<std::optional<Poly>> polys;   // exact spatial polys when available
  std::vector<std::function<double(const Point&)>> evals;  // spatial evaluators

  static InitialData from_exprs(std::vector<std::string> unknowns,
                                std::vector<std::string> expr_texts, int n_spatial);
};

struct CellReport {
  Box cell;
  int depth = 0;
  bool initial = false;
  int samples = 0;
  std::vector<double> margin_min;  // per component: distance into the open band
  std::vector<double> margin_max;
};

struct Certificate {
  bool pass = false;
  double worst_margin = 0.0;
  double initial_defect = 0.0;     // vs the canonical per-cell initial polys
  double u0_fit_residual = 0.0;    // canonical polys vs the supplied initial data
  int sample_density = 0;
  std::uint64_t seed = 0;
  std::vector<int> depth_histogram;
  std::vector<CellReport> cells;
};

struct ApproxSolution {
  PdeSystem sys;
  std::vector<PwPoly> w;  // one per unknown, in sys.jet.unknowns order
  double eps = 0.0;
  double theta = 0.5;
  Rhs g;
  std::optional<InitialData> u0;
  Certificate certificate;
  SolveCfg cfg;
  JetSolverCfg jcfg;
};

// Jet solving: returns xi with |F(p, xi) - target| <= cfg.tolerance
// componentwise, via the system's closed-form hook when registered, else by
// damped least squares from the initial guess. Throws NoJetFound when the
// iteration stalls (the pointwise surjectivity of F fails numerically).
std::vector<double> jet_solve(const PdeSystem& sys, const Point& p,
                              const std::vector<double>& target, const JetSolverCfg& cfg);

// Constrained variant: only slots with free_mask true may move; pinned
// slots keep their base_jet values. Unreachable targets throw NoJetFound.
std::vector<double> jet_solve_masked(const PdeSystem& sys, const Point& p,
                                     const std::vector<double>& target,
                                     const JetSolverCfg& cfg, const std::vector<bool>& free_mask,
                                     const std::vector<double>& base_jet);

// Per unknown, the polynomial with D^alpha v(center) = jet[slot(alpha)].
std::vector<Poly> taylor_patch(const std::vector<double>& jet, const Point& center,
                               const JetSpec& spec, int degree);

// Initial-face patch: unknowns with initial data get u0(x) plus the jet's
// time-derivative slots (and an optional linear steering field
// t * A[u][k] * (x_k - center_k)); the rest get a plain Taylor patch. The
// value at t = 0 reproduces u0 identically on the cell.
std::vector<Poly> patch_with_initial(
    const std::vector<double>& jet, const Point& center, const std::vector<Poly>& u0_cell,
    const std::vector<std::string>& initial_unknowns, const JetSpec& spec, int degree,
    const std::vector<std::vector<double>>* steering = nullptr);

// Adaptive assembly per the subdivide-solve-glue construction: anchor each
// cell at its center (its t = 0 projection for initial cells), solve the
// jet toward g(anchor) - theta*eps, patch, check the open band
// (g - eps, g) at the cell's interior samples, bisect the widest axis on
// failure, then glue the accepted pieces into one piecewise polynomial per
// unknown. The gluing needs no face bookkeeping: NLSC evaluation resolves
// the skeleton by the incident-cell minimum.
ApproxSolution assemble(const PdeSystem& sys, const Box& domain, const Rhs& g,
                        const std::optional<InitialData>& u0, const SolveCfg& cfg,
                        const JetSolverCfg& jcfg);

// Independent re-check of the band and the initial condition on fresh
// uniform random samples drawn deterministically from `seed`.
Certificate verify(const ApproxSolution& sol, int density, std::uint64_t seed);

struct SequenceResult {
  std::vector<ApproxSolution> solutions;          // one per n in n_list
  std::vector<ConvergeResult> convergence;        // per equation component
  std::vector<IntervalChain> chains;              // per component: [g - 1/n, g]
  LatticeCfg check_cfg;                           // tolerances used for verdicts
  Grid check_grid;
};

// Defect sequence: assemble with eps = 1/n for each n, then check that the
// residuals T w_n order-converge to g on a sampling grid, with the
// truncation residual 1/max(n_list) folded into the verdict tolerance.
SequenceResult solution_sequence(const PdeSystem& sys, const Box& domain, const Rhs& g,
                                 const std::optional<InitialData>& u0,
                                 const std::vector<int>& n_list, const SolveCfg& cfg,
                                 const JetSolverCfg& jcfg);

int effective_threads(int requested);

}  // namespace ordcomp
