#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ordcomp/gridfn.hpp"
#include "ordcomp/pwpoly.hpp"

namespace ordcomp {

// A lattice element in one of the two computable representations. All
// members of a family must use the same representation: exact piecewise
// expressions, or functions sampled on one shared grid.
using FnValue = std::variant<PwExpr, GridFn>;

struct LatticeCfg {
  double gap_tol = 1e-7;      // verdict tolerance for pinch/convergence gaps
  double candidate_tol = -1;  // candidate-vs-midpoint tolerance; <0 means gap_tol
  int density = 4;            // samples per axis per cell (exact-pw mode)
  int r_inner = 1;            // grid-mode regularization radii
  int r_outer = 2;

  double cand_tol() const { return candidate_tol < 0 ? gap_tol : candidate_tol; }
};

// Least upper bound per the Dedekind-complete representation: the pointwise
// supremum followed by the lower-of-upper regularization. In exact-pw mode
// the per-cell max tree evaluated with incident-cell-minimum semantics IS
// that regularization; in grid mode the nodewise max is regularized
// explicitly.
FnValue dedekind_sup(const std::vector<FnValue>& family, const LatticeCfg& cfg = {});

// Greatest lower bound: pointwise infimum followed by the three-pass
// regularization. For piecewise-continuous exact data both regularizations
// coincide pointwise (the incident-cell minimum of the per-cell limits), so
// exact-pw mode reuses the min tree with NLSC evaluation.
FnValue dedekind_inf(const std::vector<FnValue>& family, const LatticeCfg& cfg = {});

// Pointwise lattice evaluation helpers.
double eval_at(const FnValue& f, const Point& x);
std::vector<Point> sample_points(const FnValue& f, int density);

struct OrderInterval {
  FnValue lo;
  FnValue hi;

  OrderInterval(FnValue lo_, FnValue hi_, const LatticeCfg& cfg = {});
};

struct IntervalChain {
  std::vector<OrderInterval> intervals;

  explicit IntervalChain(std::vector<OrderInterval> iv, const LatticeCfg& cfg = {});
};

struct ConvergenceWitness {
  std::vector<FnValue> lambda_seq;  // ascending tail infima
  std::vector<FnValue> mu_seq;      // descending tail suprema
  FnValue target;
  double residual = 0.0;        // max sample gap mu_N - lambda_N
  double candidate_dist = 0.0;  // max sample |candidate - midpoint|
};

struct ConvergeResult {
  bool converged = false;
  std::string reason;  // failing check when !converged
  ConvergenceWitness witness;
};

// Order-convergence check of a finite prefix: builds tail envelopes
// lambda_n = inf{u_k : k >= n}, mu_n = sup{u_k : k >= n}, then checks
// monotonicity, the sandwich, the final gap and the candidate distance, all
// at sample scale. The verdict is "at truncation N" with the residuals
// reported in the witness.
ConvergeResult order_converges(const std::vector<FnValue>& seq, const FnValue& candidate,
                               const LatticeCfg& cfg = {});

struct ChainVerdict {
  bool pinched = false;
  std::optional<FnValue> pinch_value;  // midpoint of [a, b] when pinched
  Point witness;                       // worst sample point when not pinched
  double gap = 0.0;                    // max sample gap (b - a) on V
};

// Pinching test of Definition-style interval chains on open test boxes:
// a = sup of the lower ends, b = inf of the upper ends; Pinched when the
// sample gap of b - a on V stays within cfg.gap_tol, otherwise Gap with the
// worst witness.
std::vector<std::vector<ChainVerdict>> chain_check(const std::vector<IntervalChain>& chains,
                                                   const std::vector<Box>& test_opens,
                                                   const LatticeCfg& cfg = {});

struct DistributivityResult {
  bool holds = false;
  Point witness;
  double lhs = 0.0;
  double rhs = 0.0;
};

// Full distributivity law: sup(A) meet v against sup{u meet v : u in A},
// compared at samples.
DistributivityResult distributivity_check(const std::vector<FnValue>& family, const FnValue& v,
                                          const LatticeCfg& cfg = {});

}  // namespace ordcomp
