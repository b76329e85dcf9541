#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ordcomp/core_types.hpp"
#include "ordcomp/pwpoly.hpp"

namespace ordcomp {

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Expression tree over point coordinates, named parameters and jet
// variables (an unknown name together with a derivative multi-index).
class Expr {
 public:
  enum class Op {
    Const, Param, Coord, Jet,
    Add, Sub, Mul, Div, Pow, Neg,
    Sin, Cos, Exp, Abs
  };

  Op op = Op::Const;
  double value = 0.0;       // Const
  std::string name;         // Param
  int axis = -1;            // Coord: 0-based axis, time is the last axis
  bool is_time = false;     // Coord
  std::string jet_unknown;  // Jet
  MultiIndex jet_alpha;     // Jet (dimension = system dimension)
  int jet_slot = -1;        // Jet: resolved index into the JetSpec
  int is_time_axis = -1;    // Jet: the system's time axis, for printing
  int ipow = 0;             // Pow exponent (nonnegative)
  ExprPtr a;
  ExprPtr b;

  static ExprPtr constant(double v);
  static ExprPtr param(std::string name);
  static ExprPtr coord(int axis, bool is_time);
  static ExprPtr jet(std::string unknown, MultiIndex alpha);
  static ExprPtr binary(Op op, ExprPtr a, ExprPtr b);
  static ExprPtr pow(ExprPtr a, int k);
  static ExprPtr neg(ExprPtr a);
  static ExprPtr unary(Op fn, ExprPtr a);
};

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
std::string expr_to_string(const ExprPtr& e);

// Ordered layout of the jet vector xi: one slot per (unknown, multi-index)
// pair appearing in the system, sorted lexicographically by unknown name
// and then by multi-index. Value references occupy the zero multi-index.
struct JetSpec {
  struct Slot {
    std::string unknown;
    MultiIndex alpha;
    friend bool operator==(const Slot&, const Slot&) = default;
  };
  std::vector<Slot> slots;
  std::vector<std::string> unknowns;

  int K() const { return static_cast<int>(slots.size()); }
  int max_order() const;
  int slot_index(const std::string& unknown, const MultiIndex& alpha) const;
  std::vector<MultiIndex> slots_of(const std::string& unknown) const;

  friend bool operator==(const JetSpec&, const JetSpec&) = default;
};

struct PdeSystem;

// Closed-form jet constructions a system may register; ordsolve prefers
// them over the generic damped least-squares iteration.
struct JetHooks {
  // jet hitting `target` at `anchor` with all remaining slots zero
  std::function<std::optional<std::vector<double>>(
      const PdeSystem&, const Point& anchor, const std::vector<double>& target)>
      regular;
  // constrained variant for cells on the initial face: spatial slots of the
  // initial-data unknowns are pinned to u0; returns the jet plus a linear
  // steering field A (per unknown, per spatial axis) applied as
  // t * A[u][k] * (x_k - anchor_k).
  struct InitialResult {
    std::vector<double> jet;
    std::vector<std::vector<double>> steering;
  };
  std::function<std::optional<InitialResult>(
      const PdeSystem&, const Point& anchor, const std::vector<double>& target,
      const std::vector<Poly>& u0_at_anchor, double cell_t_top)>
      initial;
};

struct PdeSystem {
  std::vector<ExprPtr> equations;
  std::vector<std::string> rhs_labels;
  JetSpec jet;
  std::map<std::string, double> params;
  int n = 1;              // total coordinate count (time included when present)
  bool has_time = false;  // last axis is time
  JetHooks hooks;
  // unknowns that carry initial data when an initial condition is supplied
  std::vector<std::string> initial_unknowns;

  int m() const { return static_cast<int>(equations.size()); }
  int n_spatial() const { return has_time ? n - 1 : n; }
  int time_axis() const { return has_time ? n - 1 : -1; }
};

// Parses the equation DSL (one equation per line, '#' comments). The
// spatial dimension and presence of a time axis are inferred from the text;
// pass n_spatial/with_time to widen the coordinate space beyond what the
// equations mention.
PdeSystem parse_operator(const std::string& text, int n_spatial = -1, int with_time = -1);

// Canonical text form; parse_operator(pretty_print(sys)) reproduces the
// system structurally.
std::string pretty_print(const PdeSystem& sys);

// Pure evaluation of F at a point with the given jet vector.
std::vector<double> eval_F(const PdeSystem& sys, const Point& p,
                           const std::vector<double>& jet);

// Jet of a polynomial tuple at a point, laid out per the JetSpec.
std::vector<double> jet_of_polys(const JetSpec& spec, const std::vector<Poly>& polys,
                                 const std::vector<std::string>& poly_unknowns,
                                 const Point& x);

// Extension of the operator to piecewise polynomials: per cell the
// composition F(x, jets of the cell polynomials), evaluated anywhere with
// NLSC semantics. All inputs must share one complex; the unknown order
// must match sys.jet.unknowns.
std::vector<PwExpr> apply_T(const PdeSystem& sys, const std::vector<PwPoly>& v);

// Incompressible Navier-Stokes in three spatial dimensions plus time, with
// the nonlinear term in the momentum equations written as
// sum_j u_j d/dx_i u_j. `standard_convective` switches to the advective
// form sum_j u_j d/dx_j u_i for comparison runs.
PdeSystem ns_system(double nu, bool standard_convective = false);

// --- coordinate-only expressions (right-hand sides, initial data) ---

// Parses one expression without jet variables over x1..xn(,t).
ExprPtr parse_scalar_expr(const std::string& text, int n, bool has_time);
// Semicolon-separated list.
std::vector<ExprPtr> parse_scalar_exprs(const std::string& text, int n, bool has_time);
double eval_scalar(const ExprPtr& e, const Point& p,
                   const std::map<std::string, double>& params = {});
// Exact conversion to a Poly (centered at the origin) when the expression
// is polynomial; nullopt otherwise.
std::optional<Poly> expr_to_poly(const ExprPtr& e, int n,
                                 const std::map<std::string, double>& params = {});

}  // namespace ordcomp
