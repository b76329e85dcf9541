#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ordcomp/core_types.hpp"
#include "ordcomp/gridfn.hpp"

namespace ordcomp {

// Polynomial in the scaled Taylor basis around `center`:
//   value(x) = sum_alpha coeffs[alpha] * (x - center)^alpha / alpha!
// so that the alpha-derivative at the center is exactly coeffs[alpha].
class Poly {
 public:
  Poly() = default;
  Poly(Point center, std::map<MultiIndex, double> coeffs);

  static Poly constant(Point center, double c);

  const Point& center() const { return center_; }
  const std::map<MultiIndex, double>& coeffs() const { return coeffs_; }
  int dim() const { return center_.dim(); }
  int degree() const { return degree_; }

  double eval(const Point& x) const;
  // Exact alpha-derivative as a polynomial evaluation; derivatives beyond
  // the stored degree are identically zero.
  double deriv(const Point& x, const MultiIndex& alpha) const;
  // The alpha-derivative, itself as a Poly around the same center.
  Poly derivative(const MultiIndex& alpha) const;
  // Same polynomial re-expanded around a new center (Taylor shift).
  Poly recenter(const Point& new_center) const;

  Poly& add_term(const MultiIndex& alpha, double coeff);

  friend bool operator==(const Poly& a, const Poly& b) {
    return a.center_ == b.center_ && a.coeffs_ == b.coeffs_;
  }

 private:
  Point center_;
  std::map<MultiIndex, double> coeffs_;
  int degree_ = 0;
};

// Finite partition of a box into axis-aligned cells with pairwise disjoint
// interiors. Local finiteness is automatic (the list is finite).
class CellComplex {
 public:
  CellComplex() = default;
  CellComplex(Box domain, std::vector<Box> cells);

  const Box& domain() const { return domain_; }
  const std::vector<Box>& cells() const { return cells_; }
  size_t size() const { return cells_.size(); }

  // Indices of all cells whose closure contains x.
  std::vector<size_t> incident_cells(const Point& x) const;
  // Index of a cell containing x in its interior, or npos if x lies on the
  // skeleton (or outside).
  static constexpr size_t npos = static_cast<size_t>(-1);
  size_t interior_cell(const Point& x) const;

  friend bool operator==(const CellComplex& a, const CellComplex& b) {
    return a.domain_ == b.domain_ && a.cells_ == b.cells_;
  }

 private:
  Box domain_;
  std::vector<Box> cells_;
};

// Per-cell evaluable expression: a polynomial leaf, a min/max tree over
// subexpressions, or an opaque callable (used for composed PDE residuals).
// Reductions iterate children in order, so evaluation is deterministic.
class PieceExpr {
 public:
  PieceExpr() : node_(Poly()) {}

  static PieceExpr poly(Poly p) { return PieceExpr(std::move(p)); }
  static PieceExpr min_of(std::vector<PieceExpr> children);
  static PieceExpr max_of(std::vector<PieceExpr> children);
  static PieceExpr callable(std::function<double(const Point&)> fn, std::string tag);

  double eval(const Point& x) const;

  bool is_poly() const { return std::holds_alternative<Poly>(node_); }
  const Poly* as_poly() const { return std::get_if<Poly>(&node_); }
  bool serializable() const;

  enum class Kind { Poly, Min, Max, Callable };
  Kind kind() const;
  const std::vector<PieceExpr>& children() const;

 private:
  struct Tree {
    bool is_min;
    std::vector<PieceExpr> children;
  };
  struct Callable {
    std::function<double(const Point&)> fn;
    std::string tag;
  };
  explicit PieceExpr(Poly p) : node_(std::move(p)) {}
  explicit PieceExpr(Tree t) : node_(std::move(t)) {}
  explicit PieceExpr(Callable c) : node_(std::move(c)) {}

  std::variant<Poly, Tree, Callable> node_;
};

// Piecewise polynomial on a cell complex, evaluated with NLSC semantics:
// the value anywhere is the minimum over incident cells of the cell
// polynomial. Off the skeleton that is just the cell polynomial; on the
// skeleton it is the minimum of the one-sided limits, which for piecewise
// polynomials is exactly the continuum (I o S) regularization.
class PwPoly {
 public:
  PwPoly() = default;
  PwPoly(CellComplex complex, std::vector<Poly> pieces);

  const CellComplex& complex() const { return complex_; }
  const std::vector<Poly>& pieces() const { return pieces_; }

 private:
  CellComplex complex_;
  std::vector<Poly> pieces_;
};

// Same cell structure with general min/max (or composed) expressions per
// cell; houses lattice results where a pointwise max of polynomials is no
// longer a polynomial.
class PwExpr {
 public:
  PwExpr() = default;
  PwExpr(CellComplex complex, std::vector<PieceExpr> pieces);
  explicit PwExpr(const PwPoly& p);

  const CellComplex& complex() const { return complex_; }
  const std::vector<PieceExpr>& pieces() const { return pieces_; }

 private:
  CellComplex complex_;
  std::vector<PieceExpr> pieces_;
};

// min over incident cells: the continuum (I o S) value of the piecewise
// function represented by f.
double eval_nlsc(const PwExpr& f, const Point& x);
double eval_nlsc(const PwPoly& f, const Point& x);

// max over incident cells: the continuum (S o I) value.
double eval_usc(const PwExpr& f, const Point& x);
double eval_usc(const PwPoly& f, const Point& x);

// Exact alpha-derivative of the cell polynomial at a point strictly inside
// a cell. OnSkeleton if x lies on any cell face.
double deriv_eval(const PwPoly& f, const Point& x, const MultiIndex& alpha);

// Sample-scale order test on the common refinement.
struct LeqResult {
  bool holds = false;
  Point witness;     // meaningful when !holds
  double gap = 0.0;  // f(witness) - g(witness) > tol
};
LeqResult leq_samples(const PwExpr& f, const PwExpr& g, int density, double tol = 1e-9);
LeqResult leq_samples(const PwPoly& f, const PwPoly& g, int density, double tol = 1e-9);

// Coarsest partition refining both complexes (pairwise cell intersections
// of positive volume).
CellComplex common_refinement(const CellComplex& a, const CellComplex& b);
CellComplex common_refinement(const PwExpr& f, const PwExpr& g);

// Re-attach pieces of f to a finer complex (every cell of `finer` must lie
// inside exactly one cell of f's complex).
PwExpr refine_to(const PwExpr& f, const CellComplex& finer);

// Sample eval_nlsc at every grid node. The grid box must lie inside the
// domain.
GridFn to_gridfn(const PwExpr& f, const Grid& grid);
GridFn to_gridfn(const PwPoly& f, const Grid& grid);

}  // namespace ordcomp
