#include "ordcomp/pwpoly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ordcomp {

// ---------------------------------------------------------------- Poly

Poly::Poly(Point center, std::map<MultiIndex, double> coeffs)
    : center_(std::move(center)), coeffs_(std::move(coeffs)) {
  for (auto it = coeffs_.begin(); it != coeffs_.end();) {
    if (it->first.dim() != center_.dim())
      throw DimensionMismatch("Poly: multi-index dimension mismatch");
    if (it->second == 0.0 && it->first.total() > 0) {
      it = coeffs_.erase(it);
    } else {
      degree_ = std::max(degree_, it->first.total());
      ++it;
    }
  }
}

Poly Poly::constant(Point center, double c) {
  std::map<MultiIndex, double> m;
  m[MultiIndex::zeros(center.dim())] = c;
  return Poly(std::move(center), std::move(m));
}

double Poly::eval(const Point& x) const {
  if (x.dim() != dim()) throw DimensionMismatch("Poly::eval: dimension mismatch");
  double s = 0.0;
  for (const auto& [alpha, c] : coeffs_) s += c * monomial_eval(alpha, x, center_);
  return s;
}

double Poly::deriv(const Point& x, const MultiIndex& alpha) const {
  return derivative(alpha).eval(x);
}

Poly Poly::derivative(const MultiIndex& alpha) const {
  if (alpha.dim() != dim()) throw DimensionMismatch("Poly::derivative: dimension mismatch");
  // In the scaled Taylor basis, d^alpha maps the beta-term to the
  // (beta - alpha)-term with the same coefficient.
  std::map<MultiIndex, double> out;
  for (const auto& [beta, c] : coeffs_) {
    std::vector<int> rem(static_cast<size_t>(dim()));
    bool ok = true;
    for (int i = 0; i < dim(); ++i) {
      rem[static_cast<size_t>(i)] = beta[i] - alpha[i];
      if (rem[static_cast<size_t>(i)] < 0) {
        ok = false;
        break;
      }
    }
    if (ok) out[MultiIndex(std::move(rem))] = c;
  }
  return Poly(center_, std::move(out));
}

Poly Poly::recenter(const Point& new_center) const {
  if (new_center.dim() != dim()) throw DimensionMismatch("Poly::recenter: dimension mismatch");
  // c'_alpha = D^alpha p(new_center); enumerate alpha up to the degree.
  std::map<MultiIndex, double> out;
  std::vector<int> alpha(static_cast<size_t>(dim()), 0);
  const int d = degree_;
  for (;;) {
    MultiIndex mi(alpha);
    if (mi.total() <= d) {
      const double v = deriv(new_center, mi);
      if (v != 0.0 || mi.total() == 0) out[mi] = v;
    }
    int ax = dim() - 1;
    while (ax >= 0 && ++alpha[static_cast<size_t>(ax)] > d) {
      alpha[static_cast<size_t>(ax)] = 0;
      --ax;
    }
    if (ax < 0) break;
  }
  return Poly(new_center, std::move(out));
}

Poly& Poly::add_term(const MultiIndex& alpha, double coeff) {
  if (alpha.dim() != dim()) throw DimensionMismatch("Poly::add_term: dimension mismatch");
  coeffs_[alpha] += coeff;
  degree_ = std::max(degree_, alpha.total());
  return *this;
}

// --------------------------------------------------------- CellComplex

CellComplex::CellComplex(Box domain, std::vector<Box> cells)
    : domain_(std::move(domain)), cells_(std::move(cells)) {
  if (cells_.empty()) throw InvalidValue("CellComplex: no cells");
  double vol = 0.0;
  for (const Box& c : cells_) {
    if (c.dim() != domain_.dim())
      throw DimensionMismatch("CellComplex: cell dimension mismatch");
    for (int i = 0; i < c.dim(); ++i)
      if (c.lo[i] < domain_.lo[i] || c.hi[i] > domain_.hi[i])
        throw InvalidValue("CellComplex: cell outside domain");
    vol += c.volume();
  }
  const double dvol = domain_.volume();
  const double scale = std::max(1.0, std::abs(dvol));
  if (std::abs(vol - dvol) > 1e-9 * scale)
    throw InvalidValue("CellComplex: cells do not tile the domain (volume mismatch)");
  // interior-disjointness probe at cell centers: a center may lie in the
  // closure of several cells only if it sits on a face, which it cannot.
  for (size_t i = 0; i < cells_.size(); ++i) {
    const Point c = cells_[i].center();
    for (size_t j = 0; j < cells_.size(); ++j) {
      if (j != i && cells_[j].contains_interior(c))
        throw InvalidValue("CellComplex: overlapping cell interiors");
    }
  }
}

std::vector<size_t> CellComplex::incident_cells(const Point& x) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < cells_.size(); ++i)
    if (cells_[i].contains(x)) out.push_back(i);
  return out;
}

size_t CellComplex::interior_cell(const Point& x) const {
  for (size_t i = 0; i < cells_.size(); ++i)
    if (cells_[i].contains_interior(x)) return i;
  return npos;
}

// ----------------------------------------------------------- PieceExpr

PieceExpr PieceExpr::min_of(std::vector<PieceExpr> children) {
  if (children.empty()) throw InvalidValue("PieceExpr::min_of: no children");
  return PieceExpr(Tree{true, std::move(children)});
}

PieceExpr PieceExpr::max_of(std::vector<PieceExpr> children) {
  if (children.empty()) throw InvalidValue("PieceExpr::max_of: no children");
  return PieceExpr(Tree{false, std::move(children)});
}

PieceExpr PieceExpr::callable(std::function<double(const Point&)> fn, std::string tag) {
  return PieceExpr(Callable{std::move(fn), std::move(tag)});
}

double PieceExpr::eval(const Point& x) const {
  if (const Poly* p = std::get_if<Poly>(&node_)) return p->eval(x);
  if (const Tree* t = std::get_if<Tree>(&node_)) {
    double acc = t->children.front().eval(x);
    for (size_t i = 1; i < t->children.size(); ++i) {
      const double v = t->children[i].eval(x);
      acc = t->is_min ? std::min(acc, v) : std::max(acc, v);
    }
    return acc;
  }
  return std::get<Callable>(node_).fn(x);
}

bool PieceExpr::serializable() const {
  if (std::holds_alternative<Poly>(node_)) return true;
  if (const Tree* t = std::get_if<Tree>(&node_)) {
    return std::all_of(t->children.begin(), t->children.end(),
                       [](const PieceExpr& c) { return c.serializable(); });
  }
  return false;
}

PieceExpr::Kind PieceExpr::kind() const {
  if (std::holds_alternative<Poly>(node_)) return Kind::Poly;
  if (const Tree* t = std::get_if<Tree>(&node_)) return t->is_min ? Kind::Min : Kind::Max;
  return Kind::Callable;
}

const std::vector<PieceExpr>& PieceExpr::children() const {
  return std::get<Tree>(node_).children;
}

// ------------------------------------------------------ PwPoly / PwExpr

PwPoly::PwPoly(CellComplex complex, std::vector<Poly> pieces)
    : complex_(std::move(complex)), pieces_(std::move(pieces)) {
  if (pieces_.size() != complex_.size())
    throw DimensionMismatch("PwPoly: one polynomial per cell required");
}

PwExpr::PwExpr(CellComplex complex, std::vector<PieceExpr> pieces)
    : complex_(std::move(complex)), pieces_(std::move(pieces)) {
  if (pieces_.size() != complex_.size())
    throw DimensionMismatch("PwExpr: one piece per cell required");
}

PwExpr::PwExpr(const PwPoly& p) : complex_(p.complex()) {
  pieces_.reserve(p.pieces().size());
  for (const Poly& q : p.pieces()) pieces_.push_back(PieceExpr::poly(q));
}

namespace {

double incident_reduce(const PwExpr& f, const Point& x, bool take_min) {
  const auto idx = f.complex().incident_cells(x);
  if (idx.empty()) throw OutOfDomain("eval: point outside the domain");
  double acc = f.pieces()[idx.front()].eval(x);
  for (size_t k = 1; k < idx.size(); ++k) {
    const double v = f.pieces()[idx[k]].eval(x);
    acc = take_min ? std::min(acc, v) : std::max(acc, v);
  }
  return acc;
}

}  // namespace

double eval_nlsc(const PwExpr& f, const Point& x) { return incident_reduce(f, x, true); }
double eval_nlsc(const PwPoly& f, const Point& x) { return eval_nlsc(PwExpr(f), x); }

double eval_usc(const PwExpr& f, const Point& x) { return incident_reduce(f, x, false); }
double eval_usc(const PwPoly& f, const Point& x) { return eval_usc(PwExpr(f), x); }

double deriv_eval(const PwPoly& f, const Point& x, const MultiIndex& alpha) {
  if (!f.complex().domain().contains(x)) throw OutOfDomain("deriv_eval: point outside domain");
  const size_t i = f.complex().interior_cell(x);
  if (i == CellComplex::npos)
    throw OnSkeleton("deriv_eval: point lies on a cell face");
  return f.pieces()[i].deriv(x, alpha);
}

LeqResult leq_samples(const PwExpr& f, const PwExpr& g, int density, double tol) {
  const CellComplex refined = common_refinement(f, g);
  const SampleSet samples = sample_cells(refined.domain(), refined.cells(), density);
  LeqResult res;
  res.holds = true;
  double worst = -std::numeric_limits<double>::infinity();
  for (const Point& p : samples.points) {
    const double gap = eval_nlsc(f, p) - eval_nlsc(g, p);
    if (gap > tol && gap > worst) {
      worst = gap;
      res.holds = false;
      res.witness = p;
      res.gap = gap;
    }
  }
  return res;
}

LeqResult leq_samples(const PwPoly& f, const PwPoly& g, int density, double tol) {
  return leq_samples(PwExpr(f), PwExpr(g), density, tol);
}

CellComplex common_refinement(const CellComplex& a, const CellComplex& b) {
  if (!(a.domain() == b.domain()))
    throw DomainMismatch("common_refinement: domains differ");
  std::vector<Box> cells;
  for (const Box& ca : a.cells()) {
    for (const Box& cb : b.cells()) {
      std::vector<double> lo(static_cast<size_t>(ca.dim()));
      std::vector<double> hi(static_cast<size_t>(ca.dim()));
      bool nonempty = true;
      for (int i = 0; i < ca.dim(); ++i) {
        lo[static_cast<size_t>(i)] = std::max(ca.lo[i], cb.lo[i]);
        hi[static_cast<size_t>(i)] = std::min(ca.hi[i], cb.hi[i]);
        if (!(lo[static_cast<size_t>(i)] < hi[static_cast<size_t>(i)])) {
          nonempty = false;
          break;
        }
      }
      if (nonempty) cells.emplace_back(Point(std::move(lo)), Point(std::move(hi)));
    }
  }
  return CellComplex(a.domain(), std::move(cells));
}

CellComplex common_refinement(const PwExpr& f, const PwExpr& g) {
  return common_refinement(f.complex(), g.complex());
}

PwExpr refine_to(const PwExpr& f, const CellComplex& finer) {
  std::vector<PieceExpr> pieces;
  pieces.reserve(finer.size());
  for (const Box& cell : finer.cells()) {
    const size_t parent = f.complex().interior_cell(cell.center());
    if (parent == CellComplex::npos)
      throw ComplexMismatch("refine_to: target complex does not refine the source");
    pieces.push_back(f.pieces()[parent]);
  }
  return PwExpr(finer, std::move(pieces));
}

GridFn to_gridfn(const PwExpr& f, const Grid& grid) {
  const Box& dom = f.complex().domain();
  if (grid.dim() != dom.dim()) throw DimensionMismatch("to_gridfn: dimension mismatch");
  for (int i = 0; i < dom.dim(); ++i)
    if (grid.box.lo[i] < dom.lo[i] || grid.box.hi[i] > dom.hi[i])
      throw OutOfDomain("to_gridfn: grid box outside the domain");
  std::vector<XReal> vals(grid.node_count());
  std::vector<int> idx(static_cast<size_t>(grid.dim()), 0);
  for (;;) {
    vals[grid.flat_index(idx)] = XReal(eval_nlsc(f, grid.node_point(idx)));
    int ax = grid.dim() - 1;
    while (ax >= 0 && ++idx[static_cast<size_t>(ax)] >=
                          grid.nodes_per_axis[static_cast<size_t>(ax)]) {
      idx[static_cast<size_t>(ax)] = 0;
      --ax;
    }
    if (ax < 0) break;
  }
  return GridFn(grid, std::move(vals));
}

GridFn to_gridfn(const PwPoly& f, const Grid& grid) { return to_gridfn(PwExpr(f), grid); }

}  // namespace ordcomp
