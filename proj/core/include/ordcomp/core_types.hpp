#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "ordcomp/errors.hpp"

namespace ordcomp {

// Extended real scalar: any finite double, +inf or -inf. NaN is rejected at
// construction, so the ordering is total. Arithmetic is restricted to
// negation and min/max; infinities never meet addition.
class XReal {
 public:
  XReal() : v_(0.0) {}
  XReal(double v) : v_(v) {
    if (std::isnan(v)) throw InvalidValue("XReal: NaN is unrepresentable");
  }

  static XReal pos_inf() { return XReal(std::numeric_limits<double>::infinity()); }
  static XReal neg_inf() { return XReal(-std::numeric_limits<double>::infinity()); }

  double value() const { return v_; }
  bool is_finite() const { return std::isfinite(v_); }

  XReal operator-() const { return XReal(-v_); }
  friend auto operator<=>(XReal a, XReal b) { return a.v_ <=> b.v_; }
  friend bool operator==(XReal a, XReal b) { return a.v_ == b.v_; }

 private:
  double v_;
};

inline XReal min(XReal a, XReal b) { return a < b ? a : b; }
inline XReal max(XReal a, XReal b) { return a < b ? b : a; }

// Point in R^n, all coordinates finite. By convention the last coordinate
// may play the role of time; nothing here depends on that.
struct Point {
  std::vector<double> coords;

  Point() = default;
  explicit Point(std::vector<double> c) : coords(std::move(c)) {
    if (coords.empty()) throw InvalidValue("Point: dimension must be >= 1");
    for (double v : coords)
      if (!std::isfinite(v)) throw InvalidValue("Point: coordinates must be finite");
  }

  int dim() const { return static_cast<int>(coords.size()); }
  double operator[](int i) const { return coords[static_cast<size_t>(i)]; }

  friend bool operator==(const Point& a, const Point& b) { return a.coords == b.coords; }
};

// Axis-aligned box [lo, hi]. Degenerate axes (lo == hi) are allowed: faces
// of cells are themselves boxes.
struct Box {
  Point lo;
  Point hi;

  Box() = default;
  Box(Point lo_, Point hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.dim() != hi.dim()) throw DimensionMismatch("Box: lo/hi dimension mismatch");
    for (int i = 0; i < lo.dim(); ++i)
      if (lo[i] > hi[i]) throw InvalidValue("Box: lo must be <= hi on every axis");
  }

  int dim() const { return lo.dim(); }
  double width(int axis) const { return hi[axis] - lo[axis]; }
  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= width(i);
    return v;
  }
  bool contains(const Point& p, double pad = 0.0) const {
    if (p.dim() != dim()) return false;
    for (int i = 0; i < dim(); ++i)
      if (p[i] < lo[i] - pad || p[i] > hi[i] + pad) return false;
    return true;
  }
  // true iff p lies strictly inside.
  bool contains_interior(const Point& p) const {
    if (p.dim() != dim()) return false;
    for (int i = 0; i < dim(); ++i)
      if (!(p[i] > lo[i] && p[i] < hi[i])) return false;
    return true;
  }
  Point center() const {
    std::vector<double> c(static_cast<size_t>(dim()));
    for (int i = 0; i < dim(); ++i) c[static_cast<size_t>(i)] = std::midpoint(lo[i], hi[i]);
    return Point(std::move(c));
  }

  friend bool operator==(const Box& a, const Box& b) { return a.lo == b.lo && a.hi == b.hi; }
};

// Multi-index of partial-derivative orders; |alpha| is the total order.
struct MultiIndex {
  std::vector<int> orders;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> o) : orders(std::move(o)) {
    for (int k : orders)
      if (k < 0) throw InvalidValue("MultiIndex: orders must be nonnegative");
  }
  static MultiIndex zeros(int n) { return MultiIndex(std::vector<int>(static_cast<size_t>(n), 0)); }
  static MultiIndex unit(int n, int axis, int order = 1) {
    std::vector<int> o(static_cast<size_t>(n), 0);
    o[static_cast<size_t>(axis)] = order;
    return MultiIndex(std::move(o));
  }

  int dim() const { return static_cast<int>(orders.size()); }
  int operator[](int i) const { return orders[static_cast<size_t>(i)]; }
  int total() const {
    int s = 0;
    for (int k : orders) s += k;
    return s;
  }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.orders == b.orders; }
  friend auto operator<=>(const MultiIndex& a, const MultiIndex& b) {
    return a.orders <=> b.orders;
  }
};

// Finite ordered set of sample points inside a box, together with the
// per-axis-per-cell density that generated it.
struct SampleSet {
  std::vector<Point> points;
  int density = 0;
};

// Splits b at the midpoint hyperplane of the given axis. The two halves
// share that hyperplane and their union is b.
std::pair<Box, Box> bisect(const Box& b, int axis);

// Scaled Taylor basis function: prod_i (x_i - a_i)^{alpha_i} / alpha!.
double monomial_eval(const MultiIndex& alpha, const Point& x, const Point& center);

// Interior sample lattice of each cell: along every axis k points at the
// fractions j/(k+1), j = 1..k, of the cell. No point ever lies on a cell
// face. Order: cells as given, then row-major over the per-axis indices
// (last axis fastest).
SampleSet sample_cells(const Box& b, const std::vector<Box>& partition, int density);

double factorial(int n);

}  // namespace ordcomp
