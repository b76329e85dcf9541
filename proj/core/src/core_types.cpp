#include "ordcomp/core_types.hpp"

#include <numeric>

namespace ordcomp {

std::pair<Box, Box> bisect(const Box& b, int axis) {
  if (axis < 0 || axis >= b.dim())
    throw DimensionMismatch("bisect: axis out of range");
  if (b.lo[axis] == b.hi[axis])
    throw ZeroWidthAxis("bisect: zero width along axis " + std::to_string(axis));
  const double mid = std::midpoint(b.lo[axis], b.hi[axis]);
  std::vector<double> lhi = b.hi.coords;
  std::vector<double> rlo = b.lo.coords;
  lhi[static_cast<size_t>(axis)] = mid;
  rlo[static_cast<size_t>(axis)] = mid;
  return {Box(b.lo, Point(std::move(lhi))), Box(Point(std::move(rlo)), b.hi)};
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double monomial_eval(const MultiIndex& alpha, const Point& x, const Point& center) {
  if (alpha.dim() != x.dim() || x.dim() != center.dim())
    throw DimensionMismatch("monomial_eval: dimension mismatch");
  double v = 1.0;
  for (int i = 0; i < x.dim(); ++i) {
    const double d = x[i] - center[i];
    for (int k = 0; k < alpha[i]; ++k) v *= d;
    v /= factorial(alpha[i]);
  }
  return v;
}

SampleSet sample_cells(const Box& b, const std::vector<Box>& partition, int density) {
  if (partition.empty()) throw EmptyPartition("sample_cells: empty partition");
  if (density < 1) throw InvalidValue("sample_cells: density must be >= 1");
  const int n = b.dim();
  SampleSet out;
  out.density = density;
  std::vector<int> idx(static_cast<size_t>(n));
  for (const Box& cell : partition) {
    if (cell.dim() != n) throw DimensionMismatch("sample_cells: cell dimension mismatch");
    std::fill(idx.begin(), idx.end(), 1);
    for (;;) {
      std::vector<double> c(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) {
        const double frac = static_cast<double>(idx[static_cast<size_t>(i)]) / (density + 1);
        c[static_cast<size_t>(i)] = cell.lo[i] + cell.width(i) * frac;
      }
      out.points.emplace_back(std::move(c));
      int ax = n - 1;
      while (ax >= 0 && ++idx[static_cast<size_t>(ax)] > density) {
        idx[static_cast<size_t>(ax)] = 1;
        --ax;
      }
      if (ax < 0) break;
    }
  }
  return out;
}

}  // namespace ordcomp
