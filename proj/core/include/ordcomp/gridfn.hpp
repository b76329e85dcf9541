#pragma once

#include <cstddef>
#include <vector>

#include "ordcomp/core_types.hpp"

namespace ordcomp {

// Uniform rectangular grid on a box, node coordinates include the box faces.
struct Grid {
  Box box;
  std::vector<int> nodes_per_axis;

  Grid() = default;
  Grid(Box b, std::vector<int> nodes) : box(std::move(b)), nodes_per_axis(std::move(nodes)) {
    if (static_cast<int>(nodes_per_axis.size()) != box.dim())
      throw DimensionMismatch("Grid: nodes_per_axis dimension mismatch");
    for (int k : nodes_per_axis)
      if (k < 2) throw InvalidValue("Grid: need at least 2 nodes per axis");
  }

  int dim() const { return box.dim(); }
  size_t node_count() const {
    size_t n = 1;
    for (int k : nodes_per_axis) n *= static_cast<size_t>(k);
    return n;
  }
  double spacing(int axis) const {
    return box.width(axis) / (nodes_per_axis[static_cast<size_t>(axis)] - 1);
  }
  double node_coord(int axis, int i) const {
    const int m = nodes_per_axis[static_cast<size_t>(axis)] - 1;
    if (i == 0) return box.lo[axis];
    if (i == m) return box.hi[axis];
    return box.lo[axis] + box.width(axis) * (static_cast<double>(i) / m);
  }
  // Row-major flattening, axis 0 slowest, last axis fastest.
  size_t flat_index(const std::vector<int>& idx) const {
    size_t f = 0;
    for (int a = 0; a < dim(); ++a)
      f = f * static_cast<size_t>(nodes_per_axis[static_cast<size_t>(a)]) +
          static_cast<size_t>(idx[static_cast<size_t>(a)]);
    return f;
  }
  Point node_point(const std::vector<int>& idx) const {
    std::vector<double> c(static_cast<size_t>(dim()));
    for (int a = 0; a < dim(); ++a) c[static_cast<size_t>(a)] = node_coord(a, idx[static_cast<size_t>(a)]);
    return Point(std::move(c));
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.box == b.box && a.nodes_per_axis == b.nodes_per_axis;
  }
};

// Sampled extended-real function: one XReal per grid node, row-major.
struct GridFn {
  Grid grid;
  std::vector<XReal> values;

  GridFn() = default;
  GridFn(Grid g, std::vector<XReal> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.node_count())
      throw DimensionMismatch("GridFn: value count does not match node count");
  }
  static GridFn constant(Grid g, XReal c) {
    const size_t n = g.node_count();
    return GridFn(std::move(g), std::vector<XReal>(n, c));
  }
};

// Discrete Lower Baire Operator: at each node the minimum of u over the
// L-inf node-ball of radius r, windows clipped at the grid boundary.
GridFn lower_envelope(const GridFn& u, int r);

// Dual: maximum over the ball.
GridFn upper_envelope(const GridFn& u, int r);

// Discrete (I o S): dilate at radius r_inner, then erode at radius r_outer.
// Requires r_outer > r_inner so that an up-spike dilated once can still be
// removed by the wider erosion; see RadiusOrder.
GridFn nlsc_regularize(const GridFn& u, int r_inner, int r_outer);

// Discrete (I o S o I): lower envelope at r, then nlsc_regularize(r, 2r).
GridFn usc_then_nlsc(const GridFn& u, int r);

// Discrete proxy for "finite on an open dense set": every radius-1 node
// window contains at least one finite value.
bool is_nearly_finite(const GridFn& u);

GridFn negate(const GridFn& u);

}  // namespace ordcomp
