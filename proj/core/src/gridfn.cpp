#include "ordcomp/gridfn.hpp"

#include <algorithm>

namespace ordcomp {

namespace {

enum class WindowOp { Min, Max };

// One separable pass along `axis`: out[i] = reduce(u[i-r .. i+r]) with the
// window clipped at the array ends. The L-inf ball factors into one such
// pass per axis.
void axis_pass(const Grid& g, const std::vector<XReal>& in, std::vector<XReal>& out, int axis,
               int r, WindowOp op) {
  const int n_axis = g.nodes_per_axis[static_cast<size_t>(axis)];
  // stride of `axis` in the row-major layout
  size_t stride = 1;
  for (int a = g.dim() - 1; a > axis; --a)
    stride *= static_cast<size_t>(g.nodes_per_axis[static_cast<size_t>(a)]);
  const size_t block = stride * static_cast<size_t>(n_axis);
  const size_t total = g.node_count();

  for (size_t base = 0; base < total; base += block) {
    for (size_t off = 0; off < stride; ++off) {
      for (int i = 0; i < n_axis; ++i) {
        const int lo = std::max(0, i - r);
        const int hi = std::min(n_axis - 1, i + r);
        XReal acc = in[base + off + static_cast<size_t>(lo) * stride];
        for (int j = lo + 1; j <= hi; ++j) {
          const XReal v = in[base + off + static_cast<size_t>(j) * stride];
          acc = (op == WindowOp::Min) ? min(acc, v) : max(acc, v);
        }
        out[base + off + static_cast<size_t>(i) * stride] = acc;
      }
    }
  }
}

GridFn envelope(const GridFn& u, int r, WindowOp op) {
  if (r < 1) throw InvalidValue("envelope: radius must be >= 1");
  std::vector<XReal> cur = u.values;
  std::vector<XReal> next(cur.size());
  for (int axis = 0; axis < u.grid.dim(); ++axis) {
    axis_pass(u.grid, cur, next, axis, r, op);
    cur.swap(next);
  }
  return GridFn(u.grid, std::move(cur));
}

}  // namespace

GridFn lower_envelope(const GridFn& u, int r) { return envelope(u, r, WindowOp::Min); }

GridFn upper_envelope(const GridFn& u, int r) { return envelope(u, r, WindowOp::Max); }

GridFn nlsc_regularize(const GridFn& u, int r_inner, int r_outer) {
  if (r_inner < 1) throw InvalidValue("nlsc_regularize: r_inner must be >= 1");
  if (r_outer <= r_inner)
    throw RadiusOrder("nlsc_regularize: r_outer must exceed r_inner");
  return lower_envelope(upper_envelope(u, r_inner), r_outer);
}

GridFn usc_then_nlsc(const GridFn& u, int r) {
  if (r < 1) throw InvalidValue("usc_then_nlsc: r must be >= 1");
  return nlsc_regularize(lower_envelope(u, r), r, 2 * r);
}

bool is_nearly_finite(const GridFn& u) {
  // every radius-1 window must contain a finite node; equivalently the
  // radius-1 dilation of the finiteness indicator is identically 1.
  std::vector<XReal> finite(u.values.size());
  for (size_t i = 0; i < u.values.size(); ++i)
    finite[i] = u.values[i].is_finite() ? XReal(1.0) : XReal(0.0);
  GridFn ind(u.grid, std::move(finite));
  GridFn dil = upper_envelope(ind, 1);
  return std::all_of(dil.values.begin(), dil.values.end(),
                     [](XReal v) { return v == XReal(1.0); });
}

GridFn negate(const GridFn& u) {
  std::vector<XReal> v(u.values.size());
  for (size_t i = 0; i < u.values.size(); ++i) v[i] = -u.values[i];
  return GridFn(u.grid, std::move(v));
}

}  // namespace ordcomp
