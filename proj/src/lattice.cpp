#include "hyperlab/lattice.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace hyperlab {

int stencil_half_width(int order) {
  if (order == 2) return 1;
  if (order == 4) return 2;
  throw std::invalid_argument("stencil order must be 2 or 4, got " + std::to_string(order));
}

namespace {

Eigen::Index axis_stride(const Lattice& g, int axis) {
  const Eigen::Index n = g.n();
  return axis == 0 ? n * n : axis == 1 ? n : 1;
}

int axis_index(int axis, int i, int j, int k) { return axis == 0 ? i : axis == 1 ? j : k; }

inline double d1(const double* p, Eigen::Index st, int order, double ih) {
  if (order == 4) return (p[-2 * st] - 8.0 * p[-st] + 8.0 * p[st] - p[2 * st]) * (ih / 12.0);
  return (p[st] - p[-st]) * (0.5 * ih);
}

inline double d2(const double* p, Eigen::Index st, int order, double ih2) {
  if (order == 4)
    return (-p[-2 * st] + 16.0 * p[-st] - 30.0 * p[0] + 16.0 * p[st] - p[2 * st]) * (ih2 / 12.0);
  return (p[-st] - 2.0 * p[0] + p[st]) * ih2;
}

template <typename Kernel>
Field stencil_map(const Lattice& g, const Field& f, int axis, int order, Kernel&& kern) {
  const int hw = stencil_half_width(order);
  const int n = g.n();
  const Eigen::Index st = axis_stride(g, axis);
  Field out = Field::Zero(g.size());
  const double* src = f.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (axis == 0 && (i < hw || i >= n - hw)) continue;
      if (axis == 1 && (j < hw || j >= n - hw)) continue;
      const int k0 = axis == 2 ? hw : 0, k1 = axis == 2 ? n - hw : n;
      for (int k = k0; k < k1; ++k) {
        const Eigen::Index p = g.index(i, j, k);
        out(p) = kern(src + p, st);
      }
    }
  return out;
}

}  // namespace

Field diff(const Lattice& g, const Field& f, int axis, int order) {
  const double ih = 1.0 / g.h();
  return stencil_map(g, f, axis, order, [=](const double* p, Eigen::Index st) { return d1(p, st, order, ih); });
}

Field diff2(const Lattice& g, const Field& f, int axis, int order) {
  const double ih2 = 1.0 / (g.h() * g.h());
  return stencil_map(g, f, axis, order, [=](const double* p, Eigen::Index st) { return d2(p, st, order, ih2); });
}

Field laplacian(const Lattice& g, const Field& f, int order) {
  return diff2(g, f, 0, order) + diff2(g, f, 1, order) + diff2(g, f, 2, order);
}

double diff_at(const Lattice& g, const Field& f, int axis, int order, int i, int j, int k) {
  const int hw = stencil_half_width(order);
  const int q = axis_index(axis, i, j, k);
  if (q < hw || q >= g.n() - hw) throw MarginError("diff_at: node within stencil half width of the boundary");
  return d1(f.data() + g.index(i, j, k), axis_stride(g, axis), order, 1.0 / g.h());
}

double diff2_at(const Lattice& g, const Field& f, int axis, int order, int i, int j, int k) {
  const int hw = stencil_half_width(order);
  const int q = axis_index(axis, i, j, k);
  if (q < hw || q >= g.n() - hw) throw MarginError("diff2_at: node within stencil half width of the boundary");
  return d2(f.data() + g.index(i, j, k), axis_stride(g, axis), order, 1.0 / (g.h() * g.h()));
}

double interpolate_cubic(const Lattice& g, const Field& f, const Eigen::Vector3d& x) {
  const double h = g.h();
  const int n = g.n();
  std::array<int, 3> base;
  std::array<std::array<double, 4>, 3> w;
  for (int a = 0; a < 3; ++a) {
    const double q = (x(a) + g.half_width) / h;
    int b = int(std::floor(q)) - 1;
    b = std::clamp(b, -1, n - 3);
    const double u = q - b;  // nodes at 0,1,2,3 relative
    w[a][0] = -(u - 1) * (u - 2) * (u - 3) / 6.0;
    w[a][1] = u * (u - 2) * (u - 3) / 2.0;
    w[a][2] = -u * (u - 1) * (u - 3) / 2.0;
    w[a][3] = u * (u - 1) * (u - 2) / 6.0;
    base[a] = b;
  }
  double acc = 0.0;
  for (int p = 0; p < 4; ++p) {
    const int i = base[0] + p;
    if (i < 0 || i >= n) continue;
    for (int q = 0; q < 4; ++q) {
      const int j = base[1] + q;
      if (j < 0 || j >= n) continue;
      const double wpq = w[0][p] * w[1][q];
      for (int r = 0; r < 4; ++r) {
        const int k = base[2] + r;
        if (k < 0 || k >= n) continue;
        acc += wpq * w[2][r] * f(g.index(i, j, k));
      }
    }
  }
  return acc;
}

double deterministic_sum(const Lattice& g, const Field& f) {
  const int n = g.n();
  std::vector<double> partial(n, 0.0);
  const Eigen::Index slab = Eigen::Index(n) * n;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) partial[i] = f.segment(i * slab, slab).sum();
  double acc = 0.0;
  for (double v : partial) acc += v;
  return acc;
}

}  // namespace hyperlab
