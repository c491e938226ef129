#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace hyperlab {

using Field = Eigen::ArrayXd;

// Uniform cubic lattice on [-R, R]^3 with `cells` intervals per axis (cells + 1 nodes).
// Storage order is (i, j, k) with k fastest.
struct Lattice {
  int cells = 32;
  double half_width = 1.0;

  Lattice() = default;
  Lattice(int cells_, double half_width_) : cells(cells_), half_width(half_width_) {
    if (cells < 4) throw std::invalid_argument("Lattice: need at least 4 cells per axis");
    if (!(half_width > 0)) throw std::invalid_argument("Lattice: half width must be positive");
  }

  int n() const { return cells + 1; }
  double h() const { return 2.0 * half_width / cells; }
  Eigen::Index size() const { return Eigen::Index(n()) * n() * n(); }
  Eigen::Index index(int i, int j, int k) const { return (Eigen::Index(i) * n() + j) * n() + k; }
  double coord(int i) const { return -half_width + i * h(); }
  Eigen::Vector3d position(int i, int j, int k) const { return {coord(i), coord(j), coord(k)}; }
  Field zeros() const { return Field::Zero(size()); }
};

class MarginError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int stencil_half_width(int order);

// Centered differences.  Nodes closer than the half width to the boundary get 0, which is exact
// for zero-extended data and otherwise marks an invalid layer (callers track margins).
Field diff(const Lattice& g, const Field& f, int axis, int order);
Field diff2(const Lattice& g, const Field& f, int axis, int order);
Field laplacian(const Lattice& g, const Field& f, int order);

double diff_at(const Lattice& g, const Field& f, int axis, int order, int i, int j, int k);
double diff2_at(const Lattice& g, const Field& f, int axis, int order, int i, int j, int k);

// Sample a callable f(x) -> double at every node.
template <typename Fn>
Field sample(const Lattice& g, Fn&& f) {
  Field out(g.size());
  const int n = g.n();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) out(g.index(i, j, k)) = f(g.position(i, j, k));
  return out;
}

// 4-point Lagrange per axis; zero outside the lattice.
double interpolate_cubic(const Lattice& g, const Field& f, const Eigen::Vector3d& x);

// Sum over nodes in a fixed (i-major) order so results do not depend on the thread count.
double deterministic_sum(const Lattice& g, const Field& f);

}  // namespace hyperlab
