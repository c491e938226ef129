#include "hyperlab/solver.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <limits>
#include <cmath>
#include <stdexcept>

#include "hyperlab/geometry.hpp"

namespace hyperlab {

void GridSlice::refresh_time_cofield() {
  const Lattice& g = lattice;
  const double sv = s;
  const Field tos = sample(g, [&](const Eigen::Vector3d& x) { return std::sqrt(sv * sv + x.squaredNorm()) / sv; });
  d_t.resize(w.size());
  for (std::size_t c = 0; c < w.size(); ++c) d_t[c] = tos * d_s[c];
}

double GridSlice::numerical_support() const {
  const int n = lattice.n();
  double rmax = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Index p = lattice.index(i, j, k);
        bool nz = false;
        for (std::size_t c = 0; c < w.size(); ++c) nz = nz || w[c](p) != 0.0 || d_s[c](p) != 0.0;
        if (nz) rmax = std::max(rmax, lattice.position(i, j, k).norm());
      }
  return rmax;
}

// ---------------------------------------------------------------------------
// jets and frame operators

SliceJet to_time_jet(const HyperbolicJet& u) {
  const Lattice& g = u.lattice;
  const int m = int(u.ds.size());
  if (m < 1) throw std::invalid_argument("to_time_jet: empty jet");
  SliceJet out{g, SliceGeometry::hyperboloid(u.s), std::vector<Field>(m, Field::Zero(g.size())), u.order, u.margin,
               u.zero_extended};
  const int n = g.n();
  const double s0 = u.s;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double q[8], d[8], pw[8], acc[8], p[3];
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Index idx = g.index(i, j, k);
        const Eigen::Vector3d x = g.position(i, j, k);
        const double t0 = std::sqrt(s0 * s0 + x.squaredNorm());
        // s(t0 + tau)^2 = s0^2 + 2 t0 tau + tau^2
        p[0] = s0 * s0;
        p[1] = 2.0 * t0;
        p[2] = 1.0;
        q[0] = s0;
        for (int a = 1; a < m; ++a) {
          double v = a <= 2 ? p[a] : 0.0;
          for (int b = 1; b < a; ++b) v -= q[b] * q[a - b];
          q[a] = v / (2.0 * q[0]);
        }
        d[0] = 0.0;
        for (int a = 1; a < m; ++a) d[a] = q[a];
        for (int a = 0; a < m; ++a) acc[a] = 0.0, pw[a] = 0.0;
        pw[0] = 1.0;
        double fact = 1.0;
        for (int jj = 0; jj < m; ++jj) {
          if (jj > 0) {
            fact *= jj;
            double nxt[8] = {0};
            for (int a = 0; a < m; ++a)
              for (int b = 1; a + b < m; ++b) nxt[a + b] += pw[a] * d[b];
            for (int a = 0; a < m; ++a) pw[a] = nxt[a];
          }
          const double c = u.ds[jj](idx) / fact;
          for (int a = 0; a < m; ++a) acc[a] += c * pw[a];
        }
        double kf = 1.0;
        for (int a = 0; a < m; ++a) {
          if (a > 0) kf *= a;
          out.dt[a](idx) = kf * acc[a];
        }
      }
  }
  return out;
}

namespace {

void require_interior(const Lattice& g, int order, int margin, int i, int j, int k) {
  const int lo = margin + stencil_half_width(order), hi = g.n() - lo;
  if (i < lo || i >= hi || j < lo || j >= hi || k < lo || k >= hi)
    throw MarginError("frame operator: stencil reaches the lattice margin");
}

}  // namespace

double box_in_frame(const HyperbolicJet& u, int i, int j, int k) {
  if (u.ds.size() < 3) throw std::invalid_argument("box_in_frame: needs w, d_s w and d_s^2 w");
  const Lattice& g = u.lattice;
  require_interior(g, u.order, u.zero_extended ? 0 : u.margin, i, j, k);
  const Eigen::Vector3d x = g.position(i, j, k);
  const Eigen::Index p = g.index(i, j, k);
  double v = u.ds[2](p) + (3.0 / u.s) * u.ds[1](p);
  for (int a = 0; a < 3; ++a) {
    v += 2.0 * x(a) / u.s * diff_at(g, u.ds[1], a, u.order, i, j, k);
    v -= diff2_at(g, u.ds[0], a, u.order, i, j, k);
  }
  return v;
}

Field box_in_frame(const HyperbolicJet& u) {
  if (u.ds.size() < 3) throw std::invalid_argument("box_in_frame: needs w, d_s w and d_s^2 w");
  const Lattice& g = u.lattice;
  const double s = u.s;
  Field out = u.ds[2] + (3.0 / s) * u.ds[1] - laplacian(g, u.ds[0], u.order);
  for (int a = 0; a < 3; ++a) {
    const Field xa = sample(g, [&](const Eigen::Vector3d& x) { return 2.0 * x(a) / s; });
    out += xa * diff(g, u.ds[1], a, u.order);
  }
  return out;
}

double semi_hyperboloidal_box(const SliceJet& u, int i, int j, int k) {
  if (u.geometry.kind != SliceGeometry::Kind::Hyperboloid)
    throw std::invalid_argument("semi_hyperboloidal_box: jet must live on a hyperboloid");
  if (u.length() < 3) throw std::invalid_argument("semi_hyperboloidal_box: needs u, u_t, u_tt");
  const Lattice& g = u.lattice;
  require_interior(g, u.order, u.zero_extended ? 0 : u.margin, i, j, k);
  const Eigen::Vector3d x = g.position(i, j, k);
  const Eigen::Index p = g.index(i, j, k);
  const double s = u.geometry.level, t = u.geometry.time(x), r2 = x.squaredNorm();
  double v = (s * s) / (t * t) * u.dt[2](p) + (3.0 / t - r2 / (t * t * t)) * u.dt[1](p);
  for (int a = 0; a < 3; ++a) {
    v += 2.0 * x(a) / t * diff_at(g, u.dt[1], a, u.order, i, j, k);
    v -= diff2_at(g, u.dt[0], a, u.order, i, j, k);
  }
  return v;
}

Field semi_hyperboloidal_box(const SliceJet& u) {
  if (u.geometry.kind != SliceGeometry::Kind::Hyperboloid)
    throw std::invalid_argument("semi_hyperboloidal_box: jet must live on a hyperboloid");
  if (u.length() < 3) throw std::invalid_argument("semi_hyperboloidal_box: needs u, u_t, u_tt");
  const Lattice& g = u.lattice;
  const double s = u.geometry.level;
  const Field t = u.time_field();
  const Field r2 = t * t - s * s;
  Field out = (s * s) * u.dt[2] / (t * t) + (3.0 / t - r2 / (t * t * t)) * u.dt[1] - laplacian(g, u.dt[0], u.order);
  for (int a = 0; a < 3; ++a) {
    const Field xa = sample(g, [&](const Eigen::Vector3d& x) { return x(a); });
    out += 2.0 * xa / t * diff(g, u.dt[1], a, u.order);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model

Model::Model(SystemSpec spec, int order, Forcing forcing)
    : spec_(std::move(spec)), order_(order), forcing_(std::move(forcing)) {
  spec_.validate();
  stencil_half_width(order_);
}

namespace {

constexpr int kMaxComp = 8;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxComp, kMaxComp>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxComp, 1>;

struct Weights {
  double c1[5];  // first derivative, offsets -2..2
  double c2[5];  // second derivative
  int hw;
};

Weights weights(int order, double h) {
  Weights W{};
  if (order == 4) {
    const double a[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
    const double b[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
    for (int q = 0; q < 5; ++q) W.c1[q] = a[q] / (12.0 * h), W.c2[q] = b[q] / (12.0 * h * h);
    W.hw = 2;
  } else {
    const double a[5] = {0.0, -0.5, 0.0, 0.5, 0.0};
    const double b[5] = {0.0, 1.0, -2.0, 1.0, 0.0};
    for (int q = 0; q < 5; ++q) W.c1[q] = a[q] / h, W.c2[q] = b[q] / (h * h);
    W.hw = 1;
  }
  return W;
}

}  // namespace

void Model::evaluate(double s, const Lattice& g, double mask_radius, double kappa, const std::vector<Field>& w,
                     const std::vector<Field>& V, std::vector<Field>& out_w, std::vector<Field>& out_V,
                     std::vector<Field>* source) const {
  const int nc = spec_.n0;
  if (int(w.size()) != nc || int(V.size()) != nc) throw std::invalid_argument("Model::evaluate: component count");
  out_w.assign(nc, Field::Zero(g.size()));
  out_V.assign(nc, Field::Zero(g.size()));
  if (source) source->assign(nc, Field::Zero(g.size()));

  const int n = g.n();
  const double h = g.h();
  const Weights Wt = weights(order_, h);
  const int hw = Wt.hw;
  const Eigen::Index st[3] = {Eigen::Index(n) * n, n, 1};
  const double mask2 = mask_radius * mask_radius;
  const bool quasi = spec_.quasilinear();
  const bool need_grad = quasi || !spec_.P.empty() || !spec_.Q.empty();
  const std::vector<double>& mass = spec_.mass;
  const double inv_s = 1.0 / s;

  std::vector<double> worst(n, 0.0);
  std::vector<Eigen::Vector3d> worst_at(n, Eigen::Vector3d::Zero());
  bool bad_margin = false;

#pragma omp parallel for schedule(dynamic, 1) reduction(|| : bad_margin)
  for (int i = 0; i < n; ++i) {
    const double x0 = g.coord(i);
    double dw[kMaxComp][3], d2w[kMaxComp][3], dV[kMaxComp][3], hess[kMaxComp][3];  // hess: 01,02,12
    double grad[kMaxComp][4], Wv[kMaxComp], rhs[kMaxComp];
    double G[kMaxComp][kMaxComp][4][4];
    for (int j = 0; j < n; ++j) {
      const double x1 = g.coord(j);
      if (x0 * x0 + x1 * x1 > mask2) continue;
      for (int k = 0; k < n; ++k) {
        const double x2 = g.coord(k);
        const double r2 = x0 * x0 + x1 * x1 + x2 * x2;
        if (r2 > mask2) continue;
        if (i < hw || j < hw || k < hw || i >= n - hw || j >= n - hw || k >= n - hw) {
          bad_margin = true;
          continue;
        }
        const Eigen::Index p = g.index(i, j, k);
        const double xs[3] = {x0, x1, x2};
        const double t = std::sqrt(s * s + r2);

        for (int c = 0; c < nc; ++c) {
          const double* pw = w[c].data() + p;
          const double* pv = V[c].data() + p;
          for (int a = 0; a < 3; ++a) {
            double s1 = 0, s2 = 0, s3 = 0;
            for (int q = -hw; q <= hw; ++q) {
              const double fw = pw[q * st[a]];
              s1 += Wt.c1[q + 2] * fw;
              s2 += Wt.c2[q + 2] * fw;
              s3 += Wt.c1[q + 2] * pv[q * st[a]];
            }
            dw[c][a] = s1;
            d2w[c][a] = s2;
            dV[c][a] = s3;
          }
        }

        if (need_grad)
          for (int c = 0; c < nc; ++c) {
            grad[c][0] = t * inv_s * V[c](p);
            for (int a = 0; a < 3; ++a) grad[c][a + 1] = dw[c][a] - xs[a] * inv_s * V[c](p);
          }

        // semilinear part: W_i = Lap - (2x/s).DV - (3/s)V - c^2 w + F + f
        for (int c = 0; c < nc; ++c) {
          const double vc = V[c](p);
          double v = d2w[c][0] + d2w[c][1] + d2w[c][2] - 3.0 * inv_s * vc - mass[c] * mass[c] * w[c](p);
          v -= 2.0 * inv_s * (xs[0] * dV[c][0] + xs[1] * dV[c][1] + xs[2] * dV[c][2]);
          rhs[c] = v;
        }
        double Fsrc[kMaxComp];
        for (int c = 0; c < nc; ++c) Fsrc[c] = 0.0;
        for (const auto& e : spec_.P) Fsrc[e.idx[0]] += e.value * grad[e.idx[3]][e.idx[1]] * grad[e.idx[4]][e.idx[2]];
        for (const auto& e : spec_.Q) Fsrc[e.idx[0]] += e.value * w[e.idx[3]](p) * grad[e.idx[2]][e.idx[1]];
        for (const auto& e : spec_.R) Fsrc[e.idx[0]] += e.value * w[e.idx[1]](p) * w[e.idx[2]](p);
        if (forcing_) {
          const Eigen::Vector3d xv(x0, x1, x2);
          for (int c = 0; c < nc; ++c) Fsrc[c] += forcing_(c, t, xv);
        }
        for (int c = 0; c < nc; ++c) rhs[c] += Fsrc[c];

        if (!quasi) {
          for (int c = 0; c < nc; ++c) Wv[c] = rhs[c];
          if (source)
            for (int c = 0; c < nc; ++c) (*source)[c](p) = Fsrc[c];
        } else {
          // mixed second derivatives for D_b D_c w
          for (int c = 0; c < nc; ++c) {
            const double* pw = w[c].data() + p;
            const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
            for (int q = 0; q < 3; ++q) {
              const Eigen::Index sa = st[pairs[q][0]], sb = st[pairs[q][1]];
              double acc = 0.0;
              for (int m1 = -hw; m1 <= hw; ++m1) {
                if (m1 == 0) continue;
                double inner = 0.0;
                for (int m2 = -hw; m2 <= hw; ++m2)
                  if (m2 != 0) inner += Wt.c1[m2 + 2] * pw[m1 * sa + m2 * sb];
                acc += Wt.c1[m1 + 2] * inner;
              }
              hess[c][q] = acc;
            }
          }
          for (int a = 0; a < nc; ++a)
            for (int b = 0; b < nc; ++b)
              for (int al = 0; al < 4; ++al)
                for (int be = 0; be < 4; ++be) G[a][b][al][be] = 0.0;
          for (const auto& e : spec_.A)
            G[e.idx[0]][e.idx[1]][e.idx[2]][e.idx[3]] += e.value * grad[e.idx[5]][e.idx[4]];
          for (const auto& e : spec_.B) G[e.idx[0]][e.idx[1]][e.idx[2]][e.idx[3]] += e.value * w[e.idx[4]](p);

          const double nv[4] = {t * inv_s, -x0 * inv_s, -x1 * inv_s, -x2 * inv_s};
          const double s3 = inv_s * inv_s * inv_s;
          double H[4][4];
          H[0][0] = -r2 * s3;
          for (int a = 0; a < 3; ++a) {
            H[0][a + 1] = H[a + 1][0] = t * xs[a] * s3;
            for (int b = 0; b < 3; ++b) H[a + 1][b + 1] = -(a == b ? inv_s : 0.0) - xs[a] * xs[b] * s3;
          }
          SmallMat M = SmallMat::Identity(nc, nc);
          double lower[kMaxComp][kMaxComp];  // everything except the W term, per (i, j)
          for (int a = 0; a < nc; ++a)
            for (int b = 0; b < nc; ++b) {
              double g00 = 0.0, gh = 0.0, l = 0.0;
              double g0c[3] = {0, 0, 0};
              for (int al = 0; al < 4; ++al)
                for (int be = 0; be < 4; ++be) {
                  const double gv = G[a][b][al][be];
                  if (gv == 0.0) continue;
                  g00 += gv * nv[al] * nv[be];
                  gh += gv * H[al][be];
                  if (be > 0) g0c[be - 1] += gv * nv[al];
                  if (al > 0) g0c[al - 1] += gv * nv[be];
                }
              for (int c = 0; c < 3; ++c) l += g0c[c] * dV[b][c];
              l += G[a][b][1][1] * d2w[b][0] + G[a][b][2][2] * d2w[b][1] + G[a][b][3][3] * d2w[b][2];
              l += (G[a][b][1][2] + G[a][b][2][1]) * hess[b][0] + (G[a][b][1][3] + G[a][b][3][1]) * hess[b][1] +
                   (G[a][b][2][3] + G[a][b][3][2]) * hess[b][2];
              l += gh * V[b](p);
              lower[a][b] = l;
              M(a, b) += g00;
            }
          double norm = 0.0;
          for (int a = 0; a < nc; ++a) {
            double row = 0.0;
            for (int b = 0; b < nc; ++b) row += std::abs(M(a, b) - (a == b ? 1.0 : 0.0));
            norm = std::max(norm, row);
          }
          if (norm > worst[i]) {
            worst[i] = norm;
            worst_at[i] = Eigen::Vector3d(x0, x1, x2);
          }
          SmallVec b(nc);
          for (int a = 0; a < nc; ++a) {
            double v = rhs[a];
            for (int c = 0; c < nc; ++c) v -= lower[a][c];
            b(a) = v;
          }
          const SmallVec sol = M.partialPivLu().solve(b);
          for (int a = 0; a < nc; ++a) Wv[a] = sol(a);
          if (source)
            for (int a = 0; a < nc; ++a) {
              double gdd = 0.0;
              for (int c = 0; c < nc; ++c) gdd += (M(a, c) - (a == c ? 1.0 : 0.0)) * Wv[c] + lower[a][c];
              (*source)[a](p) = Fsrc[a] - gdd;
            }
        }

        for (int c = 0; c < nc; ++c) {
          const double adv_w = xs[0] * dw[c][0] + xs[1] * dw[c][1] + xs[2] * dw[c][2];
          const double adv_v = xs[0] * dV[c][0] + xs[1] * dV[c][1] + xs[2] * dV[c][2];
          out_w[c](p) = V[c](p) + kappa * adv_w;
          out_V[c](p) = Wv[c] + kappa * adv_v;
        }
      }
    }
  }
  if (bad_margin) throw MarginError("Model::evaluate: mask radius reaches the lattice margin");
  if (quasi) {
    int at = int(std::max_element(worst.begin(), worst.end()) - worst.begin());
    if (worst[at] > smallness_)
      throw QuasilinearBreakdown("quasilinear smallness violated: |Gbar^00| = " + std::to_string(worst[at]) +
                                     " > " + std::to_string(smallness_),
                                 worst[at], worst_at[at]);
  }
}

std::vector<Field> Model::acceleration(double s, const Lattice& g, double mask_radius, const std::vector<Field>& w,
                                       const std::vector<Field>& V, std::vector<Field>* source) const {
  std::vector<Field> ow, oV;
  evaluate(s, g, mask_radius, 0.0, w, V, ow, oV, source);
  return oV;
}

std::vector<HyperbolicJet> Model::s_jets(const GridSlice& slice, int max_order) const {
  if (max_order < 0 || max_order > 4) throw std::invalid_argument("s_jets: order must be 0..4");
  const int nc = slice.components();
  const Lattice& g = slice.lattice;
  const double s = slice.s, mr = slice.mask_radius;
  std::vector<HyperbolicJet> out(nc);
  for (int c = 0; c < nc; ++c) {
    out[c] = HyperbolicJet{g, s, {slice.w[c]}, order_, 0, true};
    if (max_order >= 1) out[c].ds.push_back(slice.d_s[c]);
  }
  if (max_order < 2) return out;
  const std::vector<Field> U2 = acceleration(s, g, mr, slice.w, slice.d_s);
  for (int c = 0; c < nc; ++c) out[c].ds.push_back(U2[c]);
  if (max_order < 3) return out;

  const double delta = 2e-3 * s;
  auto along = [&](double eps, const std::vector<Field>* U3) {
    std::vector<Field> w(nc), V(nc);
    for (int c = 0; c < nc; ++c) {
      w[c] = slice.w[c] + eps * slice.d_s[c];
      V[c] = slice.d_s[c] + eps * U2[c];
      if (U3) {
        w[c] += 0.5 * eps * eps * U2[c];
        V[c] += 0.5 * eps * eps * (*U3)[c];
      }
    }
    return acceleration(s + eps, g, mr, w, V);
  };
  // first derivative of the acceleration along the first-order Taylor curve
  std::vector<Field> U3(nc, Field::Zero(g.size()));
  {
    const double cf[4] = {1.0, -8.0, 8.0, -1.0}, off[4] = {-2.0, -1.0, 1.0, 2.0};
    for (int q = 0; q < 4; ++q) {
      const auto a = along(off[q] * delta, nullptr);
      for (int c = 0; c < nc; ++c) U3[c] += (cf[q] / (12.0 * delta)) * a[c];
    }
  }
  for (int c = 0; c < nc; ++c) out[c].ds.push_back(U3[c]);
  if (max_order < 4) return out;
  std::vector<Field> U4(nc, Field::Zero(g.size()));
  {
    const double cf[5] = {-1.0, 16.0, -30.0, 16.0, -1.0}, off[5] = {-2.0, -1.0, 0.0, 1.0, 2.0};
    for (int q = 0; q < 5; ++q) {
      const auto a = q == 2 ? U2 : along(off[q] * delta, &U3);
      for (int c = 0; c < nc; ++c) U4[c] += (cf[q] / (12.0 * delta * delta)) * a[c];
    }
  }
  for (int c = 0; c < nc; ++c) out[c].ds.push_back(U4[c]);
  return out;
}

// ---------------------------------------------------------------------------
// initial data and grids

double InitialProfile::evaluate(const Eigen::Vector3d& x) const {
  const double q2 = (x - center).squaredNorm();
  const double R2 = radius * radius;
  if (q2 >= R2) return 0.0;
  if (kind == Kind::Bump) return amplitude * std::pow(1.0 - q2 / R2, power);
  // smooth cutoff: 1 for q <= R/2, 0 for q >= R
  const double z = std::sqrt(q2) / radius;
  auto psi = [](double y) { return y > 0 ? std::exp(-1.0 / y) : 0.0; };
  const double chi = psi(1.0 - z) / (psi(1.0 - z) + psi(z - 0.5));
  return amplitude * std::exp(-q2 / (width * width)) * chi;
}

Lattice slice_lattice(const SolverConfig& cfg, double s) {
  const double sr = cfg.grid == SolverConfig::Grid::Fixed ? cfg.s_end : s;
  const double frac = 1.0 - 2.0 * cfg.band / double(cfg.cells);
  if (!(frac > 0.2)) throw std::invalid_argument("zero band too wide for the resolution");
  return Lattice(cfg.cells, (slice_support_radius(sr) + cfg.pad) / frac);
}

double mask_radius(const SolverConfig& cfg, double s, const Lattice& g) {
  (void)cfg;
  return slice_support_radius(s) + 2.0 * g.h();
}

double grid_rate(const SolverConfig& cfg, double s) {
  if (cfg.grid == SolverConfig::Grid::Fixed) return 0.0;
  return s / (slice_support_radius(s) + cfg.pad);
}

double max_grid_speed(const SolverConfig& cfg, double s, const Lattice& g) {
  const double kappa = grid_rate(cfg, s);
  const double rmax = std::min(mask_radius(cfg, s, g), g.half_width * std::sqrt(3.0));
  double v = 1.0;
  for (int q = 0; q <= 256; ++q) {
    const double r = rmax * q / 256.0, t = std::sqrt(s * s + r * r);
    const double drift = r / s - kappa * r;
    v = std::max({v, std::abs(drift + t / s), std::abs(drift - t / s)});
  }
  return v;
}

double cfl_step(const SolverConfig& cfg, double s) {
  if (cfg.ds > 0) return cfg.ds;
  const Lattice g = slice_lattice(cfg, s);
  return cfg.cfl * g.h() / max_grid_speed(cfg, s, g);
}

double nominal_cfl_step(const SolverConfig& cfg, double s) {
  const Lattice g = slice_lattice(cfg, s);
  const double r = mask_radius(cfg, s, g);
  return cfg.cfl * g.h() * s / std::sqrt(s * s + r * r);
}

void apply_mask(GridSlice& slice) {
  const Lattice& g = slice.lattice;
  const double m2 = slice.mask_radius * slice.mask_radius;
  const int n = g.n();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (g.position(i, j, k).squaredNorm() <= m2) continue;
        const Eigen::Index p = g.index(i, j, k);
        for (std::size_t c = 0; c < slice.w.size(); ++c) slice.w[c](p) = slice.d_s[c](p) = 0.0;
      }
}

GridSlice initial_slice(const SolverConfig& cfg) {
  cfg.spec.validate();
  const double rho0 = slice_support_radius(cfg.s0);
  for (const auto& d : cfg.data) {
    if (d.component < 0 || d.component >= cfg.spec.n0)
      throw std::invalid_argument("initial data: component out of range");
    if (!(d.support() < rho0))
      throw std::invalid_argument("initial data: profile support " + std::to_string(d.support()) +
                                  " not strictly inside the slice support radius " + std::to_string(rho0));
  }
  GridSlice sl;
  sl.s = cfg.s0;
  sl.lattice = slice_lattice(cfg, cfg.s0);
  sl.mask_radius = mask_radius(cfg, cfg.s0, sl.lattice);
  sl.names = cfg.spec.components;
  const int nc = cfg.spec.n0;
  sl.w.assign(nc, sl.lattice.zeros());
  sl.d_s.assign(nc, sl.lattice.zeros());
  const Lattice& g = sl.lattice;
  const int n = g.n();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    std::vector<double> wv(nc), wsv(nc);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Vector3d x = g.position(i, j, k);
        const Eigen::Index p = g.index(i, j, k);
        if (cfg.initial) {
          cfg.initial(cfg.s0, x, wv.data(), wsv.data());
          for (int c = 0; c < nc; ++c) sl.w[c](p) = wv[c], sl.d_s[c](p) = wsv[c];
        }
        for (const auto& d : cfg.data) (d.derivative ? sl.d_s : sl.w)[d.component](p) += d.evaluate(x);
      }
  }
  apply_mask(sl);
  sl.refresh_time_cofield();
  return sl;
}

// ---------------------------------------------------------------------------
// stepping

Stepper::Stepper(const SolverConfig& cfg) : cfg_(cfg), model_(cfg.spec, cfg.order, cfg.forcing) {}

void Stepper::rhs(const GridSlice& sl, std::vector<Field>& dw, std::vector<Field>& dV,
                  std::vector<Field>* source) const {
  model_.evaluate(sl.s, sl.lattice, sl.mask_radius, grid_rate(cfg_, sl.s), sl.w, sl.d_s, dw, dV, source);
}

GridSlice Stepper::step(const GridSlice& sl, double ds) const {
  std::vector<Field> k1w, k1V;
  rhs(sl, k1w, k1V);
  return step(sl, ds, k1w, k1V);
}

GridSlice Stepper::step(const GridSlice& sl, double ds, const std::vector<Field>& k1w,
                        const std::vector<Field>& k1V) const {
  const int nc = sl.components();
  auto stage = [&](double s, const std::vector<Field>& bw, const std::vector<Field>& bV, double c,
                   const std::vector<Field>& kw, const std::vector<Field>& kV) {
    GridSlice out;
    out.s = s;
    out.lattice = slice_lattice(cfg_, s);
    out.mask_radius = mask_radius(cfg_, s, out.lattice);
    out.names = sl.names;
    out.w.resize(nc);
    out.d_s.resize(nc);
    for (int q = 0; q < nc; ++q) {
      out.w[q] = bw[q] + c * kw[q];
      out.d_s[q] = bV[q] + c * kV[q];
    }
    return out;
  };
  std::vector<Field> k2w, k2V, k3w, k3V, k4w, k4V;
  const double s = sl.s;
  GridSlice y2 = stage(s + 0.5 * ds, sl.w, sl.d_s, 0.5 * ds, k1w, k1V);
  rhs(y2, k2w, k2V);
  GridSlice y3 = stage(s + 0.5 * ds, sl.w, sl.d_s, 0.5 * ds, k2w, k2V);
  rhs(y3, k3w, k3V);
  GridSlice y4 = stage(s + ds, sl.w, sl.d_s, ds, k3w, k3V);
  rhs(y4, k4w, k4V);
  GridSlice out = y4;
  for (int q = 0; q < nc; ++q) {
    out.w[q] = sl.w[q] + (ds / 6.0) * (k1w[q] + 2.0 * k2w[q] + 2.0 * k3w[q] + k4w[q]);
    out.d_s[q] = sl.d_s[q] + (ds / 6.0) * (k1V[q] + 2.0 * k2V[q] + 2.0 * k3V[q] + k4V[q]);
  }
  apply_mask(out);
  out.refresh_time_cofield();
  return out;
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::QuasilinearBreakdown: return "quasilinear-breakdown";
    case RunStatus::InstabilityDetected: return "instability-detected";
  }
  return "unknown";
}

namespace {

double sup_state(const GridSlice& sl) {
  double m = 0.0;
  for (int c = 0; c < sl.components(); ++c) {
    if (!sl.w[c].allFinite() || !sl.d_s[c].allFinite()) return std::numeric_limits<double>::infinity();
    m = std::max({m, sl.w[c].abs().maxCoeff(), sl.d_s[c].abs().maxCoeff()});
  }
  return m;
}

}  // namespace

EvolutionStatus evolve(const SolverConfig& cfg, const StepObserver& observer, GridSlice* final_slice) {
  if (!(cfg.s_end > cfg.s0)) throw std::invalid_argument("evolve: s_end must exceed s0");
  Stepper stepper(cfg);
  GridSlice sl = initial_slice(cfg);
  const double reference = std::max(sup_state(sl), 1e-300);
  EvolutionStatus st;
  std::vector<Field> k1w, k1V, src;
  try {
    for (int n = 0;; ++n) {
      stepper.rhs(sl, k1w, k1V, &src);
      const bool last = sl.s >= cfg.s_end - 1e-12 * cfg.s_end;
      if (observer) observer(StepView{sl, src, n, last});
      st.s_reached = sl.s;
      st.steps = n;
      if (last) break;
      double ds = cfl_step(cfg, sl.s);
      if (sl.s + ds > cfg.s_end || cfg.s_end - (sl.s + ds) < 1e-9 * cfg.s_end) ds = cfg.s_end - sl.s;
      GridSlice next = stepper.step(sl, ds, k1w, k1V);
      const double sup = sup_state(next);
      if (!std::isfinite(sup) || sup > cfg.growth_limit * reference) {
        st.status = RunStatus::InstabilityDetected;
        st.message = "state grew to " + std::to_string(sup) + " at s = " + std::to_string(next.s) + " (step " +
                     std::to_string(n + 1) + ")";
        st.s_reached = next.s;
        st.steps = n + 1;
        if (final_slice) *final_slice = next;
        return st;
      }
      sl = std::move(next);
    }
  } catch (const QuasilinearBreakdown& e) {
    st.status = RunStatus::QuasilinearBreakdown;
    st.message = e.what();
  }
  if (final_slice) *final_slice = sl;
  return st;
}

}  // namespace hyperlab
