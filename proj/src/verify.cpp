#include "hyperlab/verify.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>

namespace hyperlab {

namespace {

double cell_volume(const Lattice& g) { return g.h() * g.h() * g.h(); }

// L2 over trusted nodes of dt[0]
double l2_valid(const SliceJet& u) {
  const Lattice& g = u.lattice;
  const int n = g.n();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (u.valid(i, j, k)) {
          const double v = u.dt[0](g.index(i, j, k));
          acc += v * v;
        }
  return std::sqrt(acc * cell_volume(g));
}

double l2(const Lattice& g, const Field& f) { return std::sqrt(cell_volume(g) * deterministic_sum(g, f.square())); }

InequalityRatio make_ratio(double lhs, double rhs) {
  return {lhs, rhs, rhs > 0.0 ? lhs / rhs : 0.0};
}

template <int N>
SliceJet sample_jet_n(const TestFunction& f, const Lattice& g, const SliceGeometry& geo, int order) {
  using T = NestedDual<N>;
  return sample_jet(g, geo, N + 1, order, [&](double t, const Eigen::Vector3d& x) {
    const T v = f(seed_dual<T>(t, 1.0), T(x(0)), T(x(1)), T(x(2)));
    std::array<double, N + 1> out{};
    for (int k = 0; k <= N; ++k) out[k] = dual_component(v, k);
    return out;
  });
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Lattice family_lattice(const TestFunctionFamily& fam, int cells) {
  // a little room beyond the support so stencils see zeros
  return Lattice(cells, fam.max_support * 1.15);
}

ConstantReport fold(const std::string& name, const std::vector<double>& coarse, const std::vector<double>& fine) {
  ConstantReport r;
  r.name = name;
  for (double v : coarse) r.finite = r.finite && std::isfinite(v);
  for (double v : fine) r.finite = r.finite && std::isfinite(v);
  r.coarse = *std::max_element(coarse.begin(), coarse.end());
  r.fine = *std::max_element(fine.begin(), fine.end());
  r.change = r.coarse > 0.0 ? std::abs(r.fine / r.coarse - 1.0) : 0.0;
  r.median = median(fine);
  r.worst_over_median = r.median > 0.0 ? r.fine / r.median : 0.0;
  return r;
}

ConvergenceCheck fit(const std::string& name, const std::vector<int>& cells, const std::vector<double>& err,
                     int order) {
  ConvergenceCheck c{name, cells, err, 0.0, false};
  const std::size_t n = err.size();
  if (n >= 2 && err[n - 1] > 0.0 && err[n - 2] > 0.0)
    c.slope = std::log(err[n - 2] / err[n - 1]) / std::log(double(cells[n - 1]) / cells[n - 2]);
  // residuals at rounding level count as converged
  c.pass = c.slope >= order - 0.5 || (n && err[n - 1] < 1e-11);
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// test functions

std::vector<TestFunction> TestFunctionFamily::generate() const {
  if (members < 1) throw std::invalid_argument("TestFunctionFamily: need at least one member");
  if (generator != "bump" && generator != "radial")
    throw std::invalid_argument("TestFunctionFamily: unknown generator '" + generator + "'");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  auto direction = [&] {
    Eigen::Vector3d v(N(rng), N(rng), N(rng));
    return Eigen::Vector3d(v / std::max(v.norm(), 1e-12));
  };
  std::vector<TestFunction> out;
  out.reserve(members);
  for (int m = 0; m < members; ++m) {
    TestFunction f;
    f.amplitude = 0.5 + 1.5 * U(rng);
    f.power = 6 + 2 * int(U(rng) * 3);  // 6, 8, 10
    if (generator == "radial") {
      f.radius = max_support * (0.5 + 0.5 * U(rng));
    } else {
      f.center = direction() * (0.3 * max_support * std::cbrt(U(rng)));
      f.radius = (max_support - f.center.norm()) * (0.5 + 0.5 * U(rng));
      f.omega = 2.0 * U(rng);
      f.wave = direction() * (1.5 * U(rng));
      f.phase = 2.0 * M_PI * U(rng);
    }
    out.push_back(f);
  }
  return out;
}

SliceJet sample_time_jet(const TestFunction& f, const Lattice& g, const SliceGeometry& geo, int length, int order) {
  SliceJet J;
  switch (length) {
    case 1: J = sample_jet_n<0>(f, g, geo, order); break;
    case 2: J = sample_jet_n<1>(f, g, geo, order); break;
    case 3: J = sample_jet_n<2>(f, g, geo, order); break;
    case 4: J = sample_jet_n<3>(f, g, geo, order); break;
    case 5: J = sample_jet_n<4>(f, g, geo, order); break;
    case 6: J = sample_jet_n<5>(f, g, geo, order); break;
    default: throw std::invalid_argument("sample_time_jet: length must be 1..6");
  }
  // zero-extension is exact once the support clears the stencil layer
  J.zero_extended = f.support() + stencil_half_width(order) * g.h() < g.half_width;
  return J;
}

GridSlice sample_slice(const TestFunction& f, const Lattice& g, double s) {
  const SliceJet J = sample_time_jet(f, g, SliceGeometry::hyperboloid(s), 2);
  GridSlice sl;
  sl.s = s;
  sl.lattice = g;
  sl.mask_radius = std::min(f.support() + 2.0 * g.h(), g.half_width);
  sl.names = {"u"};
  sl.w = {J.dt[0]};
  const Field sot = sample(g, [&](const Eigen::Vector3d& x) { return s / std::sqrt(s * s + x.squaredNorm()); });
  sl.d_s = {Field(sot * J.dt[1])};
  sl.d_t = {J.dt[1]};
  return sl;
}

// ---------------------------------------------------------------------------
// Sobolev / Hardy

InequalityRatio sobolev_ratio(const SliceJet& u) {
  if (u.length() < 3) throw std::invalid_argument("sobolev_ratio: need d_t^2 for two boosts");
  if (u.geometry.kind != SliceGeometry::Kind::Hyperboloid)
    throw std::invalid_argument("sobolev_ratio: the inequality lives on a hyperboloid");
  const Lattice& g = u.lattice;
  const int n = g.n();
  double lhs = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (!u.valid(i, j, k)) continue;
        const double t = u.geometry.time(g.position(i, j, k));
        lhs = std::max(lhs, t * std::sqrt(t) * std::abs(u.dt[0](g.index(i, j, k))));
      }
  double rhs = l2_valid(u);
  for (int a = 1; a <= 3; ++a) {
    const SliceJet La = apply_field(AdmissibleField::boost(a), u);
    rhs += l2_valid(La);
    for (int b = 1; b <= 3; ++b) rhs += l2_valid(apply_field(AdmissibleField::boost(b), La));
  }
  return make_ratio(lhs, rhs);
}

namespace {

// int over the unit cell centred at n of |y|^-2, n != 0 (smooth there)
double cell_integral(int a, int b, int c) {
  using G = boost::math::quadrature::gauss<double, 20>;
  double acc = 0.0;
  auto axis = [](int m, auto&& fn) {
    double s = 0.0;
    // gauss exposes the non-negative half of the abscissae
    const auto& xs = G::abscissa();
    const auto& ws = G::weights();
    for (std::size_t q = 0; q < xs.size(); ++q) {
      s += 0.5 * ws[q] * fn(m + 0.5 * xs[q]);
      if (xs[q] != 0.0) s += 0.5 * ws[q] * fn(m - 0.5 * xs[q]);
    }
    return s;
  };
  acc = axis(a, [&](double x) {
    return axis(b, [&](double y) { return axis(c, [&](double z) { return 1.0 / (x * x + y * y + z * z); }); });
  });
  return acc;
}

// origin cell: six pyramids, each (1/2) int_face dA / |p|^2
double origin_cell_integral() {
  using G = boost::math::quadrature::gauss<double, 30>;
  auto face = [](double y) {
    return G::integrate([y](double z) { return 1.0 / (0.25 + y * y + z * z); }, -0.5, 0.5);
  };
  return 3.0 * G::integrate(face, -0.5, 0.5);
}

constexpr int kNearCells = 4;

// W[a][b][c] = int_{cell n} |y|^-2 for 0 <= a, b, c <= kNearCells
const std::vector<double>& near_weights() {
  static const std::vector<double> W = [] {
    const int m = kNearCells + 1;
    std::vector<double> w(m * m * m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c)
          w[(a * m + b) * m + c] = (a | b | c) ? cell_integral(a, b, c) : origin_cell_integral();
    return w;
  }();
  return W;
}

// r^-2 weight for the node at integer offset (a, b, c) from the origin node, in units of h^-2
double inverse_square_weight(int a, int b, int c) {
  a = std::abs(a);
  b = std::abs(b);
  c = std::abs(c);
  if (a <= kNearCells && b <= kNearCells && c <= kNearCells) {
    const int m = kNearCells + 1;
    return near_weights()[(a * m + b) * m + c];
  }
  return 1.0 / double(a * a + b * b + c * c);
}

}  // namespace

double origin_cell_weight(double h) { return near_weights()[0] / (h * h); }

InequalityRatio hardy_flat_ratio(const Lattice& g, const Field& u, int order) {
  if (u.size() != g.size()) throw std::invalid_argument("hardy_flat_ratio: field does not match the lattice");
  if (g.cells % 2) throw std::invalid_argument("hardy_flat_ratio: need a node at r = 0 (even cell count)");
  const int n = g.n(), o = g.cells / 2;
  const double h = g.h();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double v = u(g.index(i, j, k));
        if (v != 0.0) acc += v * v * inverse_square_weight(i - o, j - o, k - o);
      }
  const double lhs = std::sqrt(acc * h);  // h^3 cell * h^-2 weight
  double rhs = 0.0;
  for (int a = 0; a < 3; ++a) rhs += l2(g, diff(g, u, a, order));
  return make_ratio(lhs, rhs);
}

void HyperboloidalHardy::add(const GridSlice& sl) {
  if (component_ < 0 || component_ >= sl.components())
    throw std::out_of_range("HyperboloidalHardy: component out of range");
  if (!s_.empty() && !(sl.s > s_.back())) throw std::invalid_argument("HyperboloidalHardy: slices must advance in s");
  if (sl.d_t.size() != sl.w.size()) throw std::invalid_argument("HyperboloidalHardy: slice lacks the d_t co-field");
  const Lattice& g = sl.lattice;
  const double s = sl.s;
  const Field& w = sl.w[component_];
  const Field& ut = sl.d_t[component_];
  double frame = 0.0, scaled = 0.0;
  for (int a = 0; a < 3; ++a) {
    const Field db = diff(g, w, a, order_);
    frame += l2(g, db);
    // (s/t) d_a u = (s/t) (dbar_a u - (x^a/t) u_t)
    Field sd(g.size());
    const int n = g.n();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const Eigen::Vector3d x = g.position(i, j, k);
          const double t = std::sqrt(s * s + x.squaredNorm());
          const Eigen::Index p = g.index(i, j, k);
          sd(p) = (s / t) * (db(p) - x(a) / t * ut(p));
        }
    scaled += l2(g, sd);
  }
  const double lhs = l2(g, w) / s;
  if (s_.empty()) first_ = lhs;
  s_.push_back(s);
  integrand_.push_back((scaled + frame) / s);
  lhs_.push_back(lhs);
  frame_.push_back(frame);
}

InequalityRatio HyperboloidalHardy::result() const {
  if (s_.empty()) throw std::logic_error("HyperboloidalHardy: no slices");
  InequalityRatio worst;
  double integral = 0.0;
  for (std::size_t k = 0; k < s_.size(); ++k) {
    if (k) integral += 0.5 * (s_[k] - s_[k - 1]) * (integrand_[k] + integrand_[k - 1]);
    const InequalityRatio r = make_ratio(lhs_[k], first_ + frame_[k] + integral);
    if (k == 0 || r.ratio > worst.ratio) worst = r;
  }
  return worst;
}

ConstantReport sobolev_family(const TestFunctionFamily& fam, double s, int cells) {
  const auto members = fam.generate();
  std::vector<double> lo(members.size()), hi(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    lo[m] = sobolev_ratio(sample_time_jet(members[m], family_lattice(fam, cells), SliceGeometry::hyperboloid(s), 3)).ratio;
    hi[m] = sobolev_ratio(sample_time_jet(members[m], family_lattice(fam, 2 * cells), SliceGeometry::hyperboloid(s), 3)).ratio;
  }
  return fold("sobolev", lo, hi);
}

ConstantReport hardy_flat_family(const TestFunctionFamily& fam, double s, int cells) {
  const auto members = fam.generate();
  std::vector<double> lo(members.size()), hi(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    const Lattice gl = family_lattice(fam, cells), gh = family_lattice(fam, 2 * cells);
    lo[m] = hardy_flat_ratio(gl, sample_slice(members[m], gl, s).w[0]).ratio;
    hi[m] = hardy_flat_ratio(gh, sample_slice(members[m], gh, s).w[0]).ratio;
  }
  return fold("hardy-flat", lo, hi);
}

ConstantReport hardy_hyperboloidal_family(const TestFunctionFamily& fam, double s0, double s1, int nslices, int cells) {
  if (nslices < 2 || !(s1 > s0)) throw std::invalid_argument("hardy_hyperboloidal_family: need an s-range");
  if (fam.max_support >= slice_support_radius(s0))
    throw std::invalid_argument("hardy_hyperboloidal_family: members leave the cone at s0");
  const auto members = fam.generate();
  std::vector<double> lo(members.size()), hi(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    for (int level = 0; level < 2; ++level) {
      const Lattice g = family_lattice(fam, level ? 2 * cells : cells);
      HyperboloidalHardy acc;
      for (int q = 0; q < nslices; ++q) acc.add(sample_slice(members[m], g, s0 + (s1 - s0) * q / (nslices - 1)));
      (level ? hi : lo)[m] = acc.result().ratio;
    }
  }
  return fold("hardy-hyperboloidal", lo, hi);
}

// ---------------------------------------------------------------------------
// frames and operators

FrameIdentityReport frame_identity_check(int points, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  FrameIdentityReport rep;
  rep.points = points;
  const Eigen::Matrix4d I = Eigen::Matrix4d::Identity();
  for (const auto& p : cone_samples(points, seed, 0.0)) {
    const Eigen::Vector3d x = p.tail<3>();
    const auto f = frame_matrices<double>(p(0), x);
    const auto m = semi_frame_metric<double>(p(0), x);
    rep.phi_psi = std::max(rep.phi_psi, (f.phi * f.psi - I).cwiseAbs().maxCoeff());
    rep.metric = std::max(rep.metric, (m.m_up * m.m_down - I).cwiseAbs().maxCoeff());
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

double box_exact(const TestFunction& f, double t, const Eigen::Vector3d& x) {
  using D2 = NestedDual<2>;
  double out = 0.0;
  for (int mu = 0; mu < 4; ++mu) {
    std::array<D2, 4> p;
    for (int nu = 0; nu < 4; ++nu) {
      const double v = nu ? x(nu - 1) : t;
      p[nu] = nu == mu ? seed_dual<D2>(v, 1.0) : D2(v);
    }
    const double d2 = dual_component(f(p[0], p[1], p[2], p[3]), 2);
    out += mu ? -d2 : d2;
  }
  return out;
}

namespace {

// d_s^k w at fixed xbar, w(s, xbar) = f(sqrt(s^2 + r^2), xbar)
HyperbolicJet s_jet(const TestFunction& f, const Lattice& g, double s, int order) {
  using D2 = NestedDual<2>;
  HyperbolicJet J{g, s, std::vector<Field>(3, Field(g.size())), order, 0, true};
  const int n = g.n();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Vector3d x = g.position(i, j, k);
        const D2 sd = seed_dual<D2>(s, 1.0);
        const D2 t = sqrt(sd * sd + x.squaredNorm());
        const D2 v = f(t, D2(x(0)), D2(x(1)), D2(x(2)));
        for (int m = 0; m < 3; ++m) J.ds[m](g.index(i, j, k)) = dual_component(v, m);
      }
  return J;
}

}  // namespace

OperatorStudy operator_convergence(const TestFunction& f, double s, const std::vector<int>& cells, int order,
                                   double half_width) {
  if (cells.size() < 2) throw std::invalid_argument("operator_convergence: need at least two resolutions");
  if (f.support() + stencil_half_width(order) * 2.0 * half_width / cells.front() >= half_width)
    throw std::invalid_argument("operator_convergence: support reaches the lattice margin");
  std::vector<double> ef, es;
  for (int c : cells) {
    const Lattice g(c, half_width);
    const Field exact = sample(g, [&](const Eigen::Vector3d& x) { return box_exact(f, std::sqrt(s * s + x.squaredNorm()), x); });
    const Field bf = box_in_frame(s_jet(f, g, s, order));
    const Field bs = semi_hyperboloidal_box(sample_time_jet(f, g, SliceGeometry::hyperboloid(s), 3, order));
    ef.push_back((bf - exact).abs().maxCoeff());
    es.push_back((bs - exact).abs().maxCoeff());
  }
  OperatorStudy out;
  out.frame = fit("box (s, xbar) chart", cells, ef, order);
  out.semi = fit("box semi-hyperboloidal", cells, es, order);
  return out;
}

std::vector<std::pair<std::string, TestFunction>> operator_test_functions() {
  TestFunction radial;
  radial.radius = 1.3;
  radial.power = 8;
  radial.omega = 0.8;  // radial in x, oscillating in t
  TestFunction shifted;
  shifted.center = {0.2, -0.1, 0.15};
  shifted.radius = 1.0;
  shifted.power = 10;
  shifted.omega = 1.2;
  shifted.phase = 0.5;
  TestFunction travelling;  // a localized wave packet moving along x^1
  travelling.radius = 1.2;
  travelling.power = 12;
  travelling.omega = -3.0;
  travelling.wave = {3.0, 0.0, 0.0};
  return {{"radial bump", radial}, {"shifted oscillating bump", shifted}, {"wave packet", travelling}};
}

// ---------------------------------------------------------------------------
// homogeneity

namespace {

template <typename T>
T coefficient_value(const std::string& name, const std::array<T, 4>& p) {
  using std::sqrt;
  const T& t = p[0];
  const T r2 = p[1] * p[1] + p[2] * p[2] + p[3] * p[3];
  if (name == "x1/t") return p[1] / t;
  if (name == "x2/t") return p[2] / t;
  if (name == "x3/t") return p[3] / t;
  if (name == "s/t") return sqrt(t * t - r2) / t;
  if (name == "t/(t+r)") return t / (t + sqrt(r2));
  if (name == "psi10") return -p[1] / t;
  if (name == "psi20") return -p[2] / t;
  if (name == "psi30") return -p[3] / t;
  throw std::invalid_argument("homogeneity: unknown coefficient '" + name + "'");
}

// first-order operator: Z = c^mu(p) d_mu
struct Op {
  bool boost = false;
  int index = 0;  // alpha for partials, a = 1..3 for boosts
};

template <typename T>
std::array<T, 4> op_coefficients(const Op& op, const std::array<T, 4>& p) {
  std::array<T, 4> c{T(0.0), T(0.0), T(0.0), T(0.0)};
  if (!op.boost) {
    c[op.index] = T(1.0);
  } else {  // L_a = x^a d_t + t d_a
    c[0] = p[op.index];
    c[op.index] = p[0];
  }
  return c;
}

constexpr int kMaxOps = 3;

// ops[k] (ops[k+1] (... f)) evaluated at p; Depth bounds the nesting at compile time
template <int Depth, typename T>
T apply_ops(const std::string& name, const std::vector<Op>& ops, std::size_t k, const std::array<T, 4>& p) {
  if (k == ops.size()) return coefficient_value(name, p);
  if constexpr (Depth == 0) {
    throw std::logic_error("homogeneity: derivative budget exceeded");
  } else {
    const auto c = op_coefficients(ops[k], p);
    T acc(0.0);
    for (int mu = 0; mu < 4; ++mu) {
      if (c[mu] == T(0.0)) continue;
      std::array<Dual<T>, 4> q;
      for (int nu = 0; nu < 4; ++nu) q[nu] = Dual<T>(p[nu], T(nu == mu ? 1.0 : 0.0));
      acc += c[mu] * apply_ops<Depth - 1>(name, ops, k + 1, q).d;
    }
    return acc;
  }
}

double evaluate_ops(const std::string& name, const std::vector<Op>& ops, const Eigen::Vector4d& p) {
  if (int(ops.size()) > kMaxOps) throw std::invalid_argument("homogeneity: |I1| + |I2| must be <= 3");
  return apply_ops<kMaxOps>(name, ops, 0, std::array<double, 4>{p(0), p(1), p(2), p(3)});
}

std::vector<Op> build_ops(const std::vector<int>& partials, const MultiIndex& fields) {
  if (fields.null_operator) throw std::invalid_argument("homogeneity: null multi-index");
  std::vector<Op> ops;
  for (int a : partials) {
    if (a < 0 || a > 3) throw std::out_of_range("homogeneity: partial index must be 0..3");
    ops.push_back({false, a});
  }
  for (const auto& Z : fields.fields) ops.push_back({Z.is_boost(), Z.index});
  return ops;
}

}  // namespace

const std::vector<std::string>& homogeneous_coefficients() {
  static const std::vector<std::string> names{"x1/t", "x2/t", "x3/t", "s/t", "t/(t+r)", "psi10", "psi20", "psi30"};
  return names;
}

std::vector<Eigen::Vector4d> cone_samples(int count, std::uint64_t seed, double floor, double t_min, double t_max) {
  if (!(t_min > 1.0) || !(t_max > t_min)) throw std::invalid_argument("cone_samples: need 1 < t_min < t_max");
  if (!(floor >= 0.0 && floor < 1.0)) throw std::invalid_argument("cone_samples: floor must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<Eigen::Vector4d> out;
  out.reserve(count);
  while (int(out.size()) < count) {
    const double t = t_min * std::pow(t_max / t_min, U(rng));
    const double rmax = std::min(t - 1.0, t * std::sqrt(1.0 - floor * floor));
    Eigen::Vector3d dir(N(rng), N(rng), N(rng));
    if (dir.norm() < 1e-9) continue;
    const Eigen::Vector3d x = dir.normalized() * (rmax * U(rng));
    if (x.norm() < 1e-6) continue;  // t/(t+r) is not smooth at r = 0
    out.push_back({t, x(0), x(1), x(2)});
  }
  return out;
}

HomogeneityReport homogeneity_check(const std::string& coefficient, const std::vector<int>& partials,
                                    const MultiIndex& fields, const std::vector<Eigen::Vector4d>& samples,
                                    double lambda) {
  const auto ops = build_ops(partials, fields);
  const auto& names = homogeneous_coefficients();
  if (std::find(names.begin(), names.end(), coefficient) == names.end())
    throw std::invalid_argument("homogeneity: unknown coefficient '" + coefficient + "'");
  const double eta = 0.0;  // every listed coefficient has degree 0
  // translations inside Z^{I2} lower the degree as well; weighting them keeps the measure scale-free
  int translations = int(partials.size());
  for (const auto& Z : fields.fields) translations += Z.is_boost() ? 0 : 1;
  const double weight = translations - eta;
  HomogeneityReport rep;
  rep.name = coefficient;
  rep.samples = int(samples.size());
  for (const auto& p : samples) {
    rep.constant = std::max(rep.constant, std::abs(evaluate_ops(coefficient, ops, p)) * std::pow(p(0), weight));
    const Eigen::Vector4d q = lambda * p;
    rep.scaled_constant =
        std::max(rep.scaled_constant, std::abs(evaluate_ops(coefficient, ops, q)) * std::pow(q(0), weight));
  }
  const double scale = std::max(rep.constant, 1e-300);
  rep.rel_change = std::abs(rep.scaled_constant - rep.constant) / scale;
  if (rep.constant == 0.0 && rep.scaled_constant == 0.0) rep.rel_change = 0.0;
  return rep;
}

double xi_bound(const MultiIndex& I, const std::vector<Eigen::Vector4d>& samples) {
  const auto ops = build_ops({}, I);
  double out = 0.0;
  for (const auto& p : samples) {
    const double s = std::sqrt(p(0) * p(0) - p.tail<3>().squaredNorm());
    out = std::max(out, p(0) / s * std::abs(evaluate_ops("s/t", ops, p)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// commutator tables

namespace {

using Q = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend, boost::multiprecision::et_off>;
using DQ = Dual<Q>;

// coefficient vector of a frame field at p: d_alpha, L_a, dbar_beta = d_beta + (x^beta/t) d_t
enum class FieldKind { Partial, Boost, Frame };
struct VF {
  FieldKind kind;
  int index;
};

template <typename T>
std::array<T, 4> vf_coefficients(const VF& X, const std::array<T, 4>& p) {
  std::array<T, 4> c{T(0), T(0), T(0), T(0)};
  switch (X.kind) {
    case FieldKind::Partial: c[X.index] = T(1); break;
    case FieldKind::Boost:
      c[0] = p[X.index];
      c[X.index] = p[0];
      break;
    case FieldKind::Frame:
      c[X.index] = T(1);
      if (X.index > 0) c[0] = p[X.index] / p[0];
      break;
  }
  return c;
}

// [X, Y]^nu = X(Y^nu) - Y(X^nu), exact
std::array<Q, 4> bracket(const VF& X, const VF& Y, const std::array<Q, 4>& p) {
  const auto cx = vf_coefficients(X, p), cy = vf_coefficients(Y, p);
  std::array<Q, 4> out{Q(0), Q(0), Q(0), Q(0)};
  for (int mu = 0; mu < 4; ++mu) {
    std::array<DQ, 4> q;
    for (int nu = 0; nu < 4; ++nu) q[nu] = DQ(p[nu], Q(nu == mu ? 1 : 0));
    const auto dy = vf_coefficients(Y, q), dx = vf_coefficients(X, q);
    for (int nu = 0; nu < 4; ++nu) out[nu] += cx[mu] * dy[nu].d - cy[mu] * dx[nu].d;
  }
  return out;
}

std::array<Q, 4> combination(const std::array<Q, 4>& coeff, FieldKind basis, const std::array<Q, 4>& p) {
  std::array<Q, 4> out{Q(0), Q(0), Q(0), Q(0)};
  for (int g = 0; g < 4; ++g) {
    if (coeff[g] == 0) continue;
    const auto c = vf_coefficients(VF{basis, g}, p);
    for (int nu = 0; nu < 4; ++nu) out[nu] += coeff[g] * c[nu];
  }
  return out;
}

Q random_rational(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_int_distribution<int> den(1, 97);
  std::uniform_real_distribution<double> U(lo, hi);
  const int d = den(rng);
  return Q(boost::multiprecision::cpp_int(std::llround(U(rng) * d)), boost::multiprecision::cpp_int(d));
}

std::vector<std::array<Q, 4>> rational_cone_points(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::array<Q, 4>> out;
  while (int(out.size()) < count) {
    const Q t = random_rational(rng, 1.5, 60.0);
    const double tb = t.convert_to<double>();
    std::array<Q, 4> p{t, random_rational(rng, -tb, tb), random_rational(rng, -tb, tb), random_rational(rng, -tb, tb)};
    const Q r2 = p[1] * p[1] + p[2] * p[2] + p[3] * p[3];
    // r < t - 1 without square roots
    if (t > 1 && r2 < (t - 1) * (t - 1)) out.push_back(p);
  }
  return out;
}

void tally(IdentityCheck& c, bool ok) {
  ++c.checked;
  if (!ok) ++c.failures;
}


// max over trusted nodes of |a.dt[0] - b|
template <typename Fn>
double residual(const SliceJet& a, Fn&& reference) {
  const Lattice& g = a.lattice;
  const int n = g.n();
  double out = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (!a.valid(i, j, k)) continue;
        const Eigen::Index p = g.index(i, j, k);
        const Eigen::Vector3d x = g.position(i, j, k);
        out = std::max(out, std::abs(a.dt[0](p) - reference(p, a.geometry.time(x), x)));
      }
  return out;
}

}  // namespace

bool CommutatorReport::pass() const {
  for (const auto& c : exact)
    if (c.failures || !c.checked) return false;
  for (const auto& c : discrete)
    if (!c.pass) return false;
  return true;
}

CommutatorReport commutator_table_check(int points, std::uint64_t seed, int order, const std::vector<int>& cells) {
  CommutatorReport rep;
  const auto pts = rational_cone_points(points, seed);

  IdentityCheck lp{"[L_a,d_beta] = Theta d"}, pb{"[d_alpha,dbar_beta] = t^-1 Gammabar d"},
      lb{"[L_a,dbar_beta] = Thetabar dbar"}, tb0{"Thetabar_ab^0 = 0"},
      closed{"Gammabar_0b = Psi^0_b, Thetabar_a0^0 = Phi_0^a, Thetabar_ab^c = Psi^0_b delta_a^c"},
      table{"Theta_ab = -delta_ab delta_0, Theta_a0 = -delta_a, Gammabar_ab = delta_ab delta_0, Gammabar_alpha0 = 0"};
  for (const auto& p : pts) {
    const Q& t = p[0];
    Vec3<Q> x;
    x << p[1], p[2], p[3];
    const auto fm = frame_matrices<Q>(t, x);
    for (int a = 1; a <= 3; ++a)
      for (int beta = 0; beta < 4; ++beta) {
        std::array<Q, 4> th, thb;
        for (int g = 0; g < 4; ++g) {
          th[g] = Q(theta(a, beta, g));
          thb[g] = theta_bar<Q>(a, beta, g, t, x);
        }
        tally(lp, bracket({FieldKind::Boost, a}, {FieldKind::Partial, beta}, p) == combination(th, FieldKind::Partial, p));
        tally(lb, bracket({FieldKind::Boost, a}, {FieldKind::Frame, beta}, p) == combination(thb, FieldKind::Frame, p));
        if (beta > 0) {
          tally(tb0, thb[0] == 0);
          for (int c = 1; c <= 3; ++c) tally(closed, thb[c] == fm.psi(beta, 0) * Q(kdelta(a, c)));
        } else {
          tally(closed, thb[0] == fm.phi(a, 0));
          for (int c = 1; c <= 3; ++c) tally(closed, thb[c] == Q(-kdelta(a, c)));
        }
        for (int g = 0; g < 4; ++g) {
          const int expect = beta > 0 ? -kdelta(a, beta) * kdelta(g, 0) : -kdelta(a, g);
          tally(table, theta(a, beta, g) == expect);
        }
      }
    for (int alpha = 0; alpha < 4; ++alpha)
      for (int beta = 0; beta < 4; ++beta) {
        std::array<Q, 4> gb;
        for (int g = 0; g < 4; ++g) gb[g] = gamma_bar<Q>(alpha, beta, g, t, x) / t;
        tally(pb, bracket({FieldKind::Partial, alpha}, {FieldKind::Frame, beta}, p) == combination(gb, FieldKind::Partial, p));
        for (int g = 0; g < 4; ++g) {
          const Q v = gamma_bar<Q>(alpha, beta, g, t, x);
          if (beta == 0) tally(table, v == 0);
          else if (alpha == 0) tally(closed, v == (g == 0 ? fm.psi(beta, 0) : Q(0)));
          else tally(table, v == Q(kdelta(alpha, beta) * kdelta(g, 0)));
        }
      }
  }
  rep.exact = {lp, pb, lb, tb0, closed, table};

  // discrete: a smooth bump on H_s, s = 2.5, with the support well inside the lattice
  TestFunction f;
  f.radius = 1.2;
  f.power = 10;
  f.omega = 0.7;
  f.wave = Eigen::Vector3d(0.4, -0.3, 0.2);
  f.phase = 0.3;
  const double s = 2.5;
  std::vector<double> e_lp, e_lb, e_pb, e_box;
  for (int c : cells) {
    const Lattice g(c, 1.6);
    const SliceJet u = sample_time_jet(f, g, SliceGeometry::hyperboloid(s), 5, order);
    double r_lp = 0.0, r_lb = 0.0, r_pb = 0.0, r_box = 0.0;
    std::array<SliceJet, 4> d, db;
    for (int b = 0; b < 4; ++b) {
      d[b] = natural_derivative(u, b);
      db[b] = frame_derivative(u, b);
    }
    for (int a = 1; a <= 3; ++a) {
      const AdmissibleField L = AdmissibleField::boost(a);
      const SliceJet Lu = apply_field(L, u);
      for (int b = 0; b < 4; ++b) {
        // [L_a, d_b] u - Theta_ab^g d_g u
        const SliceJet com = combine(apply_field(L, d[b]), 1.0, natural_derivative(Lu, b), -1.0);
        r_lp = std::max(r_lp, residual(com, [&](Eigen::Index p, double, const Eigen::Vector3d&) {
          double acc = 0.0;
          for (int g2 = 0; g2 < 4; ++g2) acc += theta(a, b, g2) * d[g2].dt[0](p);
          return acc;
        }));
        if (b == 0) continue;
        // [L_a, dbar_b] u - Thetabar_ab^c dbar_c u
        const SliceJet comb = combine(apply_field(L, db[b]), 1.0, frame_derivative(Lu, b), -1.0);
        r_lb = std::max(r_lb, residual(comb, [&](Eigen::Index p, double t, const Eigen::Vector3d& x) {
          double acc = 0.0;
          for (int c2 = 1; c2 <= 3; ++c2) acc += theta_bar<double>(a, b, c2, t, Vec3<double>(x)) * db[c2].dt[0](p);
          return acc;
        }));
      }
    }
    for (int al = 0; al < 4; ++al)
      for (int b = 0; b < 4; ++b) {
        const SliceJet com = combine(natural_derivative(db[b], al), 1.0, frame_derivative(d[al], b), -1.0);
        r_pb = std::max(r_pb, residual(com, [&](Eigen::Index p, double t, const Eigen::Vector3d& x) {
          double acc = 0.0;
          for (int g2 = 0; g2 < 4; ++g2) acc += gamma_bar<double>(al, b, g2, t, Vec3<double>(x)) / t * d[g2].dt[0](p);
          return acc;
        }));
      }
    for (const auto& Z : admissible_fields()) r_box = std::max(r_box, killing_residual(Z, u));
    e_lp.push_back(r_lp);
    e_lb.push_back(r_lb);
    e_pb.push_back(r_pb);
    e_box.push_back(r_box);
  }
  rep.discrete = {fit("[L_a,d_beta]", cells, e_lp, order), fit("[L_a,dbar_b]", cells, e_lb, order),
                  fit("[d_alpha,dbar_beta]", cells, e_pb, order), fit("[Z,box]", cells, e_box, order)};
  return rep;
}

}  // namespace hyperlab
