#include <catch_amalgamated.hpp>

#include <random>

#include "hyperlab/diagnostics.hpp"
#include "hyperlab/dual.hpp"
#include "support/manufactured.hpp"

using namespace hyperlab;
using hyperlab::testing::Manufactured;

namespace {

GridSlice slice_from(const Lattice& g, double s, const std::function<double(const Eigen::Vector3d&)>& w,
                     const std::function<double(const Eigen::Vector3d&)>& ws) {
  GridSlice sl;
  sl.s = s;
  sl.lattice = g;
  sl.mask_radius = slice_support_radius(s) + 2 * g.h();
  sl.w = {sample(g, w)};
  sl.d_s = {sample(g, ws)};
  sl.refresh_time_cofield();
  return sl;
}

// composite Simpson on [0, R]
template <typename Fn>
double simpson(Fn&& f, double R, int n = 20000) {
  const double h = R / n;
  double acc = f(0.0) + f(R);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return acc * h / 3.0;
}

// Z^I u by dual numbers: (Z f)(t, x) for a scalar functor f
template <typename F>
struct ApplyZ {
  AdmissibleField Z;
  F f;
  template <typename T> T operator()(T t, T x, T y, T z) const {
    using D = Dual<T>;
    auto d = [&](int alpha) {
      D c[4] = {D(t), D(x), D(y), D(z)};
      c[alpha].d = T(1.0);
      return f(c[0], c[1], c[2], c[3]).d;
    };
    if (!Z.is_boost()) return d(Z.index);
    const T xa[3] = {x, y, z};
    return xa[Z.index - 1] * d(0) + t * d(Z.index);
  }
};

struct MmsFn {
  const Manufactured* m;
  template <typename T> T operator()(T t, T x, T y, T z) const { return m->value<T>(0, t, Vec3<T>(x, y, z)); }
};

// E_m of f on H_s with exact derivatives (frame form), sampled on the lattice
template <typename F>
double exact_energy(const F& f, const Lattice& g, double s, double mass) {
  using D = Dual<double>;
  Field e(g.size());
  for (int i = 0; i < g.n(); ++i)
    for (int j = 0; j < g.n(); ++j)
      for (int k = 0; k < g.n(); ++k) {
        const Eigen::Vector3d x = g.position(i, j, k);
        const double t = std::sqrt(s * s + x.squaredNorm());
        double du[4];
        for (int a = 0; a < 4; ++a) {
          D c[4] = {D(t), D(x(0)), D(x(1)), D(x(2))};
          c[a].d = 1.0;
          du[a] = f(c[0], c[1], c[2], c[3]).d;
        }
        const double u = f(t, x(0), x(1), x(2));
        double v = (s / t * du[0]) * (s / t * du[0]) + mass * mass * u * u;
        for (int a = 0; a < 3; ++a) v += (x(a) / t * du[0] + du[a + 1]) * (x(a) / t * du[0] + du[a + 1]);
        e(g.index(i, j, k)) = v;
      }
  return g.h() * g.h() * g.h() * e.sum();
}

GridSlice mms_slice(const Manufactured& m, const Lattice& g, double s) {
  GridSlice sl;
  sl.s = s;
  sl.lattice = g;
  sl.mask_radius = slice_support_radius(s) + 2 * g.h();
  sl.w.assign(m.components(), g.zeros());
  sl.d_s.assign(m.components(), g.zeros());
  auto init = m.initial_data();
  for (int i = 0; i < g.n(); ++i)
    for (int j = 0; j < g.n(); ++j)
      for (int k = 0; k < g.n(); ++k) {
        double w[4], ws[4];
        init(s, g.position(i, j, k), w, ws);
        for (int c = 0; c < m.components(); ++c) {
          sl.w[c](g.index(i, j, k)) = w[c];
          sl.d_s[c](g.index(i, j, k)) = ws[c];
        }
      }
  sl.refresh_time_cofield();
  return sl;
}

SolverConfig bump_config(const std::string& preset, int cells, double s_end, double amp = 1.0) {
  SolverConfig cfg;
  cfg.spec = preset_system(preset);
  cfg.cells = cells;
  cfg.s_end = s_end;
  InitialProfile p;
  p.amplitude = amp;
  p.radius = 1.2;
  cfg.data = {p};
  return cfg;
}

}  // namespace

TEST_CASE("zero fields have zero diagnostics", "[diagnostics]") {
  const Lattice g(16, 3.0);
  const auto sl = slice_from(g, 2.0, [](auto&) { return 0.0; }, [](auto&) { return 0.0; });
  CHECK(energy_hyperboloidal(sl, 0, 1.0) == 0.0);
  const auto f = energy_forms(sl, 0, 1.0);
  CHECK(f.natural == 0.0);
  CHECK(f.rotation == 0.0);
  CHECK(energy_curved(sl, preset_system("free-wave")).curved == 0.0);
  for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()}) CHECK(lp_norm_on_slice(g, sl.w[0], p) == 0.0);
  const auto m = decay_monitors(sl);
  CHECK(m.value[0] == 0.0);
  CHECK(m.gradient[0] == 0.0);

  GridSlice missing = sl;
  missing.d_t.clear();
  CHECK_THROWS_AS(energy_hyperboloidal(missing, 0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lp_norm_on_slice(g, sl.w[0], 3.0), std::invalid_argument);
}

TEST_CASE("energy integrand forms agree for random data", "[diagnostics][property]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    const Lattice g(20, 3.0);
    GridSlice sl;
    sl.s = 2.0 + trial;
    sl.lattice = g;
    sl.mask_radius = 2.5;
    sl.w = {Field::NullaryExpr(g.size(), [&](Eigen::Index) { return U(rng); })};
    sl.d_s = {Field::NullaryExpr(g.size(), [&](Eigen::Index) { return U(rng); })};
    sl.refresh_time_cofield();
    const auto f = energy_forms(sl, 0, 0.7);
    CHECK(f.max_pointwise_gap < 1e-12);
    CHECK(f.natural == Catch::Approx(f.frame).epsilon(1e-12));
    CHECK(f.rotation == Catch::Approx(f.frame).epsilon(1e-12));
    CHECK(energy_hyperboloidal(sl, 0, 0.7) == f.frame);
  }
}

TEST_CASE("radial Gaussian energy and norms match a 1D oracle", "[diagnostics][oracle]") {
  const double s = 2.5, sig = 0.55, c = 1.0;
  auto w = [&](double r) { return std::exp(-r * r / (sig * sig)); };
  auto wr = [&](double r) { return -2.0 * r / (sig * sig) * w(r); };
  auto ws = [&](double r) { return 0.3 * (1.0 - r * r) * w(r); };
  const double R = 4.0;
  const double oracle_E =
      4 * M_PI * simpson([&](double r) { return r * r * (wr(r) * wr(r) + ws(r) * ws(r) + c * c * w(r) * w(r)); }, R);
  const double oracle_L1 = 4 * M_PI * simpson([&](double r) { return r * r * w(r); }, R);
  const double oracle_L2 = std::sqrt(4 * M_PI * simpson([&](double r) { return r * r * w(r) * w(r); }, R));

  const Lattice g(64, 3.0);
  const auto sl = slice_from(g, s, [&](const Eigen::Vector3d& x) { return w(x.norm()); },
                             [&](const Eigen::Vector3d& x) { return ws(x.norm()); });
  CHECK(energy_hyperboloidal(sl, 0, c) == Catch::Approx(oracle_E).epsilon(1e-3));
  CHECK(lp_norm_on_slice(g, sl.w[0], 1.0) == Catch::Approx(oracle_L1).epsilon(1e-3));
  CHECK(lp_norm_on_slice(g, sl.w[0], 2.0) == Catch::Approx(oracle_L2).epsilon(1e-3));
  CHECK(lp_norm_on_slice(g, sl.w[0], std::numeric_limits<double>::infinity()) == Catch::Approx(1.0));
  // function form: u(t, x) sampled on H_s
  CHECK(lp_norm_on_slice(g, s, [&](double, const Eigen::Vector3d& x) { return w(x.norm()); }, 2.0) ==
        Catch::Approx(oracle_L2).epsilon(1e-3));
}

TEST_CASE("lp norms are homogeneous in amplitude", "[diagnostics][property]") {
  const Lattice g(24, 2.0);
  const Field u = sample(g, [](const Eigen::Vector3d& x) { return std::max(0.0, 1.0 - x.squaredNorm()); });
  for (double lam : {0.5, 3.0, 17.0})
    for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()})
      CHECK(lp_norm_on_slice(g, Field(lam * u), p) == Catch::Approx(lam * lp_norm_on_slice(g, u, p)).epsilon(1e-13));
}

TEST_CASE("mass-equivalence sandwich", "[diagnostics][property]") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.2, 3.0);
  const Lattice g(16, 3.0);
  const auto sl = slice_from(g, 2.0, [](const Eigen::Vector3d& x) { return std::exp(-x.squaredNorm()) * (1 + x(0)); },
                             [](const Eigen::Vector3d& x) { return std::exp(-2 * x.squaredNorm()); });
  for (int q = 0; q < 50; ++q) {
    double sigma = U(rng), c = U(rng);
    if (c < sigma) std::swap(c, sigma);
    const double Es = energy_hyperboloidal(sl, 0, sigma), Ec = energy_hyperboloidal(sl, 0, c);
    CHECK(Es <= Ec * (1 + 1e-14));
    CHECK(Ec <= (c / sigma) * (c / sigma) * Es * (1 + 1e-14));
  }
}

TEST_CASE("curved energy", "[diagnostics]") {
  const Lattice g(24, 3.0);
  auto make = [&](double amp) {
    GridSlice sl = slice_from(g, 2.0, [&](const Eigen::Vector3d& x) { return amp * std::exp(-2 * x.squaredNorm()); },
                              [&](const Eigen::Vector3d& x) { return amp * (1 + x(0)) * std::exp(-2 * x.squaredNorm()); });
    sl.w.push_back(sl.w[0] * 0.5);
    sl.d_s.push_back(sl.d_s[0] * -0.7);
    sl.refresh_time_cofield();
    return sl;
  };
  // no G: identical
  SystemSpec flat = preset_system("wkg");
  flat.A.clear();
  const auto sl = make(0.1);
  const auto e0 = energy_curved(sl, flat);
  CHECK(e0.curved == e0.minkowski);
  CHECK(e0.coercive);

  // G linear in the state: the relative correction scales with the amplitude
  const SystemSpec wkg = preset_system("wkg");
  std::vector<double> dev;
  for (double amp : {1e-3, 2e-3, 4e-3}) {
    const auto e = energy_curved(make(amp), wkg);
    CHECK(e.coercive);
    dev.push_back(std::abs(e.curved / e.minkowski - 1.0));
  }
  INFO("deviations " << dev[0] << " " << dev[1] << " " << dev[2]);
  CHECK(dev[0] > 0.0);
  CHECK(dev[1] / dev[0] == Catch::Approx(2.0).epsilon(1e-6));
  CHECK(dev[2] / dev[1] == Catch::Approx(2.0).epsilon(1e-6));
  // large state loses coercivity
  CHECK_FALSE(energy_curved(make(40.0), wkg).coercive);
}

TEST_CASE("decay_monitor fits", "[diagnostics]") {
  std::vector<double> s, c, h;
  for (int q = 0; q < 20; ++q) {
    s.push_back(3.0 + q * 0.6);
    c.push_back(1.7);
    h.push_back(0.4 * std::sqrt(s.back()));
  }
  auto f = decay_monitor(s, c);
  CHECK(f.slope == Catch::Approx(0.0).margin(1e-12));
  CHECK(f.bounded);
  CHECK(f.ratio == 1.0);
  f = decay_monitor(s, h);
  CHECK(f.slope == Catch::Approx(0.5).margin(0.02));
  CHECK(f.ratio == Catch::Approx(std::sqrt(s.back() / s.front())));
  CHECK(f.bounded == (f.ratio < 2.0));
  CHECK_FALSE(decay_monitor(s, h, 1.1).bounded);
  CHECK_THROWS_AS(decay_monitor({1, 2, 3, 4}, {1, 1, 1, 1}), std::invalid_argument);
}

TEST_CASE("decay_monitors match a direct sweep", "[diagnostics]") {
  const Lattice g(16, 3.0);
  const double s = 2.0;
  const auto sl = slice_from(g, s, [](const Eigen::Vector3d& x) { return std::max(0.0, 1.0 - x.squaredNorm()); },
                             [](const Eigen::Vector3d&) { return 0.0; });
  double expect = 0;
  for (int i = 0; i < g.n(); ++i)
    for (int j = 0; j < g.n(); ++j)
      for (int k = 0; k < g.n(); ++k) {
        const Eigen::Vector3d x = g.position(i, j, k);
        if (x.norm() > sl.mask_radius) continue;
        expect = std::max(expect, std::pow(s * s + x.squaredNorm(), 0.75) * std::abs(sl.w[0](g.index(i, j, k))));
      }
  const auto m = decay_monitors(sl);
  CHECK(m.value[0] == Catch::Approx(expect).epsilon(1e-14));
  CHECK(m.radial[0] == Catch::Approx(expect / s).epsilon(1e-14));
}

TEST_CASE("energy_identity_residual on synthetic series", "[diagnostics]") {
  // E(s) = 2 + sin s, flux = cos(s)/2: exact identity
  std::vector<double> res;
  for (int n : {20, 40, 80}) {
    std::vector<double> s, E, F;
    for (int q = 0; q <= n; ++q) {
      const double x = 2.0 + 2.0 * q / n;
      s.push_back(x);
      E.push_back(2.0 + std::sin(x));
      F.push_back(0.5 * std::cos(x));
    }
    res.push_back(energy_identity_residual(s, E, F));
  }
  CHECK(res[2] < 1e-4);
  CHECK(std::log2(res[1] / res[2]) == Catch::Approx(2.0).margin(0.1));
  CHECK(energy_identity_residual({2, 3}, {0, 0}, {0, 0}, 2.0) == 0.0);
  CHECK_THROWS_AS(energy_identity_residual({2, 3}, {1, 1}, {0, 0}, 0.5), std::invalid_argument);
}

TEST_CASE("Z^I energies agree with dual-number vector fields", "[diagnostics][oracle]") {
  Manufactured m;
  m.amp = {0.4};
  m.omega = {1.3};
  m.a = 1.45;
  const SystemSpec spec = preset_system("linear-kg");
  const Model model(spec, 4, m.forcing_for(spec));
  const double s = 2.0;
  const std::vector<MultiIndex> I = {MultiIndex::identity(), parse_multi_index("d0"), parse_multi_index("d2"),
                                     parse_multi_index("L1"), parse_multi_index("L3.d1")};
  const MmsFn u{&m};
  using Z1 = ApplyZ<MmsFn>;
  const std::vector<std::function<double(const Lattice&)>> oracle = {
      [&](const Lattice& g) { return exact_energy(u, g, s, 1.0); },
      [&](const Lattice& g) { return exact_energy(Z1{AdmissibleField::translation(0), u}, g, s, 1.0); },
      [&](const Lattice& g) { return exact_energy(Z1{AdmissibleField::translation(2), u}, g, s, 1.0); },
      [&](const Lattice& g) { return exact_energy(Z1{AdmissibleField::boost(1), u}, g, s, 1.0); },
      [&](const Lattice& g) {
        return exact_energy(ApplyZ<Z1>{AdmissibleField::boost(3), Z1{AdmissibleField::translation(1), u}}, g, s, 1.0);
      },
  };
  std::vector<std::vector<double>> rel;
  for (int cells : {32, 64}) {
    const Lattice g(cells, 2.5);
    const auto sl = mms_slice(m, g, s);
    const auto E = multi_index_energies(model, sl, 0, 1.0, I);
    CHECK(E[0] == Catch::Approx(energy_hyperboloidal(sl, 0, 1.0)).epsilon(1e-12));
    std::vector<double> r;
    for (std::size_t q = 0; q < I.size(); ++q) r.push_back(std::abs(E[q] / oracle[q](g) - 1.0));
    rel.push_back(r);
  }
  for (std::size_t q = 0; q < I.size(); ++q) {
    INFO(I[q].name() << ": " << rel[0][q] << " -> " << rel[1][q]);
    CHECK(rel[1][q] < 5e-3);
    CHECK(rel[1][q] < rel[0][q]);
  }
  CHECK_THROWS_AS(multi_index_energies(model, mms_slice(m, Lattice(16, 2.5), s), 0, 1.0,
                                       {parse_multi_index("L1.L2.L3.d0")}),
                  std::invalid_argument);
}

TEST_CASE("free wave: energy drift, identity and flat energy", "[diagnostics][simulation]") {
  std::vector<double> drift;
  for (int cells : {32, 48}) {
    SolverConfig cfg = bump_config("free-wave", cells, 5.0);
    cfg.data[0].radius = 1.4;
    cfg.data[0].power = 6;
    DiagnosticsConfig d;
    d.cadence = 5;
    const auto rec = evolve_with_diagnostics(cfg, d);
    REQUIRE(rec.status.status == RunStatus::Completed);
    drift.push_back(rec.energy_drift());
    // no source: the identity residual is half the relative drift
    CHECK(rec.reports.back().flux_integral == 0.0);
    const auto& last = rec.reports.back();
    CHECK(last.identity_residual == Catch::Approx(0.5 * std::abs(last.energy[0] / rec.reports[0].energy[0] - 1)));
    for (std::size_t q = 1; q < rec.reports.size(); ++q) CHECK(rec.reports[q].s > rec.reports[q - 1].s);
  }
  INFO("drift " << drift[0] << " " << drift[1]);
  CHECK(drift[1] < 1e-2);
  CHECK(drift[0] / drift[1] > 3.0);

  SolverConfig cfg = bump_config("free-wave", 48, 8.0);
  cfg.data[0].radius = 1.4;
  cfg.data[0].power = 6;
  SliceHistory hist;
  DiagnosticsConfig d;
  d.curved = false;
  d.on_report = [&](const GridSlice& sl) { hist.push(sl); };
  const auto rec = evolve_with_diagnostics(cfg, d);
  std::vector<double> flat;
  for (double t0 : {4.0, 5.0, 6.0}) flat.push_back(hist.flat_energy(t0, 0, 0.0, 48));
  INFO("flat energies " << flat[0] << " " << flat[1] << " " << flat[2] << " vs " << rec.reports.front().energy[0]);
  for (double e : flat) CHECK(e == Catch::Approx(flat[0]).epsilon(1e-2));
  // both are fluxes of the same conserved current
  CHECK(flat[0] == Catch::Approx(rec.reports.front().energy[0]).epsilon(2e-2));
  CHECK_THROWS_AS(hist.flat_energy(9.0, 0, 0.0), std::out_of_range);
  CHECK_THROWS_AS(hist.flat_energy(2.2, 0, 0.0), std::out_of_range);

  SliceHistory zero;
  SolverConfig z = bump_config("free-wave", 24, 6.0);
  z.data.clear();
  d.on_report = [&](const GridSlice& sl) { zero.push(sl); };
  const auto rz = evolve_with_diagnostics(z, d);
  for (const auto& r : rz.reports) CHECK(r.energy[0] == 0.0);
  CHECK(zero.flat_energy(4.0, 0, 0.0, 16) == 0.0);
}

TEST_CASE("forced Klein-Gordon: energy identity converges", "[diagnostics][simulation]") {
  Manufactured m;
  m.amp = {0.4};
  m.omega = {1.3};
  m.a = 1.45;
  std::vector<double> res;
  for (int cells : {24, 48}) {
    SolverConfig cfg;
    cfg.spec = preset_system("linear-kg");
    cfg.cells = cells;
    cfg.s_end = 3.0;
    cfg.initial = m.initial_data();
    cfg.forcing = m.forcing_for(cfg.spec);
    DiagnosticsConfig d;
    d.curved = false;
    const auto rec = evolve_with_diagnostics(cfg, d);
    REQUIRE(rec.status.status == RunStatus::Completed);
    res.push_back(rec.reports.back().identity_residual);
    CHECK(std::abs(rec.reports.back().flux_integral) > 1e-3);
  }
  INFO("residuals " << res[0] << " " << res[1]);
  CHECK(res[1] < 5e-3);
  CHECK(res[0] / res[1] >= 4.0);
}

TEST_CASE("energy band verdicts") {
  const auto flat = energy_band({1.0, 1.1, 0.9, 1.0});
  CHECK(flat.bounded);
  CHECK_FALSE(flat.monotone);
  CHECK(flat.max_ratio == Catch::Approx(std::sqrt(1.1)));
  const auto grow = energy_band({1.0, 2.0, 4.0, 9.0});
  CHECK(grow.exits_upward);
  CHECK(grow.monotone);
  CHECK_FALSE(grow.bounded);
  CHECK(grow.max_ratio == Catch::Approx(3.0));
  CHECK_FALSE(energy_band({1.0, 0.2}).bounded);  // sqrt(0.2) < 0.5
  CHECK_THROWS_AS(energy_band({}), std::invalid_argument);
  CHECK_THROWS_AS(energy_band({0.0, 1.0}), std::invalid_argument);
}
