#include "hyperlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace hyperlab {

namespace {

double cell_volume(const Lattice& g) { return g.h() * g.h() * g.h(); }

Field time_of(const Lattice& g, double s) {
  return sample(g, [&](const Eigen::Vector3d& x) { return std::sqrt(s * s + x.squaredNorm()); });
}

Field coordinate(const Lattice& g, int a) {
  return sample(g, [&](const Eigen::Vector3d& x) { return x(a); });
}

void require_cofield(const GridSlice& sl, int c) {
  if (c < 0 || c >= sl.components()) throw std::out_of_range("diagnostics: component out of range");
  if (int(sl.d_t.size()) <= c || sl.d_t[c].size() != sl.w[c].size())
    throw std::invalid_argument("diagnostics: time-derivative co-field missing");
}

// natural gradient (u_t, u_1, u_2, u_3) from slice values and the d_t co-field:
// u_a = D_a w - (x^a/t) u_t
std::array<Field, 4> natural_gradient(const GridSlice& sl, int c, const Field& t, int order) {
  std::array<Field, 4> du;
  du[0] = sl.d_t[c];
  for (int a = 0; a < 3; ++a) du[a + 1] = diff(sl.lattice, sl.w[c], a, order) - coordinate(sl.lattice, a) / t * du[0];
  return du;
}

}  // namespace

EnergyForms energy_forms(const GridSlice& sl, int c, double mass, int order) {
  require_cofield(sl, c);
  const Lattice& g = sl.lattice;
  const double s = sl.s;
  const Field t = time_of(g, s);
  const auto du = natural_gradient(sl, c, t, order);
  const Field m2u2 = mass * mass * sl.w[c].square();
  const Field x[3] = {coordinate(g, 0), coordinate(g, 1), coordinate(g, 2)};

  Field natural = du[0].square() + m2u2;
  Field frame = (s / t * du[0]).square() + m2u2;
  Field rotation = m2u2;
  Field Su = t * du[0];
  for (int a = 0; a < 3; ++a) {
    natural += du[a + 1].square() + 2.0 * x[a] / t * du[0] * du[a + 1];
    frame += (x[a] / t * du[0] + du[a + 1]).square();
    rotation += (s / t * du[a + 1]).square();
    Su += x[a] * du[a + 1];
  }
  rotation += (Su / t).square();
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) rotation += ((x[a] * du[b + 1] - x[b] * du[a + 1]) / t).square();

  EnergyForms out;
  const double dv = cell_volume(g);
  out.natural = dv * deterministic_sum(g, natural);
  out.frame = dv * deterministic_sum(g, frame);
  out.rotation = dv * deterministic_sum(g, rotation);
  const double scale = std::max({natural.abs().maxCoeff(), frame.abs().maxCoeff(), 1e-300});
  out.max_pointwise_gap = (natural - frame).abs().maxCoeff() / scale;
  return out;
}

double energy_hyperboloidal(const GridSlice& sl, int c, double mass, int order) {
  const auto f = energy_forms(sl, c, mass, order);
  if (f.max_pointwise_gap > 1e-12) throw std::logic_error("energy_hyperboloidal: integrand forms disagree");
  return f.frame;
}

double energy_of_jet(const SliceJet& u, double mass) {
  if (u.length() < 2) throw std::invalid_argument("energy_of_jet: time-derivative co-field missing");
  if (u.geometry.kind != SliceGeometry::Kind::Hyperboloid) throw std::invalid_argument("energy_of_jet: needs H_s");
  const Lattice& g = u.lattice;
  const double s = u.geometry.level;
  const Field t = u.time_field();
  Field e = (s / t * u.dt[1]).square() + mass * mass * u.dt[0].square();
  // dbar_a u is the derivative along the slice
  for (int a = 0; a < 3; ++a) e += diff(g, u.dt[0], a, u.order).square();
  return cell_volume(g) * deterministic_sum(g, e);
}

CurvedEnergy energy_curved(const GridSlice& sl, const SystemSpec& spec, int order) {
  const int nc = spec.n0;
  if (sl.components() != nc) throw std::invalid_argument("energy_curved: component count");
  CurvedEnergy out;
  for (int c = 0; c < nc; ++c) out.minkowski += energy_hyperboloidal(sl, c, spec.mass[c], order);
  if (!spec.quasilinear()) {
    out.curved = out.minkowski;
    return out;
  }
  const Lattice& g = sl.lattice;
  const Field t = time_of(g, sl.s);
  std::vector<std::array<Field, 4>> du(nc);
  for (int c = 0; c < nc; ++c) du[c] = natural_gradient(sl, c, t, order);
  const Field n[4] = {Field::Ones(g.size()), -coordinate(g, 0) / t, -coordinate(g, 1) / t, -coordinate(g, 2) / t};

  // G_i^{j ab} as fields, accumulated sparsely
  std::map<std::array<int, 4>, Field> G;
  auto add = [&](std::array<int, 4> key, const Field& f) {
    auto it = G.find(key);
    if (it == G.end()) G.emplace(key, f);
    else it->second += f;
  };
  for (const auto& e : spec.A) add({e.idx[0], e.idx[1], e.idx[2], e.idx[3]}, e.value * du[e.idx[5]][e.idx[4]]);
  for (const auto& e : spec.B) add({e.idx[0], e.idx[1], e.idx[2], e.idx[3]}, e.value * sl.w[e.idx[4]]);

  Field dens = Field::Zero(g.size());
  for (const auto& [key, Gf] : G) {
    const int i = key[0], j = key[1], al = key[2], be = key[3];
    dens += 2.0 * n[al] * du[i][0] * du[j][be] * Gf - Gf * du[i][al] * du[j][be];
  }
  out.curved = out.minkowski + cell_volume(g) * deterministic_sum(g, dens);
  out.coercive = std::abs(out.curved - out.minkowski) <= 0.5 * out.minkowski;
  return out;
}

double lp_norm_on_slice(const Lattice& g, const Field& u, double p) {
  if (std::isinf(p)) return u.size() ? u.abs().maxCoeff() : 0.0;
  if (p == 1.0) return cell_volume(g) * deterministic_sum(g, u.abs());
  if (p == 2.0) return std::sqrt(cell_volume(g) * deterministic_sum(g, u.square()));
  throw std::invalid_argument("lp_norm_on_slice: p must be 1, 2 or infinity");
}

double lp_norm_on_slice(const Lattice& g, double s, const std::function<double(double, const Eigen::Vector3d&)>& u,
                        double p) {
  const Field f = sample(g, [&](const Eigen::Vector3d& x) { return u(std::sqrt(s * s + x.squaredNorm()), x); });
  return lp_norm_on_slice(g, f, p);
}

DecayMonitors decay_monitors(const GridSlice& sl, int order) {
  const int nc = sl.components();
  const Lattice& g = sl.lattice;
  const double s = sl.s, m2 = sl.mask_radius * sl.mask_radius;
  const Field t = time_of(g, s);
  DecayMonitors out;
  out.value.assign(nc, 0.0);
  out.gradient.assign(nc, 0.0);
  out.frame.assign(nc, 0.0);
  out.radial.assign(nc, 0.0);
  const int n = g.n();
  for (int c = 0; c < nc; ++c) {
    require_cofield(sl, c);
    const auto du = natural_gradient(sl, c, t, order);
    std::array<Field, 3> db;
    for (int a = 0; a < 3; ++a) db[a] = diff(g, sl.w[c], a, order);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const Eigen::Vector3d x = g.position(i, j, k);
          if (x.squaredNorm() > m2) continue;
          const Eigen::Index p = g.index(i, j, k);
          const double tt = t(p), t32 = tt * std::sqrt(tt), w = std::abs(sl.w[c](p));
          out.value[c] = std::max(out.value[c], t32 * w);
          out.radial[c] = std::max(out.radial[c], t32 * w / s);
          double gmax = 0.0, fmax = 0.0;
          for (int a = 0; a < 4; ++a) gmax = std::max(gmax, std::abs(du[a](p)));
          for (int a = 0; a < 3; ++a) fmax = std::max(fmax, std::abs(db[a](p)));
          out.gradient[c] = std::max(out.gradient[c], std::sqrt(tt) * s * gmax);
          out.frame[c] = std::max(out.frame[c], t32 * fmax);
        }
  }
  return out;
}

DecayFit decay_monitor(const std::vector<double>& s, const std::vector<double>& v, double factor) {
  if (s.size() != v.size()) throw std::invalid_argument("decay_monitor: size mismatch");
  if (s.size() < 5) throw std::invalid_argument("decay_monitor: need at least five samples");
  DecayFit f;
  f.samples = int(s.size());
  double lo = v[0], hi = v[0];
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t q = 0; q < s.size(); ++q) {
    if (!(v[q] > 0) || !(s[q] > 0)) throw std::invalid_argument("decay_monitor: values must be positive");
    lo = std::min(lo, v[q]);
    hi = std::max(hi, v[q]);
    const double X = std::log(s[q]), Y = std::log(v[q]);
    sx += X, sy += Y, sxx += X * X, sxy += X * Y;
  }
  const double N = double(s.size()), den = N * sxx - sx * sx;
  f.slope = den > 0 ? (N * sxy - sx * sy) / den : 0.0;
  f.ratio = hi / lo;
  f.bounded = f.ratio < factor;
  return f;
}

double source_flux(const GridSlice& sl, const std::vector<Field>& source) {
  const Lattice& g = sl.lattice;
  Field f = Field::Zero(g.size());
  for (int c = 0; c < sl.components(); ++c) f += sl.d_s[c] * source[c];
  return cell_volume(g) * deterministic_sum(g, f);
}

EnergyBand energy_band(const std::vector<double>& energy, double lo, double hi) {
  if (energy.empty()) throw std::invalid_argument("energy_band: empty series");
  EnergyBand b;
  if (!(energy.front() > 0.0)) throw std::invalid_argument("energy_band: initial energy must be positive");
  b.monotone = true;
  double prev = 1.0;
  for (double e : energy) {
    const double r = std::sqrt(std::max(e, 0.0) / energy.front());
    b.min_ratio = std::min(b.min_ratio, r);
    b.max_ratio = std::max(b.max_ratio, r);
    if (r < prev * (1.0 - 1e-9)) b.monotone = false;
    prev = r;
  }
  b.bounded = b.min_ratio >= lo && b.max_ratio <= hi;
  b.exits_upward = b.max_ratio > hi;
  return b;
}

double energy_identity_residual(const std::vector<double>& s, const std::vector<double>& E,
                                const std::vector<double>& flux, double max_gap) {
  if (s.size() != E.size() || s.size() != flux.size() || s.size() < 2)
    throw std::invalid_argument("energy_identity_residual: need matching series with at least two samples");
  double integral = 0.0;
  for (std::size_t q = 1; q < s.size(); ++q) {
    const double d = s[q] - s[q - 1];
    if (d > max_gap) throw std::invalid_argument("energy_identity_residual: cadence too coarse");
    integral += 0.5 * d * (flux[q] + flux[q - 1]);
  }
  const double lhs = 0.5 * (E.back() - E.front());
  if (E.front() == 0.0) return std::abs(lhs - integral);
  return std::abs(lhs - integral) / E.front();
}

std::vector<double> multi_index_energies(const Model& model, const GridSlice& sl, int c, double mass,
                                         const std::vector<MultiIndex>& indices) {
  int top = 0;
  for (const auto& I : indices) top = std::max(top, I.order());
  if (top + 1 > 4) throw std::invalid_argument("multi_index_energies: |I| <= 3");
  const auto jets = model.s_jets(sl, top + 1);
  const SliceJet base = to_time_jet(jets.at(c));
  std::map<std::string, SliceJet> cache;
  std::function<const SliceJet&(const MultiIndex&)> get = [&](const MultiIndex& I) -> const SliceJet& {
    const std::string key = I.name();
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    if (I.order() == 0) return cache.emplace(key, base).first->second;
    MultiIndex rest;
    rest.fields.assign(I.fields.begin() + 1, I.fields.end());
    SliceJet out = apply_field(I.fields.front(), get(rest));
    return cache.emplace(key, std::move(out)).first->second;
  };
  std::vector<double> out;
  out.reserve(indices.size());
  for (const auto& I : indices) out.push_back(I.null_operator ? 0.0 : energy_of_jet(get(I), mass));
  return out;
}

// ---------------------------------------------------------------------------

void SliceHistory::push(const GridSlice& sl) {
  if (!entries_.empty() && !(sl.s > entries_.back().s)) throw std::invalid_argument("SliceHistory: s must increase");
  Entry e{sl.s, sl.lattice, {}};
  const Field t = time_of(sl.lattice, sl.s);
  for (int c = 0; c < sl.components(); ++c) {
    require_cofield(sl, c);
    const auto du = natural_gradient(sl, c, t, order_);
    e.fields.push_back({sl.w[c], du[0], du[1], du[2], du[3]});
  }
  entries_.push_back(std::move(e));
}

void SliceHistory::trim_below(double s) {
  // keep one slice below s for interpolation stencils
  while (entries_.size() > 4 && entries_[1].s < s) entries_.pop_front();
}

double SliceHistory::flat_energy(double t0, int c, double mass, int cells) const {
  if (entries_.size() < 4) throw std::out_of_range("flat_energy: need at least four stored slices");
  const double rK = t0 - 1.0;
  if (!(rK > 0)) return 0.0;
  const double s_lo = std::sqrt(t0 * t0 - rK * rK), s_hi = t0;
  if (s_lo < s_min() || s_hi > s_max()) throw std::out_of_range("flat_energy: t0 outside the stored slice range");
  const Lattice flat(cells, rK);
  const int n = flat.n();
  const int m = int(entries_.size());
  Field dens = Field::Zero(flat.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Vector3d x = flat.position(i, j, k);
        const double r = x.norm();
        if (r >= rK) continue;
        const double s = std::sqrt(t0 * t0 - r * r);
        // four slices around s, cubic Lagrange in s
        int hi = int(std::lower_bound(entries_.begin(), entries_.end(), s,
                                      [](const Entry& e, double v) { return e.s < v; }) -
                     entries_.begin());
        int first = std::clamp(hi - 2, 0, m - 4);
        double val[5] = {0, 0, 0, 0, 0};
        for (int q = 0; q < 4; ++q) {
          const Entry& e = entries_[first + q];
          double L = 1.0;
          for (int p = 0; p < 4; ++p)
            if (p != q) L *= (s - entries_[first + p].s) / (e.s - entries_[first + p].s);
          for (int f = 0; f < 5; ++f) val[f] += L * interpolate_cubic(e.lattice, e.fields[c][f], x);
        }
        dens(flat.index(i, j, k)) = val[1] * val[1] + val[2] * val[2] + val[3] * val[3] + val[4] * val[4] +
                                    mass * mass * val[0] * val[0];
      }
  return cell_volume(flat) * deterministic_sum(flat, dens);
}

// ---------------------------------------------------------------------------

double RunRecord::energy_drift() const {
  if (reports.empty()) return 0.0;
  double E0 = 0;
  for (double e : reports.front().energy) E0 += e;
  double worst = 0;
  for (const auto& r : reports) {
    double E = 0;
    for (double e : r.energy) E += e;
    worst = std::max(worst, E0 > 0 ? std::abs(E / E0 - 1.0) : std::abs(E));
  }
  return worst;
}

std::vector<double> RunRecord::series(const std::function<double(const EnergyReport&)>& pick) const {
  std::vector<double> out;
  out.reserve(reports.size());
  for (const auto& r : reports) out.push_back(pick(r));
  return out;
}

RunRecord evolve_with_diagnostics(const SolverConfig& cfg, const DiagnosticsConfig& dcfg) {
  const SystemSpec& spec = cfg.spec;
  const Model model(spec, cfg.order, cfg.forcing);
  RunRecord rec;
  rec.components = spec.components;
  for (const auto& I : dcfg.multi) rec.multi_names.push_back(I.name());
  const int cadence = std::max(1, dcfg.cadence);

  double prev_s = 0, prev_flux = 0, flux_int = 0, E0 = 0;
  bool have_prev = false;
  auto observer = [&](const StepView& v) {
    const GridSlice& sl = v.slice;
    const double flux = source_flux(sl, v.source);
    if (have_prev) flux_int += 0.5 * (sl.s - prev_s) * (flux + prev_flux);
    prev_s = sl.s, prev_flux = flux, have_prev = true;
    if (v.step % cadence != 0 && !v.final) return;

    EnergyReport r;
    r.s = sl.s;
    r.step = v.step;
    double E = 0;
    for (int c = 0; c < spec.n0; ++c) {
      r.energy.push_back(energy_hyperboloidal(sl, c, spec.mass[c], cfg.order));
      E += r.energy.back();
    }
    if (v.step == 0) E0 = E;
    if (!dcfg.multi.empty())
      for (int c = 0; c < spec.n0; ++c)
        r.zi_energy.push_back(multi_index_energies(model, sl, c, spec.mass[c], dcfg.multi));
    if (dcfg.curved) {
      const auto ce = energy_curved(sl, spec, cfg.order);
      r.curved = ce.curved;
      r.coercive = ce.coercive;
    } else {
      r.curved = E;
    }
    r.monitors = decay_monitors(sl, cfg.order);
    r.flux_integral = flux_int;
    const double gap = std::abs(0.5 * (E - E0) - flux_int);
    r.identity_residual = E0 > 0 ? gap / E0 : gap;
    rec.reports.push_back(std::move(r));
    if (dcfg.on_report) dcfg.on_report(sl);
  };
  rec.status = evolve(cfg, observer);
  return rec;
}

}  // namespace hyperlab
