#pragma once

#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hyperlab/fields.hpp"
#include "hyperlab/solver.hpp"

namespace hyperlab {

// The three displayed integrands of E_{m,c}:
//   natural:  u_t^2 + |grad u|^2 + 2 (x^a/t) u_t u_a + c^2 u^2
//   frame:    sum_a (dbar_a u)^2 + ((s/t) u_t)^2 + c^2 u^2
//   rotation: sum_a ((s/t) u_a)^2 + t^-2 (S u)^2 + t^-2 sum_{a<b} (Omega_ab u)^2 + c^2 u^2
struct EnergyForms {
  double natural = 0.0;
  double frame = 0.0;
  double rotation = 0.0;
  double max_pointwise_gap = 0.0;  // max |natural - frame| density over nodes, relative to the largest density
};

EnergyForms energy_forms(const GridSlice& slice, int component, double mass, int order = 4);

// E_{m,c}(s, w_i); throws std::logic_error if the first two forms disagree beyond rounding
double energy_hyperboloidal(const GridSlice& slice, int component, double mass, int order = 4);

// same energy for a jet (dt[0] = u, dt[1] = u_t) on a hyperboloid
double energy_of_jet(const SliceJet& u, double mass);

struct CurvedEnergy {
  double curved = 0.0;     // sum_i E_{G,c_i}
  double minkowski = 0.0;  // sum_i E_{m,c_i}
  bool coercive = true;    // |E_G - E_m| <= 0.5 E_m
};

CurvedEnergy energy_curved(const GridSlice& slice, const SystemSpec& spec, int order = 4);

// p = 1, 2 or infinity
double lp_norm_on_slice(const Lattice& g, const Field& u, double p);
double lp_norm_on_slice(const Lattice& g, double s, const std::function<double(double t, const Eigen::Vector3d& x)>& u,
                        double p);

// Weighted sups over the masked ball, one entry per component.
struct DecayMonitors {
  std::vector<double> value;        // sup t^{3/2} |w|
  std::vector<double> gradient;     // sup t^{1/2} s |d_alpha w|
  std::vector<double> frame;        // sup t^{3/2} |dbar_a w|
  std::vector<double> radial;       // sup t^{3/2} s^{-1} |w|
};

DecayMonitors decay_monitors(const GridSlice& slice, int order = 4);

struct DecayFit {
  int samples = 0;
  double ratio = 1.0;  // max / min
  double slope = 0.0;  // d log(value) / d log(s)
  bool bounded = true;  // ratio < factor
};

// needs at least five samples with positive values
DecayFit decay_monitor(const std::vector<double>& s, const std::vector<double>& value, double factor = 2.0);

// sqrt(E(s) / E(s0)) against the band [lo, hi]
struct EnergyBand {
  double min_ratio = 1.0;
  double max_ratio = 1.0;
  bool bounded = true;       // every ratio inside [lo, hi]
  bool exits_upward = false; // some ratio above hi
  bool monotone = false;     // ratios nondecreasing (relative slack 1e-9) over the whole window
};

EnergyBand energy_band(const std::vector<double>& energy, double lo = 0.5, double hi = 2.0);

// |1/2 (E(s) - E(s0)) - int_{s0}^{s} flux ds| / E(s0), flux(s) = int sum_i d_s w_i * source_i dx.
// Trapezoid in s; throws when consecutive samples are further apart than max_gap.
double energy_identity_residual(const std::vector<double>& s, const std::vector<double>& energy,
                                const std::vector<double>& flux, double max_gap = 0.25);

double source_flux(const GridSlice& slice, const std::vector<Field>& source);

// E_{m,c}(s, Z^I w_c) for the requested multi-indices; shared suffixes are applied once.
std::vector<double> multi_index_energies(const Model& model, const GridSlice& slice, int component, double mass,
                                         const std::vector<MultiIndex>& indices);

// Slices kept for flat-slice reconstruction: natural gradients precomputed.
class SliceHistory {
 public:
  explicit SliceHistory(int order = 4) : order_(order) {}
  void push(const GridSlice& slice);
  // drop slices with s below the given value
  void trim_below(double s);
  bool empty() const { return entries_.empty(); }
  double s_min() const { return entries_.front().s; }
  double s_max() const { return entries_.back().s; }
  std::size_t size() const { return entries_.size(); }

  // int (u_t^2 + |grad u|^2 + c^2 u^2) dx over {t = t0} inside K, on a flat lattice with `cells` intervals.
  // Throws std::out_of_range when K cap {t = t0} is not covered by stored slices.
  double flat_energy(double t0, int component, double mass, int cells = 48) const;

 private:
  struct Entry {
    double s;
    Lattice lattice;
    std::vector<std::array<Field, 5>> fields;  // per component: w, u_t, u_1, u_2, u_3
  };
  int order_;
  std::deque<Entry> entries_;
};

// One row of the energy time series.
struct EnergyReport {
  double s = 0.0;
  int step = 0;
  std::vector<double> energy;                   // E_{m,c_i}(s, w_i)
  std::vector<std::vector<double>> zi_energy;   // [component][multi-index]
  double curved = 0.0;
  bool coercive = true;
  DecayMonitors monitors;
  double flux_integral = 0.0;      // int_{s0}^{s} flux
  double identity_residual = 0.0;  // relative, against E(s0)
};

struct DiagnosticsConfig {
  int cadence = 1;                    // full report every `cadence` steps (first and last always)
  std::vector<MultiIndex> multi;      // Z^I energies
  bool curved = true;
  std::function<void(const GridSlice&)> on_report;  // e.g. snapshots or flat-energy history
};

struct RunRecord {
  EvolutionStatus status;
  std::vector<EnergyReport> reports;
  std::vector<std::string> components;
  std::vector<std::string> multi_names;
  double energy_drift() const;  // max_s |sum E(s) / sum E(s0) - 1|
  std::vector<double> series(const std::function<double(const EnergyReport&)>& pick) const;
};

RunRecord evolve_with_diagnostics(const SolverConfig& cfg, const DiagnosticsConfig& dcfg);

}  // namespace hyperlab
