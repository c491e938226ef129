#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hyperlab/fields.hpp"
#include "hyperlab/lattice.hpp"
#include "hyperlab/system.hpp"

namespace hyperlab {

// Sampled state on H_s.  w, d_s (= dbar_0 in the (s, xbar) chart) and d_t = (t/s) d_s.
struct GridSlice {
  double s = 2.0;
  Lattice lattice;
  double mask_radius = 0.0;
  std::vector<std::string> names;
  std::vector<Field> w, d_s, d_t;

  int components() const { return int(w.size()); }
  void refresh_time_cofield();
  // largest |x| with a nonzero value in any component
  double numerical_support() const;
};

// s-jet at fixed xbar: ds[k] = d_s^k w.
struct HyperbolicJet {
  Lattice lattice;
  double s = 2.0;
  std::vector<Field> ds;
  int order = 4;
  int margin = 0;
  bool zero_extended = true;
};

// d_s^k at fixed x  ->  d_t^k on H_s, via s(t) = sqrt(t^2 - r^2).
SliceJet to_time_jet(const HyperbolicJet& u);

// box u = u_ss + (2 x^a / s) D_a u_s - D_a D_a u + (3/s) u_s in the (s, xbar) chart.
double box_in_frame(const HyperbolicJet& u, int i, int j, int k);
Field box_in_frame(const HyperbolicJet& u);

// box u = (s/t)^2 u_tt + 2 (x^a/t) D_a u_t - D_a D_a u + (3/t - r^2/t^3) u_t from t-jets on H_s.
double semi_hyperboloidal_box(const SliceJet& u, int i, int j, int k);
Field semi_hyperboloidal_box(const SliceJet& u);

using Forcing = std::function<double(int component, double t, const Eigen::Vector3d& x)>;

class QuasilinearBreakdown : public std::runtime_error {
 public:
  QuasilinearBreakdown(const std::string& what, double norm, Eigen::Vector3d where)
      : std::runtime_error(what), norm(norm), where(where) {}
  double norm;
  Eigen::Vector3d where;
};

class InstabilityDetected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Right-hand side of the first-order reduction in s.
class Model {
 public:
  Model(SystemSpec spec, int order, Forcing forcing = {});

  const SystemSpec& spec() const { return spec_; }
  int order() const { return order_; }
  bool forced() const { return bool(forcing_); }
  void set_smallness_limit(double v) { smallness_ = v; }

  // Grid-frame time derivative of (w, V = d_s w) for nodes moving with xbar = lambda(s) y,
  // kappa = lambda'/lambda.  With kappa = 0, out_V is the physical d_s^2 w.
  // `source`, when given, receives the right-hand side of box w_i + c_i^2 w_i = source_i.
  void evaluate(double s, const Lattice& g, double mask_radius, double kappa, const std::vector<Field>& w,
                const std::vector<Field>& V, std::vector<Field>& out_w, std::vector<Field>& out_V,
                std::vector<Field>* source = nullptr) const;

  // d_s^2 w only
  std::vector<Field> acceleration(double s, const Lattice& g, double mask_radius, const std::vector<Field>& w,
                                  const std::vector<Field>& V, std::vector<Field>* source = nullptr) const;

  // s-jets of every component up to d_s^max_order (max_order <= 4); higher derivatives come from
  // differentiating the right-hand side along the Taylor curve.
  std::vector<HyperbolicJet> s_jets(const GridSlice& slice, int max_order) const;

 private:
  SystemSpec spec_;
  int order_;
  Forcing forcing_;
  double smallness_ = 0.5;
  std::vector<double> A_, B_, P_, Q_, R_;
};

struct InitialProfile {
  enum class Kind { Bump, Gaussian };
  Kind kind = Kind::Bump;
  int component = 0;
  bool derivative = false;  // false: w, true: d_s w
  double amplitude = 1.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.4;  // support radius
  int power = 6;        // bump: (1 - q^2/R^2)^power
  double width = 0.4;   // gaussian: exp(-q^2/width^2) times a smooth cutoff at radius
  double evaluate(const Eigen::Vector3d& x) const;
  double support() const { return center.norm() + radius; }
};

// optional analytic data: fills w and d_s w for every component at (s, x)
using InitialData = std::function<void(double s, const Eigen::Vector3d& x, double* w, double* ws)>;

struct SolverConfig {
  SystemSpec spec;
  double s0 = 2.0;
  double s_end = 15.0;
  int cells = 96;
  int order = 4;
  double cfl = 0.4;
  double ds = 0.0;  // > 0: fixed step instead of CFL
  enum class Grid { Comoving, Fixed };
  Grid grid = Grid::Comoving;
  double pad = 0.25;     // extra radius beyond the support radius
  int band = 6;          // zero cells between support radius + pad and the lattice edge
  double growth_limit = 1e6;
  std::vector<InitialProfile> data;
  InitialData initial;
  Forcing forcing;
};

// lattice for H_s: comoving with the support radius, or frozen at s_end
Lattice slice_lattice(const SolverConfig& cfg, double s);
double mask_radius(const SolverConfig& cfg, double s, const Lattice& g);
double grid_rate(const SolverConfig& cfg, double s);  // lambda'/lambda
double max_grid_speed(const SolverConfig& cfg, double s, const Lattice& g);
double cfl_step(const SolverConfig& cfg, double s);
// cfl * h * min(s/t) over the masked ball; cfl_step never exceeds it
double nominal_cfl_step(const SolverConfig& cfg, double s);

GridSlice initial_slice(const SolverConfig& cfg);

// zeroes everything outside the mask radius
void apply_mask(GridSlice& slice);

class Stepper {
 public:
  explicit Stepper(const SolverConfig& cfg);
  const Model& model() const { return model_; }
  const SolverConfig& config() const { return cfg_; }

  // rhs of the grid-frame system at slice.s; sources optional
  void rhs(const GridSlice& slice, std::vector<Field>& dw, std::vector<Field>& dV,
           std::vector<Field>* source = nullptr) const;
  // one RK4 step; k1 may be supplied (already evaluated at slice)
  GridSlice step(const GridSlice& slice, double ds) const;
  GridSlice step(const GridSlice& slice, double ds, const std::vector<Field>& k1w, const std::vector<Field>& k1V) const;

 private:
  SolverConfig cfg_;
  Model model_;
};

enum class RunStatus { Completed, QuasilinearBreakdown, InstabilityDetected };
std::string to_string(RunStatus s);

struct StepView {
  const GridSlice& slice;
  const std::vector<Field>& source;  // box w + c^2 w at this slice
  int step = 0;
  bool final = false;
};

struct EvolutionStatus {
  RunStatus status = RunStatus::Completed;
  double s_reached = 0.0;
  int steps = 0;
  std::string message;
};

using StepObserver = std::function<void(const StepView&)>;

// Integrate from s0 to s_end; the observer sees every accepted state (including the first and last).
EvolutionStatus evolve(const SolverConfig& cfg, const StepObserver& observer = {},
                       GridSlice* final_slice = nullptr);

}  // namespace hyperlab
