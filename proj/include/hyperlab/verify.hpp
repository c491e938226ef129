#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperlab/diagnostics.hpp"
#include "hyperlab/dual.hpp"
#include "hyperlab/fields.hpp"
#include "hyperlab/solver.hpp"

namespace hyperlab {

// A cos(omega t + k.x + phase) (1 - |x - c|^2 / R^2)^p, compactly supported in |x - c| < R.
struct TestFunction {
  double amplitude = 1.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
  int power = 8;
  double omega = 0.0;
  Eigen::Vector3d wave = Eigen::Vector3d::Zero();
  double phase = 0.0;

  double support() const { return center.norm() + radius; }

  template <typename T>
  T operator()(const T& t, const T& x, const T& y, const T& z) const {
    using std::cos;
    const T dx = x - center(0), dy = y - center(1), dz = z - center(2);
    const T q = T(1.0) - (dx * dx + dy * dy + dz * dz) / (radius * radius);
    if (!(q > T(0.0))) return T(0.0);
    T qp = T(1.0);
    for (int i = 0; i < power; ++i) qp = qp * q;
    return amplitude * cos(omega * t + wave(0) * x + wave(1) * y + wave(2) * z + phase) * qp;
  }
};

struct TestFunctionFamily {
  std::string generator = "bump";  // "bump" (modulated) or "radial"
  int members = 50;
  std::uint64_t seed = 1;
  double max_support = 1.4;  // all members satisfy center + radius <= max_support
  std::vector<TestFunction> generate() const;
};

// d_t^k f on H_s (or a flat slice), k < length; zero-extended when f fits inside the lattice
SliceJet sample_time_jet(const TestFunction& f, const Lattice& g, const SliceGeometry& geo, int length, int order = 4);
// w and d_s w = (s/t) d_t w on H_s
GridSlice sample_slice(const TestFunction& f, const Lattice& g, double s);

struct InequalityRatio {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs, 0 when rhs = 0
};

// sup t^{3/2} |u|  vs  sum_{|I| <= 2} ||L^I u||_{L^2(H_s)}, boosts only
InequalityRatio sobolev_ratio(const SliceJet& u);
// ||r^{-1} u||  vs  sum_a ||dbar_a u||; the node at r = 0 takes the cell average of r^{-2}
InequalityRatio hardy_flat_ratio(const Lattice& g, const Field& u, int order = 4);
double origin_cell_weight(double h);  // average of r^{-2} over [-h/2, h/2]^3

// ||s^{-1} u||(s) vs ||s0^{-1} u||(s0) + sum_a ||dbar_a u||(s) + int tau^{-1} (sum_a ||(tau/t) d_a u|| + ||dbar_a u||)
class HyperboloidalHardy {
 public:
  explicit HyperboloidalHardy(int component = 0, int order = 4) : component_(component), order_(order) {}
  void add(const GridSlice& slice);
  // worst ratio over the stored slices, C = 1
  InequalityRatio result() const;
  int slices() const { return int(s_.size()); }

 private:
  int component_, order_;
  std::vector<double> s_, integrand_, lhs_, frame_;
  double first_ = 0.0;
};

// empirical constant (max ratio over a family) at two resolutions
struct ConstantReport {
  std::string name;
  double coarse = 0.0, fine = 0.0;
  double change = 0.0;  // |fine / coarse - 1|
  double median = 0.0;  // family median at the fine level
  double worst_over_median = 0.0;
  bool finite = true;
  bool stable() const { return finite && change < 0.1; }
};

ConstantReport sobolev_family(const TestFunctionFamily& fam, double s, int cells);
ConstantReport hardy_flat_family(const TestFunctionFamily& fam, double s, int cells);
ConstantReport hardy_hyperboloidal_family(const TestFunctionFamily& fam, double s0, double s1, int nslices, int cells);

// ---- frames and operators ----

// error per resolution; slope from the finest pair, pass at slope >= order - 0.5
struct ConvergenceCheck {
  std::string name;
  std::vector<int> cells;
  std::vector<double> errors;
  double slope = 0.0;
  bool pass = false;
};


struct FrameIdentityReport {
  int points = 0;
  double phi_psi = 0.0;  // max |Phi Psi - I|
  double metric = 0.0;   // max |m_up m_down - I|
  double seconds = 0.0;
};

// random points of K with t in [1.5, 200]
FrameIdentityReport frame_identity_check(int points = 10000, std::uint64_t seed = 1);

// box f = f_tt - Laplacian f at (t, x), exact up to rounding
double box_exact(const TestFunction& f, double t, const Eigen::Vector3d& x);

struct OperatorStudy {
  std::string function;
  ConvergenceCheck frame;  // box in the (s, xbar) chart from d_s-jets
  ConvergenceCheck semi;   // semi-hyperboloidal decomposition from d_t-jets
};

// max error against box_exact over H_s at each resolution; the same half width throughout
OperatorStudy operator_convergence(const TestFunction& f, double s, const std::vector<int>& cells, int order = 4,
                                   double half_width = 2.0);
// the three functions used by the operator study
std::vector<std::pair<std::string, TestFunction>> operator_test_functions();

// ---- homogeneity ----

// coefficient names: x1/t x2/t x3/t s/t t/(t+r) psi10 psi20 psi30
const std::vector<std::string>& homogeneous_coefficients();

// (t, x) samples in K with s/t >= floor, t log-uniform in [t_min, t_max]
std::vector<Eigen::Vector4d> cone_samples(int count, std::uint64_t seed, double floor = 0.05, double t_min = 1.5,
                                          double t_max = 200.0);

struct HomogeneityReport {
  std::string name;
  double constant = 0.0;         // sup |d^{I1} Z^{I2} f| t^{k - eta}, k = translations in I1 and I2 (k >= |I1|)
  double scaled_constant = 0.0;  // same on the rescaled sample (t, x) -> (lambda t, lambda x)
  double rel_change = 0.0;
  int samples = 0;
};

// partials: natural derivative indices (I1), applied after Z^{I2}; |I1| + |I2| <= 3
HomogeneityReport homogeneity_check(const std::string& coefficient, const std::vector<int>& partials,
                                    const MultiIndex& fields, const std::vector<Eigen::Vector4d>& samples,
                                    double lambda = 2.0);
// sup (t/s) |Z^I (s/t)| over the samples
double xi_bound(const MultiIndex& I, const std::vector<Eigen::Vector4d>& samples);

// ---- commutator tables ----

struct IdentityCheck {
  std::string name;
  long checked = 0;
  long failures = 0;
};

struct CommutatorReport {
  std::vector<IdentityCheck> exact;
  std::vector<ConvergenceCheck> discrete;
  bool pass() const;
};

CommutatorReport commutator_table_check(int points = 100, std::uint64_t seed = 1, int order = 4,
                                        const std::vector<int>& cells = {16, 32, 64});

}  // namespace hyperlab
