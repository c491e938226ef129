#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "hyperlab/geometry.hpp"
#include "hyperlab/lattice.hpp"

namespace hyperlab {

// Translations d_alpha (alpha = 0..3) and boosts L_a (a = 1..3).
struct AdmissibleField {
  enum class Kind { Translation, Boost };
  Kind kind = Kind::Translation;
  int index = 0;

  static AdmissibleField translation(int alpha);
  static AdmissibleField boost(int a);
  bool is_boost() const { return kind == Kind::Boost; }
  std::string name() const;  // "d0".."d3", "L1".."L3"
  bool operator==(const AdmissibleField&) const = default;
};

const std::array<AdmissibleField, 7>& admissible_fields();
AdmissibleField parse_field(const std::string& name);

// Z^I = Z_1 Z_2 ... Z_m; applied innermost (rightmost) first.
struct MultiIndex {
  std::vector<AdmissibleField> fields;
  bool null_operator = false;  // the "Z^I = 0 for |I| < 0" convention

  static MultiIndex identity() { return {}; }
  static MultiIndex null() { return {{}, true}; }
  int order() const { return int(fields.size()); }
  std::string name() const;  // "id", "L1.d0", ...
  bool operator==(const MultiIndex&) const = default;
};

std::vector<MultiIndex> multi_indices_up_to(int order);
MultiIndex parse_multi_index(const std::string& name);

struct SliceGeometry {
  enum class Kind { Flat, Hyperboloid };
  Kind kind = Kind::Hyperboloid;
  double level = 2.0;  // t0 for flat, s for hyperboloid

  static SliceGeometry flat(double t0) { return {Kind::Flat, t0}; }
  static SliceGeometry hyperboloid(double s) { return {Kind::Hyperboloid, s}; }
  double time(const Eigen::Vector3d& x) const;
  // dt/dx^a along the slice
  double slope(const Eigen::Vector3d& x, int axis) const;
};

// t-jet of a function restricted to a slice: dt[k] holds d_t^k f on the lattice.
// `margin` counts boundary layers where values are not trustworthy; zero-extended data
// (compact support well inside the lattice) never loses margin.
struct SliceJet {
  Lattice lattice;
  SliceGeometry geometry;
  std::vector<Field> dt;
  int order = 4;
  int margin = 0;
  bool zero_extended = false;

  int length() const { return int(dt.size()); }
  bool valid(int i, int j, int k) const;
  double at(int deriv, int i, int j, int k) const;  // throws MarginError
  Field time_field() const;
};

// Build a jet of the given length from f(t, x) returning {f, f_t, f_tt, ...}.
template <typename Fn>
SliceJet sample_jet(const Lattice& g, const SliceGeometry& geo, int length, int order, Fn&& f) {
  SliceJet J{g, geo, std::vector<Field>(length, Field(g.size())), order, 0, false};
  const int n = g.n();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Vector3d x = g.position(i, j, k);
        const auto vals = f(geo.time(x), x);
        for (int m = 0; m < length; ++m) J.dt[m](g.index(i, j, k)) = vals[m];
      }
  return J;
}

SliceJet time_derivative(const SliceJet& u);
SliceJet natural_derivative(const SliceJet& u, int alpha);     // d_alpha
SliceJet frame_derivative(const SliceJet& u, int beta);        // dbar_beta
SliceJet apply_field(const AdmissibleField& Z, const SliceJet& u);
double apply_field(const AdmissibleField& Z, const SliceJet& u, int i, int j, int k);
SliceJet apply_multi(const MultiIndex& I, const SliceJet& u);
SliceJet wave_operator(const SliceJet& u);  // d_t^2 - Laplacian, on jets
SliceJet scaled(const SliceJet& u, double c);
SliceJet combine(const SliceJet& a, double ca, const SliceJet& b, double cb);
// multiply by a coefficient function c(t, x) (jet-aware via Leibniz when c depends on t)
template <typename Fn>
SliceJet multiply(const SliceJet& u, Fn&& coefficient_jet);

// max |dt[0]| over trusted nodes
double max_abs_valid(const SliceJet& u);

// rotation Omega_ab = (x^a/t) L_b - (x^b/t) L_a
std::pair<double, double> rotation_from_boosts(int a, int b, const FoliationPoint<double>& p);
SliceJet apply_rotation(int a, int b, const SliceJet& u);

// [Z, Z'] = sum_k c_k Z_k over the seven admissible fields; boost pairs have (t,x)-dependent
// coefficients so the point is required.
std::array<double, 7> lie_bracket(const AdmissibleField& Z, const AdmissibleField& W, double t,
                                  const Eigen::Vector3d& x);

// Z(box u) - box(Z u) as a max norm over trusted nodes.
double killing_residual(const AdmissibleField& Z, const SliceJet& u);

// ---- commutator tables, a = 1..3, alpha/beta/gamma = 0..3 ----

inline int kdelta(int a, int b) { return a == b ? 1 : 0; }

// [L_a, d_beta] = Theta_{a beta}^gamma d_gamma
inline int theta(int a, int beta, int gamma) {
  if (beta == 0) return -kdelta(a, gamma);
  return -kdelta(a, beta) * kdelta(gamma, 0);
}

// [d_alpha, dbar_beta] = t^{-1} Gammabar_{alpha beta}^gamma d_gamma
template <typename Scalar>
Scalar gamma_bar(int alpha, int beta, int gamma, const Scalar& t, const Vec3<Scalar>& x) {
  if (beta == 0 || gamma != 0) return Scalar(0);
  if (alpha == 0) return Scalar(-x(beta - 1) / t);
  return Scalar(kdelta(alpha, beta));
}

// [L_a, dbar_beta] = Thetabar_{a beta}^gamma dbar_gamma
template <typename Scalar>
Scalar theta_bar(int a, int beta, int gamma, const Scalar& t, const Vec3<Scalar>& x) {
  if (beta == 0) return Scalar(-kdelta(a, gamma)) + (gamma == 0 ? Scalar(x(a - 1) / t) : Scalar(0));
  return Scalar(-kdelta(a, gamma)) * Scalar(x(beta - 1) / t);
}

enum class DerivativeFrame { Natural, SemiHyperboloidal };

// Coefficients c_gamma with [Z, D_beta] = c_gamma D_gamma, where D is d (Natural) or dbar.
Eigen::Vector4d commutator_coefficients(const AdmissibleField& Z, DerivativeFrame frame, int beta, double t,
                                        const Eigen::Vector3d& x);

// [Z^I, d_alpha] = sum theta_{alpha J}^{I beta} d_beta Z^J with constant coefficients, |J| < |I|.
struct CommutatorTerm {
  double coefficient;
  int beta;
  MultiIndex J;
};
std::vector<CommutatorTerm> commutator_expansion(const MultiIndex& I, int alpha);

// ---- template definitions ----

template <typename Fn>
SliceJet multiply(const SliceJet& u, Fn&& coefficient_jet) {
  // coefficient_jet(t, x) -> std::vector<double> of d_t^k c, k = 0..length-1
  SliceJet out = u;
  const Lattice& g = u.lattice;
  const int n = g.n(), m = u.length();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Index p = g.index(i, j, k);
        const Eigen::Vector3d x = g.position(i, j, k);
        const auto c = coefficient_jet(u.geometry.time(x), x);
        for (int q = 0; q < m; ++q) {
          double acc = 0.0, binom = 1.0;
          for (int r = 0; r <= q; ++r) {
            acc += binom * c[r] * u.dt[q - r](p);
            binom = binom * (q - r) / (r + 1);
          }
          out.dt[q](p) = acc;
        }
      }
  return out;
}

}  // namespace hyperlab
