#include "hyperlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hyperlab {

AdmissibleField AdmissibleField::translation(int alpha) {
  if (alpha < 0 || alpha > 3) throw std::out_of_range("translation index must be 0..3");
  return {Kind::Translation, alpha};
}

AdmissibleField AdmissibleField::boost(int a) {
  if (a < 1 || a > 3) throw std::out_of_range("boost index must be 1..3");
  return {Kind::Boost, a};
}

std::string AdmissibleField::name() const { return (is_boost() ? "L" : "d") + std::to_string(index); }

const std::array<AdmissibleField, 7>& admissible_fields() {
  static const std::array<AdmissibleField, 7> all = {
      AdmissibleField::translation(0), AdmissibleField::translation(1), AdmissibleField::translation(2),
      AdmissibleField::translation(3), AdmissibleField::boost(1),       AdmissibleField::boost(2),
      AdmissibleField::boost(3)};
  return all;
}

AdmissibleField parse_field(const std::string& name) {
  for (const auto& Z : admissible_fields())
    if (Z.name() == name) return Z;
  throw std::invalid_argument("unknown admissible field '" + name + "'");
}

std::string MultiIndex::name() const {
  if (null_operator) return "null";
  if (fields.empty()) return "id";
  std::string out;
  for (std::size_t q = 0; q < fields.size(); ++q) out += (q ? "." : "") + fields[q].name();
  return out;
}

std::vector<MultiIndex> multi_indices_up_to(int order) {
  std::vector<MultiIndex> out{MultiIndex::identity()};
  std::size_t begin = 0;
  for (int m = 1; m <= order; ++m) {
    const std::size_t end = out.size();
    for (std::size_t q = begin; q < end; ++q)
      for (const auto& Z : admissible_fields()) {
        MultiIndex I = out[q];
        I.fields.insert(I.fields.begin(), Z);
        out.push_back(std::move(I));
      }
    begin = end;
  }
  return out;
}

MultiIndex parse_multi_index(const std::string& name) {
  if (name == "id" || name.empty()) return MultiIndex::identity();
  if (name == "null") return MultiIndex::null();
  MultiIndex I;
  std::stringstream ss(name);
  std::string tok;
  while (std::getline(ss, tok, '.')) I.fields.push_back(parse_field(tok));
  return I;
}

double SliceGeometry::time(const Eigen::Vector3d& x) const {
  if (kind == Kind::Flat) return level;
  return std::sqrt(level * level + x.squaredNorm());
}

double SliceGeometry::slope(const Eigen::Vector3d& x, int axis) const {
  if (kind == Kind::Flat) return 0.0;
  return x(axis) / time(x);
}

bool SliceJet::valid(int i, int j, int k) const {
  const int lo = zero_extended ? 0 : margin;
  const int hi = lattice.n() - lo;
  return i >= lo && i < hi && j >= lo && j < hi && k >= lo && k < hi;
}

double SliceJet::at(int deriv, int i, int j, int k) const {
  if (deriv < 0 || deriv >= length()) throw std::out_of_range("SliceJet: missing time-derivative co-field");
  if (!valid(i, j, k)) throw MarginError("SliceJet: node inside the invalid boundary margin");
  return dt[deriv](lattice.index(i, j, k));
}

Field SliceJet::time_field() const {
  const SliceGeometry geo = geometry;
  return sample(lattice, [&](const Eigen::Vector3d& x) { return geo.time(x); });
}

namespace {

void require_length(const SliceJet& u, int m, const char* what) {
  if (u.length() < m) throw std::invalid_argument(std::string(what) + ": time-derivative co-field missing");
}

SliceJet shell(const SliceJet& u, int length, int extra_margin) {
  SliceJet out{u.lattice, u.geometry, std::vector<Field>(length), u.order, u.margin, u.zero_extended};
  if (!u.zero_extended) {
    out.margin += extra_margin;
    if (2 * out.margin >= u.lattice.n()) throw MarginError("composition exhausts the lattice margin");
  }
  return out;
}

// d_t^k d_a f for k = 0..m-2, using d_t^k d_a f = D_a(f_k) - T_a f_{k+1}
std::vector<Field> natural_space(const SliceJet& u, int a) {
  const int m = u.length();
  std::vector<Field> out(m - 1);
  if (u.geometry.kind == SliceGeometry::Kind::Flat) {
    for (int k = 0; k < m - 1; ++k) out[k] = diff(u.lattice, u.dt[k], a - 1, u.order);
    return out;
  }
  const Lattice& g = u.lattice;
  const SliceGeometry geo = u.geometry;
  const Field T = sample(g, [&](const Eigen::Vector3d& x) { return geo.slope(x, a - 1); });
  for (int k = 0; k < m - 1; ++k) out[k] = diff(g, u.dt[k], a - 1, u.order) - T * u.dt[k + 1];
  return out;
}

}  // namespace

SliceJet time_derivative(const SliceJet& u) {
  require_length(u, 2, "time_derivative");
  SliceJet out = shell(u, u.length() - 1, 0);
  for (int k = 0; k + 1 < u.length(); ++k) out.dt[k] = u.dt[k + 1];
  return out;
}

SliceJet natural_derivative(const SliceJet& u, int alpha) {
  if (alpha == 0) return time_derivative(u);
  require_length(u, 2, "natural_derivative");
  SliceJet out = shell(u, u.length() - 1, stencil_half_width(u.order));
  out.dt = natural_space(u, alpha);
  return out;
}

SliceJet frame_derivative(const SliceJet& u, int beta) {
  if (beta == 0) return time_derivative(u);
  SliceJet out = natural_derivative(u, beta);
  // add d_t^k((x^a/t) f_t) = sum_j C(k,j) x^a d_t^j(1/t) f_{k-j+1}
  const Lattice& g = u.lattice;
  const int n = g.n(), m = out.length();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Index p = g.index(i, j, k);
        const Eigen::Vector3d x = g.position(i, j, k);
        const double t = u.geometry.time(x), xa = x(beta - 1);
        for (int q = 0; q < m; ++q) {
          double acc = 0.0, binom = 1.0, dinv = 1.0 / t;  // d_t^r (1/t)
          for (int r = 0; r <= q; ++r) {
            acc += binom * xa * dinv * u.dt[q - r + 1](p);
            binom = binom * (q - r) / (r + 1);
            dinv *= -(r + 1) / t;
          }
          out.dt[q](p) += acc;
        }
      }
  return out;
}

SliceJet apply_field(const AdmissibleField& Z, const SliceJet& u) {
  if (!Z.is_boost()) return natural_derivative(u, Z.index);
  const int a = Z.index;
  SliceJet N = natural_derivative(u, a);
  SliceJet out = N;
  const Lattice& g = u.lattice;
  const int n = g.n(), m = out.length();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Index p = g.index(i, j, k);
        const Eigen::Vector3d x = g.position(i, j, k);
        const double t = u.geometry.time(x);
        for (int q = 0; q < m; ++q) {
          double v = x(a - 1) * u.dt[q + 1](p) + t * N.dt[q](p);
          if (q > 0) v += q * N.dt[q - 1](p);
          out.dt[q](p) = v;
        }
      }
  return out;
}

double apply_field(const AdmissibleField& Z, const SliceJet& u, int i, int j, int k) {
  if (Z.kind == AdmissibleField::Kind::Translation && Z.index == 0) return u.at(1, i, j, k);
  require_length(u, 2, "apply_field");
  const int hw = stencil_half_width(u.order);
  if (!u.zero_extended) {
    const int lo = u.margin + hw, hi = u.lattice.n() - lo;
    if (i < lo || i >= hi || j < lo || j >= hi || k < lo || k >= hi)
      throw MarginError("apply_field: stencil reaches the invalid margin");
  }
  const int a = Z.index;
  const Eigen::Vector3d x = u.lattice.position(i, j, k);
  const double t = u.geometry.time(x);
  const double ft = u.dt[1](u.lattice.index(i, j, k));
  const double da = diff_at(u.lattice, u.dt[0], a - 1, u.order, i, j, k) - u.geometry.slope(x, a - 1) * ft;
  if (!Z.is_boost()) return da;
  return x(a - 1) * ft + t * da;
}

SliceJet apply_multi(const MultiIndex& I, const SliceJet& u) {
  if (I.null_operator) {
    SliceJet z = u;
    for (auto& f : z.dt) f.setZero();
    return z;
  }
  const int hw = stencil_half_width(u.order);
  if (!u.zero_extended) {
    int need = u.margin;
    for (const auto& Z : I.fields)
      if (Z.index != 0 || Z.is_boost()) need += hw;
    if (2 * need >= u.lattice.n()) throw MarginError("apply_multi: lattice margin too small for " + I.name());
  }
  require_length(u, I.order() + 1, "apply_multi");
  SliceJet out = u;
  for (auto it = I.fields.rbegin(); it != I.fields.rend(); ++it) out = apply_field(*it, out);
  return out;
}

SliceJet wave_operator(const SliceJet& u) {
  require_length(u, 3, "wave_operator");
  SliceJet out = time_derivative(time_derivative(u));
  for (int a = 1; a <= 3; ++a) {
    SliceJet d2 = natural_derivative(natural_derivative(u, a), a);
    for (int q = 0; q < out.length(); ++q) out.dt[q] -= d2.dt[q];
    out.margin = std::max(out.margin, d2.margin);
  }
  return out;
}

SliceJet scaled(const SliceJet& u, double c) {
  SliceJet out = u;
  for (auto& f : out.dt) f *= c;
  return out;
}

SliceJet combine(const SliceJet& a, double ca, const SliceJet& b, double cb) {
  if (a.lattice.cells != b.lattice.cells || a.lattice.half_width != b.lattice.half_width)
    throw std::invalid_argument("combine: lattices differ");
  const int m = std::min(a.length(), b.length());
  SliceJet out = shell(a, m, 0);
  out.margin = std::max(a.margin, b.margin);
  out.zero_extended = a.zero_extended && b.zero_extended;
  for (int q = 0; q < m; ++q) out.dt[q] = ca * a.dt[q] + cb * b.dt[q];
  return out;
}

double max_abs_valid(const SliceJet& u) {
  const Lattice& g = u.lattice;
  const int lo = u.zero_extended ? 0 : u.margin, hi = g.n() - lo;
  double m = 0.0;
  for (int i = lo; i < hi; ++i)
    for (int j = lo; j < hi; ++j)
      for (int k = lo; k < hi; ++k) m = std::max(m, std::abs(u.dt[0](g.index(i, j, k))));
  return m;
}

std::pair<double, double> rotation_from_boosts(int a, int b, const FoliationPoint<double>& p) {
  if (!(p.t >= 1.0)) throw std::domain_error("rotation_from_boosts: t < 1");
  return {p.x(a - 1) / p.t, -p.x(b - 1) / p.t};
}

SliceJet apply_rotation(int a, int b, const SliceJet& u) {
  auto coeff = [](int c) {
    return [c](double t, const Eigen::Vector3d& x) {
      std::vector<double> jet(16);
      double dinv = 1.0 / t;
      for (int r = 0; r < 16; ++r) {
        jet[r] = x(c - 1) * dinv;
        dinv *= -(r + 1) / t;
      }
      return jet;
    };
  };
  SliceJet Lb = multiply(apply_field(AdmissibleField::boost(b), u), coeff(a));
  SliceJet La = multiply(apply_field(AdmissibleField::boost(a), u), coeff(b));
  return combine(Lb, 1.0, La, -1.0);
}

std::array<double, 7> lie_bracket(const AdmissibleField& Z, const AdmissibleField& W, double t,
                                  const Eigen::Vector3d& x) {
  std::array<double, 7> c{};
  if (!Z.is_boost() && !W.is_boost()) return c;
  if (Z.is_boost() && W.is_boost()) {
    c[3 + W.index] += x(Z.index - 1) / t;
    c[3 + Z.index] -= x(W.index - 1) / t;
    return c;
  }
  const bool flip = !Z.is_boost();
  const int a = flip ? W.index : Z.index, beta = flip ? Z.index : W.index;
  for (int g = 0; g < 4; ++g) c[g] = (flip ? -1.0 : 1.0) * theta(a, beta, g);
  return c;
}

double killing_residual(const AdmissibleField& Z, const SliceJet& u) {
  require_length(u, 4, "killing_residual");
  SliceJet lhs = apply_field(Z, wave_operator(u));
  SliceJet rhs = wave_operator(apply_field(Z, u));
  return max_abs_valid(combine(lhs, 1.0, rhs, -1.0));
}

Eigen::Vector4d commutator_coefficients(const AdmissibleField& Z, DerivativeFrame frame, int beta, double t,
                                        const Eigen::Vector3d& x) {
  if (beta < 0 || beta > 3) throw std::out_of_range("commutator_coefficients: beta must be 0..3");
  Eigen::Vector4d c = Eigen::Vector4d::Zero();
  for (int g = 0; g < 4; ++g) {
    if (frame == DerivativeFrame::Natural)
      c(g) = Z.is_boost() ? theta(Z.index, beta, g) : 0.0;
    else
      c(g) = Z.is_boost() ? theta_bar(Z.index, beta, g, t, Eigen::Vector3d(x)) : gamma_bar(Z.index, beta, g, t, Eigen::Vector3d(x)) / t;
  }
  return c;
}

std::vector<CommutatorTerm> commutator_expansion(const MultiIndex& I, int alpha) {
  // recursion on Z^I = Z_1 Z^{I'}:
  //   [Z_1 Z^{I'}, d_a] = Z_1 [Z^{I'}, d_a] + [Z_1, d_a] Z^{I'},  Z_1 d_b = d_b Z_1 + [Z_1, d_b]
  std::map<std::pair<int, std::string>, CommutatorTerm> acc;
  auto add = [&](double c, int beta, const MultiIndex& J) {
    if (c == 0.0) return;
    auto key = std::make_pair(beta, J.name());
    auto it = acc.find(key);
    if (it == acc.end())
      acc.emplace(key, CommutatorTerm{c, beta, J});
    else
      it->second.coefficient += c;
  };
  if (I.fields.empty() || I.null_operator) return {};
  const AdmissibleField Z1 = I.fields.front();
  MultiIndex rest;
  rest.fields.assign(I.fields.begin() + 1, I.fields.end());
  auto bracket = [&](int beta, int g) { return Z1.is_boost() ? double(theta(Z1.index, beta, g)) : 0.0; };
  for (const auto& term : commutator_expansion(rest, alpha)) {
    MultiIndex J = term.J;
    J.fields.insert(J.fields.begin(), Z1);
    add(term.coefficient, term.beta, J);
    for (int g = 0; g < 4; ++g) add(term.coefficient * bracket(term.beta, g), g, term.J);
  }
  for (int g = 0; g < 4; ++g) add(bracket(alpha, g), g, rest);
  std::vector<CommutatorTerm> out;
  for (auto& [k, v] : acc)
    if (v.coefficient != 0.0) out.push_back(v);
  return out;
}

}  // namespace hyperlab
