#include "hyperlab/nullstruct.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hyperlab {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void note(NullCertificate& cert, bool violated, const std::string& rel) {
  if (!violated) return;
  cert.null = false;
  ++cert.violations;
  if (int(cert.relations.size()) < kCertificateCap) cert.relations.push_back(rel);
}

void note(ConditionResult& c, const std::string& what) {
  c.passed = false;
  ++c.violations;
  if (int(c.offending.size()) < kCertificateCap) c.offending.push_back(what);
}

}  // namespace

CubicForm CubicForm::symmetrized() const {
  CubicForm S;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int g = 0; g < 4; ++g)
        S(a, b, g) = ((*this)(a, b, g) + (*this)(a, g, b) + (*this)(b, a, g) + (*this)(b, g, a) + (*this)(g, a, b) +
                      (*this)(g, b, a)) /
                     6.0;
  return S;
}

double CubicForm::evaluate(const Eigen::Vector4d& xi) const {
  double acc = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int g = 0; g < 4; ++g) acc += (*this)(a, b, g) * xi(a) * xi(b) * xi(g);
  return acc;
}

// On xi = (1, omega): T(xi) = T^{00} + (T^{0a} + T^{a0}) w_a + T^{ab} w_a w_b.  Odd and even parts in
// omega must vanish separately on the sphere.
NullCertificate is_null_quadratic(const QuadraticForm& T) {
  NullCertificate cert;
  const double tol = 1e-12 * T.cwiseAbs().maxCoeff();
  for (int a = 1; a <= 3; ++a) {
    const double v = T(0, a) + T(a, 0);
    note(cert, std::abs(v) > tol,
         "T^{0" + std::to_string(a) + "} + T^{" + std::to_string(a) + "0} = " + fmt(v) + " != 0");
  }
  for (int a = 1; a <= 3; ++a)
    for (int b = a; b <= 3; ++b) {
      const double v = 0.5 * (T(a, b) + T(b, a)) + (a == b ? T(0, 0) : 0.0);
      note(cert, std::abs(v) > tol,
           "sym(T^{" + std::to_string(a) + std::to_string(b) + "}) + T^{00} delta^{" + std::to_string(a) +
               std::to_string(b) + "} = " + fmt(v) + " != 0");
    }
  if (cert.null) cert.relations = {"T^{0a} + T^{a0} = 0 for a = 1..3", "sym(T^{ab}) = -T^{00} delta^{ab}"};
  return cert;
}

// Even part: S^{000} |w|^2 + 3 S^{0ab} w_a w_b.  Odd part: 3 S^{00a} w_a |w|^2 + S^{abc} w_a w_b w_c.
NullCertificate is_null_cubic(const CubicForm& A) {
  NullCertificate cert;
  const CubicForm S = A.symmetrized();
  const double tol = 1e-12 * A.c.cwiseAbs().maxCoeff();
  for (int a = 1; a <= 3; ++a)
    for (int b = a; b <= 3; ++b) {
      const double v = 3.0 * S(0, a, b) + (a == b ? S(0, 0, 0) : 0.0);
      note(cert, std::abs(v) > tol,
           "3 S^{0" + std::to_string(a) + std::to_string(b) + "} + S^{000} delta^{" + std::to_string(a) +
               std::to_string(b) + "} = " + fmt(v) + " != 0");
    }
  for (int a = 1; a <= 3; ++a)
    for (int b = a; b <= 3; ++b)
      for (int c = b; c <= 3; ++c) {
        double v;
        std::string mono = "w" + std::to_string(a) + "w" + std::to_string(b) + "w" + std::to_string(c);
        if (a == b && b == c)
          v = S(a, a, a) + 3.0 * S(0, 0, a);
        else if (a != b && b != c)
          v = 6.0 * S(a, b, c);
        else {
          const int single = a == b ? c : a, pair = a == b ? a : c;
          v = 3.0 * S(single, pair, pair) + 3.0 * S(0, 0, single);
        }
        note(cert, std::abs(v) > tol, "odd part coefficient of " + mono + " = " + fmt(v) + " != 0");
      }
  if (cert.null) cert.relations = {"3 S^{0ab} + S^{000} delta^{ab} = 0", "odd restriction polynomial vanishes"};
  return cert;
}

namespace {

template <typename Eval>
double sample_max(long samples, std::uint64_t seed, Eval&& eval) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  double m = 0.0;
  for (long q = 0; q < samples; ++q) {
    Eigen::Vector3d w(N(rng), N(rng), N(rng));
    const double nw = w.norm();
    if (nw == 0.0) continue;
    Eigen::Vector4d xi;
    xi << 1.0, w / nw;
    m = std::max(m, std::abs(eval(xi)));
  }
  return m;
}

}  // namespace

double sample_null_max(const QuadraticForm& T, long samples, std::uint64_t seed) {
  return sample_max(samples, seed, [&](const Eigen::Vector4d& xi) { return xi.dot(T * xi); });
}

double sample_null_max(const CubicForm& A, long samples, std::uint64_t seed) {
  return sample_max(samples, seed, [&](const Eigen::Vector4d& xi) { return A.evaluate(xi); });
}

std::vector<double> frame_bound_values(const QuadraticForm& T, const std::vector<FoliationPoint<double>>& sample) {
  std::vector<double> out;
  out.reserve(sample.size());
  for (const auto& p : sample) {
    if (!p.inside_light_cone) throw std::domain_error("frame_bound_certificate: sample point outside the light cone");
    const Eigen::Matrix4d Tb = frame_transform_tensor2(T, p);
    const double s2 = p.t * p.t - p.x.squaredNorm();
    out.push_back(std::abs(Tb(0, 0)) * p.t * p.t / s2);
  }
  return out;
}

FrameBound frame_bound_certificate(const QuadraticForm& T, const std::vector<FoliationPoint<double>>& sample) {
  if (sample.empty()) throw std::invalid_argument("frame_bound_certificate: empty sample");
  FrameBound fb;
  const auto vals = frame_bound_values(T, sample);
  for (std::size_t q = 0; q < sample.size(); ++q) {
    fb.constant = std::max(fb.constant, vals[q]);
    fb.min_s_over_t = std::min(fb.min_s_over_t, sample[q].s / sample[q].t);
  }
  fb.unbounded_candidate = !is_null_quadratic(T).null && fb.min_s_over_t < 0.1;
  return fb;
}

FrameBound frame_bound_certificate(const CubicForm& A, const std::vector<FoliationPoint<double>>& sample) {
  if (sample.empty()) throw std::invalid_argument("frame_bound_certificate: empty sample");
  FrameBound fb;
  for (const auto& p : sample) {
    if (!p.inside_light_cone) throw std::domain_error("frame_bound_certificate: sample point outside the light cone");
    // Abar^{000} = A^{abc} Psi_a^0 Psi_b^0 Psi_c^0 with Psi_a^0 = (1, -x/t)
    Eigen::Vector4d psi0;
    psi0 << 1.0, -p.x / p.t;
    const double s2 = p.t * p.t - p.x.squaredNorm();
    fb.constant = std::max(fb.constant, std::abs(A.evaluate(psi0)) * p.t * p.t / s2);
    fb.min_s_over_t = std::min(fb.min_s_over_t, p.s / p.t);
  }
  fb.unbounded_candidate = !is_null_cubic(A).null && fb.min_s_over_t < 0.1;
  return fb;
}

std::vector<FoliationPoint<double>> cone_sample(double s_lo, double s_hi, int n_s, int n_dir, int n_r,
                                                double radial_fraction) {
  std::vector<FoliationPoint<double>> pts;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int is = 0; is < n_s; ++is) {
    const double s = n_s == 1 ? s_lo : s_lo + (s_hi - s_lo) * is / (n_s - 1);
    const double rho = s > 1.0 ? slice_support_radius(s) : 0.0;
    for (int d = 0; d < n_dir; ++d) {
      const double z = 1.0 - 2.0 * (d + 0.5) / n_dir;
      const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
      const Eigen::Vector3d dir(rr * std::cos(golden * d), rr * std::sin(golden * d), z);
      for (int q = 0; q <= n_r; ++q) {
        const double r = radial_fraction * rho * q / std::max(1, n_r);
        pts.push_back(lift_to_hyperboloid(s, Eigen::Vector3d(r * dir)));
      }
    }
  }
  return pts;
}

NullEstimate pointwise_null_estimate(const QuadraticForm& T, const Eigen::Vector4d& du, const Eigen::Vector4d& dv,
                                     const FoliationPoint<double>& p) {
  if (!p.inside_light_cone) throw std::domain_error("pointwise_null_estimate: point outside the light cone");
  const auto f = frame_matrices(p);
  const Eigen::Matrix4d Tb = f.psi.transpose() * T * f.psi;
  const Eigen::Vector4d bu = f.phi * du, bv = f.phi * dv;
  NullEstimate e;
  e.direct = du.dot(T * dv);
  const double first = Tb(0, 0) * bu(0) * bv(0);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (a || b) e.mixed += Tb(a, b) * bu(a) * bv(b);
  e.first = std::abs(first);
  e.total = first + e.mixed;
  return e;
}

QuadraticForm form_P(const SystemSpec& spec, int i, int j, int k) {
  QuadraticForm T = QuadraticForm::Zero();
  for (const auto& c : spec.P)
    if (c.idx[0] == i && c.idx[3] == j && c.idx[4] == k) T(c.idx[1], c.idx[2]) += c.value;
  return T;
}

QuadraticForm form_B(const SystemSpec& spec, int i, int j, int k) {
  QuadraticForm T = QuadraticForm::Zero();
  for (const auto& c : spec.B)
    if (c.idx[0] == i && c.idx[1] == j && c.idx[4] == k) T(c.idx[2], c.idx[3]) += c.value;
  return T;
}

CubicForm form_A(const SystemSpec& spec, int i, int j, int k) {
  CubicForm F;
  for (const auto& c : spec.A)
    if (c.idx[0] == i && c.idx[1] == j && c.idx[5] == k) F(c.idx[2], c.idx[3], c.idx[4]) += c.value;
  return F;
}

bool StructureReport::passed() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.passed; });
}

const ConditionResult& StructureReport::condition(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c;
  throw std::out_of_range("no condition named '" + name + "'");
}

StructureReport check_structure(const SystemSpec& spec) {
  spec.validate();
  const int n0 = spec.n0, j0 = spec.j0;
  StructureReport rep;
  rep.system = spec.name;

  const auto A = spec.dense_A(), B = spec.dense_B(), P = spec.dense_P(), Q = spec.dense_Q(), R = spec.dense_R();
  auto maxabs = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  auto tuple = [](std::initializer_list<int> xs) {
    std::string s = "(";
    bool first = true;
    for (int x : xs) {
      s += (first ? "" : ",") + std::to_string(x);
      first = false;
    }
    return s + ")";
  };

  ConditionResult sym{kSymmetry};
  {
    const double tolA = 1e-12 * maxabs(A), tolB = 1e-12 * maxabs(B);
    for (int i = 0; i < n0; ++i)
      for (int j = 0; j < n0; ++j)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            for (int k = 0; k < n0; ++k) {
              for (int g = 0; g < 4; ++g) {
                const double v = A[spec.A_offset(i, j, a, b, g, k)];
                if (std::abs(v - A[spec.A_offset(j, i, a, b, g, k)]) > tolA ||
                    std::abs(v - A[spec.A_offset(i, j, b, a, g, k)]) > tolA)
                  note(sym, "A " + tuple({i, j, a, b, g, k}));
              }
              const double v = B[spec.B_offset(i, j, a, b, k)];
              if (std::abs(v - B[spec.B_offset(j, i, a, b, k)]) > tolB ||
                  std::abs(v - B[spec.B_offset(i, j, b, a, k)]) > tolB)
                note(sym, "B " + tuple({i, j, a, b, k}));
            }
  }
  rep.conditions.push_back(sym);

  ConditionResult mass{kMassSplit};
  for (int i = 0; i < n0; ++i) {
    if (i < j0 && spec.mass[i] != 0.0) note(mass, "c_" + std::to_string(i) + " = " + fmt(spec.mass[i]) + " on a wave component");
    if (i >= j0 && !(spec.mass[i] >= spec.sigma))
      note(mass, "c_" + std::to_string(i) + " = " + fmt(spec.mass[i]) + " below sigma = " + fmt(spec.sigma));
  }
  rep.conditions.push_back(mass);

  const auto sample = cone_sample(2.0, 30.0, 8, 24, 12);
  ConditionResult nullc{kNullCondition};
  for (int i = 0; i < j0; ++i)
    for (int j = 0; j < j0; ++j)
      for (int k = 0; k < j0; ++k) {
        const std::string ijk = tuple({i, j, k});
        const CubicForm fa = form_A(spec, i, j, k);
        if (fa.c.cwiseAbs().maxCoeff() > 0) {
          const auto cert = is_null_cubic(fa);
          const auto fb = frame_bound_certificate(fa, sample);
          rep.certificates.push_back({"A" + ijk, cert.null, cert.relations, fb.constant, fb.unbounded_candidate});
          if (!cert.null) note(nullc, "A" + ijk + ": " + cert.relations.front());
        }
        for (int which = 0; which < 2; ++which) {
          const QuadraticForm T = which == 0 ? form_B(spec, i, j, k) : form_P(spec, i, j, k);
          if (T.cwiseAbs().maxCoeff() == 0) continue;
          const std::string label = (which == 0 ? "B" : "P") + ijk;
          const auto cert = is_null_quadratic(T);
          const auto fb = frame_bound_certificate(T, sample);
          rep.certificates.push_back({label, cert.null, cert.relations, fb.constant, fb.unbounded_candidate});
          if (!cert.null) note(nullc, label + ": " + cert.relations.front());
        }
      }
  rep.conditions.push_back(nullc);

  ConditionResult nbu{kNonBlowUp};
  for (int i = 0; i < n0; ++i) {
    for (int j = j0; j < n0; ++j)
      for (int k = 0; k < j0; ++k)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            if (B[spec.B_offset(i, j, a, b, k)] != 0.0) note(nbu, "B (i,j,a,b,k) = " + tuple({i, j, a, b, k}));
    for (int j = 0; j < n0; ++j)
      for (int k = 0; k < n0; ++k)
        if ((j < j0 || k < j0) && R[spec.R_offset(i, j, k)] != 0.0) note(nbu, "R (i,j,k) = " + tuple({i, j, k}));
  }
  rep.conditions.push_back(nbu);

  ConditionResult qres{kNoUndifferentiatedWave};
  for (int i = 0; i < n0; ++i)
    for (int a = 0; a < 4; ++a)
      for (int j = 0; j < n0; ++j)
        for (int k = 0; k < j0; ++k)
          if (Q[spec.Q_offset(i, a, j, k)] != 0.0) note(qres, "Q (i,a,j,k) = " + tuple({i, a, j, k}));
  rep.conditions.push_back(qres);

  ConditionResult derived{kDerivedB};
  for (int i = j0; i < n0; ++i)
    for (int j = 0; j < j0; ++j)
      for (int k = 0; k < j0; ++k)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            if (B[spec.B_offset(i, j, a, b, k)] != 0.0) note(derived, "B (i,j,a,b,k) = " + tuple({i, j, a, b, k}));
  rep.conditions.push_back(derived);

  (void)P;
  return rep;
}

}  // namespace hyperlab
