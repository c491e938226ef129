#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperlab/geometry.hpp"
#include "hyperlab/system.hpp"

namespace hyperlab {

using QuadraticForm = Eigen::Matrix4d;

// A^{abc}, index (a, b, c) -> 16a + 4b + c
struct CubicForm {
  Eigen::Matrix<double, 64, 1> c = Eigen::Matrix<double, 64, 1>::Zero();
  double& operator()(int a, int b, int g) { return c(16 * a + 4 * b + g); }
  double operator()(int a, int b, int g) const { return c(16 * a + 4 * b + g); }
  CubicForm symmetrized() const;
  double evaluate(const Eigen::Vector4d& xi) const;
};

struct NullCertificate {
  bool null = true;
  std::vector<std::string> relations;  // violated relations (capped), or the confirmed ones
  int violations = 0;
};

inline constexpr int kCertificateCap = 16;

NullCertificate is_null_quadratic(const QuadraticForm& T);
NullCertificate is_null_cubic(const CubicForm& A);

// Max |T(xi)| over N random null covectors xi = (1, omega), |omega| = 1.
double sample_null_max(const QuadraticForm& T, long samples, std::uint64_t seed);
double sample_null_max(const CubicForm& A, long samples, std::uint64_t seed);

struct FrameBound {
  double constant = 0.0;        // sup |Tbar^{00}| (t/s)^2
  double min_s_over_t = 1.0;    // closest approach to the light cone in the sample
  bool unbounded_candidate = false;
};

FrameBound frame_bound_certificate(const QuadraticForm& T, const std::vector<FoliationPoint<double>>& sample);
FrameBound frame_bound_certificate(const CubicForm& A, const std::vector<FoliationPoint<double>>& sample);
// per-point values of |Tbar^{00}| (t/s)^2
std::vector<double> frame_bound_values(const QuadraticForm& T, const std::vector<FoliationPoint<double>>& sample);

// Deterministic cone sample: s in [s_lo, s_hi], directions on a spiral, radii up to a fraction of
// the support radius.
std::vector<FoliationPoint<double>> cone_sample(double s_lo, double s_hi, int n_s, int n_dir, int n_r,
                                                double radial_fraction = 0.999);

struct NullEstimate {
  double first = 0.0;   // |Tbar^{00} d_t u d_t v|
  double mixed = 0.0;   // remaining frame terms
  double total = 0.0;   // first (signed) + mixed
  double direct = 0.0;  // T^{ab} d_a u d_b v
};

NullEstimate pointwise_null_estimate(const QuadraticForm& T, const Eigen::Vector4d& du, const Eigen::Vector4d& dv,
                                     const FoliationPoint<double>& p);

struct ConditionResult {
  std::string name;
  bool passed = true;
  std::vector<std::string> offending;  // capped at kCertificateCap
  int violations = 0;
};

struct FormCertificate {
  std::string label;  // e.g. "P_0^{..00}"
  bool null = true;
  std::vector<std::string> relations;
  double frame_constant = 0.0;
  bool unbounded_candidate = false;
};

struct StructureReport {
  std::string system;
  std::vector<ConditionResult> conditions;
  std::vector<FormCertificate> certificates;
  bool passed() const;
  const ConditionResult& condition(const std::string& name) const;
};

// condition names
inline const char* kSymmetry = "symmetry";
inline const char* kMassSplit = "wave-klein-gordon structure";
inline const char* kNullCondition = "null condition for wave components";
inline const char* kNonBlowUp = "non-blow-up condition";
inline const char* kNoUndifferentiatedWave = "undifferentiated wave factor restriction";
inline const char* kDerivedB = "derived restriction on B";

StructureReport check_structure(const SystemSpec& spec);

// slices of the coefficient arrays as forms
QuadraticForm form_P(const SystemSpec& spec, int i, int j, int k);
QuadraticForm form_B(const SystemSpec& spec, int i, int j, int k);
CubicForm form_A(const SystemSpec& spec, int i, int j, int k);

}  // namespace hyperlab
