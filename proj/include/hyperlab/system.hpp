#pragma once

#include <array>
#include <string>
#include <vector>

namespace hyperlab {

template <int N>
struct Coefficient {
  std::array<int, N> idx{};
  double value = 0.0;
};

// Quadratic wave-Klein-Gordon system
//   box w_i + G_i^{j ab} d_a d_b w_j + c_i^2 w_i = F_i,
//   G_i^{j ab} = A_i^{j ab g k} d_g w_k + B_i^{j ab k} w_k,
//   F_i = P_i^{ab jk} d_a w_j d_b w_k + Q_i^{a jk} w_k d_a w_j + R_i^{jk} w_j w_k.
// Components are 0-based; the first j0 are wave components (c = 0).
struct SystemSpec {
  std::string name = "custom";
  int n0 = 1;
  int j0 = 1;
  std::vector<double> mass{0.0};
  double sigma = 1.0;
  std::vector<std::string> components{"u"};

  std::vector<Coefficient<6>> A;  // (i, j, alpha, beta, gamma, k)
  std::vector<Coefficient<5>> B;  // (i, j, alpha, beta, k)
  std::vector<Coefficient<5>> P;  // (i, alpha, beta, j, k)
  std::vector<Coefficient<4>> Q;  // (i, alpha, j, k)
  std::vector<Coefficient<3>> R;  // (i, j, k)

  bool is_wave(int i) const { return i < j0; }
  bool quasilinear() const { return !A.empty() || !B.empty(); }
  bool semilinear_terms() const { return !P.empty() || !Q.empty() || !R.empty(); }

  // throws std::invalid_argument on inconsistent dimensions or index ranges
  void validate() const;

  // dense lookups (duplicates are summed)
  std::vector<double> dense_A() const;  // size n0*n0*4*4*4*n0
  std::vector<double> dense_B() const;
  std::vector<double> dense_P() const;
  std::vector<double> dense_Q() const;
  std::vector<double> dense_R() const;
  int A_offset(int i, int j, int a, int b, int g, int k) const { return ((((i * n0 + j) * 4 + a) * 4 + b) * 4 + g) * n0 + k; }
  int B_offset(int i, int j, int a, int b, int k) const { return (((i * n0 + j) * 4 + a) * 4 + b) * n0 + k; }
  int P_offset(int i, int a, int b, int j, int k) const { return (((i * 4 + a) * 4 + b) * n0 + j) * n0 + k; }
  int Q_offset(int i, int a, int j, int k) const { return ((i * 4 + a) * n0 + j) * n0 + k; }
  int R_offset(int i, int j, int k) const { return (i * n0 + j) * n0 + k; }

  // apply a permutation to component labels (perm[old] = new)
  SystemSpec relabeled(const std::vector<int>& perm) const;
};

// free-wave, linear-kg, null-wave, nonnull-wave, wkg, nonblowup-violation
SystemSpec preset_system(const std::string& name);
const std::vector<std::string>& preset_names();

}  // namespace hyperlab
