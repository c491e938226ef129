#include "hyperlab/system.hpp"

#include <stdexcept>

namespace hyperlab {

namespace {

template <int N>
void check_range(const std::vector<Coefficient<N>>& list, const char* name, const std::array<int, N>& upper) {
  for (std::size_t q = 0; q < list.size(); ++q)
    for (int d = 0; d < N; ++d)
      if (list[q].idx[d] < 0 || list[q].idx[d] >= upper[d])
        throw std::invalid_argument(std::string(name) + " entry " + std::to_string(q) + ": index " +
                                    std::to_string(d) + " = " + std::to_string(list[q].idx[d]) +
                                    " out of range [0, " + std::to_string(upper[d]) + ")");
}

template <int N, typename Off>
std::vector<double> densify(const std::vector<Coefficient<N>>& list, std::size_t size, Off&& off) {
  std::vector<double> out(size, 0.0);
  for (const auto& c : list) out[off(c.idx)] += c.value;
  return out;
}

}  // namespace

void SystemSpec::validate() const {
  if (n0 < 1 || n0 > 8) throw std::invalid_argument("n0 must be in 1..8");
  if (j0 < 0 || j0 > n0) throw std::invalid_argument("j0 must be in 0..n0");
  if (int(mass.size()) != n0) throw std::invalid_argument("mass list length must equal n0");
  if (int(components.size()) != n0) throw std::invalid_argument("component name list length must equal n0");
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  check_range<6>(A, "A", {n0, n0, 4, 4, 4, n0});
  check_range<5>(B, "B", {n0, n0, 4, 4, n0});
  check_range<5>(P, "P", {n0, 4, 4, n0, n0});
  check_range<4>(Q, "Q", {n0, 4, n0, n0});
  check_range<3>(R, "R", {n0, n0, n0});
}

std::vector<double> SystemSpec::dense_A() const {
  return densify<6>(A, std::size_t(n0) * n0 * 64 * n0,
                    [&](const auto& x) { return A_offset(x[0], x[1], x[2], x[3], x[4], x[5]); });
}
std::vector<double> SystemSpec::dense_B() const {
  return densify<5>(B, std::size_t(n0) * n0 * 16 * n0,
                    [&](const auto& x) { return B_offset(x[0], x[1], x[2], x[3], x[4]); });
}
std::vector<double> SystemSpec::dense_P() const {
  return densify<5>(P, std::size_t(n0) * 16 * n0 * n0,
                    [&](const auto& x) { return P_offset(x[0], x[1], x[2], x[3], x[4]); });
}
std::vector<double> SystemSpec::dense_Q() const {
  return densify<4>(Q, std::size_t(n0) * 4 * n0 * n0, [&](const auto& x) { return Q_offset(x[0], x[1], x[2], x[3]); });
}
std::vector<double> SystemSpec::dense_R() const {
  return densify<3>(R, std::size_t(n0) * n0 * n0, [&](const auto& x) { return R_offset(x[0], x[1], x[2]); });
}

SystemSpec SystemSpec::relabeled(const std::vector<int>& perm) const {
  if (int(perm.size()) != n0) throw std::invalid_argument("relabeled: permutation size mismatch");
  SystemSpec out = *this;
  for (int i = 0; i < n0; ++i) {
    out.mass[perm[i]] = mass[i];
    out.components[perm[i]] = components[i];
  }
  for (auto& c : out.A) c.idx = {perm[c.idx[0]], perm[c.idx[1]], c.idx[2], c.idx[3], c.idx[4], perm[c.idx[5]]};
  for (auto& c : out.B) c.idx = {perm[c.idx[0]], perm[c.idx[1]], c.idx[2], c.idx[3], perm[c.idx[4]]};
  for (auto& c : out.P) c.idx = {perm[c.idx[0]], c.idx[1], c.idx[2], perm[c.idx[3]], perm[c.idx[4]]};
  for (auto& c : out.Q) c.idx = {perm[c.idx[0]], c.idx[1], perm[c.idx[2]], perm[c.idx[3]]};
  for (auto& c : out.R) c.idx = {perm[c.idx[0]], perm[c.idx[1]], perm[c.idx[2]]};
  return out;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"free-wave",    "linear-kg", "null-wave",
                                                 "nonnull-wave", "wkg",       "nonblowup-violation"};
  return names;
}

SystemSpec preset_system(const std::string& name) {
  SystemSpec s;
  s.name = name;
  if (name == "free-wave") return s;
  if (name == "linear-kg") {
    s.j0 = 0;
    s.mass = {1.0};
    s.components = {"v"};
    return s;
  }
  if (name == "null-wave") {
    // box u = m^{ab} d_a u d_b u
    s.P.push_back({{0, 0, 0, 0, 0}, 1.0});
    for (int a = 1; a <= 3; ++a) s.P.push_back({{0, a, a, 0, 0}, -1.0});
    return s;
  }
  if (name == "nonnull-wave") {
    s.P.push_back({{0, 0, 0, 0, 0}, 1.0});
    return s;
  }
  if (name == "nonblowup-violation") {
    s.R.push_back({{0, 0, 0}, 1.0});
    return s;
  }
  if (name == "wkg") {
    // box u = d_t u d_t v
    // box v + (d_t u) d_t^2 v + v = (d_t u)^2 + v d_t u + v^2
    s.n0 = 2;
    s.j0 = 1;
    s.mass = {0.0, 1.0};
    s.components = {"u", "v"};
    s.P.push_back({{0, 0, 0, 0, 1}, 1.0});
    s.A.push_back({{1, 1, 0, 0, 0, 0}, 1.0});
    s.P.push_back({{1, 0, 0, 0, 0}, 1.0});
    s.Q.push_back({{1, 0, 0, 1}, 1.0});
    s.R.push_back({{1, 1, 1}, 1.0});
    return s;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace hyperlab
