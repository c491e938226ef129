#include <catch_amalgamated.hpp>

#include <random>

#include "hyperlab/nullstruct.hpp"
#include "support/forms.hpp"

using namespace hyperlab;
using Catch::Approx;
using namespace hyperlab::testing;

namespace {

// independent evaluation of Tbar^{00} (t/s)^2 with the frame normal n = (1, -x/t)
double frame_value_oracle(const QuadraticForm& T, const FoliationPoint<double>& p) {
  Eigen::Vector4d n;
  n << 1.0, -p.x / p.t;
  return std::abs(n.dot(T * n)) * (p.t * p.t) / (p.s * p.s);
}

// u box u = Q0(du, du), box v + v = (d_t u)^2
SystemSpec scalar_model() {
  SystemSpec s;
  s.name = "scalar-model";
  s.n0 = 2;
  s.j0 = 1;
  s.mass = {0.0, 1.0};
  s.components = {"u", "v"};
  s.P = {{{0, 0, 0, 0, 0}, 1.0}, {{0, 1, 1, 0, 0}, -1.0}, {{0, 2, 2, 0, 0}, -1.0}, {{0, 3, 3, 0, 0}, -1.0},
         {{1, 0, 0, 0, 0}, 1.0}};
  return s;
}

std::vector<std::pair<std::string, bool>> verdicts(const StructureReport& r) {
  std::vector<std::pair<std::string, bool>> v;
  for (const auto& c : r.conditions) v.emplace_back(c.name, c.passed);
  return v;
}

}  // namespace

TEST_CASE("quadratic null decision examples", "[nullstruct]") {
  auto c = is_null_quadratic(eta);
  CHECK(c.null);
  CHECK(c.violations == 0);

  QuadraticForm e00 = QuadraticForm::Zero();
  e00(0, 0) = 1;
  c = is_null_quadratic(e00);
  CHECK_FALSE(c.null);
  REQUIRE_FALSE(c.relations.empty());
  CHECK(c.relations.front().find("sym(T^{") != std::string::npos);
  CHECK(c.violations == 3);  // the three diagonal relations

  QuadraticForm anti = QuadraticForm::Zero();
  anti(0, 1) = 1;
  anti(1, 0) = -1;
  CHECK(is_null_quadratic(anti).null);
  CHECK(sample_null_max(anti, 1000000, 7) < 1e-12);

  CHECK(is_null_quadratic(QuadraticForm::Zero()).null);
}

TEST_CASE("cubic null decision examples", "[nullstruct]") {
  CHECK(is_null_cubic(CubicForm{}).null);
  CubicForm a000;
  a000(0, 0, 0) = 1;
  CHECK_FALSE(is_null_cubic(a000).null);
  CHECK(sample_null_max(a000, 1000, 1) == Approx(1.0));

  CubicForm mq;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) mq(a, b, 0) = eta(a, b);
  CHECK(is_null_cubic(mq).null);
  CHECK(sample_null_max(mq, 1000000, 3) < 1e-12);
}

TEST_CASE("certificates are capped", "[nullstruct]") {
  std::mt19937_64 rng(1);
  // a generic cubic violates 6 + 10 relations, exactly at the cap
  const auto c = is_null_cubic(random_cubic(rng));
  CHECK_FALSE(c.null);
  CHECK(c.violations == 16);
  CHECK(int(c.relations.size()) <= kCertificateCap);
}

TEST_CASE("exact quadratic decision agrees with sampling", "[nullstruct][property]") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> N(0.0, 1.0);
  int disagreements = 0, null_count = 0;
  for (int q = 0; q < 200; ++q) {
    QuadraticForm T;
    if (q < 100) {
      T = q % 2 ? random_quadratic(rng) : random_null_quadratic(rng);
    } else {  // perturbed null
      T = random_null_quadratic(rng);
      T(int(q % 4), int((q / 4) % 4)) += 1e-3 * (1.0 + std::abs(N(rng)));
    }
    const bool exact = is_null_quadratic(T).null;
    const bool sampled = sample_null_max(T, 1000000, 1000 + q) < 1e-10;
    null_count += exact;
    disagreements += exact != sampled;
  }
  CHECK(disagreements == 0);
  CHECK(null_count == 50);
}

TEST_CASE("exact cubic decision agrees with sampling", "[nullstruct][property]") {
  // 1e5 directions per form: the cubic evaluation is 4x the quadratic cost
  std::mt19937_64 rng(77);
  int disagreements = 0, null_count = 0;
  for (int q = 0; q < 200; ++q) {
    CubicForm A;
    if (q < 100) {
      A = q % 2 ? random_cubic(rng) : random_null_cubic(rng);
    } else {
      A = random_null_cubic(rng);
      A.c(q % 64) += 1e-3;
    }
    const bool exact = is_null_cubic(A).null;
    const bool sampled = sample_null_max(A, 100000, 5000 + q) < 1e-10;
    null_count += exact;
    disagreements += exact != sampled;
  }
  CHECK(disagreements == 0);
  CHECK(null_count == 50);
}

TEST_CASE("frame bound certificates", "[nullstruct]") {
  const auto sample = cone_sample(2.0, 30.0, 8, 24, 12);
  REQUIRE_FALSE(sample.empty());

  SECTION("Minkowski form has constant 1 everywhere") {
    for (double v : frame_bound_values(eta, sample)) REQUIRE(v == Approx(1.0).epsilon(1e-12));
    const auto fb = frame_bound_certificate(eta, sample);
    CHECK(fb.constant == Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(fb.unbounded_candidate);
  }
  SECTION("e0 x e0 grows like (t/s)^2") {
    QuadraticForm e00 = QuadraticForm::Zero();
    e00(0, 0) = 1;
    const auto vals = frame_bound_values(e00, sample);
    for (std::size_t q = 0; q < sample.size(); ++q)
      REQUIRE(vals[q] == Approx(std::pow(sample[q].t / sample[q].s, 2)).epsilon(1e-12));
    const auto fb = frame_bound_certificate(e00, sample);
    CHECK(fb.min_s_over_t < 0.1);
    CHECK(fb.unbounded_candidate);
    CHECK(fb.constant > 100.0);
  }
  SECTION("oracle and refinement stability for random null forms") {
    std::mt19937_64 rng(8);
    const auto fine = cone_sample(2.0, 30.0, 15, 96, 24);
    for (int q = 0; q < 20; ++q) {
      const auto T = random_null_quadratic(rng);
      const auto vals = frame_bound_values(T, sample);
      for (std::size_t p = 0; p < sample.size(); p += 37)
        CHECK(vals[p] == Approx(frame_value_oracle(T, sample[p])).epsilon(1e-10));
      const double c0 = frame_bound_certificate(T, sample).constant;
      const double c1 = frame_bound_certificate(T, fine).constant;
      CHECK(std::abs(c1 - c0) <= 0.01 * c0);
      // cubic: Abar^{000} (t/s)^2 = l(1, -x/t), bounded by |l_0| + |l_vec| on the cone
      Eigen::Vector4d l;
      const auto A = random_null_cubic(rng, &l);
      const double sup = std::abs(l(0)) + l.tail<3>().norm();
      const double a0 = frame_bound_certificate(A, sample).constant;
      const double a1 = frame_bound_certificate(A, fine).constant;
      CHECK(a0 <= sup * (1 + 1e-12));
      CHECK(a1 <= sup * (1 + 1e-12));
      CHECK(a1 >= 0.8 * sup);
      CHECK_FALSE(frame_bound_certificate(A, fine).unbounded_candidate);
    }
  }
  SECTION("null constants are invariant under scaling of (t, x)") {
    std::mt19937_64 rng(9);
    std::vector<FoliationPoint<double>> scaled;
    for (const auto& p : sample) scaled.push_back(point_from_chart(3.7 * p.t, Eigen::Vector3d(3.7 * p.x)));
    for (int q = 0; q < 20; ++q) {
      const auto T = random_null_quadratic(rng);
      const double c0 = frame_bound_certificate(T, sample).constant, c1 = frame_bound_certificate(T, scaled).constant;
      CHECK(c1 == Approx(c0).epsilon(1e-9));
      const auto A = random_null_cubic(rng);
      const double a0 = frame_bound_certificate(A, sample).constant, a1 = frame_bound_certificate(A, scaled).constant;
      CHECK(a1 == Approx(a0).epsilon(1e-9));
    }
  }
  SECTION("errors") {
    CHECK_THROWS_AS(frame_bound_certificate(eta, {}), std::invalid_argument);
    CHECK_THROWS_AS(frame_bound_values(eta, {point_from_chart(1.0, Eigen::Vector3d(2, 0, 0))}), std::domain_error);
  }
}

TEST_CASE("pointwise null estimate", "[nullstruct]") {
  const auto p = point_from_chart(2.0, Eigen::Vector3d(1, 0, 0));
  auto e = pointwise_null_estimate(eta, Eigen::Vector4d(1, 0, 0, 0), Eigen::Vector4d(1, 0, 0, 0), p);
  CHECK(e.direct == Approx(1.0));
  CHECK(e.total == Approx(1.0));
  CHECK(e.first == Approx(0.75));
  CHECK(e.mixed == Approx(0.25));
  // independent matrix evaluation of the first term: mbar^{00} = 1 - r^2/t^2
  CHECK(e.first == Approx(1.0 - 1.0 / 4.0));

  e = pointwise_null_estimate(eta, Eigen::Vector4d(0, 1, 0, 0), Eigen::Vector4d(0, 0, 1, 0), p);
  CHECK(e.first == 0.0);

  std::mt19937_64 rng(10);
  std::normal_distribution<double> N(0.0, 1.0);
  const auto pts = cone_sample(2.0, 20.0, 5, 10, 5);
  double worst = 0;
  for (const auto& q : pts) {
    const auto T = random_quadratic(rng);
    const Eigen::Vector4d du(N(rng), N(rng), N(rng), N(rng)), dv(N(rng), N(rng), N(rng), N(rng));
    const auto est = pointwise_null_estimate(T, du, dv, q);
    worst = std::max(worst, std::abs(est.total - est.direct) / (1.0 + std::abs(est.direct)));
  }
  CHECK(worst < 1e-12 * 1e2);  // frame entries reach t/s ~ 1e1 near the cone
  CHECK_THROWS_AS(pointwise_null_estimate(eta, Eigen::Vector4d::Ones(), Eigen::Vector4d::Ones(),
                                          point_from_chart(1.0, Eigen::Vector3d(2, 0, 0))),
                  std::domain_error);
}

TEST_CASE("check_structure examples", "[nullstruct]") {
  SECTION("null self-interaction with a Klein-Gordon partner passes") {
    const auto r = check_structure(scalar_model());
    for (const auto& c : r.conditions) {
      INFO(c.name);
      CHECK(c.passed);
    }
    CHECK(r.passed());
    REQUIRE_FALSE(r.certificates.empty());
    CHECK(r.certificates.front().null);
    CHECK(r.certificates.front().frame_constant == Approx(1.0).epsilon(1e-12));
  }
  SECTION("wave source (d_t u)^2 fails the null condition") {
    auto s = scalar_model();
    s.P = {{{0, 0, 0, 0, 0}, 1.0}, {{1, 0, 0, 0, 0}, 1.0}};
    const auto r = check_structure(s);
    CHECK_FALSE(r.passed());
    const auto& c = r.condition(kNullCondition);
    CHECK_FALSE(c.passed);
    REQUIRE_FALSE(c.offending.empty());
    CHECK(c.offending.front().rfind("P(0,0,0)", 0) == 0);
    CHECK(r.condition(kNonBlowUp).passed);
    bool flagged = false;
    for (const auto& cert : r.certificates) flagged |= !cert.null && cert.unbounded_candidate;
    CHECK(flagged);
  }
  SECTION("undifferentiated wave-wave source fails non-blow-up") {
    auto s = scalar_model();
    s.R = {{{0, 0, 0}, 1.0}};
    const auto r = check_structure(s);
    CHECK_FALSE(r.condition(kNonBlowUp).passed);
    CHECK(r.condition(kNullCondition).passed);
  }
  SECTION("presets") {
    CHECK(check_structure(preset_system("free-wave")).passed());
    CHECK(check_structure(preset_system("linear-kg")).passed());
    CHECK(check_structure(preset_system("null-wave")).passed());
    CHECK(check_structure(preset_system("wkg")).passed());
    CHECK_FALSE(check_structure(preset_system("nonnull-wave")).condition(kNullCondition).passed);
    CHECK_FALSE(check_structure(preset_system("nonblowup-violation")).condition(kNonBlowUp).passed);
  }
  SECTION("symmetry and mass split") {
    auto s = scalar_model();
    s.B = {{{0, 1, 0, 1, 1}, 1.0}};  // neither (i,j)- nor (a,b)-symmetric
    CHECK_FALSE(check_structure(s).condition(kSymmetry).passed);
    s = scalar_model();
    s.mass = {0.5, 1.0};
    CHECK_FALSE(check_structure(s).condition(kMassSplit).passed);
    s.mass = {0.0, 0.5};
    s.sigma = 1.0;
    CHECK_FALSE(check_structure(s).condition(kMassSplit).passed);
  }
  SECTION("Q with an undifferentiated wave factor and the derived B restriction") {
    auto s = scalar_model();
    s.Q = {{{1, 0, 1, 0}, 1.0}};
    CHECK_FALSE(check_structure(s).condition(kNoUndifferentiatedWave).passed);
    s = scalar_model();
    s.B = {{{1, 0, 0, 0, 0}, 1.0}, {{0, 1, 0, 0, 0}, 1.0}};
    const auto r = check_structure(s);
    CHECK_FALSE(r.condition(kDerivedB).passed);
    CHECK_FALSE(r.condition(kNonBlowUp).passed);
    CHECK(r.condition(kSymmetry).passed);
  }
  SECTION("inconsistent dimensions") {
    auto s = scalar_model();
    s.P.push_back({{0, 0, 0, 2, 0}, 1.0});
    CHECK_THROWS_AS(check_structure(s), std::invalid_argument);
    s = scalar_model();
    s.mass = {0.0};
    CHECK_THROWS_AS(check_structure(s), std::invalid_argument);
  }
}

TEST_CASE("check_structure is deterministic and relabeling-invariant", "[nullstruct][property]") {
  SystemSpec s;
  s.name = "three";
  s.n0 = 3;
  s.j0 = 1;
  s.mass = {0.0, 1.0, 2.0};
  s.components = {"u", "v", "w"};
  s.P = {{{0, 0, 0, 0, 0}, 1.0}, {{0, 1, 1, 0, 0}, -1.0}, {{0, 2, 2, 0, 0}, -1.0}, {{0, 3, 3, 0, 0}, -1.0},
         {{1, 0, 0, 0, 2}, 1.0}, {{2, 0, 1, 1, 0}, 0.5}};
  s.Q = {{{2, 0, 0, 1}, 1.0}};
  s.R = {{{1, 1, 2}, 1.0}, {{2, 0, 2}, 1.0}};  // the second is a non-blow-up violation
  const auto r0 = check_structure(s);
  const auto r1 = check_structure(s);
  CHECK(verdicts(r0) == verdicts(r1));
  CHECK_FALSE(r0.condition(kNonBlowUp).passed);

  auto t = s.relabeled({0, 2, 1});
  const auto r2 = check_structure(t);
  CHECK(verdicts(r0) == verdicts(r2));
  for (std::size_t q = 0; q < r0.conditions.size(); ++q)
    CHECK(r0.conditions[q].violations == r2.conditions[q].violations);
}
