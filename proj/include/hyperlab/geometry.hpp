#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace hyperlab {

template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Vec4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar> using Mat4 = Eigen::Matrix<Scalar, 4, 4>;

// plain loops: Eigen's product/assignment paths trip over boost::multiprecision scalars
template <typename Scalar, typename A, typename B>
Mat4<Scalar> mul4(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  Mat4<Scalar> out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Scalar acc(0);
      for (int k = 0; k < 4; ++k) acc += Scalar(a(i, k)) * Scalar(b(k, j));
      out(i, j) = acc;
    }
  return out;
}

// t(s,x) on H_s and the cone K = {r < t - 1}.
// Points with r >= t carry s = 0 and inside_light_cone = false.
template <typename Scalar = double>
struct FoliationPoint {
  Scalar t{1};
  Vec3<Scalar> x = Vec3<Scalar>::Zero();
  Scalar s{1};
  Scalar r{0};
  bool inside_light_cone = true;
  bool in_cone = false;
};

template <typename Scalar>
FoliationPoint<Scalar> lift_to_hyperboloid(const Scalar& s, const Vec3<Scalar>& x) {
  using std::sqrt;
  if (!(s > Scalar(0))) throw std::domain_error("lift_to_hyperboloid: s must be positive");
  FoliationPoint<Scalar> p;
  p.x = x;
  p.r = sqrt(x.squaredNorm());
  p.t = sqrt(s * s + x.squaredNorm());
  p.s = s;
  p.inside_light_cone = true;
  p.in_cone = p.r < p.t - Scalar(1);
  return p;
}

template <typename Scalar>
FoliationPoint<Scalar> point_from_chart(const Scalar& t, const Vec3<Scalar>& x) {
  using std::sqrt;
  FoliationPoint<Scalar> p;
  p.t = t;
  p.x = x;
  p.r = sqrt(x.squaredNorm());
  const Scalar s2 = t * t - x.squaredNorm();
  p.inside_light_cone = t > Scalar(0) && s2 > Scalar(0);
  p.s = p.inside_light_cone ? Scalar(sqrt(s2)) : Scalar(0);
  p.in_cone = p.r < t - Scalar(1);
  return p;
}

double slice_support_radius(double s);

// Natural frame -> semi-hyperboloidal frame.  Rows/cols indexed 0..3, phi(a,0) = x^a/t.
template <typename Scalar = double>
struct FrameMatrices {
  Mat4<Scalar> phi;
  Mat4<Scalar> psi;
};

// Only x/t enters, so the frame is defined for rational (t,x) without square roots.
template <typename Scalar>
FrameMatrices<Scalar> frame_matrices(const Scalar& t, const Vec3<Scalar>& x) {
  if (!(t > Scalar(0))) throw std::domain_error("frame_matrices: t must be positive");
  FrameMatrices<Scalar> f;
  f.phi.setIdentity();
  f.psi.setIdentity();
  for (int a = 0; a < 3; ++a) {
    f.phi(a + 1, 0) = x(a) / t;
    f.psi(a + 1, 0) = -x(a) / t;
  }
  return f;
}

template <typename Scalar>
FrameMatrices<Scalar> frame_matrices(const FoliationPoint<Scalar>& p) {
  return frame_matrices(p.t, p.x);
}

template <typename Scalar>
Mat4<Scalar> minkowski() {
  Mat4<Scalar> m = Mat4<Scalar>::Zero();
  m(0, 0) = Scalar(1);
  m(1, 1) = m(2, 2) = m(3, 3) = Scalar(-1);
  return m;
}

template <typename Scalar = double>
struct SemiFrameMetric {
  Mat4<Scalar> m_up;
  Mat4<Scalar> m_down;
};

template <typename Scalar>
SemiFrameMetric<Scalar> semi_frame_metric(const Scalar& t, const Vec3<Scalar>& x) {
  if (!(t > Scalar(0)) || !(t * t - x.squaredNorm() > Scalar(0)))
    throw std::domain_error("semi_frame_metric: point not inside the light cone");
  const auto f = frame_matrices(t, x);
  const Mat4<Scalar> m = minkowski<Scalar>();
  // m_up^{ab} = Psi_{a'}^a Psi_{b'}^b m^{a'b'}; the lowered version uses Phi.
  return {mul4<Scalar>(mul4<Scalar>(f.psi.transpose(), m), f.psi), mul4<Scalar>(mul4<Scalar>(f.phi, m), f.phi.transpose())};
}

template <typename Scalar>
SemiFrameMetric<Scalar> semi_frame_metric(const FoliationPoint<Scalar>& p) {
  if (!p.inside_light_cone) throw std::domain_error("semi_frame_metric: point not inside the light cone");
  return semi_frame_metric(p.t, p.x);
}

// Tbar^{ab} = T^{a'b'} Psi_{a'}^a Psi_{b'}^b.
template <typename Derived, typename Scalar>
Mat4<Scalar> frame_transform_tensor2(const Eigen::MatrixBase<Derived>& T, const Scalar& t,
                                     const Vec3<Scalar>& x) {
  if (!(t * t - x.squaredNorm() > Scalar(0)))
    throw std::domain_error("frame_transform_tensor2: point not inside the light cone");
  const auto f = frame_matrices(t, x);
  return mul4<Scalar>(mul4<Scalar>(f.psi.transpose(), T), f.psi);
}

template <typename Derived, typename Scalar>
Mat4<Scalar> frame_transform_tensor2(const Eigen::MatrixBase<Derived>& T, const FoliationPoint<Scalar>& p) {
  return frame_transform_tensor2(T, p.t, p.x);
}

template <typename Derived, typename Scalar>
Mat4<Scalar> frame_untransform_tensor2(const Eigen::MatrixBase<Derived>& Tbar, const Scalar& t,
                                       const Vec3<Scalar>& x) {
  const auto f = frame_matrices(t, x);
  return mul4<Scalar>(mul4<Scalar>(f.phi.transpose(), Tbar), f.phi);
}

// Gradient components: dbar_alpha u = Phi_alpha^beta d_beta u.
template <typename Scalar>
Vec4<Scalar> frame_gradient(const Vec4<Scalar>& du, const Scalar& t, const Vec3<Scalar>& x) {
  return frame_matrices(t, x).phi * du;
}

}  // namespace hyperlab
