#pragma once

#include <Eigen/Core>
#include <cmath>
#include <type_traits>

namespace hyperlab {

// Forward-mode dual number; nest Dual<Dual<T>> for mixed second derivatives.
template <typename T>
struct Dual {
  T v{};
  T d{};

  Dual() = default;
  Dual(const T& value) : v(value), d(T(0)) {}
  template <typename U, typename = std::enable_if_t<std::is_arithmetic_v<U> && !std::is_same_v<U, T>>>
  Dual(U value) : v(T(value)), d(T(0)) {}
  Dual(const T& value, const T& deriv) : v(value), d(deriv) {}

  static Dual variable(const T& value) { return Dual(value, T(1)); }

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

template <typename T> Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <typename T> Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <typename T> Dual<T> operator*(Dual<T> a, const Dual<T>& b) { return a *= b; }
template <typename T> Dual<T> operator/(Dual<T> a, const Dual<T>& b) { return a /= b; }
template <typename T> Dual<T> operator-(const Dual<T>& a) { return Dual<T>(-a.v, -a.d); }
template <typename T> Dual<T> operator+(const Dual<T>& a) { return a; }

template <typename T> struct is_dual : std::false_type {};
template <typename T> struct is_dual<Dual<T>> : std::true_type {};
template <typename U> concept Plain = !is_dual<U>::value;

template <typename T, Plain U> Dual<T> operator+(const Dual<T>& a, const U& b) { return a + Dual<T>(b); }
template <typename T, Plain U> Dual<T> operator+(const U& a, const Dual<T>& b) { return Dual<T>(a) + b; }
template <typename T, Plain U> Dual<T> operator-(const Dual<T>& a, const U& b) { return a - Dual<T>(b); }
template <typename T, Plain U> Dual<T> operator-(const U& a, const Dual<T>& b) { return Dual<T>(a) - b; }
template <typename T, Plain U> Dual<T> operator*(const Dual<T>& a, const U& b) { return a * Dual<T>(b); }
template <typename T, Plain U> Dual<T> operator*(const U& a, const Dual<T>& b) { return Dual<T>(a) * b; }
template <typename T, Plain U> Dual<T> operator/(const Dual<T>& a, const U& b) { return a / Dual<T>(b); }
template <typename T, Plain U> Dual<T> operator/(const U& a, const Dual<T>& b) { return Dual<T>(a) / b; }

template <typename T> bool operator<(const Dual<T>& a, const Dual<T>& b) { return a.v < b.v; }
template <typename T> bool operator>(const Dual<T>& a, const Dual<T>& b) { return a.v > b.v; }
template <typename T> bool operator<=(const Dual<T>& a, const Dual<T>& b) { return a.v <= b.v; }
template <typename T> bool operator>=(const Dual<T>& a, const Dual<T>& b) { return a.v >= b.v; }
template <typename T> bool operator==(const Dual<T>& a, const Dual<T>& b) { return a.v == b.v && a.d == b.d; }
template <typename T> bool operator!=(const Dual<T>& a, const Dual<T>& b) { return !(a == b); }

template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  const T r = sqrt(a.v);
  return Dual<T>(r, a.d / (T(2) * r));
}
template <typename T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.v);
  return Dual<T>(e, a.d * e);
}
template <typename T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return Dual<T>(log(a.v), a.d / a.v);
}
template <typename T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return Dual<T>(sin(a.v), a.d * cos(a.v));
}
template <typename T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return Dual<T>(cos(a.v), -(a.d * sin(a.v)));
}
template <typename T>
Dual<T> pow(const Dual<T>& a, int n) {
  if (n == 0) return Dual<T>(T(1));
  Dual<T> r = a;
  for (int i = 1; i < n; ++i) r = r * a;
  return r;
}

// strip every nesting level
inline double value_of(double x) { return x; }
template <typename T> auto value_of(const Dual<T>& a) { return value_of(a.v); }

// Dual nested N times; seed every level with the same direction to get d^k along it.
template <int N> struct NestedDualT { using type = Dual<typename NestedDualT<N - 1>::type>; };
template <> struct NestedDualT<0> { using type = double; };
template <int N> using NestedDual = typename NestedDualT<N>::type;

template <typename T>
T seed_dual(double x, double dx) {
  if constexpr (std::is_same_v<T, double>) return x;
  else return T(seed_dual<decltype(T{}.v)>(x, dx), decltype(T{}.v)(dx));
}

// k-th derivative along the seeded direction
template <typename T>
double dual_component(const T& a, int k) {
  if constexpr (std::is_same_v<T, double>) return k == 0 ? a : 0.0;
  else return k == 0 ? value_of(a) : dual_component(a.d, k - 1);
}

}  // namespace hyperlab

namespace Eigen {
template <typename T>
struct NumTraits<hyperlab::Dual<T>> : NumTraits<T> {
  using Real = hyperlab::Dual<T>;
  using NonInteger = hyperlab::Dual<T>;
  using Nested = hyperlab::Dual<T>;
  using Literal = hyperlab::Dual<T>;
  enum { IsComplex = 0, IsInteger = 0, IsSigned = 1, RequireInitialization = 1, ReadCost = 1, AddCost = 3, MulCost = 3 };
};
}  // namespace Eigen
