#pragma once

#include "corrugator/numeric.hpp"

#include <boost/container/small_vector.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace corrugator {

// Truncated bivariate Taylor polynomial around a point p:
//   f(p + (h, k)) = sum_{i+j<=N} c_ij h^i k^j.
// Arithmetic propagates exact derivatives up to the order N (forward-mode AD).
// Binary operations truncate to the smaller operand order.
template <class T>
class Taylor2 {
 public:
  static constexpr int kMaxOrder = 12;

  Taylor2() : order_(0), c_(1, T(0)) {}
  explicit Taylor2(int order, const T& value = T(0)) : order_(order), c_(size_for(order), T(0)) {
    if (order < 0 || order > kMaxOrder) throw std::invalid_argument("Taylor2 order out of range");
    c_[0] = value;
  }

  static Taylor2 constant(int order, const T& value) { return Taylor2(order, value); }
  // The coordinate function x (axis 0) or y (axis 1) around the point value.
  static Taylor2 variable(int order, const T& value, int axis) {
    Taylor2 t(order, value);
    if (order >= 1) t.at(axis == 0 ? 1 : 0, axis == 0 ? 0 : 1) = T(1);
    return t;
  }

  static int size_for(int order) { return (order + 1) * (order + 2) / 2; }
  static int index(int i, int j) {
    const int d = i + j;
    return d * (d + 1) / 2 + j;
  }

  int order() const { return order_; }
  const T& at(int i, int j) const { return c_[index(i, j)]; }
  T& at(int i, int j) { return c_[index(i, j)]; }
  const T& coeff(int idx) const { return c_[idx]; }
  T& coeff(int idx) { return c_[idx]; }
  int size() const { return static_cast<int>(c_.size()); }

  const T& value() const { return c_[0]; }
  // Partial derivative d^(i+j) / dx^i dy^j at the expansion point.
  T d(int i, int j) const {
    if (i + j > order_) throw std::out_of_range("derivative order exceeds Taylor order");
    return at(i, j) * T(factorial(i)) * T(factorial(j));
  }

  Taylor2 truncated(int order) const {
    if (order >= order_) return *this;
    Taylor2 r(order);
    for (int k = 0; k < r.size(); ++k) r.c_[k] = c_[k];
    return r;
  }

  Taylor2 dx() const { return derivative(0); }
  Taylor2 dy() const { return derivative(1); }
  Taylor2 derivative(int axis) const {
    if (order_ == 0) throw std::out_of_range("cannot differentiate an order-0 Taylor polynomial");
    Taylor2 r(order_ - 1);
    for (int d = 0; d <= order_ - 1; ++d) {
      for (int j = 0; j <= d; ++j) {
        const int i = d - j;
        if (axis == 0)
          r.at(i, j) = T(i + 1) * at(i + 1, j);
        else
          r.at(i, j) = T(j + 1) * at(i, j + 1);
      }
    }
    return r;
  }

  Taylor2& operator+=(const Taylor2& o) {
    shrink_to(o.order_);
    for (int k = 0; k < size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Taylor2& operator-=(const Taylor2& o) {
    shrink_to(o.order_);
    for (int k = 0; k < size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Taylor2& operator+=(const T& s) {
    c_[0] += s;
    return *this;
  }
  Taylor2& operator-=(const T& s) {
    c_[0] -= s;
    return *this;
  }
  Taylor2& operator*=(const T& s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Taylor2& operator/=(const T& s) {
    for (auto& v : c_) v /= s;
    return *this;
  }
  Taylor2& operator*=(const Taylor2& o) {
    *this = *this * o;
    return *this;
  }

  friend Taylor2 operator+(Taylor2 a, const Taylor2& b) { return a += b; }
  friend Taylor2 operator-(Taylor2 a, const Taylor2& b) { return a -= b; }
  friend Taylor2 operator+(Taylor2 a, const T& s) { return a += s; }
  friend Taylor2 operator+(const T& s, Taylor2 a) { return a += s; }
  friend Taylor2 operator-(Taylor2 a, const T& s) { return a -= s; }
  friend Taylor2 operator-(const T& s, const Taylor2& a) { return (-a) += s; }
  friend Taylor2 operator*(Taylor2 a, const T& s) { return a *= s; }
  friend Taylor2 operator*(const T& s, Taylor2 a) { return a *= s; }
  friend Taylor2 operator/(Taylor2 a, const T& s) { return a /= s; }
  friend Taylor2 operator-(Taylor2 a) {
    for (auto& v : a.c_) v = -v;
    return a;
  }

  friend Taylor2 operator*(const Taylor2& a, const Taylor2& b) {
    const int n = std::min(a.order_, b.order_);
    Taylor2 r(n);
    for (int d1 = 0; d1 <= n; ++d1) {
      for (int j1 = 0; j1 <= d1; ++j1) {
        const T& x = a.at(d1 - j1, j1);
        if (x == 0) continue;
        for (int d2 = 0; d1 + d2 <= n; ++d2) {
          for (int j2 = 0; j2 <= d2; ++j2) {
            r.at(d1 - j1 + d2 - j2, j1 + j2) += x * b.at(d2 - j2, j2);
          }
        }
      }
    }
    return r;
  }

  friend Taylor2 operator/(const Taylor2& a, const Taylor2& b) { return a * reciprocal(b); }

  // sum_n coeffs[n] * (u - u0)^n, where coeffs[n] = g^(n)(u0) / n!.
  static Taylor2 compose(const Taylor2& u, const std::vector<T>& coeffs) {
    Taylor2 du = u;
    du.c_[0] = T(0);
    const int n = u.order_;
    Taylor2 r(n, coeffs[n]);
    for (int k = n - 1; k >= 0; --k) {
      r = r * du;
      r.c_[0] += coeffs[k];
    }
    return r;
  }

  static long long factorial(int n) {
    long long f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
  }

 private:
  void shrink_to(int order) {
    if (order < order_) {
      order_ = order;
      c_.resize(size_for(order));
    }
  }

  int order_;
  boost::container::small_vector<T, 15> c_;
};

template <class T>
Taylor2<T> reciprocal(const Taylor2<T>& u) {
  const T u0 = u.value();
  if (u0 == 0) throw NumericError("division by zero in Taylor arithmetic");
  std::vector<T> c(u.order() + 1);
  T inv = T(1) / u0;
  T p = inv;
  for (int n = 0; n <= u.order(); ++n) {
    c[n] = (n % 2 == 0) ? p : T(-p);
    p *= inv;
  }
  return Taylor2<T>::compose(u, c);
}

template <class T>
Taylor2<T> sin(const Taylor2<T>& u) {
  using std::cos;
  using std::sin;
  const T s = sin(u.value()), co = cos(u.value());
  std::vector<T> c(u.order() + 1);
  for (int n = 0; n <= u.order(); ++n) {
    const T& base = (n % 2 == 0) ? s : co;
    const T sign = (n % 4 < 2) ? T(1) : T(-1);
    c[n] = sign * base / T(Taylor2<T>::factorial(n));
  }
  return Taylor2<T>::compose(u, c);
}

template <class T>
Taylor2<T> cos(const Taylor2<T>& u) {
  using std::cos;
  using std::sin;
  const T s = sin(u.value()), co = cos(u.value());
  std::vector<T> c(u.order() + 1);
  for (int n = 0; n <= u.order(); ++n) {
    // d^n cos = cos, -sin, -cos, sin, ...
    const T& base = (n % 2 == 0) ? co : s;
    const T sign = (n % 4 == 0 || n % 4 == 3) ? T(1) : T(-1);
    c[n] = sign * base / T(Taylor2<T>::factorial(n));
  }
  return Taylor2<T>::compose(u, c);
}

template <class T>
Taylor2<T> exp(const Taylor2<T>& u) {
  using std::exp;
  const T e = exp(u.value());
  std::vector<T> c(u.order() + 1);
  for (int n = 0; n <= u.order(); ++n) c[n] = e / T(Taylor2<T>::factorial(n));
  return Taylor2<T>::compose(u, c);
}

// Square root; the argument must stay strictly above `floor` (>= 0).
template <class T>
Taylor2<T> sqrt(const Taylor2<T>& u, const T& floor = T(0)) {
  using std::sqrt;
  const T u0 = u.value();
  if (!(u0 > floor) || !(u0 > 0)) throw NumericError("sqrt argument below its floor");
  std::vector<T> c(u.order() + 1);
  // Binomial series coefficients of sqrt(u0 + t) = sqrt(u0) * sum binom(1/2, n) (t/u0)^n.
  T binom = T(1);
  T scale = sqrt(u0);
  for (int n = 0; n <= u.order(); ++n) {
    c[n] = binom * scale;
    binom = binom * (T(1) / T(2) - T(n)) / T(n + 1);
    scale /= u0;
  }
  return Taylor2<T>::compose(u, c);
}

template <class T>
Taylor2<T> pow(const Taylor2<T>& u, int e) {
  if (e < 0) return reciprocal(pow(u, -e));
  Taylor2<T> result(u.order(), T(1));
  Taylor2<T> base = u;
  while (e > 0) {
    if (e & 1) result = result * base;
    e >>= 1;
    if (e) base = base * base;
  }
  return result;
}

template <class T>
T fractional_part(const T& t) {
  using std::floor;
  return t - floor(t);
}

// sin(2 pi k t) with t reduced modulo 1/k before the transcendental call, so
// huge phases keep their relative accuracy.
template <class T>
Taylor2<T> sin_2pi(const Taylor2<T>& t, int k = 1) {
  Taylor2<T> u = t * T(k);
  u.coeff(0) = fractional_part(u.value());
  return sin(u * (T(2) * pi_v<T>()));
}

template <class T>
Taylor2<T> cos_2pi(const Taylor2<T>& t, int k = 1) {
  Taylor2<T> u = t * T(k);
  u.coeff(0) = fractional_part(u.value());
  return cos(u * (T(2) * pi_v<T>()));
}

// Jet of a scalar function at a point: derivatives up to third order.
template <class T>
struct Jet {
  int order = 0;
  T value{};
  Vec2<T> gradient{};
  Sym2<T> hessian{};
  // (xxx, xxy, xyy, yyy)
  std::array<T, 4> third{};
};

template <class T>
Jet<T> to_jet(const Taylor2<T>& t, int order) {
  Jet<T> j;
  j.order = order;
  j.value = t.value();
  if (order >= 1) j.gradient = {t.d(1, 0), t.d(0, 1)};
  if (order >= 2) j.hessian = {t.d(2, 0), t.d(1, 1), t.d(0, 2)};
  if (order >= 3) j.third = {t.d(3, 0), t.d(2, 1), t.d(1, 2), t.d(0, 3)};
  return j;
}

// Frobenius norm of the m-th derivative tensor at the expansion point.
template <class T>
T derivative_norm(const Taylor2<T>& t, int m) {
  using std::sqrt;
  T s = T(0);
  long long binom = 1;
  for (int i = 0; i <= m; ++i) {
    const int j = m - i;
    const T d = t.d(j, i);
    s += T(binom) * d * d;
    binom = binom * (m - i) / (i + 1);
  }
  return sqrt(s);
}

}  // namespace corrugator
