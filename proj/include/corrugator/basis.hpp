#pragma once

#include "corrugator/numeric.hpp"

#include <array>

namespace corrugator {

// The fixed frame eta_1 = (1,0), eta_2 = (1,2)/sqrt5, eta_3 = (1,-2)/sqrt5.
template <class T>
std::array<Vec2<T>, 3> frame_vectors() {
  using std::sqrt;
  const T s5 = sqrt(T(5));
  return {Vec2<T>{T(1), T(0)}, Vec2<T>{T(1) / s5, T(2) / s5}, Vec2<T>{T(1) / s5, T(-2) / s5}};
}

template <class S>
using Coefficients = std::array<S, 3>;

// Coefficients phi_k with B = sum phi_k eta_k (x) eta_k. S may be a scalar or
// a Taylor polynomial.
template <class S>
Coefficients<S> decompose(const Sym2<S>& b) {
  return {b.b11 - b.b22 / 4, (b.b22 + b.b12 * 2) * 5 / 8, (b.b22 - b.b12 * 2) * 5 / 8};
}

template <class S>
Sym2<S> recompose(const Coefficients<S>& c) {
  // eta_2 (x) eta_2 = [[1,2],[2,4]]/5, eta_3 (x) eta_3 = [[1,-2],[-2,4]]/5.
  return {c[0] + (c[1] + c[2]) / 5, (c[1] - c[2]) * 2 / 5, (c[1] + c[2]) * 4 / 5};
}

// Diagonal of the positivity-shift matrix: ((sqrt2+9)/4, sqrt2+9/5).
template <class T>
Vec2<T> shift_diagonal() {
  const T s2 = sqrt2_v<T>();
  return {(s2 + T(9)) / T(4), s2 + T(9) / T(5)};
}

// B + alpha * diag(shift); every coefficient of the result is at least alpha/2.
template <class T>
Sym2<T> positivity_shift(const Sym2<T>& b, const T& alpha) {
  if (alpha < frobenius(b)) throw NumericError("positivity shift requires alpha >= |B|");
  const Vec2<T> d = shift_diagonal<T>();
  return {b.b11 + alpha * d.x, b.b12, b.b22 + alpha * d.y};
}

template <class T>
Sym2<T> rank_one(const Vec2<T>& eta) {
  return {eta.x * eta.x, eta.x * eta.y, eta.y * eta.y};
}

template <class T>
T trace(const Sym2<T>& b) {
  return b.b11 + b.b22;
}

template <class T>
T min_eigenvalue(const Sym2<T>& b) {
  using std::sqrt;
  const T half_tr = (b.b11 + b.b22) / T(2);
  const T half_diff = (b.b11 - b.b22) / T(2);
  return half_tr - sqrt(half_diff * half_diff + b.b12 * b.b12);
}

}  // namespace corrugator
