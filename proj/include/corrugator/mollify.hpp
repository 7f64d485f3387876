#pragma once

#include "corrugator/field.hpp"
#include "corrugator/numeric.hpp"
#include "corrugator/taylor.hpp"

#include <array>

namespace corrugator {

// Ei(x) for x < 0 by its power series gamma + ln|x| + sum x^k / (k k!).
template <class T>
T exponential_integral_ei(const T& x);

// A = integral over the unit disk of exp(-1 / (1 - |x|^2)) = pi (1/e + Ei(-1)).
template <class T>
T kernel_normalization();

// phi_l(x) = (1 / l^2) (1 / A) exp(-1 / (1 - |x / l|^2)) inside the disk of radius l.
template <class T>
T kernel_value(const Vec2<T>& x, const T& l);

// Taylor expansion of the unit-scale kernel at p (p strictly inside the disk).
template <class T>
Taylor2<T> kernel_taylor(const Vec2<T>& p, int order);

// L^1 norms of phi, grad phi, grad^2 phi, grad^3 phi (Frobenius norms of the
// derivative tensors). The kernel is radial, so each norm is a 1D integral
// 2 pi int_0^1 r |grad^m phi(r, 0)| dr, evaluated by the midpoint rule.
template <class T>
struct KernelNorms {
  std::array<T, 4> l1{};
  int nodes = 0;  // radial nodes of the accepted refinement
};

template <class T>
KernelNorms<T> kernel_norms(int quadrature_n = 1000, double tol = 1e-8, int max_doublings = 12);

// Moment int x^p y^q phi(x, y) dx dy of the unit kernel (zero unless p, q even).
template <class T>
T kernel_moment(int p, int q);

struct MollifyConfig {
  enum class Method { Auto, Moments, Quadrature };
  Method method = Method::Auto;
  int quadrature_n = 64;         // initial nodes per axis, doubled until converged
  double tol = 1e-8;             // relative agreement of successive refinements
  int max_doublings = 6;
  int moment_order = 4;          // highest kernel moment used by the expansion
  double moment_threshold = 1e-3;  // Auto uses moments for l at or below this
};

struct MollifyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// f * phi_l as an evaluable field. `r` is the inset width of the domain on
// which f is known; l must be smaller.
//
// Moments: the Taylor polynomial of f at x of order (order + moment_order) is
// convolved exactly with the kernel. This is exact for polynomials of that
// degree and otherwise has error O(l^(moment_order + 2)).
// Quadrature: tensor-product midpoint rule over the support square, applied
// to Taylor expansions of f at the nodes, refined until the value converges.
template <class T>
ScalarField<T> mollify(const ScalarField<T>& f, const T& l, const T& r, const MollifyConfig& cfg = {});

template <class T>
SymMatField<T> mollify(const SymMatField<T>& f, const T& l, const T& r, const MollifyConfig& cfg = {}) {
  return {mollify(f.b11, l, r, cfg), mollify(f.b12, l, r, cfg), mollify(f.b22, l, r, cfg)};
}

template <class T>
VectorField2<T> mollify(const VectorField2<T>& f, const T& l, const T& r, const MollifyConfig& cfg = {}) {
  return {mollify(f.c1, l, r, cfg), mollify(f.c2, l, r, cfg)};
}

}  // namespace corrugator
