#pragma once

#include "corrugator/basis.hpp"
#include "corrugator/field.hpp"
#include "corrugator/taylor.hpp"

#include <array>
#include <optional>
#include <sstream>
#include <vector>

namespace corrugator {

// Oscillation profiles V = (a/pi) sin(2 pi t), W = -(a^2 / 4pi) sin(4 pi t)
// and their derivatives for given a, grad a and phase t.
template <class T>
struct Profiles {
  T V, dtV;
  Vec2<T> gradV;
  T W, dtW;
  Vec2<T> gradW;
};

template <class T>
Profiles<T> profiles(const T& a, const Vec2<T>& grad_a, const T& t) {
  using std::cos;
  using std::sin;
  const T pi = pi_v<T>();
  const T tr = fractional_part(t);
  const T s2 = sin(T(2) * pi * tr), c2 = cos(T(2) * pi * tr);
  const T s4 = sin(T(4) * pi * tr), c4 = cos(T(4) * pi * tr);
  Profiles<T> p;
  p.V = a / pi * s2;
  p.dtV = T(2) * a * c2;
  p.gradV = {grad_a.x / pi * s2, grad_a.y / pi * s2};
  p.W = -a * a / (T(4) * pi) * s4;
  p.dtW = -a * a * c4;
  p.gradW = {-a * grad_a.x / (T(2) * pi) * s4, -a * grad_a.y / (T(2) * pi) * s4};
  return p;
}

// The phase t = lambda x.eta as a Taylor polynomial around p.
template <class T>
Taylor2<T> phase(const Vec2<T>& p, const Vec2<T>& eta, const T& lambda, int order) {
  Taylor2<T> t(order, lambda * (p.x * eta.x + p.y * eta.y));
  if (order >= 1) {
    t.at(1, 0) = lambda * eta.x;
    t.at(0, 1) = lambda * eta.y;
  }
  return t;
}

// One corrugation step applied to Taylor expansions at p:
//   v <- v + V/lambda,  w <- w - (V/lambda) grad v + (W/lambda) eta.
// The orders of the results follow the truncation rules of Taylor2.
template <class T>
void corrugate(Taylor2<T>& v, Taylor2<T>& w1, Taylor2<T>& w2, const Taylor2<T>& a, const Vec2<T>& p,
               const Vec2<T>& eta, const T& lambda) {
  const T pi = pi_v<T>();
  const Taylor2<T> t = phase(p, eta, lambda, a.order());
  const Taylor2<T> V = a * sin_2pi(t) / pi;
  const Taylor2<T> W = -(a * a) * sin_2pi(t, 2) / (T(4) * pi);
  const Taylor2<T> vx = v.dx(), vy = v.dy();
  const Taylor2<T> Vl = V / lambda;
  w1 = w1 - Vl * vx + W * (eta.x / lambda);
  w2 = w2 - Vl * vy + W * (eta.y / lambda);
  v = v + Vl;
}

template <class T>
struct StepParams {
  ScalarField<T> a;
  Vec2<T> eta;
  T lambda;
};

// Field-level step. Evaluating w_lambda at order n evaluates v at order n + 1.
template <class T>
std::pair<ScalarField<T>, VectorField2<T>> one_step(const ScalarField<T>& v, const VectorField2<T>& w,
                                                    const StepParams<T>& s) {
  if (!(s.lambda > 0)) throw ConfigError("corrugation frequency must be positive");
  ScalarField<T> vl([v, s](const Vec2<T>& p, int order) {
    Taylor2<T> vt = v.eval(p, order + 1), w1(order), w2(order);
    corrugate(vt, w1, w2, s.a.eval(p, order), p, s.eta, s.lambda);
    return vt.truncated(order);
  });
  auto wl = [v, w, s](int comp) {
    return ScalarField<T>([v, w, s, comp](const Vec2<T>& p, int order) {
      Taylor2<T> vt = v.eval(p, order + 1);
      Taylor2<T> w1 = w.c1.eval(p, order), w2 = w.c2.eval(p, order);
      corrugate(vt, w1, w2, s.a.eval(p, order), p, s.eta, s.lambda);
      return comp == 0 ? w1 : w2;
    });
  };
  return {vl, VectorField2<T>{wl(0), wl(1)}};
}

// Right-hand sides of the pointwise one-step estimates, evaluated from the
// norms of a, v and their derivatives at a point.
template <class T>
struct StepBoundInputs {
  T a, grad_a, hess_a;  // a, |grad a|, |grad^2 a|
  T grad_v, hess_v;     // |grad v|, |grad^2 v|
  T lambda;
};

template <class T>
struct StepBounds {
  T defect;     // |B| with B the defect change minus a^2 eta (x) eta
  T v;          // |v_lambda - v|
  T w;          // |w_lambda - w|
  T grad_v;     // |grad v_lambda - grad v|
  T grad_w;     // |grad w_lambda - grad w|
  T hess_v;     // |grad^2 v_lambda - grad^2 v|
};

template <class T>
StepBounds<T> step_bounds(const StepBoundInputs<T>& in) {
  const T pi = pi_v<T>();
  const T& a = in.a;
  const T& l = in.lambda;
  StepBounds<T> b;
  b.defect = (a * in.grad_a / (T(2) * pi) + a * in.hess_v / pi) / l + in.grad_a * in.grad_a / (T(2) * l * l * pi * pi);
  b.v = a / (l * pi);
  b.w = a / (l * pi) * (in.grad_v + a / T(4));
  b.grad_v = in.grad_a / (l * pi) + T(2) * a;
  b.grad_w = T(2) * a * in.grad_v + a * a +
             (in.grad_v * in.grad_a / pi + a * in.hess_v / pi + a * in.grad_a / (T(2) * pi)) / l;
  b.hess_v = in.hess_a / (l * pi) + T(4) * in.grad_a + T(4) * l * pi * a;
  return b;
}

// Right-hand side of the defect-change estimate at pt for the step s applied to v.
template <class T>
T step_error_bound(const ScalarField<T>& v, const StepParams<T>& s, const Vec2<T>& pt) {
  const Taylor2<T> at = s.a.eval(pt, 1);
  const Taylor2<T> vt = v.eval(pt, 2);
  StepBoundInputs<T> in{at.value(), derivative_norm(at, 1), T(0), derivative_norm(vt, 1), derivative_norm(vt, 2),
                        s.lambda};
  return step_bounds(in).defect;
}

// |grad f| as a matrix norm for the Jacobian of a vector field (f1, f2).
template <class T>
T jacobian_norm(const Taylor2<T>& f1, const Taylor2<T>& f2) {
  using std::sqrt;
  const T a = f1.d(1, 0), b = f1.d(0, 1), c = f2.d(1, 0), d = f2.d(0, 1);
  return sqrt(a * a + b * b + c * c + d * d);
}

// 1/2 grad v (x) grad v + sym grad w at the expansion point, from order >= 1
// expansions.
template <class T>
Sym2<T> metric_part(const Taylor2<T>& v, const Taylor2<T>& w1, const Taylor2<T>& w2) {
  const T vx = v.d(1, 0), vy = v.d(0, 1);
  return {vx * vx / T(2) + w1.d(1, 0), vx * vy / T(2) + (w1.d(0, 1) + w2.d(1, 0)) / T(2),
          vy * vy / T(2) + w2.d(0, 1)};
}

// The linear w-field whose symmetric gradient is bound * diag(shift).
// Subtracting it from w adds bound * diag(shift) to the defect.
template <class T>
VectorField2<T> w_shift_field(const T& bound) {
  if (bound < 0) throw ConfigError("shift bound must be nonnegative");
  const Vec2<T> d = shift_diagonal<T>();
  const T cx = bound * d.x, cy = bound * d.y;
  return {ScalarField<T>([cx](const Vec2<T>& p, int order) { return Taylor2<T>::variable(order, p.x, 0) * cx; }),
          ScalarField<T>([cy](const Vec2<T>& p, int order) { return Taylor2<T>::variable(order, p.y, 1) * cy; })};
}

// Three-direction corrugation chain evaluated pointwise. Amplitudes are
// a_k = sqrt(scale * phi_k) of the defect of (v, w) against amplitude_matrix,
// unless explicit amplitude fields are supplied.
template <class T>
struct ChainSpec {
  ScalarField<T> v;
  VectorField2<T> w;
  SymMatField<T> amplitude_matrix;
  T amplitude_scale = T(1);
  T amplitude_floor = T(0);
  std::optional<std::array<ScalarField<T>, 3>> amplitudes;
  std::array<Vec2<T>, 3> etas = frame_vectors<T>();
  std::vector<T> lambdas;
};

template <class T>
struct ChainPoint {
  // Levels 0..steps; level k holds (v_k, w_k) after k corrugations.
  std::vector<Taylor2<T>> v, w1, w2;
  std::array<Taylor2<T>, 3> a;
  Coefficients<Taylor2<T>> phi;  // of the amplitude defect
};

// With base order N: a_k and v_k (k >= 1) have order N-1, w_1 order N-1 and
// w_k (k >= 2) order N-2.
template <class T>
ChainPoint<T> eval_chain(const ChainSpec<T>& spec, const Vec2<T>& p, int base_order, int steps) {
  if (steps < 0 || steps > static_cast<int>(spec.lambdas.size()) || steps > 3)
    throw ConfigError("chain has fewer frequencies than requested steps");
  ChainPoint<T> out;
  out.v.reserve(steps + 1);
  out.v.push_back(spec.v.eval(p, base_order));
  out.w1.push_back(spec.w.c1.eval(p, base_order));
  out.w2.push_back(spec.w.c2.eval(p, base_order));
  const int amp_order = base_order - 1;
  if (spec.amplitudes) {
    for (int k = 0; k < 3; ++k) out.a[k] = (*spec.amplitudes)[k].eval(p, amp_order);
  } else {
    const Taylor2<T> vx = out.v[0].dx(), vy = out.v[0].dy();
    const Sym2<Taylor2<T>> am = spec.amplitude_matrix.eval(p, amp_order);
    const Sym2<Taylor2<T>> d{am.b11 - vx * vx / T(2) - out.w1[0].dx(),
                             am.b12 - vx * vy / T(2) - (out.w1[0].dy() + out.w2[0].dx()) / T(2),
                             am.b22 - vy * vy / T(2) - out.w2[0].dy()};
    out.phi = decompose(d);
    for (int k = 0; k < 3; ++k) {
      const Taylor2<T> arg = out.phi[k] * spec.amplitude_scale;
      if (!(arg.value() > spec.amplitude_floor) || !(arg.value() > 0)) {
        std::ostringstream os;
        os << "amplitude " << k + 1 << " argument " << format_real(arg.value(), 12) << " not above floor "
           << format_real(spec.amplitude_floor, 12) << " at (" << format_real(p.x, 17) << ", "
           << format_real(p.y, 17) << ")";
        throw SingularityError(os.str());
      }
      out.a[k] = sqrt(arg, spec.amplitude_floor);
    }
  }
  for (int k = 0; k < steps; ++k) {
    Taylor2<T> v = out.v.back(), w1 = out.w1.back(), w2 = out.w2.back();
    corrugate(v, w1, w2, out.a[k], p, spec.etas[k], spec.lambdas[k]);
    out.v.push_back(std::move(v));
    out.w1.push_back(std::move(w1));
    out.w2.push_back(std::move(w2));
  }
  return out;
}

}  // namespace corrugator
