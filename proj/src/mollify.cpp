#include "corrugator/mollify.hpp"

#include <cmath>
#include <vector>

namespace corrugator {

namespace {

template <class T>
T euler_gamma() {
  if constexpr (std::is_same_v<T, double>) {
    return 0.57721566490153286061;
  } else {
    T r;
    mpfr_const_euler(r.backend().data(), MPFR_RNDN);
    return r;
  }
}

template <class T>
T epsilon_of() {
  if constexpr (std::is_same_v<T, double>) {
    return std::numeric_limits<double>::epsilon();
  } else {
    using std::pow;
    return pow(T(10), -static_cast<int>(T::default_precision()));
  }
}

template <class T>
Taylor2<T> unit_kernel_taylor(const Vec2<T>& p, int order, const T& a_norm) {
  const Taylor2<T> x = Taylor2<T>::variable(order, p.x, 0);
  const Taylor2<T> y = Taylor2<T>::variable(order, p.y, 1);
  const Taylor2<T> u = Taylor2<T>::constant(order, T(1)) - x * x - y * y;
  if (!(u.value() > 0)) return Taylor2<T>(order);
  return exp(-reciprocal(u)) / a_norm;
}

// I_j = int_0^1 u^j exp(-1/u) du via (j + 2) I_(j+1) = 1/e - I_j.
template <class T>
std::vector<T> radial_integrals(int count) {
  using std::exp;
  std::vector<T> out(static_cast<std::size_t>(count));
  const T inv_e = exp(T(-1));
  out[0] = inv_e + exponential_integral_ei(T(-1));
  for (int j = 1; j < count; ++j) out[j] = (inv_e - out[j - 1]) / T(j + 1);
  return out;
}

// (2k - 1)!! with (-1)!! = 1.
double double_factorial_odd(int k) {
  double r = 1;
  for (int i = 2 * k - 1; i > 1; i -= 2) r *= i;
  return r;
}

double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

template <class T>
T exponential_integral_ei(const T& x) {
  using std::abs;
  using std::log;
  if (!(x < 0)) throw std::domain_error("exponential_integral_ei expects a negative argument");
  T sum = T(0), term = T(1);
  const T eps = epsilon_of<T>();
  for (int k = 1; k < 100000; ++k) {
    term *= x / T(k);
    const T add = term / T(k);
    sum += add;
    if (abs(add) <= eps * abs(sum)) break;
  }
  return euler_gamma<T>() + log(abs(x)) + sum;
}

template <class T>
T kernel_normalization() {
  using std::exp;
  return pi_v<T>() * (exp(T(-1)) + exponential_integral_ei(T(-1)));
}

template <class T>
T kernel_value(const Vec2<T>& x, const T& l) {
  using std::exp;
  if (!(l > 0 && l <= 1)) throw std::domain_error("kernel scale must lie in (0, 1]");
  const T s = (x.x * x.x + x.y * x.y) / (l * l);
  if (!(s < 1)) return T(0);
  return exp(T(-1) / (T(1) - s)) / (kernel_normalization<T>() * l * l);
}

template <class T>
Taylor2<T> kernel_taylor(const Vec2<T>& p, int order) {
  return unit_kernel_taylor(p, order, kernel_normalization<T>());
}

template <class T>
KernelNorms<T> kernel_norms(int quadrature_n, double tol, int max_doublings) {
  using std::abs;
  if (quadrature_n < 1000) throw ConfigError("kernel norm quadrature needs at least 1000 nodes");
  const T a_norm = kernel_normalization<T>();
  const T two_pi = T(2) * pi_v<T>();
  auto integrate = [&](int n) {
    std::array<T, 4> s{};
    const T h = T(1) / T(n);
    for (int i = 0; i < n; ++i) {
      const T r = (T(i) + T(0.5)) * h;
      const Taylor2<T> t = unit_kernel_taylor(Vec2<T>{r, T(0)}, 3, a_norm);
      for (int m = 0; m < 4; ++m) s[m] += r * derivative_norm(t, m);
    }
    for (auto& v : s) v *= two_pi * h;
    return s;
  };
  int n = quadrature_n;
  std::array<T, 4> prev = integrate(n);
  for (int d = 0; d < max_doublings; ++d) {
    n *= 2;
    const std::array<T, 4> cur = integrate(n);
    bool done = true;
    for (int m = 0; m < 4; ++m)
      if (abs(cur[m] - prev[m]) > T(tol) * abs(cur[m])) done = false;
    prev = cur;
    if (done) return {cur, n};
  }
  throw MollifyError("kernel norm quadrature did not converge");
}

template <class T>
T kernel_moment(int p, int q) {
  if (p < 0 || q < 0) throw std::invalid_argument("moment orders must be nonnegative");
  if (p % 2 || q % 2) return T(0);
  const int a = p / 2, b = q / 2, m = a + b;
  // Radial part int_0^1 r^(p+q+1) exp(-1/(1-r^2)) dr = (1/2) sum_j C(m,j) (-1)^j I_j.
  const std::vector<T> ij = radial_integrals<T>(m + 1);
  T radial = T(0);
  for (int j = 0; j <= m; ++j) radial += T(binomial(m, j)) * (j % 2 ? T(-1) : T(1)) * ij[j];
  radial /= T(2);
  // Angular part int cos^p sin^q = 2 pi (p-1)!! (q-1)!! / (2^m m!).
  T angular = T(2) * pi_v<T>() * T(double_factorial_odd(a)) * T(double_factorial_odd(b));
  for (int i = 1; i <= m; ++i) angular /= T(2 * i);
  return radial * angular / kernel_normalization<T>();
}

template <class T>
ScalarField<T> mollify(const ScalarField<T>& f, const T& l, const T& r, const MollifyConfig& cfg) {
  if (!(l > 0 && l < 1)) throw MollifyError("mollification scale must lie in (0, 1)");
  if (!(l < r)) throw MollifyError("mollification scale must be smaller than the inset width");
  const bool moments = cfg.method == MollifyConfig::Method::Moments ||
                       (cfg.method == MollifyConfig::Method::Auto && to_double(l) <= cfg.moment_threshold);
  if (moments) {
    const int rm = cfg.moment_order - cfg.moment_order % 2;
    // weight[p][q] = M_pq l^(p+q) for even p, q with p + q <= rm.
    std::vector<std::vector<T>> weight(rm + 1, std::vector<T>(rm + 1, T(0)));
    for (int p = 0; p <= rm; p += 2)
      for (int q = 0; p + q <= rm; q += 2) {
        using std::pow;
        weight[p][q] = kernel_moment<T>(p, q) * pow(l, p + q);
      }
    return ScalarField<T>([f, weight, rm](const Vec2<T>& x, int order) {
      const int big = std::min(order + rm, Taylor2<T>::kMaxOrder);
      const Taylor2<T> c = f.eval(x, big);
      Taylor2<T> out(order);
      for (int i = 0; i <= order; ++i)
        for (int j = 0; i + j <= order; ++j) {
          T s = T(0);
          for (int p = 0; p <= rm; p += 2)
            for (int q = 0; p + q <= rm; q += 2) {
              if (i + p + j + q > big) continue;
              s += c.at(i + p, j + q) * T(binomial(i + p, p) * binomial(j + q, q)) * weight[p][q];
            }
          out.at(i, j) = s;
        }
      return out;
    });
  }
  const T a_norm = kernel_normalization<T>();
  return ScalarField<T>([f, l, a_norm, cfg](const Vec2<T>& x, int order) {
    using std::abs;
    auto integrate = [&](int n) {
      Taylor2<T> acc(order);
      const T h = T(2) / T(n);  // unit-support step
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const Vec2<T> z{T(-1) + (T(i) + T(0.5)) * h, T(-1) + (T(j) + T(0.5)) * h};
          const T s = z.x * z.x + z.y * z.y;
          if (!(s < 1)) continue;
          using std::exp;
          const T wgt = exp(T(-1) / (T(1) - s)) / a_norm * h * h;
          acc += f.eval(Vec2<T>{x.x - l * z.x, x.y - l * z.y}, order) * wgt;
        }
      return acc;
    };
    int n = cfg.quadrature_n;
    Taylor2<T> prev = integrate(n);
    for (int d = 0; d < cfg.max_doublings; ++d) {
      n *= 2;
      Taylor2<T> cur = integrate(n);
      const T scale = std::max(abs(cur.value()), T(1e-300));
      if (abs(cur.value() - prev.value()) <= T(cfg.tol) * scale) return cur;
      prev = std::move(cur);
    }
    throw MollifyError("mollification quadrature did not converge");
  });
}

#define CORRUGATOR_MOLLIFY(T)                                                                       \
  template T exponential_integral_ei<T>(const T&);                                                  \
  template T kernel_normalization<T>();                                                             \
  template T kernel_value<T>(const Vec2<T>&, const T&);                                             \
  template Taylor2<T> kernel_taylor<T>(const Vec2<T>&, int);                                        \
  template KernelNorms<T> kernel_norms<T>(int, double, int);                                        \
  template T kernel_moment<T>(int, int);                                                            \
  template ScalarField<T> mollify<T>(const ScalarField<T>&, const T&, const T&, const MollifyConfig&);

CORRUGATOR_MOLLIFY(double)
CORRUGATOR_MOLLIFY(Real)

}  // namespace corrugator
