#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace corrugator {

// Variable-precision float. Precision is taken from the thread default at
// construction, which PrecisionGuard sets for the duration of a run.
using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PrecisionContext {
  int digits = 15;
  std::uint64_t rng_seed = 0;
};

// Throws ConfigError when digits < 15.
PrecisionContext make_context(int digits, std::uint64_t seed);

// Sets the default precision of newly created Reals and restores it on exit.
class PrecisionGuard {
 public:
  explicit PrecisionGuard(int digits);
  ~PrecisionGuard();
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  unsigned previous_;
};

template <class T>
struct Vec2 {
  T x{}, y{};
};

// Symmetric 2x2 matrix, off-diagonal stored once.
template <class T>
struct Sym2 {
  T b11{}, b12{}, b22{};
};

template <class T>
struct Rect {
  T x_min{}, x_max{}, y_min{}, y_max{};
};

template <class T>
void validate_rect(const Rect<T>& r) {
  if (!(r.x_min < r.x_max) || !(r.y_min < r.y_max))
    throw ConfigError("rectangle must satisfy x_min < x_max and y_min < y_max");
}

// Scalar helpers that work for double and Real alike.
template <class T>
T from_string(const std::string& s) {
  if constexpr (std::is_same_v<T, double>) {
    return std::stod(s);
  } else {
    return T(s);
  }
}

template <class T>
double to_double(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return v.template convert_to<double>();
  }
}

template <class T>
T pi_v() {
  if constexpr (std::is_same_v<T, double>) {
    return 3.14159265358979323846;
  } else {
    T r;
    mpfr_const_pi(r.backend().data(), MPFR_RNDN);
    return r;
  }
}

template <class T>
T sqrt2_v() {
  using std::sqrt;
  return sqrt(T(2));
}

template <class T>
bool is_finite(const T& v) {
  using std::isfinite;
  using boost::multiprecision::isfinite;
  return isfinite(v);
}

template <class T>
T frobenius(const Sym2<T>& m) {
  using std::sqrt;
  return sqrt(m.b11 * m.b11 + T(2) * m.b12 * m.b12 + m.b22 * m.b22);
}

// Decimal string with `decimals` significant digits, stable across runs.
std::string format_real(double v, int decimals);
std::string format_real(const Real& v, int decimals);

// Counter-based splitmix64 stream: the i-th draw depends only on (seed, i).
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t bits(std::uint64_t index) const;
  // Uniform in [0, 1) with 53 random bits.
  double unit(std::uint64_t index) const;
  // Uniform in [0, 1) with enough random bits for T at the current precision.
  template <class T>
  T unit_real(std::uint64_t index) const;
  // The i-th uniform point of the rectangle.
  template <class T>
  Vec2<T> point(const Rect<T>& r, std::uint64_t i) const;

 private:
  std::uint64_t seed_;
};

template <>
double Sampler::unit_real<double>(std::uint64_t index) const;
template <>
Real Sampler::unit_real<Real>(std::uint64_t index) const;

std::uint64_t splitmix64(std::uint64_t x);

// max of norm(f(p)) over the rectangle corners and n sampled points; f
// returns a nonnegative number.
template <class T>
struct SupEstimate {
  T value{};
  Vec2<T> argmax{};
};

template <class T>
SupEstimate<T> sup_norm_estimate(const std::function<T(const Vec2<T>&)>& norm_at,
                                 const Rect<T>& domain, std::size_t n,
                                 const PrecisionContext& ctx);

// Digits needed so a phase lambda*x*eta keeps `guard` correct digits after
// reduction mod 1.
int digits_for_phase(double log10_lambda_max, int guard = 20);

}  // namespace corrugator
