#include "corrugator/numeric.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace corrugator {

PrecisionContext make_context(int digits, std::uint64_t seed) {
  if (digits < 15) throw ConfigError("precision.digits must be at least 15");
  return PrecisionContext{digits, seed};
}

PrecisionGuard::PrecisionGuard(int digits) : previous_(Real::default_precision()) {
  Real::default_precision(static_cast<unsigned>(digits));
}

PrecisionGuard::~PrecisionGuard() { Real::default_precision(previous_); }

std::string format_real(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", std::max(decimals - 1, 0), v);
  return buf;
}

std::string format_real(const Real& v, int decimals) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(std::max(decimals - 1, 0)) << v;
  return os.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t Sampler::bits(std::uint64_t index) const {
  return splitmix64(splitmix64(seed_) ^ (index * 0xD1B54A32D192ED03ULL));
}

double Sampler::unit(std::uint64_t index) const {
  return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
}

template <>
double Sampler::unit_real<double>(std::uint64_t index) const {
  return unit(index);
}

template <>
Real Sampler::unit_real<Real>(std::uint64_t index) const {
  // Concatenate 53-bit chunks until the current precision is covered.
  const unsigned bits_needed = static_cast<unsigned>(Real::default_precision() * 3.33) + 8;
  Real r = 0;
  Real scale = 1;
  std::uint64_t k = 0;
  for (unsigned got = 0; got < bits_needed; got += 53, ++k) {
    scale /= Real(9007199254740992.0);  // 2^53
    r += Real(static_cast<double>(bits(index * 16 + k) >> 11)) * scale;
  }
  return r;
}

template <class T>
Vec2<T> Sampler::point(const Rect<T>& r, std::uint64_t i) const {
  const T u = unit_real<T>(2 * i);
  const T v = unit_real<T>(2 * i + 1);
  return {r.x_min + (r.x_max - r.x_min) * u, r.y_min + (r.y_max - r.y_min) * v};
}

template Vec2<double> Sampler::point<double>(const Rect<double>&, std::uint64_t) const;
template Vec2<Real> Sampler::point<Real>(const Rect<Real>&, std::uint64_t) const;

template <class T>
SupEstimate<T> sup_norm_estimate(const std::function<T(const Vec2<T>&)>& norm_at,
                                 const Rect<T>& domain, std::size_t n,
                                 const PrecisionContext& ctx) {
  if (n < 1) throw ConfigError("sampling.n must be at least 1");
  validate_rect(domain);
  Sampler s(ctx.rng_seed);
  SupEstimate<T> best{T(-1), {}};
  // The four corners first: sup norms of smooth fields often sit there.
  const std::array<Vec2<T>, 4> corners{Vec2<T>{domain.x_min, domain.y_min}, Vec2<T>{domain.x_max, domain.y_min},
                                       Vec2<T>{domain.x_min, domain.y_max}, Vec2<T>{domain.x_max, domain.y_max}};
  for (std::size_t i = 0; i < n + 4; ++i) {
    const Vec2<T> p = i < 4 ? corners[i] : s.point(domain, i - 4);
    T v;
    try {
      v = norm_at(p);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << e.what() << " at point (" << format_real(p.x, 20) << ", " << format_real(p.y, 20) << ")";
      throw NumericError(os.str());
    }
    if (!is_finite(v)) throw NumericError("non-finite value during sup-norm sampling");
    if (v > best.value) best = {v, p};
  }
  return best;
}

template SupEstimate<double> sup_norm_estimate<double>(const std::function<double(const Vec2<double>&)>&,
                                                       const Rect<double>&, std::size_t,
                                                       const PrecisionContext&);
template SupEstimate<Real> sup_norm_estimate<Real>(const std::function<Real(const Vec2<Real>&)>&,
                                                   const Rect<Real>&, std::size_t,
                                                   const PrecisionContext&);

int digits_for_phase(double log10_lambda_max, int guard) {
  return static_cast<int>(std::ceil(std::max(log10_lambda_max, 0.0))) + guard;
}

}  // namespace corrugator
