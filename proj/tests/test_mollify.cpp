#include "corrugator/mollify.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace corrugator;

namespace {

ScalarField<double> field(const std::string& s) { return ScalarField<double>::from_expr(parse(s)); }

MollifyConfig with(MollifyConfig::Method m) {
  MollifyConfig c;
  c.method = m;
  return c;
}

}  // namespace

TEST_CASE("exponential integral at -1") {
  // Reference value of Ei(-1) to 20 digits.
  CHECK(exponential_integral_ei(-1.0) == doctest::Approx(-0.21938393439552027368).epsilon(1e-15));
  PrecisionGuard g(50);
  CHECK(abs(exponential_integral_ei(Real(-1)) - Real("-0.21938393439552027367716377546012164903")) < Real("1e-38"));
  CHECK_THROWS(exponential_integral_ei(0.5));
}

TEST_CASE("kernel normalization against direct quadrature") {
  const double a = kernel_normalization<double>();
  CHECK(a >= 0.46);
  CHECK(a <= 0.47);
  CHECK(a == doctest::Approx(oracle::disk_moment(0, 0)).epsilon(1e-7));
  const double phi0 = kernel_value(Vec2<double>{0, 0}, 1.0);
  CHECK(phi0 == doctest::Approx(std::exp(-1.0) / oracle::disk_moment(0, 0)).epsilon(1e-7));
  CHECK(phi0 == doctest::Approx(0.78857).epsilon(1e-5));
  CHECK(kernel_value(Vec2<double>{0.1, 0.0}, 0.1) == 0.0);
  CHECK(kernel_value(Vec2<double>{0.08, 0.07}, 0.1) == 0.0);
  CHECK(kernel_value(Vec2<double>{0.05, 0.0}, 0.1) > 0.0);
  CHECK_THROWS(kernel_value(Vec2<double>{0, 0}, 0.0));
}

TEST_CASE("kernel L1 norms") {
  const KernelNorms<double> n = kernel_norms<double>();
  CHECK(std::abs(n.l1[0] - 1.0) < 1e-8);
  CHECK(n.l1[1] <= 3.1);
  CHECK(n.l1[2] <= 15.9);
  CHECK(n.l1[3] <= 210.0);
  CHECK(n.nodes >= 2000);
  CHECK_THROWS_AS(kernel_norms<double>(999), ConfigError);
}

TEST_CASE("kernel moments against polar quadrature") {
  const double a = oracle::disk_moment(0, 0);
  for (auto [p, q] : std::vector<std::pair<int, int>>{{0, 0}, {2, 0}, {0, 2}, {2, 2}, {4, 0}, {0, 4}, {4, 2}}) {
    INFO(p << "," << q);
    CHECK(kernel_moment<double>(p, q) == doctest::Approx(oracle::disk_moment(p, q) / a).epsilon(1e-6));
  }
  CHECK(kernel_moment<double>(1, 0) == 0.0);
  CHECK(kernel_moment<double>(3, 2) == 0.0);
  CHECK(kernel_moment<double>(2, 0) == doctest::Approx(kernel_moment<double>(0, 2)));
}

TEST_CASE("mollification reproduces constants and linear fields") {
  for (auto m : {MollifyConfig::Method::Moments, MollifyConfig::Method::Quadrature}) {
    const ScalarField<double> c = mollify(field("3"), 0.1, 0.2, with(m));
    const ScalarField<double> x = mollify(field("x"), 0.1, 0.2, with(m));
    for (double px : {-0.3, 0.4}) {
      CHECK(c.value(Vec2<double>{px, 0.1}) == doctest::Approx(3.0).epsilon(1e-8));
      CHECK(x.value(Vec2<double>{px, 0.1}) == doctest::Approx(px).epsilon(1e-8));
    }
  }
}

TEST_CASE("mollification error for x^2 stays below l^2") {
  for (double l : {0.1, 0.01})
    for (auto m : {MollifyConfig::Method::Moments, MollifyConfig::Method::Quadrature}) {
      const ScalarField<double> f = field("x^2");
      const ScalarField<double> g = mollify(f, l, 0.5, with(m));
      for (double px : {-0.7, 0.0, 0.25, 0.9}) {
        const Vec2<double> p{px, 0.3};
        const double err = std::abs(g.value(p) - f.value(p));
        CHECK(err <= l * l);
        // Exact value: x^2 + l^2 M_20.
        CHECK(err == doctest::Approx(l * l * kernel_moment<double>(2, 0)).epsilon(1e-6));
      }
    }
}

TEST_CASE("moment expansion agrees with quadrature") {
  const ScalarField<double> f = field("sin(3*x)*cos(2*y) + x*y^3");
  const double l = 0.05;
  const ScalarField<double> a = mollify(f, l, 0.1, with(MollifyConfig::Method::Moments));
  const ScalarField<double> b = mollify(f, l, 0.1, with(MollifyConfig::Method::Quadrature));
  for (double px : {-0.2, 0.3}) {
    const Taylor2<double> ta = a.eval(Vec2<double>{px, 0.1}, 2), tb = b.eval(Vec2<double>{px, 0.1}, 2);
    for (int i = 0; i < ta.size(); ++i) CHECK(ta.coeff(i) == doctest::Approx(tb.coeff(i)).epsilon(1e-6));
  }
}

TEST_CASE("mollification is linear and preserves positivity") {
  const ScalarField<double> f = field("x^2 + y^2"), g = field("cos(5*x)");
  const ScalarField<double> sum([f, g](const Vec2<double>& p, int o) { return f.eval(p, o) * 2.0 + g.eval(p, o); });
  const double l = 0.02;
  const MollifyConfig q = with(MollifyConfig::Method::Quadrature);
  const ScalarField<double> mf = mollify(f, l, 0.1, q), mg = mollify(g, l, 0.1, q), ms = mollify(sum, l, 0.1, q);
  for (double px : {-0.4, 0.0, 0.6}) {
    const Vec2<double> p{px, -0.2};
    CHECK(ms.value(p) == doctest::Approx(2 * mf.value(p) + mg.value(p)).epsilon(1e-8));
    CHECK(mf.value(p) > 0.0);
  }
}

TEST_CASE("mollification scale preconditions") {
  CHECK_THROWS_AS(mollify(field("x"), 0.2, 0.1), MollifyError);
  CHECK_THROWS_AS(mollify(field("x"), 1.0, 2.0), MollifyError);
  CHECK_THROWS_AS(mollify(field("x"), 0.0, 0.1), MollifyError);
}

TEST_CASE("multiprecision mollification of a tiny-scale quadratic") {
  PrecisionGuard g(50);
  const ScalarField<Real> f = ScalarField<Real>::from_expr(parse("-1e-18*(x^2 + y^2)"));
  const Real l("1e-18");
  const ScalarField<Real> m = mollify(f, l, Real("0.1"));
  const Vec2<Real> p{Real("0.5"), Real("-0.25")};
  // Exact: f + l^2 (M_20 + M_02) (-1e-18).
  const Real exact = f.value(p) - Real("1e-18") * l * l * (kernel_moment<Real>(2, 0) + kernel_moment<Real>(0, 2));
  CHECK(abs(m.value(p) - exact) < Real("1e-60"));
}
