#include "corrugator/expr.hpp"

#include <doctest.h>

#include <cmath>

using namespace corrugator;

namespace {

double ev(const std::string& s, double x, double y) { return eval_value<double>(parse(s), Vec2<double>{x, y}); }

}  // namespace

TEST_CASE("parser precedence and unary minus") {
  CHECK(ev("1 + 2*3", 0, 0) == doctest::Approx(7));
  CHECK(ev("-x^2", 3, 0) == doctest::Approx(-9));
  CHECK(ev("(1 + 2)*3", 0, 0) == doctest::Approx(9));
  CHECK(ev("x/y/2", 8, 2) == doctest::Approx(2));
  CHECK(ev("2 - -3", 0, 0) == doctest::Approx(5));
  CHECK(ev("1e-18*(x^2 + y^2)", 1, 1) == doctest::Approx(2e-18));
  CHECK(ev("sin(x) + cos(y) + exp(x*y) + sqrt(1 + x)", 0.3, 0.7) ==
        doctest::Approx(std::sin(0.3) + std::cos(0.7) + std::exp(0.21) + std::sqrt(1.3)));
}

TEST_CASE("parse errors carry the offset") {
  try {
    parse("x + * y");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 4);
  }
  CHECK_THROWS_AS(parse("sin(x"), ParseError);
  CHECK_THROWS_AS(parse("z"), ParseError);
  CHECK_THROWS_AS(parse("x^y"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("to_string round trips") {
  for (const char* s : {"x^2 - y^2", "-x*y^2 + 5", "sin(2*x)/(1 + y^2)", "sqrt(exp(-x))"}) {
    const Expr e = parse(s);
    const Expr back = parse(to_string(e));
    for (double x : {-0.4, 0.1, 0.7})
      for (double y : {-0.3, 0.2})
        CHECK(eval_value<double>(back, Vec2<double>{x, y}) == doctest::Approx(eval_value<double>(e, Vec2<double>{x, y})));
  }
}

TEST_CASE("jets of a polynomial match hand derivatives") {
  const Jet<double> j = eval_jet<double>(parse("x^3*y - 2*x*y^2"), Vec2<double>{1.5, -0.5}, 3);
  const double x = 1.5, y = -0.5;
  CHECK(j.value == doctest::Approx(x * x * x * y - 2 * x * y * y));
  CHECK(j.gradient.x == doctest::Approx(3 * x * x * y - 2 * y * y));
  CHECK(j.gradient.y == doctest::Approx(x * x * x - 4 * x * y));
  CHECK(j.hessian.b11 == doctest::Approx(6 * x * y));
  CHECK(j.hessian.b12 == doctest::Approx(3 * x * x - 4 * y));
  CHECK(j.hessian.b22 == doctest::Approx(-4 * x));
  CHECK(j.third[0] == doctest::Approx(6 * y));
  CHECK(j.third[1] == doctest::Approx(6 * x));
  CHECK(j.third[2] == doctest::Approx(-4));
  CHECK(j.third[3] == doctest::Approx(0));
}

TEST_CASE("singular points raise SingularityError") {
  CHECK_THROWS(ev("1/x", 0, 0));
  CHECK_THROWS(ev("sqrt(x)", -1, 0));
}

TEST_CASE("literals are converted at the working precision") {
  PrecisionGuard g(50);
  const Real v = eval_value<Real>(parse("0.1"), Vec2<Real>{Real(0), Real(0)});
  CHECK(abs(v - Real("0.1")) < Real("1e-49"));
}
