#include "corrugator/holder.hpp"

#include <doctest.h>

using namespace corrugator;

namespace {

ProblemFields<Real> example(const std::string& v0, const std::string& a) {
  return make_fields<Real>(ProblemExprs{parse(v0), parse("0"), parse("0"), parse(a), parse("0"), parse(a)});
}

const Rect<Real> unit_square() { return Rect<Real>{Real(-1), Real(1), Real(-1), Real(1)}; }

}  // namespace

TEST_CASE("schedule exponent interval") {
  ScheduleInputs in;
  in.alpha = 0.1;
  in.beta = 0.5;
  const Schedule s = build_schedule(in);
  CHECK(s.s_low == doctest::Approx(6 * 0.1 / 0.9));
  CHECK(s.s_high == 1.0);
  CHECK(s.s == doctest::Approx(0.8333).epsilon(1e-4));
  // The exponent lies strictly inside the admissible interval.
  CHECK(s.s > 6 * in.alpha / (1 - in.alpha));
  CHECK(s.s < std::min(6 * in.beta / (2 - in.beta), 1.0));
  in.alpha = 1.0 / 7;
  in.beta = 2.0 / 7;
  CHECK_THROWS_AS(build_schedule(in), ConfigError);
  in = ScheduleInputs{};
  in.delta0 = 1e-15;
  CHECK_THROWS_AS(build_schedule(in), ConfigError);
}

TEST_CASE("schedule constants") {
  ScheduleInputs in;
  in.alpha = 0.01;
  in.beta = 0.9;
  in.defect0 = 2.8e-18;
  const Schedule s = build_schedule(in);
  CHECK(s.c == doctest::Approx(20.9e8));
  CHECK(s.sigma_min >= std::pow(16.0 / 9.0, 1 / s.s));
  CHECK(s.sigma_min >= std::pow(3.7e15, 1 / (1 - s.s)));
  CHECK(s.sigma_max >= s.sigma_min);
  CHECK(s.m0 > 2 / std::sqrt(in.delta0));
  CHECK(s.m0 > std::sqrt(in.defect0) / in.r);
  // The power-of-two factor is minimal.
  CHECK(!(s.m0 / 2 > 2 / std::sqrt(in.delta0)));
  CHECK(s.inset(0) == in.r);
  CHECK(s.inset(2) == doctest::Approx(in.r - in.delta0 * 0.75));
  CHECK(s.m(1) == doctest::Approx(s.m0 * s.c * std::pow(s.sigma(0), 3)));
  in.grad_v0 = 1.0;
  CHECK(build_schedule(in).c == doctest::Approx(41.8e8));
}

TEST_CASE("phase precision") {
  CHECK(holder_digits(1e22, Rect<double>{-1, 1, -1, 1}, 50) >= 50);
  CHECK(holder_digits(1e40, Rect<double>{-1, 1, -1, 1}, 50) > holder_digits(1e22, Rect<double>{-1, 1, -1, 1}, 50));
  CHECK(holder_digits(1e3, Rect<double>{-1, 1, -1, 1}, 50) == 50);
}

TEST_CASE("modified step with zero amplitude passes trivially") {
  PrecisionGuard g(30);
  const ScalarField<Real> v = ScalarField<Real>::from_expr(parse("1e-3*x^2"));
  const VectorField2<Real> w{ScalarField<Real>(), ScalarField<Real>()};
  std::vector<Vec2<Real>> pts;
  for (int i = 0; i < 20; ++i) pts.push_back(Vec2<Real>{Real(i) / 20, Real(1) - Real(i) / 40});
  const StageReport r = one_step_mod_check<Real>(v, w, ScalarField<Real>(), frame_vectors<Real>()[0], Real("0.1"),
                                                 Real("0.01"), Real(200), pts, 1e-20);
  CHECK(r.bounds_ok());
  for (const auto& q : r.bounds) {
    INFO(q.name);
    CHECK(q.lhs == 0.0);
  }
  CHECK_THROWS_AS(one_step_mod_check<Real>(v, w, ScalarField<Real>(), frame_vectors<Real>()[0], Real("0.1"),
                                           Real("0.01"), Real(50), pts, 1e-20),
                  ConfigError);
}

TEST_CASE("defect right-hand side halves when lambda doubles") {
  PrecisionGuard g(30);
  const ScalarField<Real> v = ScalarField<Real>::from_expr(parse("1e-4*x*y"));
  const VectorField2<Real> w{ScalarField<Real>(), ScalarField<Real>()};
  const ScalarField<Real> a = ScalarField<Real>::from_expr(parse("1e-3*(1 + x/10)"));
  const std::vector<Vec2<Real>> pts{{Real("0.1"), Real("0.2")}, {Real("-0.3"), Real("0.05")}};
  auto rhs = [&](double lambda) {
    const StageReport r = one_step_mod_check<Real>(v, w, a, frame_vectors<Real>()[1], Real("0.01"), Real("0.1"),
                                                   Real(lambda), pts, 1e-20);
    for (const auto& q : r.bounds)
      if (q.name == "step/defect") return q.rhs;
    return -1.0;
  };
  const double r1 = rhs(100), r2 = rhs(200);
  CHECK(r1 == doctest::Approx(0.01 * 0.01 / (100 * 0.1)));
  CHECK(r2 / r1 == doctest::Approx(0.5));
}

TEST_CASE("modified step bounds hold for a smooth small amplitude") {
  PrecisionGuard g(40);
  const ScalarField<Real> v = ScalarField<Real>::from_expr(parse("1e-4*(x^2 - y^2)"));
  const VectorField2<Real> w{ScalarField<Real>::from_expr(parse("1e-5*x*y")), ScalarField<Real>()};
  const ScalarField<Real> a = ScalarField<Real>::from_expr(parse("1e-3*(1 + sin(x)/10)"));
  std::vector<Vec2<Real>> pts;
  const Sampler s(5);
  for (int i = 0; i < 200; ++i) pts.push_back(s.point(Rect<Real>{Real(-1), Real(1), Real(-1), Real(1)}, i));
  const StageReport r = one_step_mod_check<Real>(v, w, a, frame_vectors<Real>()[2], Real("0.002"), Real("0.5"),
                                                 Real(1000), pts, 1e-20);
  CHECK(r.certified_ok());
  CHECK(r.bounds_ok());
  CHECK(verify_report(nlohmann::json{{"stages", {r.to_json()}}}).empty());
}

TEST_CASE("Hoelder seminorm sampling") {
  PrecisionGuard g(30);
  const SymMatField<Real> c{ScalarField<Real>::constant(Real(2)), ScalarField<Real>(), ScalarField<Real>()};
  CHECK(holder_norm<Real>(c, unit_square(), 0.5, 200, make_context(30, 1)) == doctest::Approx(2.0));
  const SymMatField<Real> zero{};
  CHECK(holder_norm<Real>(zero, unit_square(), 0.5, 200, make_context(30, 1)) == 0.0);
}

TEST_CASE("Hoelder stage on the positive quadratic example") {
  PrecisionGuard g(50);
  HolderStageConfig cfg;
  cfg.sigma = 35;
  cfg.lambda1 = 1e19;
  const HolderStageResult<Real> r =
      run_stage_holder<Real>(example("0", "1e-18*(x^2 + y^2)"), unit_square(), cfg, make_context(50, 1));
  const double factor = r.output.defect / r.input.defect;
  CHECK(factor >= 0.55);
  CHECK(factor <= 0.75);
  CHECK(r.report.values["reduction_factor"].get<double>() == doctest::Approx(factor));
  CHECK(r.report.bounds_ok());
  CHECK(r.report.certified_ok());
  CHECK(r.digits >= 50);
  CHECK(verify_report(nlohmann::json{{"stages", {r.report.to_json()}}}).empty());
  // Step frequencies follow lambda_k = sigma^k / l with l = sigma / lambda_1.
  CHECK(r.lambdas[0] == doctest::Approx(1e19));
  CHECK(r.lambdas[1] == doctest::Approx(35e19));
  CHECK(r.lambdas[2] == doctest::Approx(35.0 * 35 * 1e19));
}

TEST_CASE("Hoelder stage preconditions") {
  PrecisionGuard g(50);
  HolderStageConfig cfg;
  cfg.lambda1 = 1e19;
  CHECK_THROWS_AS(run_stage_holder<Real>(example("0", "0"), unit_square(), cfg, make_context(50, 1)), StageError);
  CHECK_THROWS_AS(run_stage_holder<Real>(example("0", "1e-10"), unit_square(), cfg, make_context(50, 1)), StageError);
  cfg.M = 1e9;
  CHECK_THROWS_AS(run_stage_holder<Real>(example("0", "1e-18"), unit_square(), cfg, make_context(50, 1)), ConfigError);
  cfg.M.reset();
  cfg.sigma = 1.0;
  CHECK_THROWS_AS(run_stage_holder<Real>(example("0", "1e-18"), unit_square(), cfg, make_context(50, 1)), ConfigError);
}

TEST_CASE("scheduled run meets the decay and gradient checks") {
  PrecisionGuard g(50);
  HolderRunConfig cfg;
  cfg.schedule.alpha = 0.01;
  cfg.schedule.beta = 0.9;
  const HolderRunResult<Real> r =
      run_holder<Real>(example("0", "-1e-18*(x^2 + y^2)"), unit_square(), cfg, make_context(50, 1));
  REQUIRE(r.stages.size() == 1);
  CHECK(r.summary.certified_ok());
  const auto& v = r.summary.values;
  CHECK(v["stage1_decay_ratio"].get<double>() <= 1.0 / std::pow(r.schedule.sigma(0), r.schedule.s));
  CHECK(v["stage1_one_plus_grad_v"].get<double>() <= 2.2 * (1 + v["grad_v_norm_0"].get<double>()));
}
