#include "corrugator/holder.hpp"

#include <cmath>
#include <sstream>

namespace corrugator {

namespace {

template <class T>
double dnorm(const Taylor2<T>& t, int m) {
  return to_double(derivative_norm(t, m));
}

template <class T>
double dnorm2(const Taylor2<T>& a, const Taylor2<T>& b, int m) {
  const double x = dnorm(a, m), y = dnorm(b, m);
  return std::sqrt(x * x + y * y);
}

template <class T>
double sym_frobenius(const Sym2<T>& s) {
  return to_double(frobenius(s));
}

template <class T>
Sym2<T> sym_sub(const Sym2<T>& a, const Sym2<T>& b) {
  return {a.b11 - b.b11, a.b12 - b.b12, a.b22 - b.b22};
}

template <class T>
std::vector<Vec2<T>> sample_points(const Rect<T>& domain, std::size_t n, std::uint64_t seed) {
  Sampler s(seed);
  std::vector<Vec2<T>> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(s.point(domain, i));
  return pts;
}

template <class T>
int current_digits() {
  if constexpr (std::is_same_v<T, double>) {
    return 15;
  } else {
    return static_cast<int>(Real::default_precision());
  }
}

// (v, w1, w2) at one point before and after a step, plus its amplitude.
template <class T>
struct StepSample {
  Taylor2<T> v0, w10, w20, v1, w11, w21, a;
};

template <class T>
void check_mod_step(const std::string& prefix, const std::vector<StepSample<T>>& s, const Vec2<T>& eta,
                    double delta, double l, double lambda, double tol, std::size_t keep, StageReport& rep) {
  std::array<double, 4> a_sup{};
  std::array<double, 2> v_sup{};
  double grad_v = 0.0;
  for (const auto& q : s) {
    for (int m = 0; m < 4; ++m) a_sup[m] = std::max(a_sup[m], dnorm(q.a, m));
    for (int m = 1; m <= 2; ++m) v_sup[m - 1] = std::max(v_sup[m - 1], dnorm(q.v0, m + 1));
    grad_v = std::max(grad_v, dnorm(q.v0, 1));
  }
  rep.certified.push_back(make_inequality(prefix + "/delta_below_one", delta, 1.0, 0.0));
  rep.certified.push_back(make_inequality(prefix + "/scale_below_one", l, 1.0, 0.0));
  rep.certified.push_back(make_inequality(prefix + "/frequency", 1.0 / l, lambda, tol));
  for (int m = 0; m < 4; ++m)
    rep.certified.push_back(
        make_inequality(prefix + "/delta_l_a" + std::to_string(m), a_sup[m], delta / std::pow(l, m), tol));
  for (int m = 1; m <= 2; ++m)
    rep.certified.push_back(
        make_inequality(prefix + "/delta_l_v" + std::to_string(m), v_sup[m - 1], delta / std::pow(l, m), tol));

  const double gw = 1.0 + grad_v;
  const char* names[] = {"defect", "v", "grad_v", "hess_v", "third_v", "w", "grad_w", "hess_w"};
  const double rhs[] = {delta * delta / (lambda * l),
                        0.4 * delta / lambda,
                        2.4 * delta,
                        16.9 * delta * lambda,
                        123.0 * delta * lambda * lambda,
                        0.4 * delta / lambda * gw,
                        2.4 * delta * gw,
                        21.9 * delta * lambda * gw};
  std::vector<BoundTracker> tr;
  for (int i = 0; i < 8; ++i) tr.emplace_back(prefix + "/" + names[i], tol, keep);
  std::size_t idx = 0;
  for (const auto& q : s) {
    const bool k = idx++ < keep;
    const Taylor2<T> a2 = q.a * q.a;
    const Sym2<T> before = metric_part(q.v0, q.w10, q.w20), after = metric_part(q.v1, q.w11, q.w21);
    const T a0 = a2.value();
    const Sym2<T> rank{a0 * eta.x * eta.x, a0 * eta.x * eta.y, a0 * eta.y * eta.y};
    const double e = sym_frobenius(sym_sub(sym_sub(after, before), rank));
    const Taylor2<T> dv = q.v1 - q.v0, dw1 = q.w11 - q.w10, dw2 = q.w21 - q.w20;
    const double lhs[] = {e,           dnorm(dv, 0),       dnorm(dv, 1),       dnorm(dv, 2),
                          dnorm(dv, 3), dnorm2(dw1, dw2, 0), dnorm2(dw1, dw2, 1), dnorm2(dw1, dw2, 2)};
    for (int i = 0; i < 8; ++i) tr[i].add(lhs[i], rhs[i], k);
  }
  for (const auto& t : tr) rep.bounds.push_back(t.result());
}

template <class T>
ScalarField<T> difference(const ScalarField<T>& a, const ScalarField<T>& b) {
  return ScalarField<T>([a, b](const Vec2<T>& p, int order) { return a.eval(p, order) - b.eval(p, order); });
}

// Evaluates a closure at a fixed working precision.
template <class T, class F>
auto at_precision(int digits, F&& f) {
  if constexpr (std::is_same_v<T, double>) {
    return f();
  } else {
    PrecisionGuard g(digits);
    return f();
  }
}

}  // namespace

int holder_digits(double lambda_max, const Rect<double>& domain, int base_digits) {
  const double xmax = std::max({std::abs(domain.x_min), std::abs(domain.x_max), std::abs(domain.y_min),
                                std::abs(domain.y_max), 1.0});
  return std::max(base_digits, digits_for_phase(std::log10(lambda_max * xmax)));
}

template <class T>
double holder_norm(const SymMatField<T>& a, const Rect<T>& domain, double beta, std::size_t pairs,
                   const PrecisionContext& ctx) {
  using std::pow;
  using std::sqrt;
  Sampler s(splitmix64(ctx.rng_seed ^ 0x5eedu));
  double sup = 0.0, semi = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const Vec2<T> x = s.point(domain, 2 * i), y = s.point(domain, 2 * i + 1);
    const Sym2<T> ax = a.value(x), ay = a.value(y);
    sup = std::max({sup, sym_frobenius(ax), sym_frobenius(ay)});
    const T dist = sqrt((x.x - y.x) * (x.x - y.x) + (x.y - y.y) * (x.y - y.y));
    if (!(dist > 0)) continue;
    semi = std::max(semi, to_double(T(frobenius(sym_sub(ax, ay)) / pow(dist, T(beta)))));
  }
  return sup + semi;
}

template <class T>
StageReport one_step_mod_check(const ScalarField<T>& v, const VectorField2<T>& w, const ScalarField<T>& a,
                               const Vec2<T>& eta, const T& delta, const T& l, const T& lambda,
                               const std::vector<Vec2<T>>& points, double rel_tol) {
  if (!(lambda * l >= 1)) throw ConfigError("one-step check needs lambda >= 1 / l");
  if (!(delta > 0 && delta < 1 && l > 0 && l < 1)) throw ConfigError("delta and l must lie in (0, 1)");
  StageReport rep;
  rep.pipeline = "one_step_mod";
  std::vector<StepSample<T>> s;
  s.reserve(points.size());
  for (const auto& p : points) {
    StepSample<T> q;
    q.v0 = v.eval(p, 4);
    q.w10 = w.c1.eval(p, 3);
    q.w20 = w.c2.eval(p, 3);
    q.a = a.eval(p, 3);
    q.v1 = q.v0;
    q.w11 = q.w10;
    q.w21 = q.w20;
    corrugate(q.v1, q.w11, q.w21, q.a, p, eta, lambda);
    s.push_back(std::move(q));
  }
  check_mod_step("step", s, eta, to_double(delta), to_double(l), to_double(lambda), rel_tol, points.size(), rep);
  rep.values["delta"] = to_double(delta);
  rep.values["l"] = to_double(l);
  rep.values["lambda"] = to_double(lambda);
  return rep;
}

template <class T>
HolderStageResult<T> run_stage_holder(const ProblemFields<T>& problem, const Rect<T>& domain,
                                      const HolderStageConfig& cfg, const PrecisionContext& ctx) {
  using std::sqrt;
  validate_rect(domain);
  if (!(cfg.sigma > 1)) throw ConfigError("sigma must exceed 1");
  if (!(cfg.r > 0 && cfg.r < 1)) throw ConfigError("inset width r must lie in (0, 1)");
  if (!(cfg.delta0 > 0 && cfg.delta0 <= kHolderDeltaCap)) throw ConfigError("delta0 must lie in (0, 5.4e-16]");
  if (cfg.M.has_value() == cfg.lambda1.has_value()) throw ConfigError("set exactly one of M and lambda1");
  if (!(cfg.beta > 0 && cfg.beta < 1)) throw ConfigError("beta must lie in (0, 1)");
  if (cfg.samples == 0) throw ConfigError("sample count must be positive");

  HolderStageResult<T> out;
  StageReport& rep = out.report;
  rep.pipeline = "holder";
  rep.values["sigma"] = cfg.sigma;
  rep.values["samples"] = cfg.samples;

  // Input norms.
  const std::vector<Vec2<T>> pts0 = sample_points(domain, cfg.samples, ctx.rng_seed);
  HolderNorms in;
  for (const auto& p : pts0) {
    in.defect = std::max(in.defect, sym_frobenius(values(defect_at(problem.a, problem.v, problem.w, p, 0))));
    const Taylor2<T> v = problem.v.eval(p, 2), w1 = problem.w.c1.eval(p, 2), w2 = problem.w.c2.eval(p, 2);
    in.v = std::max(in.v, dnorm(v, 0));
    in.grad_v = std::max(in.grad_v, dnorm(v, 1));
    in.grad_w = std::max(in.grad_w, dnorm2(w1, w2, 1));
    in.hess_v = std::max(in.hess_v, dnorm(v, 2));
    in.hess_w = std::max(in.hess_w, dnorm2(w1, w2, 2));
  }
  out.input = in;
  const double d = in.defect;
  rep.values["defect_norm"] = d;
  rep.values["grad_v_norm"] = in.grad_v;
  rep.values["hess_v_norm"] = in.hess_v;
  rep.values["hess_w_norm"] = in.hess_w;
  const double floor = std::pow(10.0, -(current_digits<T>() - 8));
  if (!(d > floor)) throw StageError("initial defect is numerically zero", rep);
  rep.certified.push_back(make_inequality("defect_small", d, cfg.delta0, 0.0, "defect_norm"));
  if (!rep.certified.back().pass) throw StageError("initial defect exceeds delta0", rep);

  const double sd = std::sqrt(d);
  const double l = cfg.lambda1 ? cfg.sigma / *cfg.lambda1 : sd / *cfg.M;
  const double M = cfg.M ? *cfg.M : sd / l;
  const double sigma = cfg.sigma;
  rep.values["l"] = l;
  rep.values["M"] = M;
  const double m_floor = std::max({sd / cfg.r, in.hess_v, in.hess_w, 1.0});
  rep.values["M_lower_bound"] = m_floor;
  rep.certified.push_back(make_inequality("m_sigma_conditions", m_floor, M, 0.0, "M_lower_bound"));
  rep.certified.push_back(make_inequality("scale_below_inset", l, cfg.r, 0.0, "l"));
  if (!rep.bounds_ok() || !rep.certified_ok()) throw StageError("stage preconditions fail", rep);

  const std::array<double, 3> ls{l, l / sigma, l / (sigma * sigma)};
  const std::array<double, 3> lams{sigma / l, sigma * sigma / l, sigma * sigma * sigma / l};
  out.lambdas = lams;
  for (int k = 0; k < 3; ++k) {
    rep.values["lambda" + std::to_string(k + 1)] = lams[k];
    rep.values["l_" + std::to_string(k + 1)] = ls[k];
  }
  const Rect<double> dom_d{to_double(domain.x_min), to_double(domain.x_max), to_double(domain.y_min),
                           to_double(domain.y_max)};
  const int digits = std::is_same_v<T, double> ? 15 : holder_digits(lams[2], dom_d, current_digits<T>());
  out.digits = digits;
  rep.values["digits"] = digits;
  if (std::is_same_v<T, double> && holder_digits(lams[2], dom_d, 15) > 15)
    rep.warnings.push_back("double precision cannot resolve the corrugation phases at these frequencies");
  const double tol = rounding_tolerance(digits);

  return at_precision<T>(digits, [&]() -> HolderStageResult<T> {
    const std::vector<Vec2<T>> pts = sample_points(domain, cfg.samples, ctx.rng_seed);
    const T lt = T(l), rt = T(cfg.r);

    // 1. Mollification.
    ProblemFields<T> mol = problem;
    if (cfg.mollify) {
      mol.v = mollify(problem.v, lt, rt, cfg.mollify_cfg);
      mol.w = mollify(problem.w, lt, rt, cfg.mollify_cfg);
      mol.a = mollify(problem.a, lt, rt, cfg.mollify_cfg);
    }
    double mol_defect = 0.0;
    for (const auto& p : pts) mol_defect = std::max(mol_defect, sym_frobenius(values(defect_at(mol.a, mol.v, mol.w, p, 0))));
    rep.values["mollified_defect_norm"] = mol_defect;

    // 2. Shift of w so that the defect decomposes with large coefficients.
    const double shift = d + mol_defect;
    rep.values["shift"] = shift;
    const VectorField2<T> sh = w_shift_field(T(shift));
    ChainSpec<T> spec;
    spec.v = mol.v;
    spec.w = {difference(mol.w.c1, sh.c1), difference(mol.w.c2, sh.c2)};
    spec.amplitude_matrix = mol.a;
    spec.lambdas = {T(lams[0]), T(lams[1]), T(lams[2])};

    // 3. Three steps, evaluated pointwise with base order 4.
    std::vector<ChainPoint<T>> chain;
    chain.reserve(pts.size());
    try {
      for (const auto& p : pts) chain.push_back(eval_chain(spec, p, 4, 3));
    } catch (const SingularityError& e) {
      throw StageError(std::string("amplitude not defined: ") + e.what(), rep);
    }

    std::array<double, 3> min_a{};
    min_a.fill(std::numeric_limits<double>::infinity());
    double d1 = 0.0, a_part = 0.0;
    for (const auto& c : chain) {
      for (int m = 1; m <= 2; ++m) d1 = std::max(d1, std::pow(l, m) * dnorm(c.v[0], m + 1));
      for (int k = 0; k < 3; ++k) {
        min_a[k] = std::min(min_a[k], to_double(c.a[k].value()));
        for (int m = 0; m < 4; ++m) a_part = std::max(a_part, std::pow(l, m) * dnorm(c.a[k], m));
      }
    }
    const double a_floor = sd / std::sqrt(2.0);
    rep.values["amplitude_floor"] = a_floor;
    for (int k = 0; k < 3; ++k) {
      rep.values["min_a_" + std::to_string(k + 1)] = min_a[k];
      rep.certified.push_back(make_inequality("amplitude_floor_" + std::to_string(k + 1), a_floor, min_a[k], tol,
                                              "amplitude_floor"));
    }
    std::array<double, 3> deltas{d1 + a_part, 0.0, 0.0};
    deltas[1] = 124.0 * deltas[0];
    deltas[2] = 124.0 * deltas[1];
    for (int k = 0; k < 3; ++k) rep.values["delta_" + std::to_string(k + 1)] = deltas[k];

    const auto& etas = spec.etas;
    for (int k = 0; k < 3; ++k) {
      std::vector<StepSample<T>> s;
      s.reserve(chain.size());
      for (const auto& c : chain)
        s.push_back({c.v[k], c.w1[k], c.w2[k], c.v[k + 1], c.w1[k + 1], c.w2[k + 1], c.a[k]});
      check_mod_step("step" + std::to_string(k + 1), s, etas[k], deltas[k], ls[k], lams[k], tol, cfg.keep_samples,
                     rep);
    }

    // Stage-level estimates against the unmollified input.
    const double a_hold = holder_norm(problem.a, domain, cfg.beta, cfg.holder_pairs, ctx);
    rep.values["A_holder_norm"] = a_hold;
    HolderNorms o;
    double v_err = 0, w_err = 0, gv_err = 0, gw_err = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& c = chain[i];
      const Vec2<T>& p = pts[i];
      const Sym2<T> am = problem.a.value(p);
      o.defect = std::max(o.defect, sym_frobenius(sym_sub(am, metric_part(c.v[3], c.w1[3], c.w2[3]))));
      o.v = std::max(o.v, dnorm(c.v[3], 0));
      o.grad_v = std::max(o.grad_v, dnorm(c.v[3], 1));
      o.grad_w = std::max(o.grad_w, dnorm2(c.w1[3], c.w2[3], 1));
      o.hess_v = std::max(o.hess_v, dnorm(c.v[3], 2));
      o.hess_w = std::max(o.hess_w, dnorm2(c.w1[3], c.w2[3], 2));
      const Taylor2<T> v0 = problem.v.eval(p, 1), w10 = problem.w.c1.eval(p, 1), w20 = problem.w.c2.eval(p, 1);
      const Taylor2<T> dv = c.v[3] - v0, dw1 = c.w1[3] - w10, dw2 = c.w2[3] - w20;
      v_err = std::max(v_err, dnorm(dv, 0));
      w_err = std::max(w_err, dnorm2(dw1, dw2, 0));
      gv_err = std::max(gv_err, dnorm(dv, 1));
      gw_err = std::max(gw_err, dnorm2(dw1, dw2, 1));
    }
    out.output = o;
    rep.values["defect_norm_final"] = o.defect;
    rep.values["reduction_factor"] = o.defect / d;
    rep.values["v3_norm"] = o.v;
    rep.values["grad_v3_norm"] = o.grad_v;
    rep.values["grad_w3_norm"] = o.grad_w;
    rep.values["hess_v3_norm"] = o.hess_v;
    rep.values["hess_w3_norm"] = o.hess_w;
    rep.values["v_error"] = v_err;
    rep.values["w_error"] = w_err;
    rep.values["grad_v_error"] = gv_err;
    rep.values["grad_w_error"] = gw_err;

    const double diam = std::hypot(to_double(T(domain.x_max - domain.x_min)) + 2 * cfg.r,
                                   to_double(T(domain.y_max - domain.y_min)) + 2 * cfg.r);
    const double g1 = 1.0 + in.grad_v;
    const double s3 = sigma * sigma * sigma;
    auto cert = [&](const std::string& name, double lhs, double rhs, const std::string& ref) {
      rep.certified.push_back(make_inequality(name, lhs, rhs, tol, ref));
    };
    cert("defect_stage", o.defect,
         a_hold / std::pow(M, cfg.beta) * std::pow(d, cfg.beta / 2) + 1.9e15 / sigma * d, "defect_norm_final");
    cert("norm0_v", v_err, 1.8e7 / M * d, "v_error");
    cert("norm0_w", w_err, (1.8e7 / M + 12.6 * diam) * d * g1, "w_error");
    cert("norm1_v", gv_err, 1.1e8 * sd, "grad_v_error");
    cert("norm1_w", gw_err, 1.1e8 * g1 * sd, "grad_w_error");
    cert("norm2_v", o.hess_v, 7.3e8 * M * s3, "hess_v3_norm");
    cert("norm2_w", o.hess_w, 9.5e8 * g1 * M * s3, "hess_w3_norm");

    // Output fields: the chain is re-evaluated at the stage precision.
    out.v = ScalarField<T>([spec, digits](const Vec2<T>& p, int order) {
      return at_precision<T>(digits, [&] { return eval_chain(spec, p, order + 1, 3).v[3]; });
    });
    auto wcomp = [spec, digits](int c) {
      return ScalarField<T>([spec, digits, c](const Vec2<T>& p, int order) {
        return at_precision<T>(digits, [&] {
          const ChainPoint<T> cp = eval_chain(spec, p, order + 2, 3);
          return c == 0 ? cp.w1[3] : cp.w2[3];
        });
      });
    };
    out.w = {wcomp(0), wcomp(1)};

    if (!rep.bounds_ok() || !rep.certified_ok()) throw StageError("holder stage verification failed", rep);
    return std::move(out);
  });
}

double Schedule::sigma(int k) const {
  if (!ramp) return sigma_max;
  return sigma_min * std::pow(sigma_max / sigma_min, 1.0 - std::pow(2.0, -k));
}

double Schedule::m(int k) const {
  double v = m0;
  for (int j = 0; j < k; ++j) v *= c * std::pow(sigma(j), 3);
  return v;
}

double Schedule::inset(int k) const {
  return r - delta0 * (1.0 - std::pow(2.0, -k));
}

nlohmann::json Schedule::to_json() const {
  return {{"alpha", alpha},         {"beta", beta},   {"s", s},         {"s_low", s_low},
          {"s_high", s_high},       {"c", c},         {"sigma_min", sigma_min}, {"sigma_max", sigma_max},
          {"ramp", ramp},           {"N", n_factor},  {"M0", m0},       {"delta0", delta0},
          {"r", r}};
}

Schedule build_schedule(const ScheduleInputs& in) {
  if (!(in.beta > 0 && in.beta < 1)) throw ConfigError("beta must lie in (0, 1)");
  if (!(in.alpha > 0 && in.alpha < std::min(1.0 / 7.0, in.beta / 2)))
    throw ConfigError("alpha must lie in (0, min(1/7, beta/2))");
  if (!(in.delta0 > 0 && in.delta0 < std::min(in.r / 2, kHolderDeltaCap)))
    throw ConfigError("delta0 must lie in (0, min(r/2, 5.4e-16))");
  Schedule s;
  s.alpha = in.alpha;
  s.beta = in.beta;
  s.delta0 = in.delta0;
  s.r = in.r;
  s.ramp = in.ramp;
  s.s_low = 6 * in.alpha / (1 - in.alpha);
  s.s_high = std::min(6 * in.beta / (2 - in.beta), 1.0);
  if (!(s.s_low < s.s_high)) throw ConfigError("empty interval for the decay exponent s");
  s.s = 0.5 * (s.s_low + s.s_high);
  s.c = 20.9e8 * (1 + in.grad_v0);
  const double grow = 1 + 1e-9;  // strict inequalities
  s.sigma_min = std::max(std::pow(16.0 / 9.0, 1 / s.s), std::pow(3.7e15, 1 / (1 - s.s)) * grow);
  const double e = s.s / 2 * (1 - in.alpha) - 3 * in.alpha;
  s.sigma_max = std::max(s.sigma_min, std::pow(s.c, in.alpha / e) * grow);
  const double need = std::max({in.hess_v0, in.hess_w0, 2 / std::sqrt(in.delta0), std::sqrt(in.defect0) / in.r});
  auto m0_for = [&](double n) {
    if (in.a_holder == 0) return n;
    return n * std::pow(2.0, 1 / in.beta) * std::pow(s.sigma_max, 1 / in.beta) * std::pow(in.a_holder, 1 / in.beta) *
           std::pow(in.defect0, 0.5 - 1 / in.beta);
  };
  double n = 1;
  while (!(m0_for(n) > need)) {
    n *= 2;
    if (!std::isfinite(m0_for(n))) throw ConfigError("no finite M0 satisfies the schedule constraints");
  }
  s.n_factor = n;
  s.m0 = m0_for(n);
  return s;
}

template <class T>
HolderRunResult<T> run_holder(const ProblemFields<T>& problem, const Rect<T>& domain, const HolderRunConfig& cfg,
                              const PrecisionContext& ctx) {
  if (cfg.stage_budget < 1) throw ConfigError("stage budget must be positive");
  HolderRunResult<T> out;
  StageReport& sum = out.summary;
  sum.pipeline = "holder_run";

  auto expand = [&](double by) {
    return Rect<T>{domain.x_min - T(by), domain.x_max + T(by), domain.y_min - T(by), domain.y_max + T(by)};
  };
  // Initial norms on the largest domain.
  ScheduleInputs si = cfg.schedule;
  const Rect<T> outer = expand(si.r);
  {
    HolderStageConfig probe = cfg.stage;
    const std::vector<Vec2<T>> pts = sample_points(outer, probe.samples, ctx.rng_seed);
    double d0 = 0, gv = 0, hv = 0, hw = 0;
    for (const auto& p : pts) {
      d0 = std::max(d0, sym_frobenius(values(defect_at(problem.a, problem.v, problem.w, p, 0))));
      const Taylor2<T> v = problem.v.eval(p, 2), w1 = problem.w.c1.eval(p, 2), w2 = problem.w.c2.eval(p, 2);
      gv = std::max(gv, dnorm(v, 1));
      hv = std::max(hv, dnorm(v, 2));
      hw = std::max(hw, dnorm2(w1, w2, 2));
    }
    si.defect0 = d0;
    si.grad_v0 = gv;
    si.hess_v0 = hv;
    si.hess_w0 = hw;
    bool a_zero = true;
    for (const auto& p : pts)
      if (sym_frobenius(problem.a.value(p)) != 0) a_zero = false;
    si.a_holder = a_zero ? 0.0 : holder_norm(problem.a, outer, si.beta, cfg.stage.holder_pairs, ctx);
  }
  out.schedule = build_schedule(si);
  const Schedule& sch = out.schedule;
  sum.values["schedule"] = sch.to_json();
  sum.values["defect_norm_0"] = si.defect0;
  sum.values["grad_v_norm_0"] = si.grad_v0;
  sum.values["A_holder_norm"] = si.a_holder;

  ProblemFields<T> cur = problem;
  double decay = 1.0;
  const double tol = 1e-12;
  nlohmann::json trace = nlohmann::json::array();
  for (int k = 0; k < cfg.stage_budget; ++k) {
    HolderStageConfig sc = cfg.stage;
    sc.sigma = sch.sigma(k);
    sc.M = sch.m(k);
    sc.lambda1.reset();
    sc.r = sch.delta0 * std::pow(2.0, -(k + 1));
    sc.delta0 = sch.delta0;
    sc.beta = sch.beta;
    HolderStageResult<T> st;
    try {
      st = run_stage_holder(cur, expand(sch.inset(k + 1)), sc, ctx);
    } catch (const StageError& e) {
      out.stages.push_back(e.report);
      sum.warnings.push_back("stage " + std::to_string(k) + ": " + e.what());
      if (std::string(e.what()) == "initial defect is numerically zero") {
        out.converged = true;
        break;
      }
      sum.values["trace"] = trace;
      throw StageError("stage " + std::to_string(k) + " failed: " + e.what(), sum);
    }
    out.stages.push_back(st.report);
    decay *= std::pow(sc.sigma, sch.s);
    const std::string tag = "stage" + std::to_string(k + 1);
    trace.push_back({{"stage", k + 1},
                     {"sigma", sc.sigma},
                     {"M", *sc.M},
                     {"defect_norm", st.output.defect},
                     {"grad_v_norm", st.output.grad_v},
                     {"hess_v_norm", st.output.hess_v},
                     {"hess_w_norm", st.output.hess_w}});
    sum.values[tag + "_defect_norm"] = st.output.defect;
    sum.values[tag + "_one_plus_grad_v"] = 1.0 + st.output.grad_v;
    sum.certified.push_back(
        make_inequality(tag + "/decay", st.output.defect, si.defect0 / decay, tol, tag + "_defect_norm"));
    sum.certified.push_back(make_inequality(tag + "/gradient_ceiling", 1.0 + st.output.grad_v,
                                            2.2 * (1.0 + si.grad_v0), tol, tag + "_one_plus_grad_v"));
    sum.values[tag + "_decay_ratio"] = st.output.defect / si.defect0;
    sum.values[tag + "_decay_bound"] = 1.0 / decay;
    cur.v = st.v;
    cur.w = st.w;
    if (!sum.certified_ok()) {
      sum.values["trace"] = trace;
      throw StageError("stage " + std::to_string(k + 1) + " violates the decay or gradient bound", sum);
    }
  }
  sum.values["trace"] = trace;
  sum.values["converged"] = out.converged;
  return out;
}

#define CORRUGATOR_HOLDER(T)                                                                                   \
  template HolderStageResult<T> run_stage_holder<T>(const ProblemFields<T>&, const Rect<T>&,                   \
                                                    const HolderStageConfig&, const PrecisionContext&);        \
  template StageReport one_step_mod_check<T>(const ScalarField<T>&, const VectorField2<T>&,                    \
                                             const ScalarField<T>&, const Vec2<T>&, const T&, const T&,        \
                                             const T&, const std::vector<Vec2<T>>&, double);                   \
  template HolderRunResult<T> run_holder<T>(const ProblemFields<T>&, const Rect<T>&, const HolderRunConfig&,   \
                                            const PrecisionContext&);                                          \
  template double holder_norm<T>(const SymMatField<T>&, const Rect<T>&, double, std::size_t,                   \
                                 const PrecisionContext&);

CORRUGATOR_HOLDER(double)
CORRUGATOR_HOLDER(Real)

}  // namespace corrugator
