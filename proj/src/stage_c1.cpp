#include "corrugator/stage_c1.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace corrugator {

double grid_value(double lambda_min, double factor, int index) { return lambda_min * std::pow(factor, index); }

int grid_index_at_least(double lambda_min, double factor, double lambda) {
  if (lambda <= lambda_min) return 0;
  int i = static_cast<int>(std::floor(std::log(lambda / lambda_min) / std::log(factor)));
  while (grid_value(lambda_min, factor, i) < lambda * (1 - 1e-12)) ++i;
  while (i > 0 && grid_value(lambda_min, factor, i - 1) >= lambda * (1 - 1e-12)) --i;
  return i;
}

int search_grid(double lambda_min, double factor, int start_index, double lambda_max,
                const std::function<bool(double)>& ok) {
  if (!(factor > 1)) throw ConfigError("search grid factor must exceed 1");
  std::map<int, bool> cache;
  auto test = [&](int i) {
    auto it = cache.find(i);
    if (it != cache.end()) return it->second;
    return cache[i] = ok(grid_value(lambda_min, factor, i));
  };
  const int last = grid_index_at_least(lambda_min, factor, lambda_max);
  if (start_index > last) return -1;
  if (test(start_index)) return start_index;
  // Expand until a passing index brackets the answer, then bisect. The
  // expansion never more than doubles lambda in one jump: the cost of a test
  // grows with the square of lambda, so overshooting is expensive.
  const int max_step = std::max(1, static_cast<int>(std::floor(std::log(2.0) / std::log(factor))));
  int lo = start_index, step = 1, hi = -1;
  while (hi < 0) {
    const int cand = std::min(lo + step, last);
    if (test(cand)) {
      hi = cand;
    } else {
      if (cand == last) return -1;
      lo = cand;
      step = std::min(step * 2, max_step);
    }
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (test(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

namespace {

template <class T>
struct StepGridResult {
  StepMeasurement m;
  std::array<double, 3> min_phi_raw{};      // coefficients of D_k
  std::array<double, 3> min_phi_planned{};  // of D_k minus the remaining planned amplitudes
  double defect_norm = 0.0;                 // max |D_k| on the grid
  double v_error = 0.0;                     // max |v_k - v_0| on the grid
};

template <class T>
T fro(const Sym2<T>& m) {
  return frobenius(m);
}

// Square grid step not above h_max that divides the rectangle sides.
template <class T>
T fitting_step(const Rect<T>& r, double h_max) {
  const double side = std::max(to_double(T(r.x_max - r.x_min)), to_double(T(r.y_max - r.y_min)));
  const double n = std::ceil(side / h_max - 1e-9);
  return T(r.x_max - r.x_min) / T(n);
}

// Measures B~_k = D_{k-1} - D_k - a_k^2 eta_k (x) eta_k with finite
// differences on a grid over rect, and evaluates conditions A and B.
template <class T>
StepGridResult<T> measure_step(const ChainSpec<T>& spec, const SymMatField<T>& a_field, int k, const Rect<T>& rect,
                               const T& h, double d_norm, const C1Config& cfg) {
  GridField<T> vp(rect, h);
  GridField<T> w1p = vp, w2p = vp, vk = vp, w1k = vp, w2k = vp, v0 = vp;
  GridSym<T> am{vp, vp, vp};
  GridField<T> ak2 = vp;
  std::array<GridField<T>, 3> phi0{vp, vp, vp};
  std::array<GridField<T>, 3> later{vp, vp, vp};  // a_j^2 for j = 1..3
  for (int j = 0; j < vp.ny(); ++j) {
    for (int i = 0; i < vp.nx(); ++i) {
      const Vec2<T> p = vp.point(i, j);
      const ChainPoint<T> c = eval_chain(spec, p, 2, k);
      vp.at(i, j) = c.v[k - 1].value();
      w1p.at(i, j) = c.w1[k - 1].value();
      w2p.at(i, j) = c.w2[k - 1].value();
      vk.at(i, j) = c.v[k].value();
      w1k.at(i, j) = c.w1[k].value();
      w2k.at(i, j) = c.w2[k].value();
      v0.at(i, j) = c.v[0].value();
      const Sym2<T> a = a_field.value(p);
      am.b11.at(i, j) = a.b11;
      am.b12.at(i, j) = a.b12;
      am.b22.at(i, j) = a.b22;
      for (int q = 0; q < 3; ++q) {
        phi0[q].at(i, j) = c.phi[q].value();
        later[q].at(i, j) = c.a[q].value() * c.a[q].value();
      }
    }
  }
  const GridSym<T> dp = assemble_defect_grid(am, vp, w1p, w2p);
  const GridSym<T> dk = assemble_defect_grid(am, vk, w1k, w2k);
  const auto etas = frame_vectors<T>();
  const Sym2<T> ee = rank_one(etas[k - 1]);
  const double c_b = 8.0 / (15.0 * std::sqrt(3.0));

  StepGridResult<T> r;
  r.m.h = to_double(h);
  r.m.condition_b_margin = std::numeric_limits<double>::infinity();
  r.min_phi_raw.fill(std::numeric_limits<double>::infinity());
  r.min_phi_planned.fill(std::numeric_limits<double>::infinity());
  using std::abs;
  for (int j = 0; j < vp.ny(); ++j) {
    for (int i = 0; i < vp.nx(); ++i) {
      const T a2 = later[k - 1].at(i, j);
      const Sym2<T> bt{dp.b11.at(i, j) - dk.b11.at(i, j) - a2 * ee.b11, dp.b12.at(i, j) - dk.b12.at(i, j) - a2 * ee.b12,
                       dp.b22.at(i, j) - dk.b22.at(i, j) - a2 * ee.b22};
      const double bn = to_double(fro(bt));
      r.m.b_norm = std::max(r.m.b_norm, bn);
      for (int q = 0; q < 3; ++q) {
        const double margin = c_b * (0.5 * to_double(phi0[q].at(i, j)) - cfg.coeff_floor) - bn;
        r.m.condition_b_margin = std::min(r.m.condition_b_margin, margin);
      }
      Sym2<T> d = dk.at(i, j);
      r.defect_norm = std::max(r.defect_norm, to_double(fro(d)));
      const Coefficients<T> raw = decompose(d);
      for (int jj = k; jj < 3; ++jj) {
        const Sym2<T> e = rank_one(etas[jj]);
        const T aj2 = later[jj].at(i, j);
        d = {d.b11 - aj2 * e.b11, d.b12 - aj2 * e.b12, d.b22 - aj2 * e.b22};
      }
      const Coefficients<T> planned = decompose(d);
      for (int q = 0; q < 3; ++q) {
        r.min_phi_raw[q] = std::min(r.min_phi_raw[q], to_double(raw[q]));
        r.min_phi_planned[q] = std::min(r.min_phi_planned[q], to_double(planned[q]));
      }
      r.v_error = std::max(r.v_error, to_double(T(abs(vk.at(i, j) - v0.at(i, j)))));
    }
  }
  r.m.condition_a = r.m.b_norm <= d_norm / 12.0;
  r.m.condition_b = r.m.condition_b_margin > 0;
  return r;
}

// Per-point coefficients of the a priori bound on |B_3| = P / lambda + Q / lambda^2,
// with |grad^2 v_2| bounded from |grad^2 v_1| and the second-derivative
// estimate of step 2.
template <class T>
struct AprioriStep3 {
  std::vector<double> p, q, phi_min;
  double d_norm = 0.0;
  bool ok(double lambda, double coeff_floor) const {
    const double c_b = 8.0 / (15.0 * std::sqrt(3.0));
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double b = p[i] / lambda + q[i] / (lambda * lambda);
      if (b > d_norm / 12.0) return false;
      if (!(b < c_b * (0.5 * phi_min[i] - coeff_floor))) return false;
    }
    return true;
  }
};

template <class T>
AprioriStep3<T> apriori_step3(const ChainSpec<T>& spec, const GridField<T>& grid, double d_norm) {
  AprioriStep3<T> r;
  r.d_norm = d_norm;
  const double pi = 3.14159265358979323846;
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const ChainPoint<T> c = eval_chain(spec, grid.point(i, j), 3, 1);
      const double a2 = to_double(c.a[1].value()), ga2 = to_double(derivative_norm(c.a[1], 1)),
                   ha2 = to_double(derivative_norm(c.a[1], 2));
      const double lam2 = to_double(spec.lambdas[1]);
      const double hess_v2 = to_double(derivative_norm(c.v[1], 2)) + ha2 / (lam2 * pi) + 4 * ga2 + 4 * lam2 * pi * a2;
      const double a3 = to_double(c.a[2].value()), ga3 = to_double(derivative_norm(c.a[2], 1));
      r.p.push_back(a3 * ga3 / (2 * pi) + a3 * hess_v2 / pi);
      r.q.push_back(ga3 * ga3 / (2 * pi * pi));
      r.phi_min.push_back(std::min({to_double(c.phi[0].value()), to_double(c.phi[1].value()),
                                    to_double(c.phi[2].value())}));
    }
  }
  return r;
}

template <class T>
std::vector<Vec2<T>> verification_points(const Rect<T>& domain, const T& h, std::size_t n_random,
                                         const PrecisionContext& ctx, std::size_t* n_grid = nullptr) {
  GridField<T> g(domain, h);
  std::vector<Vec2<T>> pts;
  pts.reserve(g.size() + n_random);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) pts.push_back(g.point(i, j));
  if (n_grid) *n_grid = pts.size();
  Sampler s(ctx.rng_seed);
  for (std::size_t i = 0; i < n_random; ++i) pts.push_back(s.point(domain, i));
  return pts;
}

struct StageNorms {
  double d_norm = 0.0, xi = std::numeric_limits<double>::infinity(), grad_v0 = 0.0;
  std::array<double, 3> min_phi{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity()};
};

template <class T>
StageNorms initial_norms(const ProblemFields<T>& pf, const std::vector<Vec2<T>>& pts) {
  StageNorms n;
  for (const auto& p : pts) {
    const Sym2<T> d = values(defect_at(pf.a, pf.v, pf.w, p, 0));
    const double f = to_double(frobenius(d));
    n.d_norm = std::max(n.d_norm, f);
    n.xi = std::min(n.xi, f);
    const Coefficients<T> c = decompose(d);
    for (int k = 0; k < 3; ++k) n.min_phi[k] = std::min(n.min_phi[k], to_double(c[k]));
    n.grad_v0 = std::max(n.grad_v0, to_double(derivative_norm(pf.v.eval(p, 1), 1)));
  }
  return n;
}

template <class T>
ScalarField<T> chain_v(const ChainSpec<T>& spec, int steps) {
  return ScalarField<T>([spec, steps](const Vec2<T>& p, int order) {
    return eval_chain(spec, p, std::max(order + 1, 2), steps).v[steps].truncated(order);
  });
}

template <class T>
VectorField2<T> chain_w(const ChainSpec<T>& spec, int steps) {
  auto comp = [spec, steps](int c) {
    return ScalarField<T>([spec, steps, c](const Vec2<T>& p, int order) {
      const ChainPoint<T> r = eval_chain(spec, p, order + 2, steps);
      return (c == 0 ? r.w1[steps] : r.w2[steps]).truncated(order);
    });
  };
  return {comp(0), comp(1)};
}

// Amplitudes sqrt((1 - delta(x)) phi_k) with delta |D| = xi / 2.
template <class T>
std::array<ScalarField<T>, 3> apriori_amplitudes(const ProblemFields<T>& pf, const T& xi) {
  std::array<ScalarField<T>, 3> out;
  for (int k = 0; k < 3; ++k) {
    out[k] = ScalarField<T>([pf, xi, k](const Vec2<T>& p, int order) {
      const Sym2<Taylor2<T>> d = defect_at(pf.a, pf.v, pf.w, p, order);
      const Taylor2<T> norm = sqrt(d.b11 * d.b11 + d.b12 * d.b12 * T(2) + d.b22 * d.b22);
      const Taylor2<T> one_minus_delta = T(1) - reciprocal(norm) * (xi / T(2));
      const Taylor2<T> arg = one_minus_delta * decompose(d)[k];
      if (!(arg.value() > 0)) throw SingularityError("nonpositive amplitude argument in a priori stage");
      return sqrt(arg);
    });
  }
  return out;
}

template <class T>
void verify_steps(const ChainSpec<T>& spec, const std::vector<Vec2<T>>& pts, std::size_t n_grid,
                  const C1Config& cfg, double tol, StageReport& rep, const ProblemFields<T>& pf,
                  std::map<std::string, double>& final_values) {
  std::array<std::array<BoundTracker, 6>, 3> trackers;
  const char* names[6] = {"defect", "v", "w", "grad_v", "grad_w", "hess_v"};
  for (int k = 0; k < 3; ++k)
    for (int q = 0; q < 6; ++q)
      trackers[k][q] = BoundTracker("step" + std::to_string(k + 1) + "/" + names[q], tol, cfg.keep_samples);
  const auto etas = frame_vectors<T>();
  double d_final = 0, v_err = 0, w_err = 0, gv_err = 0, gw_err = 0;
  std::array<double, 3> phi_final{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                                  std::numeric_limits<double>::infinity()};
  using std::sqrt;
  for (std::size_t idx = 0; idx < pts.size(); ++idx) {
    const Vec2<T>& p = pts[idx];
    const bool keep = idx >= n_grid;
    const ChainPoint<T> c = eval_chain(spec, p, 3, 3);
    for (int k = 1; k <= 3; ++k) {
      const Taylor2<T>& a = c.a[k - 1];
      const Taylor2<T>& vp = c.v[k - 1];
      StepBoundInputs<T> in{a.value(),         derivative_norm(a, 1),  derivative_norm(a, 2),
                            derivative_norm(vp, 1), derivative_norm(vp, 2), spec.lambdas[k - 1]};
      const StepBounds<T> b = step_bounds(in);
      const Sym2<T> mk = metric_part(c.v[k], c.w1[k], c.w2[k]);
      const Sym2<T> mp = metric_part(c.v[k - 1], c.w1[k - 1], c.w2[k - 1]);
      const Sym2<T> ee = rank_one(etas[k - 1]);
      const T a2 = a.value() * a.value();
      const Sym2<T> bk{mk.b11 - mp.b11 - a2 * ee.b11, mk.b12 - mp.b12 - a2 * ee.b12, mk.b22 - mp.b22 - a2 * ee.b22};
      const Taylor2<T> dv = c.v[k] - c.v[k - 1];
      const Taylor2<T> dw1 = c.w1[k] - c.w1[k - 1], dw2 = c.w2[k] - c.w2[k - 1];
      const T dw = sqrt(dw1.value() * dw1.value() + dw2.value() * dw2.value());
      using std::abs;
      trackers[k - 1][0].add(to_double(frobenius(bk)), to_double(b.defect), keep);
      trackers[k - 1][1].add(to_double(T(abs(dv.value()))), to_double(b.v), keep);
      trackers[k - 1][2].add(to_double(dw), to_double(b.w), keep);
      trackers[k - 1][3].add(to_double(derivative_norm(dv, 1)), to_double(b.grad_v), keep);
      trackers[k - 1][4].add(to_double(jacobian_norm(dw1, dw2)), to_double(b.grad_w), keep);
      trackers[k - 1][5].add(to_double(derivative_norm(dv, 2)), to_double(b.hess_v), keep);
    }
    const Sym2<T> am = pf.a.value(p);
    const Sym2<T> m3 = metric_part(c.v[3], c.w1[3], c.w2[3]);
    const Sym2<T> d3{am.b11 - m3.b11, am.b12 - m3.b12, am.b22 - m3.b22};
    d_final = std::max(d_final, to_double(frobenius(d3)));
    const Coefficients<T> ph = decompose(d3);
    for (int q = 0; q < 3; ++q) phi_final[q] = std::min(phi_final[q], to_double(ph[q]));
    using std::abs;
    const Taylor2<T> dv = c.v[3] - c.v[0];
    const Taylor2<T> dw1 = c.w1[3] - c.w1[0], dw2 = c.w2[3] - c.w2[0];
    v_err = std::max(v_err, to_double(T(abs(dv.value()))));
    w_err = std::max(w_err, to_double(T(sqrt(dw1.value() * dw1.value() + dw2.value() * dw2.value()))));
    gv_err = std::max(gv_err, to_double(derivative_norm(dv, 1)));
    gw_err = std::max(gw_err, to_double(jacobian_norm(dw1, dw2)));
  }
  if (cfg.verify_bounds)
    for (auto& row : trackers)
      for (auto& t : row) rep.bounds.push_back(t.result());
  final_values["defect_norm_final"] = d_final;
  final_values["min_phi_final_1"] = phi_final[0];
  final_values["min_phi_final_2"] = phi_final[1];
  final_values["min_phi_final_3"] = phi_final[2];
  final_values["v_error"] = v_err;
  final_values["w_error"] = w_err;
  final_values["grad_v_error"] = gv_err;
  final_values["grad_w_error"] = gw_err;
}

}  // namespace

template <class T>
ChainSpec<T> make_c1_chain(const ProblemFields<T>& pf, const C1Config& cfg, double xi, const std::vector<double>& lambdas) {
  ChainSpec<T> spec;
  spec.v = pf.v;
  spec.w = pf.w;
  spec.amplitude_matrix = pf.a;
  if (cfg.zero_amplitude) {
    spec.amplitudes = std::array<ScalarField<T>, 3>{ScalarField<T>(), ScalarField<T>(), ScalarField<T>()};
  } else if (cfg.mode == C1Config::Mode::Search) {
    spec.amplitude_scale = T(1 - cfg.delta);
  } else {
    spec.amplitudes = apriori_amplitudes(pf, T(xi));
  }
  for (double l : lambdas) spec.lambdas.push_back(T(l));
  return spec;
}

template <class T>
C1StageResult<T> run_stage_c1(const ProblemFields<T>& pf, const Rect<T>& domain, const C1Config& cfg,
                              const PrecisionContext& ctx) {
  validate_rect(domain);
  if (!(cfg.epsilon > 0)) throw ConfigError("c1.epsilon must be positive");
  if (!(cfg.delta > 0 && cfg.delta < 1)) throw ConfigError("c1.delta must lie in (0, 1)");
  if (!(cfg.h > 0)) throw ConfigError("c1.h must be positive");
  const double tol = rounding_tolerance(ctx.digits);
  const bool search = cfg.mode == C1Config::Mode::Search;

  StageReport rep;
  rep.pipeline = "c1";
  const T h0 = fitting_step(domain, cfg.h);
  std::size_t n_grid = 0;
  const std::vector<Vec2<T>> pts = verification_points(domain, h0, cfg.verify_random, ctx, &n_grid);
  const StageNorms norms = initial_norms(pf, pts);
  const double d_norm = norms.d_norm;
  rep.values["mode"] = search ? "search" : "apriori";
  rep.values["defect_norm"] = d_norm;
  rep.values["defect_min"] = norms.xi;
  for (int k = 0; k < 3; ++k) rep.values["min_phi_initial_" + std::to_string(k + 1)] = norms.min_phi[k];
  rep.values["grad_v0_norm"] = norms.grad_v0;
  rep.values["epsilon"] = cfg.epsilon;
  rep.values["assum2_threshold"] = std::sqrt(d_norm) / cfg.epsilon;
  rep.values["h"] = to_double(h0);
  if (!(d_norm > 0)) throw StageError("initial defect is zero; nothing to corrugate", rep);
  if (!cfg.zero_amplitude)
    for (int k = 0; k < 3; ++k)
      if (!(norms.min_phi[k] > 0))
        throw StageError("initial defect decomposition is not positive; apply a w shift first", rep);

  const T xi = T(norms.xi * (1 - 1e-3));
  ChainSpec<T> spec = make_c1_chain(pf, cfg, to_double(xi), {});

  std::array<double, 3> lam{};
  int evaluations = 0;
  int retries = 0;
  std::array<StepGridResult<T>, 3> meas{};

  auto step_grid_h = [&](const Rect<T>& r, double lambda, double h_max) {
    return fitting_step(r, std::min(h_max, 1.0 / (cfg.samples_per_period * lambda)));
  };
  Rect<T> sub{T(cfg.subwindow.x_min), T(cfg.subwindow.x_max), T(cfg.subwindow.y_min), T(cfg.subwindow.y_max)};

  auto measure = [&](int k, double lambda) {
    ChainSpec<T> s = spec;
    s.lambdas.assign(lam.begin(), lam.begin() + k);
    s.lambdas[k - 1] = T(lambda);
    ++evaluations;
    const Rect<T>& r = k < 3 ? domain : sub;
    const T h = step_grid_h(r, lambda, k < 3 ? cfg.h : cfg.h_subwindow);
    const double nodes = to_double(T((r.x_max - r.x_min) / h + 1)) * to_double(T((r.y_max - r.y_min) / h + 1));
    if (nodes > cfg.max_grid_points)
      throw StageError("step " + std::to_string(k) + " search grid at lambda = " + std::to_string(lambda) +
                           " exceeds max_grid_points",
                       rep);
    return measure_step(s, pf.a, k, r, h, d_norm, cfg);
  };

  if (cfg.zero_amplitude) {
    lam = cfg.lambdas.value_or(std::array<double, 3>{1.0, 1.0, 1.0});
  } else if (cfg.lambdas) {
    lam = *cfg.lambdas;
  } else if (search) {
    int i1 = grid_index_at_least(cfg.lambda_min, cfg.grid_factor, cfg.lambda_min);
    for (;; ++retries) {
      if (retries > cfg.max_epsilon_retries) throw StageError("uniform error target not reached within retry budget", rep);
      i1 = search_grid(cfg.lambda_min, cfg.grid_factor, i1, cfg.lambda_max, [&](double l) { return measure(1, l).m.ok(); });
      if (i1 < 0) throw StageError("step 1 frequency search exceeded lambda_max", rep);
      lam[0] = grid_value(cfg.lambda_min, cfg.grid_factor, i1);
      const int i2 = search_grid(cfg.lambda_min, cfg.grid_factor, i1, cfg.lambda_max,
                                 [&](double l) { return measure(2, l).m.ok(); });
      if (i2 < 0) throw StageError("step 2 frequency search exceeded lambda_max", rep);
      lam[1] = grid_value(cfg.lambda_min, cfg.grid_factor, i2);
      ChainSpec<T> s2 = spec;
      s2.lambdas = {T(lam[0]), T(lam[1])};
      const AprioriStep3<T> pri = apriori_step3(s2, GridField<T>(domain, h0), d_norm);
      const int i3 = search_grid(cfg.lambda_min, cfg.grid_factor, i2, cfg.lambda_max, [&](double l) {
        return pri.ok(l, cfg.coeff_floor) && measure(3, l).m.ok();
      });
      if (i3 < 0) throw StageError("step 3 frequency search exceeded lambda_max", rep);
      lam[2] = grid_value(cfg.lambda_min, cfg.grid_factor, i3);
      // Check the uniform error of v on the full grid; raise lambda_1 if it is too large.
      ChainSpec<T> s3 = spec;
      s3.lambdas = {T(lam[0]), T(lam[1]), T(lam[2])};
      double v_err = 0;
      using std::abs;
      for (const auto& p : pts) {
        const ChainPoint<T> c = eval_chain(s3, p, 2, 3);
        v_err = std::max(v_err, to_double(T(abs(c.v[3].value() - c.v[0].value()))));
      }
      if (v_err <= cfg.epsilon) break;
      i1 += 1;
    }
  } else {
    // A priori mode: smallest frequencies satisfying the pointwise sufficient
    // conditions on the sample set, and lambda >= |D|^(1/2) / epsilon.
    const double c = 5.0 * std::sqrt(3.0) / 8.0;
    const double pi = 3.14159265358979323846;
    for (int i = 1; i <= 3; ++i) {
      ChainSpec<T> s = spec;
      s.lambdas.assign(lam.begin(), lam.begin() + (i - 1));
      double need = std::sqrt(d_norm) / cfg.epsilon;
      if (i > 1) need = std::max(need, lam[i - 2]);
      for (const auto& p : pts) {
        const ChainPoint<T> cp = eval_chain(s, p, 3, i - 1);
        const Taylor2<T>& a = cp.a[i - 1];
        const double av = to_double(a.value()), ga = to_double(derivative_norm(a, 1));
        const double hv = to_double(derivative_norm(cp.v[i - 1], 2));
        const Sym2<T> d = values(defect_at(pf.a, pf.v, pf.w, p, 0));
        const Coefficients<T> ph = decompose(d);
        const double dphi = to_double(xi) / (2 * to_double(frobenius(d))) *
                            std::min({to_double(ph[0]), to_double(ph[1]), to_double(ph[2])});
        need = std::max({need, c * av * ga / (2 * pi) * 18 / dphi, c * av * hv / pi * 18 / dphi,
                         std::sqrt(c * ga * ga / (2 * pi * pi) * 18 / dphi)});
      }
      lam[i - 1] = need * cfg.safety_factor;
    }
  }

  spec.lambdas = {T(lam[0]), T(lam[1]), T(lam[2])};
  for (int k = 0; k < 3; ++k) rep.values["lambda" + std::to_string(k + 1)] = lam[k];
  rep.values["search_evaluations"] = evaluations;
  rep.values["epsilon_retries"] = retries;

  if (search && !cfg.zero_amplitude) {
    for (int k = 1; k <= 3; ++k) {
      ChainSpec<T> s = spec;
      meas[k - 1] = measure_step(s, pf.a, k, k < 3 ? domain : sub,
                                 k < 3 ? step_grid_h(domain, lam[k - 1], cfg.h) : step_grid_h(sub, lam[k - 1], cfg.h_subwindow),
                                 d_norm, cfg);
      meas[k - 1].m.lambda = lam[k - 1];
      const std::string ks = std::to_string(k);
      rep.values["b_norm_" + ks] = meas[k - 1].m.b_norm;
      rep.values["grid_h_" + ks] = meas[k - 1].m.h;
      rep.values["condition_b_margin_" + ks] = meas[k - 1].m.condition_b_margin;
      rep.certified.push_back(make_inequality("condition_a_step" + ks, meas[k - 1].m.b_norm, d_norm / 12.0, tol,
                                              "b_norm_" + ks));
      rep.certified.push_back(
          make_inequality("condition_b_step" + ks, 0.0, meas[k - 1].m.condition_b_margin, 0.0, ""));
    }
    const double sum_ratio = (meas[0].m.b_norm + meas[1].m.b_norm) / d_norm;
    rep.values["sum_ratio"] = sum_ratio;
    rep.certified.push_back(make_inequality("sum_ratio", sum_ratio, 1.0 / 6.0, tol, "sum_ratio"));
    for (int q = 0; q < 3; ++q) {
      rep.values["min_phi_after_two_" + std::to_string(q + 1)] = meas[1].min_phi_planned[q];
      rep.values["min_phi_after_two_raw_" + std::to_string(q + 1)] = meas[1].min_phi_raw[q];
      rep.values["min_phi_final_subwindow_" + std::to_string(q + 1)] = meas[2].min_phi_raw[q];
    }
    rep.values["defect_norm_final_subwindow"] = meas[2].defect_norm;
    rep.certified.push_back(make_inequality("defect_reduction_subwindow", meas[2].defect_norm, 0.75 * d_norm, tol,
                                            "defect_norm_final_subwindow"));
  }

  std::map<std::string, double> fv;
  verify_steps(spec, pts, n_grid, cfg, tol, rep, pf, fv);
  for (const auto& [k, v] : fv) rep.values[k] = v;
  const double d_final = fv["defect_norm_final"];
  const double min_phi_final = std::min({fv["min_phi_final_1"], fv["min_phi_final_2"], fv["min_phi_final_3"]});
  rep.values["ratio_to_norm"] = d_final / d_norm;
  rep.values["ratio_to_xi"] = d_final / norms.xi;
  const double sqrt_d = std::sqrt(d_norm);

  if (cfg.zero_amplitude) {
    rep.certified.push_back(make_inequality("defect_unchanged", d_final, d_norm, tol, "defect_norm_final"));
  } else {
    if (search) {
      rep.certified.push_back(make_inequality("defect_reduction", d_final, 0.75 * d_norm, tol, "defect_norm_final"));
      rep.values["coefficient_floor"] = cfg.coeff_floor;
      rep.certified.push_back(make_inequality("coefficient_floor", cfg.coeff_floor, min_phi_final, tol));
    } else {
      const double d_min = std::min({norms.min_phi[0], norms.min_phi[1], norms.min_phi[2]});
      const double d_tilde = to_double(xi) * d_min / (4 * d_norm);
      rep.values["coefficient_floor"] = d_tilde;
      rep.values["xi"] = to_double(xi);
      rep.certified.push_back(
          make_inequality("defect_reduction", d_final, 0.75 * to_double(xi), tol, "defect_norm_final"));
      rep.certified.push_back(make_inequality("coefficient_floor", d_tilde, min_phi_final, tol));
      for (int k = 0; k < 3; ++k)
        rep.certified.push_back(make_inequality("assum2_step" + std::to_string(k + 1), sqrt_d / cfg.epsilon,
                                                lam[k], tol));
    }
    rep.certified.push_back(make_inequality("uniform_error", fv["v_error"], cfg.epsilon, tol, "v_error"));
    rep.certified.push_back(make_inequality("w_error", fv["w_error"],
                                            cfg.epsilon * (norms.grad_v0 + 8 * sqrt_d), tol, "w_error"));
    rep.certified.push_back(make_inequality("grad_v_error", fv["grad_v_error"], 7 * sqrt_d, tol, "grad_v_error"));
    rep.certified.push_back(make_inequality("grad_w_error", fv["grad_w_error"],
                                            7 * sqrt_d * (norms.grad_v0 + 7 * sqrt_d) + 4 * d_norm, tol,
                                            "grad_w_error"));
  }

  C1StageResult<T> out;
  out.chain = spec;
  out.v = chain_v(spec, 3);
  out.w = chain_w(spec, 3);
  out.lambdas = lam;
  out.report = std::move(rep);
  return out;
}

template <class T>
C1IterationResult iterate_c1(const ProblemFields<T>& problem, const Rect<T>& domain, const C1Config& cfg,
                             double target, int stage_budget, const PrecisionContext& ctx,
                             ProblemFields<T>* final_fields) {
  C1IterationResult res;
  ProblemFields<T> cur = problem;
  const T h0 = fitting_step(domain, cfg.h);
  const std::vector<Vec2<T>> pts = verification_points(domain, h0, cfg.verify_random, ctx);
  for (int k = 0;; ++k) {
    const StageNorms n = initial_norms(cur, pts);
    if (n.d_norm <= target) {
      res.reached_target = true;
      break;
    }
    if (k >= stage_budget) break;
    C1Config c = cfg;
    c.mode = C1Config::Mode::Apriori;
    c.epsilon = cfg.epsilon / std::pow(2.0, k + 1);
    C1StageResult<T> st = run_stage_c1(cur, domain, c, ctx);
    st.report.values["stage"] = k;
    const bool ok = st.report.certified_ok() && st.report.bounds_ok();
    res.reports.push_back(st.report);
    if (!ok) throw StageError("stage " + std::to_string(k) + " failed verification", st.report);
    cur = ProblemFields<T>{st.v, st.w, cur.a};
  }
  if (final_fields) *final_fields = cur;
  return res;
}

template ChainSpec<double> make_c1_chain<double>(const ProblemFields<double>&, const C1Config&, double,
                                                  const std::vector<double>&);
template ChainSpec<Real> make_c1_chain<Real>(const ProblemFields<Real>&, const C1Config&, double,
                                              const std::vector<double>&);
template C1StageResult<double> run_stage_c1<double>(const ProblemFields<double>&, const Rect<double>&,
                                                    const C1Config&, const PrecisionContext&);
template C1StageResult<Real> run_stage_c1<Real>(const ProblemFields<Real>&, const Rect<Real>&, const C1Config&,
                                                const PrecisionContext&);
template C1IterationResult iterate_c1<double>(const ProblemFields<double>&, const Rect<double>&, const C1Config&,
                                              double, int, const PrecisionContext&, ProblemFields<double>*);
template C1IterationResult iterate_c1<Real>(const ProblemFields<Real>&, const Rect<Real>&, const C1Config&, double,
                                            int, const PrecisionContext&, ProblemFields<Real>*);

}  // namespace corrugator
