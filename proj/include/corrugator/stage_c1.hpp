#pragma once

#include "corrugator/corrugation.hpp"
#include "corrugator/field.hpp"
#include "corrugator/report.hpp"

#include <optional>
#include <string>
#include <vector>

namespace corrugator {

struct StageError : std::runtime_error {
  StageError(const std::string& what, StageReport report)
      : std::runtime_error(what), report(std::move(report)) {}
  StageReport report;
};

// Expressions of a problem instance: v0, w0 = (w1, w2), A = (a11, a12, a22).
struct ProblemExprs {
  Expr v0, w1, w2, a11, a12, a22;
};

template <class T>
struct ProblemFields {
  ScalarField<T> v;
  VectorField2<T> w;
  SymMatField<T> a;
};

template <class T>
ProblemFields<T> make_fields(const ProblemExprs& e) {
  return {ScalarField<T>::from_expr(e.v0),
          {ScalarField<T>::from_expr(e.w1), ScalarField<T>::from_expr(e.w2)},
          {ScalarField<T>::from_expr(e.a11), ScalarField<T>::from_expr(e.a12), ScalarField<T>::from_expr(e.a22)}};
}

struct C1Config {
  enum class Mode { Search, Apriori };
  Mode mode = Mode::Search;
  double epsilon = 0.1;
  double delta = 0.5;         // search mode: a_k = sqrt((1 - delta) phi_k)
  double coeff_floor = 0.1;   // floor on coefficients in condition B
  double grid_factor = 1.1;   // geometric search grid ratio
  double lambda_min = 1.0;    // first grid value
  double lambda_max = 1e7;
  std::optional<std::array<double, 3>> lambdas;  // fixed frequencies, no search
  double h = 0.002;            // full-domain grid step
  double samples_per_period = 10.0;
  Rect<double> subwindow{-0.01, 0.01, -0.01, 0.01};
  double h_subwindow = 1e-4;
  double safety_factor = 1.0;  // apriori mode multiplier on the computed minima
  int max_epsilon_retries = 40;
  double max_grid_points = 2e7;  // per measurement grid
  std::size_t verify_random = 1000;
  std::size_t keep_samples = 1000;
  bool verify_bounds = true;
  bool zero_amplitude = false;  // identity stage (testing)
};

// Per-step quantities measured by the frequency search on a grid.
struct StepMeasurement {
  double lambda = 0.0;
  double h = 0.0;
  double b_norm = 0.0;         // max |B~_k| over the grid
  double condition_b_margin = 0.0;  // min over grid and i of c_B (phi_i/2 - floor) - |B~_k|
  bool condition_a = false;
  bool condition_b = false;
  bool ok() const { return condition_a && condition_b; }
};

template <class T>
struct C1StageResult {
  ChainSpec<T> chain;
  ScalarField<T> v;   // v_3
  VectorField2<T> w;  // w_3
  std::array<double, 3> lambdas{};
  StageReport report;
};

// Smallest grid frequency >= start satisfying `ok`, assuming ok is monotone
// along the grid. Returns the grid index.
int search_grid(double lambda_min, double factor, int start_index, double lambda_max,
                const std::function<bool(double)>& ok);

double grid_value(double lambda_min, double factor, int index);
int grid_index_at_least(double lambda_min, double factor, double lambda);

// The corrugation chain of a C1 stage: amplitudes sqrt((1 - delta) phi_k) in
// search mode, the a priori amplitudes with margin xi otherwise.
template <class T>
ChainSpec<T> make_c1_chain(const ProblemFields<T>& pf, const C1Config& cfg, double xi,
                           const std::vector<double>& lambdas);

template <class T>
C1StageResult<T> run_stage_c1(const ProblemFields<T>& problem, const Rect<T>& domain, const C1Config& cfg,
                              const PrecisionContext& ctx);

struct C1IterationResult {
  std::vector<StageReport> reports;
  bool reached_target = false;
};

// Chains apriori-mode stages until the sampled defect norm drops below
// target or the stage budget is used up. Stage k uses epsilon / 2^(k+1).
template <class T>
C1IterationResult iterate_c1(const ProblemFields<T>& problem, const Rect<T>& domain, const C1Config& cfg,
                             double target, int stage_budget, const PrecisionContext& ctx,
                             ProblemFields<T>* final_fields = nullptr);

}  // namespace corrugator
