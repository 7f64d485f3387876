#pragma once

#include "corrugator/corrugation.hpp"
#include "corrugator/mollify.hpp"
#include "corrugator/report.hpp"
#include "corrugator/stage_c1.hpp"

#include <optional>
#include <string>
#include <vector>

namespace corrugator {

// Upper limit on the initial defect of a C^{1,alpha} stage.
inline constexpr double kHolderDeltaCap = 5.4e-16;

struct HolderStageConfig {
  double sigma = 35.0;
  // Exactly one of M and lambda1 fixes the mollification scale:
  // l = |D|^(1/2) / M, or l = sigma / lambda1 (then M = |D|^(1/2) / l).
  std::optional<double> M;
  std::optional<double> lambda1;
  double r = 0.1;                  // inset width of the enlarged domain
  double delta0 = kHolderDeltaCap;  // admissible initial defect
  double beta = 0.5;               // Hoelder exponent of A in the defect estimate
  std::size_t samples = 1000;      // random sample points on the domain
  std::size_t holder_pairs = 1000;  // random pairs for the Hoelder seminorm of A
  std::size_t keep_samples = 1000;
  bool mollify = true;
  MollifyConfig mollify_cfg{};
};

// Sup-norm quantities of a stage output, as in the appendix tables.
struct HolderNorms {
  double defect = 0.0;
  double v = 0.0, grad_v = 0.0, grad_w = 0.0, hess_v = 0.0, hess_w = 0.0;
};

template <class T>
struct HolderStageResult {
  ScalarField<T> v;
  VectorField2<T> w;
  std::array<double, 3> lambdas{};
  HolderNorms input, output;
  int digits = 0;  // working precision of the stage
  StageReport report;
};

// Precision needed to resolve phases lambda * x . eta on the rectangle.
int holder_digits(double lambda_max, const Rect<double>& domain, int base_digits);

// Mollify -> shift w -> three modified corrugation steps. Norms are sampled
// on `domain`. Throws StageError (with the report) when a precondition or a
// certified inequality fails, ConfigError on invalid parameters.
template <class T>
HolderStageResult<T> run_stage_holder(const ProblemFields<T>& problem, const Rect<T>& domain,
                                      const HolderStageConfig& cfg, const PrecisionContext& ctx);

// One modified step checked on sample points: the (delta, l) conditions on a
// and v, then the pointwise one-step estimates.
template <class T>
StageReport one_step_mod_check(const ScalarField<T>& v, const VectorField2<T>& w, const ScalarField<T>& a,
                               const Vec2<T>& eta, const T& delta, const T& l, const T& lambda,
                               const std::vector<Vec2<T>>& points, double rel_tol);

struct Schedule {
  double alpha = 0.0, beta = 0.0;
  double s = 0.0;
  double s_low = 0.0, s_high = 0.0;
  double c = 0.0;  // 20.9e8 (1 + |grad v0|)
  double sigma_min = 0.0, sigma_max = 0.0;
  bool ramp = false;
  double n_factor = 1.0;  // the constant N of M0
  double m0 = 0.0;
  double delta0 = 0.0, r = 0.0;

  double sigma(int k) const;
  double m(int k) const;       // M_k = M0 c^k prod_{j<k} sigma_j^3
  double inset(int k) const;   // r - delta0 sum_{i=1..k} 2^-i
  nlohmann::json to_json() const;
};

struct ScheduleInputs {
  double alpha = 0.01, beta = 0.9;
  double grad_v0 = 0.0;      // |grad v0|_0
  double defect0 = 0.0;      // |D0|_0
  double a_holder = 0.0;     // |A|_{C^{0,beta}}, zero when A = 0
  double hess_v0 = 0.0, hess_w0 = 0.0;
  double r = 0.1;
  double delta0 = 5e-16;
  bool ramp = false;
};

// Throws ConfigError for an empty exponent interval or invalid parameters.
Schedule build_schedule(const ScheduleInputs& in);

struct HolderRunConfig {
  ScheduleInputs schedule;  // sup norms are filled in by run_holder
  int stage_budget = 1;
  HolderStageConfig stage;  // sigma / M / lambda1 / r are set per stage
};

template <class T>
struct HolderRunResult {
  Schedule schedule;
  std::vector<StageReport> stages;
  StageReport summary;  // per-stage trace and the decay / gradient checks
  bool converged = false;
};

template <class T>
HolderRunResult<T> run_holder(const ProblemFields<T>& problem, const Rect<T>& domain, const HolderRunConfig& cfg,
                              const PrecisionContext& ctx);

// Sampled |A|_0 + [A]_beta over random pairs of the rectangle.
template <class T>
double holder_norm(const SymMatField<T>& a, const Rect<T>& domain, double beta, std::size_t pairs,
                   const PrecisionContext& ctx);

}  // namespace corrugator
