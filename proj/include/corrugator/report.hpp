#pragma once

#include "corrugator/numeric.hpp"

#include <json.hpp>

#include <array>
#include <limits>
#include <string>
#include <vector>

namespace corrugator {

// One recorded inequality lhs <= rhs. For pointwise bounds, (lhs, rhs) is the
// worst sample (largest lhs/rhs) and `samples` keeps the raw pairs so the flag
// can be recomputed later.
struct Inequality {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_tol = 0.0;
  bool pass = false;
  std::string lhs_ref;  // optional key into StageReport::values that must equal lhs
  std::vector<std::array<double, 2>> samples;
  std::size_t checked_points = 0;
};

bool holds(double lhs, double rhs, double rel_tol);
double ratio(double lhs, double rhs);

// Accumulates a pointwise bound over many points.
class BoundTracker {
 public:
  BoundTracker() = default;
  BoundTracker(std::string name, double rel_tol, std::size_t keep_samples)
      : name_(std::move(name)), rel_tol_(rel_tol), keep_(keep_samples) {}

  void add(double lhs, double rhs, bool keep = false);
  Inequality result() const;
  double worst_ratio() const { return worst_ratio_; }

 private:
  std::string name_;
  double rel_tol_ = 0.0;
  std::size_t keep_ = 0;
  std::size_t count_ = 0;
  bool all_pass_ = true;
  double worst_ratio_ = -1.0;
  double worst_lhs_ = 0.0, worst_rhs_ = 0.0;
  std::vector<std::array<double, 2>> samples_;
};

Inequality make_inequality(const std::string& name, double lhs, double rhs, double rel_tol = 1e-12,
                           const std::string& lhs_ref = "");

struct StageReport {
  std::string pipeline;
  nlohmann::json values = nlohmann::json::object();
  std::vector<Inequality> bounds;     // pointwise one-step estimates
  std::vector<Inequality> certified;  // stage-level claims
  std::vector<std::string> warnings;

  bool bounds_ok() const;
  bool certified_ok() const;
  nlohmann::json to_json() const;
};

nlohmann::json inequality_to_json(const Inequality& q);
Inequality inequality_from_json(const nlohmann::json& j);

// Re-checks every inequality of a report document. Returns one line per
// failed or inconsistent record; empty means everything passes.
std::vector<std::string> verify_report(const nlohmann::json& report);

// Rounding allowance for comparisons at a given precision.
double rounding_tolerance(int digits);

}  // namespace corrugator
