#include "corrugator/report.hpp"

#include <cmath>

namespace corrugator {

bool holds(double lhs, double rhs, double rel_tol) {
  if (!std::isfinite(lhs) || !std::isfinite(rhs)) return false;
  return lhs <= rhs + rel_tol * std::abs(rhs);
}

double ratio(double lhs, double rhs) {
  if (rhs > 0) return lhs / rhs;
  if (lhs <= 0) return 0.0;
  return std::numeric_limits<double>::infinity();
}

void BoundTracker::add(double lhs, double rhs, bool keep) {
  ++count_;
  if (!holds(lhs, rhs, rel_tol_)) all_pass_ = false;
  const double r = ratio(lhs, rhs);
  if (r > worst_ratio_ || count_ == 1) {
    worst_ratio_ = r;
    worst_lhs_ = lhs;
    worst_rhs_ = rhs;
  }
  if (keep && samples_.size() < keep_) samples_.push_back({lhs, rhs});
}

Inequality BoundTracker::result() const {
  Inequality q;
  q.name = name_;
  q.lhs = worst_lhs_;
  q.rhs = worst_rhs_;
  q.rel_tol = rel_tol_;
  q.pass = all_pass_ && count_ > 0;
  q.samples = samples_;
  q.checked_points = count_;
  if (count_ == 0) q.pass = true;  // nothing to check
  return q;
}

Inequality make_inequality(const std::string& name, double lhs, double rhs, double rel_tol,
                           const std::string& lhs_ref) {
  Inequality q;
  q.name = name;
  q.lhs = lhs;
  q.rhs = rhs;
  q.rel_tol = rel_tol;
  q.pass = holds(lhs, rhs, rel_tol);
  q.lhs_ref = lhs_ref;
  q.checked_points = 1;
  return q;
}

bool StageReport::bounds_ok() const {
  for (const auto& q : bounds)
    if (!q.pass) return false;
  return true;
}

bool StageReport::certified_ok() const {
  for (const auto& q : certified)
    if (!q.pass) return false;
  return true;
}

nlohmann::json inequality_to_json(const Inequality& q) {
  nlohmann::json j{{"name", q.name},       {"lhs", q.lhs},   {"rhs", q.rhs},
                   {"rel_tol", q.rel_tol}, {"pass", q.pass}, {"checked_points", q.checked_points}};
  if (!q.lhs_ref.empty()) j["lhs_ref"] = q.lhs_ref;
  if (!q.samples.empty()) j["samples"] = q.samples;
  return j;
}

Inequality inequality_from_json(const nlohmann::json& j) {
  Inequality q;
  q.name = j.at("name").get<std::string>();
  q.lhs = j.at("lhs").get<double>();
  q.rhs = j.at("rhs").get<double>();
  q.rel_tol = j.at("rel_tol").get<double>();
  q.pass = j.at("pass").get<bool>();
  q.checked_points = j.value("checked_points", std::size_t{0});
  q.lhs_ref = j.value("lhs_ref", std::string());
  if (j.contains("samples")) q.samples = j.at("samples").get<std::vector<std::array<double, 2>>>();
  return q;
}

nlohmann::json StageReport::to_json() const {
  nlohmann::json j;
  j["pipeline"] = pipeline;
  j["values"] = values;
  j["bounds"] = nlohmann::json::array();
  for (const auto& q : bounds) j["bounds"].push_back(inequality_to_json(q));
  j["certified"] = nlohmann::json::array();
  for (const auto& q : certified) j["certified"].push_back(inequality_to_json(q));
  j["warnings"] = warnings;
  return j;
}

namespace {

void check_one(const Inequality& q, const nlohmann::json& values, const std::string& section,
               std::vector<std::string>& out) {
  const std::string tag = section + "/" + q.name;
  const bool recomputed = holds(q.lhs, q.rhs, q.rel_tol);
  bool samples_pass = true;
  for (const auto& s : q.samples) {
    if (!holds(s[0], s[1], q.rel_tol)) samples_pass = false;
    if (ratio(s[0], s[1]) > ratio(q.lhs, q.rhs) * (1 + 1e-12))
      out.push_back(tag + ": a stored sample is worse than the recorded worst case");
  }
  if (!recomputed || !samples_pass) out.push_back(tag + ": inequality fails (" + std::to_string(q.lhs) +
                                                  " > " + std::to_string(q.rhs) + ")");
  if (q.pass != (recomputed && samples_pass))
    out.push_back(tag + ": recorded flag does not match the recomputed result");
  if (!q.lhs_ref.empty()) {
    if (!values.contains(q.lhs_ref)) {
      out.push_back(tag + ": referenced value '" + q.lhs_ref + "' missing");
    } else if (values.at(q.lhs_ref).get<double>() != q.lhs) {
      out.push_back(tag + ": referenced value '" + q.lhs_ref + "' differs from the checked quantity");
    }
  }
}

void verify_stage(const nlohmann::json& stage, const std::string& prefix, std::vector<std::string>& out) {
  const nlohmann::json values = stage.value("values", nlohmann::json::object());
  for (const char* section : {"bounds", "certified"}) {
    if (!stage.contains(section)) continue;
    if (!stage.at(section).is_array()) throw std::runtime_error(std::string("report section '") + section + "' is not a list");
    for (const auto& item : stage.at(section)) check_one(inequality_from_json(item), values, prefix + section, out);
  }
}

}  // namespace

std::vector<std::string> verify_report(const nlohmann::json& report) {
  std::vector<std::string> out;
  if (!report.is_object() || !report.contains("stages") || !report.at("stages").is_array())
    throw std::runtime_error("report schema mismatch: expected an object with a 'stages' list");
  std::size_t k = 0;
  for (const auto& stage : report.at("stages")) {
    verify_stage(stage, "stage" + std::to_string(k) + "/", out);
    ++k;
  }
  return out;
}

double rounding_tolerance(int digits) { return std::max(1e-12, std::pow(10.0, -(digits - 6))); }

}  // namespace corrugator
