#pragma once

#include "corrugator/holder.hpp"
#include "corrugator/stage_c1.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace corrugator {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rectangle bounds kept as decimal strings so that extended-precision
// windows such as [1 - 2e-21, 1] survive until the working type is known.
struct RectSpec {
  std::array<std::string, 4> bounds{"-1", "1", "-1", "1"};  // x0, x1, y0, y1

  template <class T>
  Rect<T> as() const {
    Rect<T> r{from_string<T>(bounds[0]), from_string<T>(bounds[1]), from_string<T>(bounds[2]),
              from_string<T>(bounds[3])};
    validate_rect(r);
    return r;
  }
};

struct RunConfig {
  std::string pipeline = "c1";  // c1 | holder | sweep
  std::string example;          // built-in base, empty for none
  RectSpec domain;
  std::string v0 = "0";
  std::array<std::string, 2> w0{"0", "0"};
  std::array<std::string, 3> a{"0", "0", "0"};  // A11, A12, A22

  int digits = 15;
  std::uint64_t seed = 1;
  int decimals = 17;
  double mesh_h = 0.002;     // full-domain mesh step
  std::string mesh_format = "obj";
  bool meshes = true;
  std::optional<RectSpec> subwindow;  // late-corrugation window

  C1Config c1;
  HolderStageConfig holder;
  std::string holder_mode = "stage";  // stage | schedule
  ScheduleInputs schedule;
  int stage_budget = 1;
  std::vector<double> sigmas;
};

// The five built-in problem instances: ex3.1, ex3.2, ex6.1, ex6.2, ex6.3.
RunConfig builtin_example(const std::string& name);
std::vector<std::string> builtin_names();

// Applies the "example" base, then every other key. Unknown keys and
// ill-typed values raise ConfigError naming the key.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Parses all expressions and checks ranges; throws ConfigError.
void validate(const RunConfig& cfg);

ProblemExprs problem_exprs(const RunConfig& cfg);

nlohmann::json config_to_json(const RunConfig& cfg);

// "x0,x1,y0,y1" as used by the --subwindow flag.
RectSpec parse_rect_flag(const std::string& s);

}  // namespace corrugator
