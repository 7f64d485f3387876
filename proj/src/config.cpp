#include "corrugator/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace corrugator {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("'" + section + "' must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + (section.empty() ? k : section + "." + k) + "'");
}

template <class V>
V get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<V>();
  } catch (const json::exception&) {
    throw ConfigError("invalid value for '" + where + "'");
  }
}

template <class V>
void read(const json& j, const std::string& key, const std::string& section, V& out) {
  if (j.contains(key)) out = get<V>(j, key, section.empty() ? key : section + "." + key);
}

std::string bound_string(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    return os.str();
  }
  throw ConfigError("'" + where + "' entries must be numbers or decimal strings");
}

RectSpec read_rect(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4) throw ConfigError("'" + where + "' must list four bounds x0, x1, y0, y1");
  RectSpec r;
  for (int i = 0; i < 4; ++i) r.bounds[i] = bound_string(v[i], where);
  return r;
}

Rect<double> to_rect_d(const RectSpec& r) {
  return {std::stod(r.bounds[0]), std::stod(r.bounds[1]), std::stod(r.bounds[2]), std::stod(r.bounds[3])};
}

RunConfig holder_example(const std::string& name, const std::string& v0, const std::string& a) {
  RunConfig c;
  c.example = name;
  c.pipeline = "holder";
  c.domain = RectSpec{{"-1", "1", "-1", "1"}};
  c.v0 = v0;
  c.a = {a, "0", a};
  c.digits = 50;
  c.holder.sigma = 35.0;
  c.holder.lambda1 = 1e19;
  c.holder.M.reset();
  c.sigmas = {1e1, 1e2, 1e3, 1e4};
  c.meshes = false;
  return c;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"ex3.1", "ex3.2", "ex6.1", "ex6.2", "ex6.3"}; }

RunConfig builtin_example(const std::string& name) {
  RunConfig c;
  if (name == "ex3.1" || name == "ex3.2") {
    const bool first = name == "ex3.1";
    c.example = name;
    c.pipeline = "c1";
    c.domain = RectSpec{{"-0.5", "0.5", "-0.5", "0.5"}};
    c.v0 = first ? "x^2 - y^2" : "x^2 + y^2";
    c.w0 = first ? std::array<std::string, 2>{"x*y^2", "x^2*y"} : std::array<std::string, 2>{"-x*y^2", "-x^2*y"};
    const std::string diag = first ? "5 - (x^2 + y^2)/4" : "5 + (x^2 + y^2)/4";
    c.a = {diag, "0", diag};
    c.subwindow = RectSpec{{"-0.01", "0.01", "-0.01", "0.01"}};
    return c;
  }
  if (name == "ex6.1") {
    RunConfig c1 = holder_example(name, "0", "-1e-18*(x^2 + y^2)");
    c1.subwindow = RectSpec{{"0.9999999999999999999", "1", "0.9999999999999999999", "1"}};
    return c1;
  }
  if (name == "ex6.2") {
    RunConfig c2 = holder_example(name, "0", "1e-18*(x^2 + y^2)");
    c2.subwindow = RectSpec{{"0.999999999999999999998", "1", "0.999999999999999999998", "1"}};
    return c2;
  }
  if (name == "ex6.3") {
    RunConfig c3 = holder_example(name, "1e-9*(x^2 + y^2)", "0");
    c3.subwindow = RectSpec{{"0.9999999999999999999", "1", "0.9999999999999999999", "1"}};
    return c3;
  }
  throw ConfigError("unknown example '" + name + "'");
}

RunConfig parse_config(const json& j) {
  check_keys(j, "", {"pipeline", "example", "domain", "v0", "w0", "A", "precision", "sampling", "output", "subwindow",
                     "c1", "holder", "sweep", "mollify"});
  RunConfig c;
  if (j.contains("example")) c = builtin_example(get<std::string>(j, "example", "example"));
  read(j, "pipeline", "", c.pipeline);
  if (j.contains("domain")) c.domain = read_rect(j["domain"], "domain");
  read(j, "v0", "", c.v0);
  if (j.contains("w0")) {
    const auto v = get<std::vector<std::string>>(j, "w0", "w0");
    if (v.size() != 2) throw ConfigError("'w0' must have two components");
    c.w0 = {v[0], v[1]};
  }
  if (j.contains("A")) {
    const auto v = get<std::vector<std::string>>(j, "A", "A");
    if (v.size() != 3) throw ConfigError("'A' must list A11, A12, A22");
    c.a = {v[0], v[1], v[2]};
  }
  if (j.contains("subwindow")) c.subwindow = read_rect(j["subwindow"], "subwindow");
  if (j.contains("precision")) {
    const json& p = j["precision"];
    check_keys(p, "precision", {"digits", "seed"});
    read(p, "digits", "precision", c.digits);
    read(p, "seed", "precision", c.seed);
  }
  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    check_keys(s, "sampling", {"n"});
    if (s.contains("n")) {
      const auto n = get<std::size_t>(s, "n", "sampling.n");
      c.holder.samples = n;
      c.c1.verify_random = n;
    }
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, "output", {"decimals", "mesh_h", "mesh_format", "meshes"});
    read(o, "decimals", "output", c.decimals);
    read(o, "mesh_h", "output", c.mesh_h);
    read(o, "mesh_format", "output", c.mesh_format);
    read(o, "meshes", "output", c.meshes);
  }
  if (j.contains("c1")) {
    const json& s = j["c1"];
    check_keys(s, "c1", {"epsilon", "delta", "coeff_floor", "mode", "grid_factor", "lambda_min", "lambda_max", "lambdas",
                         "h", "h_subwindow", "samples_per_period", "safety_factor", "max_epsilon_retries",
                         "max_grid_points"});
    read(s, "epsilon", "c1", c.c1.epsilon);
    read(s, "delta", "c1", c.c1.delta);
    read(s, "coeff_floor", "c1", c.c1.coeff_floor);
    if (s.contains("mode")) {
      const auto m = get<std::string>(s, "mode", "c1.mode");
      if (m == "search")
        c.c1.mode = C1Config::Mode::Search;
      else if (m == "apriori")
        c.c1.mode = C1Config::Mode::Apriori;
      else
        throw ConfigError("'c1.mode' must be 'search' or 'apriori'");
    }
    read(s, "grid_factor", "c1", c.c1.grid_factor);
    read(s, "lambda_min", "c1", c.c1.lambda_min);
    read(s, "lambda_max", "c1", c.c1.lambda_max);
    if (s.contains("lambdas")) {
      if (s["lambdas"].is_null()) {
        c.c1.lambdas.reset();
      } else {
        const auto v = get<std::vector<double>>(s, "lambdas", "c1.lambdas");
        if (v.size() != 3) throw ConfigError("'c1.lambdas' must list three frequencies");
        c.c1.lambdas = std::array<double, 3>{v[0], v[1], v[2]};
      }
    }
    read(s, "h", "c1", c.c1.h);
    read(s, "h_subwindow", "c1", c.c1.h_subwindow);
    read(s, "samples_per_period", "c1", c.c1.samples_per_period);
    read(s, "safety_factor", "c1", c.c1.safety_factor);
    read(s, "max_epsilon_retries", "c1", c.c1.max_epsilon_retries);
    read(s, "max_grid_points", "c1", c.c1.max_grid_points);
  }
  if (j.contains("holder")) {
    const json& s = j["holder"];
    check_keys(s, "holder", {"mode", "sigma", "lambda1", "M", "r", "beta", "alpha", "delta0", "stage_budget", "ramp",
                             "mollify"});
    read(s, "mode", "holder", c.holder_mode);
    read(s, "sigma", "holder", c.holder.sigma);
    if (s.contains("lambda1") && s.contains("M")) throw ConfigError("set only one of 'holder.lambda1' and 'holder.M'");
    if (s.contains("lambda1")) {
      c.holder.lambda1 = get<double>(s, "lambda1", "holder.lambda1");
      c.holder.M.reset();
    }
    if (s.contains("M")) {
      c.holder.M = get<double>(s, "M", "holder.M");
      c.holder.lambda1.reset();
    }
    read(s, "r", "holder", c.holder.r);
    c.schedule.r = c.holder.r;
    read(s, "beta", "holder", c.holder.beta);
    c.schedule.beta = c.holder.beta;
    read(s, "alpha", "holder", c.schedule.alpha);
    if (s.contains("delta0")) {
      c.schedule.delta0 = get<double>(s, "delta0", "holder.delta0");
      c.holder.delta0 = c.schedule.delta0;
    }
    read(s, "stage_budget", "holder", c.stage_budget);
    read(s, "ramp", "holder", c.schedule.ramp);
    read(s, "mollify", "holder", c.holder.mollify);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, "sweep", {"sigmas"});
    read(s, "sigmas", "sweep", c.sigmas);
  }
  if (j.contains("mollify")) {
    const json& s = j["mollify"];
    check_keys(s, "mollify", {"quadrature_n", "tol", "method", "moment_order"});
    read(s, "quadrature_n", "mollify", c.holder.mollify_cfg.quadrature_n);
    read(s, "tol", "mollify", c.holder.mollify_cfg.tol);
    read(s, "moment_order", "mollify", c.holder.mollify_cfg.moment_order);
    if (s.contains("method")) {
      const auto m = get<std::string>(s, "method", "mollify.method");
      if (m == "auto")
        c.holder.mollify_cfg.method = MollifyConfig::Method::Auto;
      else if (m == "moments")
        c.holder.mollify_cfg.method = MollifyConfig::Method::Moments;
      else if (m == "quadrature")
        c.holder.mollify_cfg.method = MollifyConfig::Method::Quadrature;
      else
        throw ConfigError("'mollify.method' must be 'auto', 'moments' or 'quadrature'");
    }
  }
  if (c.subwindow) c.c1.subwindow = to_rect_d(*c.subwindow);
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void validate(const RunConfig& c) {
  if (c.pipeline != "c1" && c.pipeline != "holder" && c.pipeline != "sweep")
    throw ConfigError("'pipeline' must be one of c1, holder, sweep");
  if (c.digits < 15) throw ConfigError("'precision.digits' must be at least 15");
  if (c.decimals < 1 || c.decimals > 60) throw ConfigError("'output.decimals' must lie in [1, 60]");
  if (!(c.mesh_h > 0)) throw ConfigError("'output.mesh_h' must be positive");
  if (c.mesh_format != "obj" && c.mesh_format != "csv") throw ConfigError("'output.mesh_format' must be obj or csv");
  auto check_expr = [](const std::string& e, const std::string& key) {
    try {
      parse(e);
    } catch (const ParseError& err) {
      throw ConfigError("expression '" + key + "' does not parse: " + err.what());
    }
  };
  check_expr(c.v0, "v0");
  check_expr(c.w0[0], "w0[0]");
  check_expr(c.w0[1], "w0[1]");
  for (int i = 0; i < 3; ++i) check_expr(c.a[i], "A[" + std::to_string(i) + "]");
  try {
    PrecisionGuard g(std::max(c.digits, 30));
    c.domain.as<Real>();
    if (c.subwindow) c.subwindow->as<Real>();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("invalid rectangle: ") + e.what());
  } catch (const std::exception&) {
    throw ConfigError("rectangle bounds must be decimal numbers");
  }
  if (!(c.c1.epsilon > 0)) throw ConfigError("'c1.epsilon' must be positive");
  if (!(c.c1.delta > 0 && c.c1.delta < 1)) throw ConfigError("'c1.delta' must lie in (0, 1)");
  if (!(c.c1.coeff_floor >= 0)) throw ConfigError("'c1.coeff_floor' must be nonnegative");
  if (!(c.c1.grid_factor > 1)) throw ConfigError("'c1.grid_factor' must exceed 1");
  if (!(c.c1.lambda_min > 0 && c.c1.lambda_max > c.c1.lambda_min))
    throw ConfigError("'c1.lambda_min' must be positive and below 'c1.lambda_max'");
  if (c.c1.lambdas)
    for (double l : *c.c1.lambdas)
      if (!(l > 0)) throw ConfigError("'c1.lambdas' must be positive");
  if (!(c.c1.h > 0 && c.c1.h_subwindow > 0)) throw ConfigError("grid steps must be positive");
  if (!(c.c1.samples_per_period > 0)) throw ConfigError("'c1.samples_per_period' must be positive");
  if (!(c.holder.sigma > 1)) throw ConfigError("'holder.sigma' must exceed 1");
  if (c.holder.lambda1 && !(*c.holder.lambda1 > 0)) throw ConfigError("'holder.lambda1' must be positive");
  if (c.holder.M && !(*c.holder.M > 0)) throw ConfigError("'holder.M' must be positive");
  if (c.holder_mode != "stage" && c.holder_mode != "schedule")
    throw ConfigError("'holder.mode' must be 'stage' or 'schedule'");
  if (c.pipeline != "c1" && c.holder_mode == "stage" && c.holder.M.has_value() == c.holder.lambda1.has_value())
    throw ConfigError("stage mode needs exactly one of 'holder.lambda1' and 'holder.M'");
  if (c.stage_budget < 1) throw ConfigError("'holder.stage_budget' must be positive");
  for (double s : c.sigmas)
    if (!(s > 1)) throw ConfigError("'sweep.sigmas' entries must exceed 1");
  if (c.holder.samples == 0) throw ConfigError("'sampling.n' must be positive");
}

ProblemExprs problem_exprs(const RunConfig& c) {
  return {parse(c.v0), parse(c.w0[0]), parse(c.w0[1]), parse(c.a[0]), parse(c.a[1]), parse(c.a[2])};
}

nlohmann::json config_to_json(const RunConfig& c) {
  json j;
  j["pipeline"] = c.pipeline;
  if (!c.example.empty()) j["example"] = c.example;
  j["domain"] = c.domain.bounds;
  j["v0"] = c.v0;
  j["w0"] = c.w0;
  j["A"] = c.a;
  j["precision"] = {{"digits", c.digits}, {"seed", c.seed}};
  if (c.subwindow) j["subwindow"] = c.subwindow->bounds;
  j["sampling"] = {{"n", c.holder.samples}};
  j["output"] = {{"decimals", c.decimals}, {"mesh_h", c.mesh_h}, {"mesh_format", c.mesh_format}, {"meshes", c.meshes}};
  const C1Config& k = c.c1;
  j["c1"] = {{"epsilon", k.epsilon},
             {"delta", k.delta},
             {"coeff_floor", k.coeff_floor},
             {"mode", k.mode == C1Config::Mode::Search ? "search" : "apriori"},
             {"grid_factor", k.grid_factor},
             {"lambda_min", k.lambda_min},
             {"lambda_max", k.lambda_max},
             {"lambdas", k.lambdas ? json(*k.lambdas) : json(nullptr)},
             {"h", k.h},
             {"h_subwindow", k.h_subwindow},
             {"samples_per_period", k.samples_per_period},
             {"safety_factor", k.safety_factor},
             {"max_epsilon_retries", k.max_epsilon_retries},
             {"max_grid_points", k.max_grid_points}};
  const HolderStageConfig& h = c.holder;
  // beta and delta0 have separate stage and schedule defaults; the file keeps
  // the ones the selected mode uses.
  const bool sched = c.holder_mode == "schedule";
  json hj = {{"mode", c.holder_mode},
             {"sigma", h.sigma},
             {"r", h.r},
             {"beta", sched ? c.schedule.beta : h.beta},
             {"alpha", c.schedule.alpha},
             {"delta0", sched ? c.schedule.delta0 : h.delta0},
             {"stage_budget", c.stage_budget},
             {"ramp", c.schedule.ramp},
             {"mollify", h.mollify}};
  if (h.lambda1) hj["lambda1"] = *h.lambda1;
  if (h.M) hj["M"] = *h.M;
  j["holder"] = hj;
  j["sweep"] = {{"sigmas", c.sigmas}};
  const MollifyConfig& m = h.mollify_cfg;
  const char* method = m.method == MollifyConfig::Method::Auto      ? "auto"
                       : m.method == MollifyConfig::Method::Moments ? "moments"
                                                                    : "quadrature";
  j["mollify"] = {
      {"quadrature_n", m.quadrature_n}, {"tol", m.tol}, {"method", method}, {"moment_order", m.moment_order}};
  return j;
}

RectSpec parse_rect_flag(const std::string& s) {
  RectSpec r;
  std::stringstream ss(s);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 4) throw ConfigError("--subwindow expects four comma-separated bounds");
    r.bounds[i++] = item;
  }
  if (i != 4) throw ConfigError("--subwindow expects four comma-separated bounds");
  return r;
}

}  // namespace corrugator
