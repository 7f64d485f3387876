#include "corrugator/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace corrugator {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string cell(const json& values, const std::string& key) {
  if (!values.contains(key)) return "";
  const json& v = values[key];
  if (v.is_number()) return format_real(v.get<double>(), 17);
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string csv_row(const json& values, const std::vector<std::string>& keys) {
  std::string row;
  for (std::size_t i = 0; i < keys.size(); ++i) row += (i ? "," : "") + cell(values, keys[i]);
  return row + "\n";
}

std::string join(const std::vector<std::string>& keys) {
  std::string s;
  for (std::size_t i = 0; i < keys.size(); ++i) s += (i ? "," : "") + keys[i];
  return s + "\n";
}

const std::vector<std::string> kC1Columns = {"lambda1", "lambda2",  "lambda3",
                                             "v_error", "sum_ratio", "min_phi_after_two_1",
                                             "min_phi_after_two_2", "min_phi_after_two_3"};
const std::vector<std::string> kHolderColumns = {"sigma",        "defect_norm_final", "grad_v3_norm",
                                                 "grad_w3_norm", "hess_v3_norm",      "hess_w3_norm"};

template <class T>
void write_mesh(const GridField<T>& g, const std::string& base, const std::string& format, int decimals,
                const Vec2<T>& origin) {
  try {
    if (format == "csv")
      write_grid_csv(g, base + ".csv", decimals);
    else
      write_grid_obj(g, base + ".obj", decimals, origin);
  } catch (const std::ios_base::failure& e) {
    throw IoError(e.what());
  }
}

// Largest step not above h_max that divides both sides of r evenly.
template <class T>
T mesh_step(const Rect<T>& r, const T& h_max) {
  using std::ceil;
  const T w = r.x_max - r.x_min, hgt = r.y_max - r.y_min;
  const T side = w > hgt ? w : hgt;
  const T n = ceil(side / h_max);
  return side / (n < T(4) ? T(4) : n);
}

void warn_resolution(double h, double lambda, const std::string& what, std::ostream& log,
                     std::vector<std::string>* warnings = nullptr) {
  const double per_period = 1.0 / (lambda * h);
  if (per_period < 10.0) {
    const std::string msg = what + ": " + format_real(per_period, 3) +
                            " samples per corrugation period (fewer than 10); the mesh aliases the oscillation";
    log << "warning: " << msg << "\n";
    if (warnings) warnings->push_back(msg);
  }
}

// Meshes of v_0..v_2 on the domain and v_3 on the subwindow.
template <class T>
void write_c1_meshes(const ChainSpec<T>& chain, const Rect<T>& domain, const RunConfig& cfg,
                     const std::vector<int>& levels, const std::optional<Rect<T>>& window_override,
                     const std::string& out_dir, std::ostream& log, std::vector<std::string>* warnings) {
  std::vector<int> full, sub;
  for (int k : levels) (k < 3 ? full : sub).push_back(k);
  const Rect<T> sub_rect = window_override ? *window_override
                                           : Rect<T>{T(cfg.c1.subwindow.x_min), T(cfg.c1.subwindow.x_max),
                                                     T(cfg.c1.subwindow.y_min), T(cfg.c1.subwindow.y_max)};
  auto sample_levels = [&](const std::vector<int>& ks, const Rect<T>& rect, const T& h, bool relative) {
    if (ks.empty()) return;
    const int steps = *std::max_element(ks.begin(), ks.end());
    std::vector<GridField<T>> grids(ks.size(), GridField<T>(rect, h));
    GridField<T>& g0 = grids[0];
    for (int j = 0; j < g0.ny(); ++j)
      for (int i = 0; i < g0.nx(); ++i) {
        const ChainPoint<T> c = eval_chain(chain, g0.point(i, j), 2, steps);
        for (std::size_t q = 0; q < ks.size(); ++q) grids[q].at(i, j) = c.v[ks[q]].value();
      }
    const Vec2<T> origin = relative ? Vec2<T>{rect.x_min, rect.y_min} : Vec2<T>{T(0), T(0)};
    for (std::size_t q = 0; q < ks.size(); ++q) {
      if (ks[q] > 0)
        warn_resolution(to_double(h), to_double(chain.lambdas[ks[q] - 1]), "mesh v" + std::to_string(ks[q]), log,
                        warnings);
      write_mesh(grids[q], out_dir + "/mesh_v" + std::to_string(ks[q]), cfg.mesh_format, cfg.decimals, origin);
    }
  };
  const Rect<T> full_rect = window_override ? *window_override : domain;
  sample_levels(full, full_rect, mesh_step(full_rect, T(cfg.mesh_h)), window_override.has_value());
  sample_levels(sub, sub_rect, mesh_step(sub_rect, T(cfg.c1.h_subwindow)), true);
}

template <class T>
int c1_typed(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const PrecisionContext ctx = make_context(cfg.digits, cfg.seed);
  const ProblemFields<T> pf = make_fields<T>(problem_exprs(cfg));
  const Rect<T> domain = cfg.domain.as<T>();
  json doc;
  doc["config"] = config_to_json(cfg);
  try {
    const auto t0 = std::chrono::steady_clock::now();
    C1StageResult<T> res = run_stage_c1<T>(pf, domain, cfg.c1, ctx);
    log << "c1 stage done in "
        << format_real(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 3) << " s\n";
    for (const auto& w : res.report.warnings) log << "warning: " << w << "\n";
    if (cfg.meshes)
      write_c1_meshes<T>(res.chain, domain, cfg, {0, 1, 2, 3}, std::nullopt, out_dir, log, &res.report.warnings);
    doc["stages"] = json::array({res.report.to_json()});
    write_json(out_dir + "/report.json", doc);
    write_text(out_dir + "/table.csv", join(kC1Columns) + csv_row(res.report.values, kC1Columns));
    const bool ok = res.report.bounds_ok() && res.report.certified_ok();
    log << "lambdas " << format_real(res.lambdas[0], 6) << " " << format_real(res.lambdas[1], 6) << " "
        << format_real(res.lambdas[2], 6) << "; bounds " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? kExitOk : kExitStage;
  } catch (const StageError& e) {
    doc["stages"] = json::array({e.report.to_json()});
    doc["error"] = e.what();
    write_json(out_dir + "/report.json", doc);
    log << "stage failed: " << e.what() << "\n";
    return kExitStage;
  }
}

HolderStageResult<Real> holder_stage(const RunConfig& cfg, const ProblemFields<Real>& pf, const Rect<Real>& domain,
                                     double sigma) {
  HolderStageConfig hc = cfg.holder;
  hc.sigma = sigma;
  return run_stage_holder<Real>(pf, domain, hc, make_context(cfg.digits, cfg.seed));
}

void write_holder_mesh(const HolderStageResult<Real>& res, const RunConfig& cfg, const std::string& out_dir,
                       std::ostream& log, std::vector<std::string>& warnings) {
  if (!cfg.meshes || !cfg.subwindow) return;
  PrecisionGuard g(res.digits);
  const Rect<Real> sub = cfg.subwindow->as<Real>();
  // At least 200 cells and 10 per corrugation period, up to 2000 cells.
  const double side = to_double(Real(sub.x_max - sub.x_min));
  const double cells = std::clamp(std::ceil(10.0 * side * res.lambdas[2]), 200.0, 2000.0);
  const Real h = mesh_step(sub, Real(Real(sub.x_max - sub.x_min) / Real(cells)));
  warn_resolution(to_double(h), res.lambdas[2], "mesh v3", log, &warnings);
  // The chain needs first derivatives of its inputs, so evaluate at order 1.
  const ScalarField<Real>& v = res.v;
  GridField<Real> grid = sample_fn<Real>([&v](const Vec2<Real>& p) { return v.eval(p, 1).value(); }, sub, h);
  write_mesh(grid, out_dir + "/mesh_v3", cfg.mesh_format, cfg.decimals, Vec2<Real>{sub.x_min, sub.y_min});
}

int holder_command(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  PrecisionGuard guard(cfg.digits);
  const ProblemFields<Real> pf = make_fields<Real>(problem_exprs(cfg));
  const Rect<Real> domain = cfg.domain.as<Real>();
  json doc;
  doc["config"] = config_to_json(cfg);
  if (cfg.holder_mode == "schedule") {
    HolderRunConfig rc;
    rc.schedule = cfg.schedule;
    rc.stage_budget = cfg.stage_budget;
    rc.stage = cfg.holder;
    try {
      const HolderRunResult<Real> res = run_holder<Real>(pf, domain, rc, make_context(cfg.digits, cfg.seed));
      doc["stages"] = json::array();
      std::string table = join(kHolderColumns);
      for (const auto& s : res.stages) {
        doc["stages"].push_back(s.to_json());
        table += csv_row(s.values, kHolderColumns);
      }
      doc["stages"].push_back(res.summary.to_json());
      write_json(out_dir + "/report.json", doc);
      write_text(out_dir + "/norms.csv", table);
      bool ok = res.summary.certified_ok();
      for (const auto& s : res.stages) ok = ok && s.bounds_ok() && s.certified_ok();
      log << "schedule sigma_0 " << format_real(res.schedule.sigma(0), 6) << ", " << res.stages.size()
          << " stage(s); checks " << (ok ? "pass" : "FAIL") << "\n";
      return ok ? kExitOk : kExitStage;
    } catch (const StageError& e) {
      doc["stages"] = json::array({e.report.to_json()});
      doc["error"] = e.what();
      write_json(out_dir + "/report.json", doc);
      log << "stage failed: " << e.what() << "\n";
      return kExitStage;
    }
  }
  try {
    HolderStageResult<Real> res = holder_stage(cfg, pf, domain, cfg.holder.sigma);
    write_holder_mesh(res, cfg, out_dir, log, res.report.warnings);
    doc["stages"] = json::array({res.report.to_json()});
    write_json(out_dir + "/report.json", doc);
    write_text(out_dir + "/norms.csv", join(kHolderColumns) + csv_row(res.report.values, kHolderColumns));
    const bool ok = res.report.bounds_ok() && res.report.certified_ok();
    log << "defect " << format_real(res.input.defect, 6) << " -> " << format_real(res.output.defect, 6)
        << " (factor " << format_real(res.output.defect / res.input.defect, 4) << "); checks "
        << (ok ? "pass" : "FAIL") << "\n";
    return ok ? kExitOk : kExitStage;
  } catch (const StageError& e) {
    doc["stages"] = json::array({e.report.to_json()});
    doc["error"] = e.what();
    write_json(out_dir + "/report.json", doc);
    log << "stage failed: " << e.what() << "\n";
    return kExitStage;
  }
}

int sweep_command(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  if (cfg.pipeline == "c1") throw ConfigError("sweep needs a holder configuration");
  PrecisionGuard guard(cfg.digits);
  const ProblemFields<Real> pf = make_fields<Real>(problem_exprs(cfg));
  const Rect<Real> domain = cfg.domain.as<Real>();
  json doc;
  doc["config"] = config_to_json(cfg);
  doc["stages"] = json::array();
  std::vector<std::string> cols = kHolderColumns;
  cols.push_back("error");
  std::string table = join(cols);
  bool all_ok = true;
  for (double sigma : cfg.sigmas) {
    json values;
    try {
      const HolderStageResult<Real> res = holder_stage(cfg, pf, domain, sigma);
      values = res.report.values;
      const bool ok = res.report.bounds_ok() && res.report.certified_ok();
      if (!ok) values["error"] = "bound check failed";
      all_ok = all_ok && ok;
      doc["stages"].push_back(res.report.to_json());
    } catch (const StageError& e) {
      values = e.report.values;
      values["sigma"] = sigma;
      values["error"] = e.what();
      all_ok = false;
      json r = e.report.to_json();
      r["error"] = e.what();
      doc["stages"].push_back(r);
    }
    log << "sigma " << format_real(sigma, 6) << ": "
        << (values.contains("error") ? values["error"].get<std::string>()
                                     : "defect " + cell(values, "defect_norm_final"))
        << "\n";
    table += csv_row(values, cols);
  }
  write_json(out_dir + "/report.json", doc);
  write_text(out_dir + "/sweep.csv", table);
  return all_ok ? kExitOk : kExitStage;
}

int verify_command(const CliOptions& opts, std::ostream& log) {
  if (opts.report.empty()) throw ConfigError("verify needs --report");
  const json doc = read_json(opts.report);
  std::vector<std::string> failures;
  try {
    failures = verify_report(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report schema mismatch: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  std::size_t count = 0;
  for (const auto& st : doc.at("stages")) count += st.value("bounds", json::array()).size() + st.value("certified", json::array()).size();
  for (const auto& f : failures) log << "FAIL " << f << "\n";
  log << count << " inequalities re-checked, " << failures.size() << " failure(s)\n";
  return failures.empty() ? kExitOk : kExitStage;
}

template <class T>
int export_typed(const RunConfig& cfg, const CliOptions& opts, std::ostream& log) {
  std::vector<int> levels = {0, 1, 2, 3};
  if (opts.level) {
    if (*opts.level < 0 || *opts.level > 3) throw ConfigError("--level must lie in 0..3");
    levels = {*opts.level};
  }
  const ProblemFields<T> pf = make_fields<T>(problem_exprs(cfg));
  const Rect<T> domain = cfg.domain.as<T>();
  std::vector<double> lambdas;
  double xi = 0.0;
  if (!opts.report.empty()) {
    const json doc = read_json(opts.report);
    try {
      const json& v = doc.at("stages").at(0).at("values");
      for (int k = 1; k <= 3; ++k) lambdas.push_back(v.at("lambda" + std::to_string(k)).get<double>());
      xi = v.value("xi", 0.0);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("report has no c1 frequencies: ") + e.what());
    }
  } else if (cfg.c1.lambdas) {
    lambdas.assign(cfg.c1.lambdas->begin(), cfg.c1.lambdas->end());
  }
  const int top = *std::max_element(levels.begin(), levels.end());
  if (top > 0 && cfg.pipeline != "c1")
    throw ConfigError("export of corrugated levels needs a c1 configuration; holder runs write v3 meshes themselves");
  if (top > 0 && lambdas.size() < 3) throw ConfigError("export of corrugated levels needs --report or c1.lambdas");
  if (top > 0 && cfg.c1.mode == C1Config::Mode::Apriori && !(xi > 0))
    throw ConfigError("a priori export needs the report value 'xi'");
  C1Config c1 = cfg.c1;
  if (top == 0) c1.zero_amplitude = true;  // v0 alone needs no amplitudes
  const ChainSpec<T> chain = make_c1_chain<T>(pf, c1, xi, lambdas);
  std::optional<Rect<T>> window;
  if (opts.subwindow) window = cfg.subwindow->as<T>();
  write_c1_meshes<T>(chain, domain, cfg, levels, window, opts.out_dir, log, nullptr);
  log << "wrote " << levels.size() << " mesh(es) to " << opts.out_dir << "\n";
  return kExitOk;
}

int dispatch(const std::string& command, const CliOptions& opts, std::ostream& log) {
  if (command == "verify") return verify_command(opts, log);
  RunConfig cfg = resolve_config(opts);
  if (command == "export") {
    if (!opts.format.empty()) {
      if (opts.format != "obj" && opts.format != "csv") throw ConfigError("--format must be obj or csv");
      cfg.mesh_format = opts.format;
    }
    ensure_dir(opts.out_dir);
    if (cfg.digits > 15) {
      PrecisionGuard g(cfg.digits);
      return export_typed<Real>(cfg, opts, log);
    }
    return export_typed<double>(cfg, opts, log);
  }
  if (command == "c1") {
    if (cfg.pipeline != "c1") throw ConfigError("configuration pipeline is '" + cfg.pipeline + "', not c1");
    ensure_dir(opts.out_dir);
    write_json(opts.out_dir + "/config.json", config_to_json(cfg));
    if (cfg.digits > 15) {
      PrecisionGuard g(cfg.digits);
      return c1_typed<Real>(cfg, opts.out_dir, log);
    }
    return c1_typed<double>(cfg, opts.out_dir, log);
  }
  if (command == "holder") {
    if (cfg.pipeline == "c1") throw ConfigError("configuration pipeline is c1, not holder");
    ensure_dir(opts.out_dir);
    write_json(opts.out_dir + "/config.json", config_to_json(cfg));
    return holder_command(cfg, opts.out_dir, log);
  }
  if (command == "sweep") {
    ensure_dir(opts.out_dir);
    write_json(opts.out_dir + "/config.json", config_to_json(cfg));
    return sweep_command(cfg, opts.out_dir, log);
  }
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace

RunConfig resolve_config(const CliOptions& opts) {
  RunConfig cfg;
  if (!opts.config.empty())
    cfg = load_config(opts.config);
  else if (!opts.example.empty())
    cfg = builtin_example(opts.example);
  else
    throw ConfigError("give --config or --example");
  if (opts.digits) cfg.digits = *opts.digits;
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.sigma) {
    cfg.holder.sigma = *opts.sigma;
    cfg.sigmas = {*opts.sigma};
  }
  if (opts.subwindow) {
    cfg.subwindow = parse_rect_flag(*opts.subwindow);
    if (cfg.pipeline == "c1") cfg.c1.subwindow = cfg.subwindow->as<double>();
  }
  validate(cfg);
  return cfg;
}

int run_command(const std::string& command, const CliOptions& opts, std::ostream& log) {
  try {
    return dispatch(command, opts, log);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    log << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    log << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const StageError& e) {
    log << "stage failed: " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    log << "stage failed: " << e.what() << "\n";
    return kExitStage;
  }
}

}  // namespace corrugator
