#include "corrugator/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace corrugator;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("corrugator_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  const fs::path p = dir / "run.json";
  std::ofstream(p) << j.dump();
  return p;
}

// A small holder run: the positive quadratic example with fewer samples.
nlohmann::json quick_holder() {
  return {{"example", "ex6.2"}, {"sampling", {{"n", 100}}}};
}

}  // namespace

TEST_CASE("built-in examples carry the documented data") {
  for (const auto& n : builtin_names()) CHECK_NOTHROW(validate(builtin_example(n)));
  const RunConfig a = builtin_example("ex3.1");
  CHECK(a.pipeline == "c1");
  CHECK(a.v0 == "x^2 - y^2");
  CHECK(a.a[0] == "5 - (x^2 + y^2)/4");
  const RunConfig b = builtin_example("ex3.2");
  CHECK(b.v0 == "x^2 + y^2");
  CHECK(b.w0[0] == "-x*y^2");
  const RunConfig c = builtin_example("ex6.3");
  CHECK(c.pipeline == "holder");
  CHECK(c.v0 == "1e-9*(x^2 + y^2)");
  CHECK(c.digits == 50);
  CHECK(*c.holder.lambda1 == 1e19);
  CHECK_THROWS_AS(builtin_example("ex9"), ConfigError);
}

TEST_CASE("config parsing is strict") {
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"pipelin", "c1"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"c1", {{"epsilon", 0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"c1", {{"epsilon", "big"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"c1", {{"lambdas", {1, 2}}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"v0", "x +"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"domain", {1, 0, 0, 1}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"precision", {{"digits", 10}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"example", "ex6.1"}, {"holder", {{"M", 1e9}, {"lambda1", 1e19}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"pipeline", "both"}}), ConfigError);
  const RunConfig r = parse_config(nlohmann::json{{"example", "ex6.1"},
                                                  {"holder", {{"sigma", 100}}},
                                                  {"domain", {"-1", "1", "-1", 1}},
                                                  {"subwindow", {"0.9999999999999999999", "1", "0.9999999999999999999", "1"}}});
  CHECK(r.holder.sigma == 100);
  CHECK(r.domain.bounds[3] == "1");
  PrecisionGuard g(40);
  const Rect<Real> w = r.subwindow->as<Real>();
  CHECK(abs(w.x_max - w.x_min - Real("1e-19")) < Real("1e-38"));
}

TEST_CASE("written configs reproduce the run configuration") {
  const json sched = {{"example", "ex6.1"}, {"holder", {{"mode", "schedule"}, {"alpha", 0.01}}}};
  const json fixed = {{"example", "ex3.1"}, {"c1", {{"lambdas", {5, 50, 1000}}, {"epsilon", 0.2}}}};
  for (const json& in : {json{{"example", "ex6.2"}}, sched, fixed}) {
    const RunConfig a = parse_config(in);
    const json j = config_to_json(a);
    const RunConfig b = parse_config(j);
    CHECK(config_to_json(b) == j);
    CHECK(b.c1.epsilon == a.c1.epsilon);
    CHECK(b.c1.lambdas == a.c1.lambdas);
    CHECK(b.holder.lambda1 == a.holder.lambda1);
    // Only the exponent of the selected holder mode is kept.
    if (a.holder_mode == "schedule")
      CHECK(b.schedule.beta == a.schedule.beta);
    else
      CHECK(b.holder.beta == a.holder.beta);
  }
}

TEST_CASE("subwindow flag") {
  const RectSpec s = parse_rect_flag("-0.01,0.01,-0.02,0.02");
  CHECK(s.bounds[2] == "-0.02");
  CHECK_THROWS_AS(parse_rect_flag("0,1,2"), ConfigError);
  CHECK_THROWS_AS(parse_rect_flag("0,1,2,3,4"), ConfigError);
}

TEST_CASE("exit codes") {
  std::ostringstream log;
  CliOptions none;
  CHECK(run_command("c1", none, log) == kExitConfig);
  CliOptions missing;
  missing.config = "/nonexistent/run.json";
  CHECK(run_command("c1", missing, log) == kExitIo);
  CliOptions verify_missing;
  verify_missing.report = "/nonexistent/report.json";
  CHECK(run_command("verify", verify_missing, log) == kExitIo);
  const fs::path d = scratch("codes");
  CliOptions bad;
  bad.config = write_config(d, {{"c1", {{"epsilon", -1}}}}).string();
  CHECK(run_command("c1", bad, log) == kExitConfig);
  CliOptions wrong;
  wrong.example = "ex3.1";
  CHECK(run_command("holder", wrong, log) == kExitConfig);
  CliOptions unwritable;
  unwritable.config = write_config(d, quick_holder()).string();
  unwritable.out_dir = "/proc/corrugator_cannot_write";
  CHECK(run_command("holder", unwritable, log) == kExitIo);
  CliOptions stage;
  stage.config = write_config(d, {{"pipeline", "holder"}, {"A", {"0", "0", "0"}}, {"holder", {{"lambda1", 1e19}}},
                                  {"precision", {{"digits", 50}}}})
                     .string();
  stage.out_dir = (d / "zero").string();
  CHECK(run_command("holder", stage, log) == kExitStage);
  CHECK(fs::exists(d / "zero" / "report.json"));
}

TEST_CASE("holder run, verification and tamper detection") {
  const fs::path d = scratch("holder");
  std::ostringstream log;
  CliOptions o;
  o.config = write_config(d, quick_holder()).string();
  o.out_dir = (d / "out").string();
  REQUIRE(run_command("holder", o, log) == kExitOk);
  const std::string report = slurp(d / "out" / "report.json");
  const std::string table = slurp(d / "out" / "norms.csv");
  CHECK(table.rfind("sigma,defect_norm_final,grad_v3_norm,grad_w3_norm,hess_v3_norm,hess_w3_norm\n", 0) == 0);

  // Every table cell equals the report field it came from.
  const nlohmann::json doc = nlohmann::json::parse(report);
  const auto& values = doc["stages"][0]["values"];
  std::istringstream rows(table);
  std::string header, row;
  std::getline(rows, header);
  std::getline(rows, row);
  std::istringstream cells(row);
  std::istringstream names(header);
  for (std::string name, cell; std::getline(names, name, ',') && std::getline(cells, cell, ',');)
    CHECK(std::stod(cell) == values[name].get<double>());

  CliOptions v;
  v.report = (d / "out" / "report.json").string();
  CHECK(run_command("verify", v, log) == kExitOk);

  // Identical configs and seeds give byte-identical artifacts.
  CliOptions again = o;
  again.out_dir = (d / "again").string();
  REQUIRE(run_command("holder", again, log) == kExitOk);
  CHECK(slurp(d / "again" / "report.json") == report);
  CHECK(slurp(d / "again" / "norms.csv") == table);

  // Corrupt one recorded norm.
  nlohmann::json bad = doc;
  auto& bounds = bad["stages"][0]["bounds"];
  REQUIRE(!bounds.empty());
  const std::string victim = bounds[0]["name"];
  bounds[0]["lhs"] = bounds[0]["rhs"].get<double>() * 10;
  std::ofstream(d / "bad.json") << bad.dump();
  std::ostringstream vlog;
  CliOptions vb;
  vb.report = (d / "bad.json").string();
  CHECK(run_command("verify", vb, vlog) == kExitStage);
  CHECK(vlog.str().find(victim) != std::string::npos);

  // A certified value that no longer matches its report field.
  nlohmann::json drift = doc;
  drift["stages"][0]["values"]["defect_norm_final"] = 0.0;
  std::ofstream(d / "drift.json") << drift.dump();
  CliOptions vd;
  vd.report = (d / "drift.json").string();
  CHECK(run_command("verify", vd, log) == kExitStage);

  std::ofstream(d / "schema.json") << R"({"runs": []})";
  CliOptions vs;
  vs.report = (d / "schema.json").string();
  CHECK(run_command("verify", vs, log) == kExitConfig);
}

TEST_CASE("sweep with an empty list succeeds with an empty table") {
  const fs::path d = scratch("sweep");
  nlohmann::json j = quick_holder();
  j["sweep"] = {{"sigmas", nlohmann::json::array()}};
  std::ostringstream log;
  CliOptions o;
  o.config = write_config(d, j).string();
  o.out_dir = (d / "out").string();
  CHECK(run_command("sweep", o, log) == kExitOk);
  CHECK(slurp(d / "out" / "sweep.csv") ==
        "sigma,defect_norm_final,grad_v3_norm,grad_w3_norm,hess_v3_norm,hess_w3_norm,error\n");
}

TEST_CASE("sweep records failing sigma values and continues") {
  const fs::path d = scratch("sweep_fail");
  nlohmann::json j = quick_holder();
  // sigma = 1e30 pushes l = sigma / lambda_1 above one.
  j["sweep"] = {{"sigmas", {35, 1e30}}};
  std::ostringstream log;
  CliOptions o;
  o.config = write_config(d, j).string();
  o.out_dir = (d / "out").string();
  CHECK(run_command("sweep", o, log) == kExitStage);
  const std::string csv = slurp(d / "out" / "sweep.csv");
  std::istringstream lines(csv);
  std::vector<std::string> rows;
  for (std::string l; std::getline(lines, l);) rows.push_back(l);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].back() == ',');
  CHECK(rows[2].back() != ',');
}

TEST_CASE("export writes meshes with a declared origin") {
  const fs::path d = scratch("export");
  std::ostringstream log;
  CliOptions o;
  o.config = write_config(d, {{"example", "ex3.1"},
                              {"c1", {{"lambdas", {5, 50, 1000}}}},
                              {"output", {{"mesh_h", 0.05}, {"decimals", 8}}}})
                 .string();
  o.out_dir = (d / "out").string();
  o.level = 1;
  o.format = "csv";
  REQUIRE(run_command("export", o, log) == kExitOk);
  const std::string csv = slurp(d / "out" / "mesh_v1.csv");
  CHECK(csv.rfind("x,y,value\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 1 + 21 * 21);

  CliOptions sub = o;
  sub.level = 3;
  sub.format = "obj";
  sub.subwindow = "0.1,0.102,0.2,0.202";
  REQUIRE(run_command("export", sub, log) == kExitOk);
  const std::string obj = slurp(d / "out" / "mesh_v3.obj");
  CHECK(obj.find("# origin 1.0000000e-01 2.0000000e-01") != std::string::npos);
  CHECK(obj.find("\nv 0.0000000e+00 0.0000000e+00 ") != std::string::npos);

  CliOptions holder;
  holder.example = "ex6.1";
  holder.out_dir = (d / "h").string();
  holder.level = 2;
  CHECK(run_command("export", holder, log) == kExitConfig);
  holder.level = 0;
  holder.format = "csv";
  CHECK(run_command("export", holder, log) == kExitOk);
}
