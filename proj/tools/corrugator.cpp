#include "corrugator/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace corrugator;
  CLI::App app{"Convex-integration engine for the 2D Monge-Ampere system"};
  app.require_subcommand(1);
  CliOptions opts;

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "JSON run configuration");
    sub->add_option("--example", opts.example, "built-in example: ex3.1, ex3.2, ex6.1, ex6.2, ex6.3");
    sub->add_option("--out-dir", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--precision-digits", opts.digits, "working decimal digits (at least 15)");
    sub->add_option("--seed", opts.seed, "sampling seed");
    sub->add_option("--sigma", opts.sigma, "frequency ratio sigma (holder, sweep)");
    sub->add_option("--subwindow", opts.subwindow, "late-corrugation window x0,x1,y0,y1");
  };
  CLI::App* c1 = app.add_subcommand("c1", "three-step C1 stage with frequency search");
  CLI::App* holder = app.add_subcommand("holder", "C1,alpha stage or scheduled run");
  CLI::App* sweep = app.add_subcommand("sweep", "holder stage over a list of sigma values");
  CLI::App* verify = app.add_subcommand("verify", "re-check every inequality of a report");
  CLI::App* exp = app.add_subcommand("export", "write meshes of v_k");
  for (CLI::App* sub : {c1, holder, sweep, exp}) add_run_flags(sub);
  verify->add_option("--report", opts.report, "report.json to check")->required();
  exp->add_option("--report", opts.report, "c1 report providing the frequencies");
  exp->add_option("--level", opts.level, "corrugation level 0..3 (default: all)");
  exp->add_option("--format", opts.format, "obj or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return run_command(command, opts, std::cerr);
}
