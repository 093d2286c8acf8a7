// mar: simulate metal-corrupted scans, correct them, and score the results.
#include <CLI11.hpp>
#include <iostream>

#include "mar/commands.hpp"
#include "mar/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Metal artifact reduction toolkit"};
  app.require_subcommand(0, 1);
  bool dump_defaults = false;
  app.add_flag("--dump-defaults", dump_defaults, "Print the default configuration and exit");

  mar::SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Simulate a metal-corrupted scan");
  s->add_option("-c,--config", sim.config, "Configuration file");
  s->add_option("-o,--out", sim.out, "Output directory")->required();
  s->add_flag("--suite", sim.suite, "Write the bundled ten-case suite");
  s->add_option("-j,--jobs", sim.jobs, "Worker threads")->check(CLI::PositiveNumber);
  bool no_png_sim = false;
  s->add_flag("--no-png", no_png_sim, "Skip PNG previews");

  mar::CorrectOptions cor;
  auto* c = app.add_subcommand("correct", "Reduce metal artifacts");
  c->add_option("-m,--method", cor.method, "li, nmar, dual or dual-degraded")->required();
  c->add_option("-i,--input", cor.input, "Case or suite directory from simulate")->required();
  c->add_option("-c,--config", cor.config, "Configuration file (default: the input's config.ini)");
  c->add_option("-o,--out", cor.out, "Output directory")->required();
  c->add_option("-j,--jobs", cor.jobs, "Worker threads")->check(CLI::PositiveNumber);
  bool no_png_cor = false;
  c->add_flag("--no-png", no_png_cor, "Skip PNG previews");

  mar::EvalOptions ev;
  auto* e = app.add_subcommand("eval", "PSNR/SSIM report against ground truth");
  e->add_option("-g,--gt", ev.gt, "Case or suite directory from simulate")->required();
  e->add_option("-r,--results", ev.results, "Directories written by correct");
  e->add_option("-o,--out", ev.out_csv, "CSV report path")->required();
  e->add_option("--grouping", ev.grouping, "pairwise or none");
  e->add_flag("--include-input", ev.include_input, "Also score the uncorrected reconstruction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : mar::kExitIo;
  }

  if (dump_defaults) {
    std::cout << mar::dump_config(mar::Config{});
    return 0;
  }
  if (*s) {
    sim.previews = !no_png_sim;
    return mar::cmd_simulate(sim, std::cout, std::cerr);
  }
  if (*c) {
    cor.previews = !no_png_cor;
    return mar::cmd_correct(cor, std::cout, std::cerr);
  }
  if (*e) return mar::cmd_eval(ev, std::cout, std::cerr);
  std::cout << app.help();
  return 0;
}
