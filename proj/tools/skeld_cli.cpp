#include <string>

#include "CLI11.hpp"
#include "skeld/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"skeld: skeleton-equation and fluctuation experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  skeld::RunOptions opts;
  CLI::App* run = app.add_subcommand("run", "execute a scenario config");
  run->add_option("config", config_path, "path to the scenario JSON")
      ->required();
  run->add_option("--out", opts.out_dir, "output directory override");
  run->add_option("--workers", opts.workers, "worker threads for ensembles")
      ->check(CLI::PositiveNumber);

  std::string run_dir;
  CLI::App* report = app.add_subcommand("report", "summarize a run directory");
  report->add_option("run_dir", run_dir, "completed run directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return skeld::run_scenario(config_path, opts);
  return skeld::emit_report(run_dir);
}
