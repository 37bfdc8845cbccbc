#pragma once

#include <string>

namespace skeld {

struct RunOptions {
  std::string out_dir;  // overrides the config's output directory
  int workers = 1;
};

// Executes the experiment named in the JSON config; writes all outputs into
// the run directory. Returns the process exit code: 0 success, 2 invalid
// config (message names the offending key), 3 numerical failure (with a
// diagnostics file in the run directory), 4 infeasible problem.
int run_scenario(const std::string& config_path, const RunOptions& opts);

// Aggregates a completed run directory into summary.json plus two-column
// plot-data CSVs. Returns 0, or 5 when run artifacts are missing.
int emit_report(const std::string& run_dir);

}  // namespace skeld
