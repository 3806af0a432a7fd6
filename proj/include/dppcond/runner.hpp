#pragma once

#include <map>

#include "dppcond/checks.hpp"
#include "dppcond/corpus.hpp"
#include "dppcond/io.hpp"

namespace dppcond {

struct CheckEntry {
  std::string id;
  int trials = 0;     // 0: use the run default
  int instances = 0;  // 0: use the run default
  std::vector<int> depths;       // tail mixing only
  std::vector<int> event_sites;  // tail mixing only
};

struct KernelEntry {
  std::string id;
  KernelMatrix kernel;
};

struct RunConfig {
  uint64_t seed = 0;
  int trials = 800;
  int instances = 2;
  int enum_cap = ENUM_DEFAULT_CAP;
  std::string mode = "both";  // exact | mc | both
  std::string out_dir = "out";
  Tolerances tols;
  std::map<std::string, double> check_tols;
  std::vector<CheckEntry> checks;
  std::vector<KernelEntry> kernels;
  ordered_json echo;  // effective settings echoed into the report
};

// Throws ConfigError on anything malformed. Relative kernel file paths
// resolve against config_dir.
RunConfig parse_run_config(const ordered_json& j, const std::string& config_dir);

struct RunOutput {
  ordered_json report;
  int total = 0;
  int failures = 0;
  int skipped = 0;
};

RunOutput execute_run(const RunConfig& cfg);

// Writes report.json, summary.csv, plot CSVs and run_meta.json under
// cfg.out_dir; returns 0 when every executed check passed, 1 otherwise.
int run_and_write(const RunConfig& cfg);

// Full command line (without argv[0]). Exit codes: 0 pass, 1 check failure,
// 2 configuration error, 3 numerical breakdown.
int run_cli(const std::vector<std::string>& args);

}  // namespace dppcond
