#pragma once

#include <map>
#include <string>
#include <vector>

#include "stocon/config.hpp"

namespace stocon {

struct VerdictRow {
  std::string analysis;
  std::string quantity;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double threshold = 0.0;
  int verdict = -1;  // 1 true, 0 false, -1 not a pass/fail quantity
};

struct RunReport {
  std::map<std::string, std::string> config_echo;
  std::vector<VerdictRow> rows;
  std::vector<std::string> notes;  // per-analysis diagnostics for report.txt
  std::vector<std::string> files;  // manifest of written outputs
  double wall_seconds = 0.0;
  /// 0: all requested verdicts true (or informational); 2: some verdict false.
  int exit_code = 0;
};

/// Builds the scenario, runs the path ensemble (path indices 0..paths-1
/// derived from the master seed), executes the requested analyses, and
/// writes ensemble.csv, verdicts.csv, report.txt and optionally
/// trajectories.csv into the output directory. Outputs are written
/// atomically and are byte-identical for identical configs regardless of
/// the worker count.
RunReport run_experiment(const ExperimentConfig& cfg);

/// CSV text for the verdict rows (header `analysis,quantity,...`).
std::string verdicts_csv(const std::vector<VerdictRow>& rows);

}  // namespace stocon
