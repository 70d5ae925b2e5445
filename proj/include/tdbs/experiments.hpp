#pragma once

#include "tdbs/config.hpp"

#include <cstddef>
#include <iosfwd>

namespace tdbs {

enum ExitCode : int { exit_pass = 0, exit_fail = 1, exit_config = 2 };

/// Runs one experiment and writes config.json, report.txt, report.csv,
/// timing.txt and experiment-specific CSVs into cfg.output_dir. The report
/// is echoed to `console`.
int run_experiment(const ExperimentConfig& cfg, std::size_t workers, std::ostream& console);

}  // namespace tdbs
