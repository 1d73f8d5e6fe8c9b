#pragma once

#include <string>
#include <vector>

#include "levylab/config.hpp"
#include "levylab/report.hpp"

namespace levylab {

// Names accepted as experiment.name / CLI subcommands.
const std::vector<std::string>& experiment_names();

// Dispatches to the named experiment with per-replica derived seeds, returns
// the report (statistics carry explicit thresholds).  Throws
// UnknownExperimentError / ConfigError on bad input.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace levylab
