#pragma once

#include <string>
#include <vector>

#include "bdsde/config.hpp"

namespace bdsde {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDiverged = 3;

struct RunOutcome {
    int exit_code = kExitOk;
    std::vector<std::string> messages;       // human-readable log lines
    std::vector<std::string> written_files;  // report and table paths
    bool assertions_passed = true;
};

/// Executes the configured pipeline, writes report.json and the CSV tables
/// into the output directory, and returns the exit status: 0 when every
/// enabled assertion holds, 2 on configuration or validator failure, 3 on
/// numeric divergence.
RunOutcome run_experiment(const ExperimentConfig& config);

/// One line per bank problem: id, oracle availability, description.
std::string bank_listing();

}  // namespace bdsde
