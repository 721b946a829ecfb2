#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdsde/problem.hpp"
#include "bdsde/stationarity.hpp"

namespace bdsde {

/// A built-in experiment problem: coefficient handles, structural constants,
/// and the metadata the runner needs (oracle availability, default grids).
struct BankEntry {
    std::string id;
    std::string description;
    std::string oracle;  // empty when no analytic oracle exists
    bool has_oracle = false;
    bool supports_infinite = false;
    std::optional<ForwardStepper> forward_stepper;
    std::map<std::string, double> default_params;
    double default_horizon = 1.0;
};

/// Parameters may override the defaults listed in the entry; unknown keys are
/// rejected.
BDSDEProblem make_bank_problem(const std::string& id,
                               const std::map<std::string, double>& params = {},
                               int dimension = 1);

const std::vector<BankEntry>& bank_entries();
const BankEntry& bank_entry(const std::string& id);

}  // namespace bdsde
