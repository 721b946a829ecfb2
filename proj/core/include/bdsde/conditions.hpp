#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdsde/problem.hpp"
#include "bdsde/weighted_space.hpp"

namespace bdsde {

enum class ConditionStatus { Pass, Fail, Asserted };

struct ConditionEntry {
    std::string id;        // "H.2", "A.4", ...
    ConditionStatus status = ConditionStatus::Pass;
    std::string evidence;  // the numeric evidence behind the verdict
    double value = 0.0;    // headline number (margin, sum, violation count)
};

struct ConditionReport {
    std::vector<ConditionEntry> entries;
    bool all_hard_checks_pass = true;

    const ConditionEntry* find(const std::string& id) const;
    bool passed(const std::string& id) const;
    std::vector<std::string> failed_ids() const;
};

struct ProbeSettings {
    int samples = 1000;
    double range = 3.0;       // scale of the sampled y, z arguments
    double slack = 1e-7;      // absolute tolerance added to probe bounds
    std::uint64_t seed = 1234567;
    double time_horizon = 1.0;
};

/// Finite-horizon solvability conditions: numeric sums and margins are
/// evaluated exactly, the functional inequalities are probed on sampled
/// points, measurability and smoothness are recorded as asserted.
ConditionReport validate_conditions_finite(const BDSDEProblem& problem,
                                           const WeightedSpace& space,
                                           const ProbeSettings& probe = {});

/// Infinite-horizon conditions at moment exponent p and discount rate K.
/// The monotonicity probe runs with the flipped sign (margin mu > 0) and the
/// two margin inequalities are evaluated numerically.
ConditionReport validate_conditions_infinite(const BDSDEProblem& problem,
                                             const WeightedSpace& space, double p, double K,
                                             const ProbeSettings& probe = {});

/// Smallest admissible discount rate with 10% headroom between the lower
/// bound of the coefficient margin and the upper bound of the monotonicity
/// margin, both located by bisection. Throws std::runtime_error when the
/// admissible interval is empty.
double default_discount_rate(const BDSDEProblem& problem, double p);

}  // namespace bdsde
