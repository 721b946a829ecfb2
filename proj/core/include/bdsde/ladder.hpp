#pragma once

#include <stdexcept>
#include <vector>

#include "bdsde/solver.hpp"

namespace bdsde {

struct LadderOptions {
    double rung_step = 1.0;        // horizon increment per rung
    int max_rungs = 8;
    double cauchy_tol = 1e-3;      // on the discounted difference norm
    double observation_window = 0.0;  // 0 means one rung step
    SolverOptions solver;
};

struct LadderDiagnostics {
    std::vector<double> rung_horizons;
    std::vector<double> difference_norms;  // between consecutive rungs
    double fitted_base = 0.0;              // geometric decay base of the norms
    double discount_rate = 0.0;
    int stopped_rung = 0;
    bool converged = false;
};

class LadderDivergence : public std::runtime_error {
public:
    LadderDivergence(const std::string& what, LadderDiagnostics diag)
        : std::runtime_error(what), diagnostics(std::move(diag)) {}
    LadderDiagnostics diagnostics;
};

/// Infinite-horizon solve by increasing finite horizons with zero terminal
/// data. Every rung reuses the prefix of one shared ensemble grid, so
/// consecutive rungs are compared node-aligned under common random numbers.
/// Rung solutions are extended by exact zeros beyond their horizon. Stops
/// when the discounted difference norm over the observation window falls
/// below cauchy_tol; throws LadderDivergence after three consecutive
/// non-decreasing differences.
std::pair<BackwardSolution, LadderDiagnostics> solve_horizon_ladder(
    const BDSDEProblem& problem, const ParticleEnsemble& ensemble,
    const TwoSidedPath& b_hat, const WeightedSpace& space, double discount_rate,
    const LadderOptions& options);

class MomentBlowup : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// sup over grid nodes of e^{-pK(s - t0)} int |Y_s|^p rho^{-1} dx, estimated
/// over the particle cloud. Throws MomentBlowup on a non-finite estimate.
double pth_moment_diagnostic(const BackwardSolution& solution, double p, double discount_rate,
                             const ReferenceCloud& cloud, const WeightedSpace& space);

}  // namespace bdsde
