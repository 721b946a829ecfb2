#include "bdsde/ladder.hpp"

#include <cmath>

#include "bdsde/stats.hpp"

namespace bdsde {

namespace {

/// zero-extends a rung solution onto the full ensemble grid
BackwardSolution zero_extend(const BackwardSolution& rung, const ParticleEnsemble& ensemble) {
    const std::size_t full = ensemble.n_steps();
    const std::size_t have = rung.times.size() - 1;
    if (have == full) return rung;
    BackwardSolution out = rung;
    out.times.resize(full + 1);
    for (std::size_t k = 0; k <= full; ++k) out.times[k] = ensemble.node_time(k);
    out.y.resize((full + 1) * rung.particles, 0.0);
    out.z.resize((full + 1) * rung.particles * static_cast<std::size_t>(rung.dimension), 0.0);
    out.y_coef.resize(full + 1);
    out.z_coef.resize(full + 1,
                      std::vector<std::vector<double>>(static_cast<std::size_t>(rung.dimension)));
    return out;
}

double window_difference(const BackwardSolution& a, const BackwardSolution& b,
                         const WeightedSpace& space, double rate, double window) {
    const std::size_t m = a.particles;
    const int d = a.dimension;
    const double t0 = a.times.front();
    double acc = 0.0;
    std::size_t last = 0;
    while (last + 1 < a.times.size() && a.times[last + 1] <= t0 + window + 1e-12) ++last;
    for (std::size_t k = 0; k <= last; ++k) {
        double dy2 = 0.0, dz2 = 0.0;
        const std::size_t off = k * m;
        for (std::size_t i = 0; i < m; ++i) {
            const double dy = a.y[off + i] - b.y[off + i];
            dy2 += dy * dy;
            for (int c = 0; c < d; ++c) {
                const double dz = a.z[(off + i) * d + c] - b.z[(off + i) * d + c];
                dz2 += dz * dz;
            }
        }
        dy2 = space.normalizer() * dy2 / static_cast<double>(m);
        dz2 = space.normalizer() * dz2 / static_cast<double>(m);
        const double integrand = std::exp(-rate * (a.times[k] - t0)) * (dy2 + dz2);
        double step = 0.0;
        if (k > 0) step += 0.5 * (a.times[k] - a.times[k - 1]);
        if (k < last) step += 0.5 * (a.times[k + 1] - a.times[k]);
        acc += integrand * step;
    }
    return std::sqrt(acc);
}

}  // namespace

std::pair<BackwardSolution, LadderDiagnostics> solve_horizon_ladder(
    const BDSDEProblem& problem, const ParticleEnsemble& ensemble,
    const TwoSidedPath& b_hat, const WeightedSpace& space, double discount_rate,
    const LadderOptions& options) {
    const double dt = ensemble.dt();
    const double window =
        options.observation_window > 0.0 ? options.observation_window : options.rung_step;
    const auto steps_per_rung = static_cast<std::size_t>(std::llround(options.rung_step / dt));
    if (steps_per_rung < 1) {
        throw std::invalid_argument("solve_horizon_ladder: rung step below the grid spacing");
    }
    if (steps_per_rung * static_cast<std::size_t>(options.max_rungs) > ensemble.n_steps()) {
        throw std::invalid_argument("solve_horizon_ladder: ensemble grid shorter than the ladder");
    }

    // the terminal data of every rung is zero
    BDSDEProblem rung_problem = problem;
    rung_problem.terminal = nullptr;

    LadderDiagnostics diag;
    diag.discount_rate = discount_rate;

    std::vector<NodeRegression> cache;
    BackwardSolution previous;
    BackwardSolution current;
    int non_decreasing = 0;
    for (int r = 1; r <= options.max_rungs; ++r) {
        const std::size_t n_steps = steps_per_rung * static_cast<std::size_t>(r);
        BackwardSolution rung = picard_solve(rung_problem, ensemble, b_hat, space,
                                             options.solver, &cache, n_steps);
        current = zero_extend(rung, ensemble);
        diag.rung_horizons.push_back(ensemble.node_time(n_steps));
        diag.stopped_rung = r;
        if (r >= 2) {
            const double dn = window_difference(current, previous, space, discount_rate, window);
            if (!diag.difference_norms.empty() && dn >= diag.difference_norms.back()) {
                ++non_decreasing;
                if (non_decreasing >= 2) {
                    throw LadderDivergence(
                        "solve_horizon_ladder: differences non-decreasing over 3 rungs", diag);
                }
            } else {
                non_decreasing = 0;
            }
            diag.difference_norms.push_back(dn);
            if (dn < options.cauchy_tol) {
                diag.converged = true;
                previous = std::move(current);
                break;
            }
        }
        previous = std::move(current);
    }

    if (diag.difference_norms.size() >= 2) {
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < diag.difference_norms.size(); ++i) {
            if (diag.difference_norms[i] > 0.0) {
                xs.push_back(static_cast<double>(i));
                ys.push_back(std::log(diag.difference_norms[i]));
            }
        }
        if (xs.size() >= 2) diag.fitted_base = std::exp(fit_line(xs, ys).slope);
    }
    return {std::move(previous), std::move(diag)};
}

double pth_moment_diagnostic(const BackwardSolution& solution, double p, double discount_rate,
                             const ReferenceCloud& cloud, const WeightedSpace& space) {
    if (solution.particles != cloud.size) {
        throw std::invalid_argument("pth_moment_diagnostic: cloud does not match the solution");
    }
    const double t0 = solution.times.front();
    double sup = 0.0;
    for (std::size_t k = 0; k < solution.times.size(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < solution.particles; ++i) {
            acc += cloud.weights[i] * std::pow(std::abs(solution.y_at(k, i)), p);
        }
        const double v = std::exp(-p * discount_rate * (solution.times[k] - t0)) *
                         space.normalizer() * acc;
        if (!std::isfinite(v)) {
            throw MomentBlowup("pth_moment_diagnostic: non-finite moment estimate");
        }
        sup = std::max(sup, v);
    }
    return sup;
}

}  // namespace bdsde
