#include "bdsde/stationarity.hpp"

#include <cmath>

#include "bdsde/conditions.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/rng.hpp"

namespace bdsde {

namespace {

constexpr int kMaxDim = 2;

struct StationaryField {
    std::vector<double> values;
    std::vector<double> coef;
    int basis_degree = 0;
    double basis_scale = 1.0;
    LadderDiagnostics ladder;
};

double resolve_discount(const BDSDEProblem& problem, const WeightedSpace& space,
                        const StationaryOptions& options) {
    if (options.discount_rate > 0.0) return options.discount_rate;
    if (problem.horizon.discount_rate > 0.0) return problem.horizon.discount_rate;
    return default_discount_rate(problem, space.moment_exponent());
}

/// one stationary field v_t on one driver path
StationaryField stationary_field(const BDSDEProblem& problem, const WeightedSpace& space,
                                 const ReferenceCloud& cloud, const TwoSidedPath& driver,
                                 double anchor, double t, const StationaryOptions& options,
                                 std::uint64_t ensemble_seed) {
    if (t < 0.0 || t > anchor) {
        throw std::invalid_argument("stationary_field: need 0 <= t <= anchor");
    }
    const TwoSidedPath reversed = time_reverse(driver, anchor);
    const double start = anchor - t;
    const double dt = driver.dt();
    const auto n_steps = static_cast<std::size_t>(std::llround(
        options.ladder.rung_step / dt * static_cast<double>(options.ladder.max_rungs)));
    const auto ensemble = euler_maruyama(start, cloud, problem.diffusion, dt, n_steps,
                                         ensemble_seed, 0, options.ladder.solver.workers);
    const double K = resolve_discount(problem, space, options);
    auto [solution, diag] = solve_horizon_ladder(problem, ensemble, reversed, space, K,
                                                 options.ladder);
    StationaryField out;
    out.values.resize(cloud.size);
    for (std::size_t i = 0; i < cloud.size; ++i) out.values[i] = solution.y_at(0, i);
    out.coef = solution.y_coef[0];
    out.basis_degree = solution.basis_degree;
    out.basis_scale = solution.basis_scale;
    out.ladder = std::move(diag);
    return out;
}

}  // namespace

StationaryRun build_stationary_solution(const BDSDEProblem& problem,
                                        const WeightedSpace& space,
                                        const ReferenceCloud& cloud,
                                        const TwoSidedPath& driver, double anchor,
                                        const std::vector<double>& times,
                                        const StationaryOptions& options,
                                        std::uint64_t ensemble_seed) {
    StationaryRun run;
    run.anchor = anchor;
    run.times = times;
    run.ensemble_seed = ensemble_seed;
    for (double t : times) {
        auto f = stationary_field(problem, space, cloud, driver, anchor, t, options,
                                  ensemble_seed);
        run.fields.push_back(std::move(f.values));
        run.field_coefs.push_back(std::move(f.coef));
        run.basis_degree = f.basis_degree;
        run.basis_scale = f.basis_scale;
        run.ladders.push_back(std::move(f.ladder));
    }
    return run;
}

ShiftStationarityReport check_shift_stationarity(
    const BDSDEProblem& problem, const WeightedSpace& space, const ReferenceCloud& cloud,
    double t, double offset, double anchor, int n_paths, double span, double dt,
    const StationaryOptions& options, std::uint64_t seed, int paired_paths,
    unsigned workers) {
    ShiftStationarityReport rep;
    rep.ks_group_size = n_paths;
    rep.paired_paths = std::min(paired_paths, n_paths);

    const std::size_t probes = std::min<std::size_t>(cloud.size, 4);
    std::vector<double> group_a(static_cast<std::size_t>(n_paths) * probes);
    std::vector<double> group_b(static_cast<std::size_t>(n_paths) * probes);
    std::vector<double> pw_diff(static_cast<std::size_t>(rep.paired_paths));
    std::vector<double> pw_scale(static_cast<std::size_t>(rep.paired_paths));

    auto field_shifted = [&](const TwoSidedPath& path) {
        const TwoSidedPath shifted = shift(path, ShiftOp{offset});
        return shifted;
    };

    // group A: v_{t+offset} on its own driver batch
    parallel_for(static_cast<std::size_t>(n_paths), workers, [&](std::size_t i) {
        const auto paths = sample_paths(problem.noise, span, dt,
                                        rng::key(seed, rng::kReplica, i, 0, 0), i);
        auto fa = stationary_field(problem, space, cloud, paths.b_hat, anchor, t + offset,
                                   options, rng::key(seed, rng::kReplica, i, 1, 0));
        for (std::size_t pidx = 0; pidx < probes; ++pidx) {
            group_a[i * probes + pidx] = fa.values[pidx];
        }
        // paired pathwise comparison on the same driver
        if (i < static_cast<std::size_t>(rep.paired_paths)) {
            auto fb = stationary_field(problem, space, cloud, field_shifted(paths.b_hat),
                                       anchor, t, options,
                                       rng::key(seed, rng::kReplica, i, 1, 0));
            std::vector<double> diff(cloud.size);
            for (std::size_t p = 0; p < cloud.size; ++p) diff[p] = fa.values[p] - fb.values[p];
            pw_diff[i] = weighted_l2_norm(diff, cloud, space);
            pw_scale[i] = weighted_l2_norm(fa.values, cloud, space);
        }
    });

    // group B: v_t o theta_offset on an independent driver batch
    parallel_for(static_cast<std::size_t>(n_paths), workers, [&](std::size_t i) {
        const std::size_t id = static_cast<std::size_t>(n_paths) + i;
        const auto paths = sample_paths(problem.noise, span, dt,
                                        rng::key(seed, rng::kReplica, id, 0, 0), id);
        auto fb = stationary_field(problem, space, cloud, field_shifted(paths.b_hat), anchor,
                                   t, options, rng::key(seed, rng::kReplica, id, 1, 0));
        for (std::size_t pidx = 0; pidx < probes; ++pidx) {
            group_b[i * probes + pidx] = fb.values[pidx];
        }
    });

    double acc = 0.0, mx = 0.0, sc = 0.0;
    for (int i = 0; i < rep.paired_paths; ++i) {
        acc += pw_diff[static_cast<std::size_t>(i)];
        mx = std::max(mx, pw_diff[static_cast<std::size_t>(i)]);
        sc += pw_scale[static_cast<std::size_t>(i)];
    }
    if (rep.paired_paths > 0) {
        rep.pathwise_mean = acc / rep.paired_paths;
        rep.pathwise_scale = sc / rep.paired_paths;
    }
    rep.pathwise_max = mx;
    rep.ks = ks_two_sample(group_a, group_b);
    return rep;
}

double check_anchor_independence(const BDSDEProblem& problem, const WeightedSpace& space,
                                 const ReferenceCloud& cloud, const TwoSidedPath& driver,
                                 double t, double anchor1, double anchor2,
                                 const StationaryOptions& options, std::uint64_t seed) {
    auto f1 = stationary_field(problem, space, cloud, driver, anchor1, t, options, seed);
    auto f2 = stationary_field(problem, space, cloud, driver, anchor2, t, options, seed);
    std::vector<double> diff(cloud.size);
    for (std::size_t i = 0; i < cloud.size; ++i) diff[i] = f1.values[i] - f2.values[i];
    const double dn = weighted_l2_norm(diff, cloud, space);
    const double scale = weighted_l2_norm(f1.values, cloud, space);
    return dn / std::max(scale, 1e-12);
}

namespace {

/// exact Gaussian smoothing of a 1d polynomial in x/scale: returns new
/// coefficients of E[p((x + sqrt(tau) G)/scale)]
std::vector<double> heat_step_poly(const std::vector<double>& coef, double tau, double scale) {
    const std::size_t p = coef.size();
    std::vector<double> out(p, 0.0);
    // double factorial moments of the standard normal
    std::vector<double> mom(p, 0.0);
    mom[0] = 1.0;
    for (std::size_t m = 2; m < p; m += 2) mom[m] = mom[m - 2] * static_cast<double>(m - 1);
    const double s = std::sqrt(tau) / scale;
    std::vector<double> spow(p, 1.0);
    for (std::size_t m = 1; m < p; ++m) spow[m] = spow[m - 1] * s;
    for (std::size_t k = 0; k < p; ++k) {
        double binom = 1.0;
        for (std::size_t j = 0; j <= k; ++j) {
            const std::size_t m = k - j;
            if (m % 2 == 0) out[j] += coef[k] * binom * spow[m] * mom[m];
            binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
        }
    }
    return out;
}

}  // namespace

EvolutionCheck fixed_point_evolution_check(const BDSDEProblem& problem,
                                           const WeightedSpace& space,
                                           const ReferenceCloud& cloud,
                                           const TwoSidedPath& driver, double anchor,
                                           double t, ForwardStepper stepper,
                                           const StationaryOptions& options,
                                           std::uint64_t seed) {
    auto f0 = stationary_field(problem, space, cloud, driver, anchor, 0.0, options, seed);
    auto ft = stationary_field(problem, space, cloud, driver, anchor, t, options, seed);

    const double dt = driver.dt();
    const auto n_steps = static_cast<std::size_t>(std::llround(t / dt));
    const int d = cloud.dimension;
    const int n_modes = problem.noise.modes;
    std::vector<double> v = f0.values;
    std::vector<double> zero_z(static_cast<std::size_t>(d), 0.0);

    std::vector<double> db(static_cast<std::size_t>(n_modes));
    if (stepper == ForwardStepper::Pointwise) {
        for (std::size_t k = 0; k < n_steps; ++k) {
            const double s = static_cast<double>(k) * dt;
            const std::size_t b0 = driver.index_of(s);
            for (int j = 0; j < n_modes; ++j) {
                db[j] = driver.value_at(j, b0 + 1) - driver.value_at(j, b0);
            }
            for (std::size_t i = 0; i < cloud.size; ++i) {
                auto x = cloud.point(i);
                double inc = problem.eval_f(s, x, v[i], zero_z) * dt;
                for (int j = 0; j < n_modes; ++j) {
                    inc += problem.eval_g(j, s, x, v[i], zero_z) * db[j];
                }
                v[i] += inc;
            }
        }
    } else {
        if (d != 1) {
            throw std::invalid_argument("fixed_point_evolution_check: heat stepper needs d = 1");
        }
        // split step: exact Gaussian smoothing of the polynomial fit, then
        // pointwise reaction and noise
        const PolyBasis basis(1, f0.basis_degree, f0.basis_scale);
        std::vector<double> coef = f0.coef;
        for (std::size_t k = 0; k < n_steps; ++k) {
            const double s = static_cast<double>(k) * dt;
            coef = heat_step_poly(coef, dt, f0.basis_scale);
            const std::size_t b0 = driver.index_of(s);
            for (int j = 0; j < n_modes; ++j) {
                db[j] = driver.value_at(j, b0 + 1) - driver.value_at(j, b0);
            }
            for (std::size_t i = 0; i < cloud.size; ++i) {
                auto x = cloud.point(i);
                const double smoothed = basis.eval_combination(coef, x);
                double inc = problem.eval_f(s, x, smoothed, zero_z) * dt;
                for (int j = 0; j < n_modes; ++j) {
                    inc += problem.eval_g(j, s, x, smoothed, zero_z) * db[j];
                }
                v[i] = smoothed + inc;
            }
            // refit so the next smoothing step sees the updated field; with
            // constant-in-x reaction and noise this only shifts coef[0]
            double mean_shift = 0.0;
            for (std::size_t i = 0; i < cloud.size; ++i) {
                mean_shift += cloud.weights[i] * (v[i] - basis.eval_combination(coef, cloud.point(i)));
            }
            coef[0] += mean_shift;
        }
    }

    std::vector<double> diff(cloud.size);
    for (std::size_t i = 0; i < cloud.size; ++i) diff[i] = v[i] - ft.values[i];
    EvolutionCheck out;
    out.deviation = weighted_l2_norm(diff, cloud, space);
    out.scale = weighted_l2_norm(ft.values, cloud, space);
    out.relative = out.deviation / std::max(out.scale, 1e-12);
    return out;
}

}  // namespace bdsde
