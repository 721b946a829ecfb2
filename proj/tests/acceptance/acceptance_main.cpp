#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <thread>

#include "bdsde/bank.hpp"
#include "bdsde/conditions.hpp"
#include "bdsde/ladder.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/quadrature.hpp"
#include "bdsde/spde.hpp"
#include "bdsde/stationarity.hpp"

// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with its headline numbers. Tolerances are fixed here, not configurable.

using namespace bdsde;

namespace {

unsigned workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 2 : std::min(hc, 8u);
}

void verdict(int criterion, bool ok, const std::string& detail) {
    std::printf("[criterion %02d] %s  %s\n", criterion, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    CHECK_MESSAGE(ok, "criterion ", criterion, ": ", detail);
}

FrozenG no_freeze() {
    return [](int, std::size_t, std::size_t) { return 0.0; };
}

double max_ratio_over(const std::vector<double>& ratios, std::size_t lo, std::size_t hi) {
    double m = 0.0;
    for (std::size_t i = lo; i <= hi && i < ratios.size(); ++i) m = std::max(m, ratios[i]);
    return m;
}

}  // namespace

TEST_CASE("criterion 1: outer iteration contracts under the structural bound") {
    WeightedSpace space(1, 4.0, 2.5);
    auto problem = make_bank_problem("linear_g");  // sum alpha = 0.3
    SolverOptions opts;
    opts.tolerance = 0.0;
    opts.max_iterations = 10;
    opts.workers = workers();

    auto run = [&](std::size_t m, double dt) {
        auto cloud = sample_reference_cloud(m, space, 2001);
        const auto n = static_cast<std::size_t>(std::llround(1.0 / dt));
        auto ens = euler_maruyama(0.0, cloud, problem.diffusion, dt, n, 2002, 0, opts.workers);
        auto drivers = sample_paths(problem.noise, 1.0 + dt, dt, 2002);
        auto sol = picard_solve(problem, ens, drivers.b_hat, space, opts);
        return sol.picard.ratios;
    };
    const auto coarse = run(2000, 0.02);
    const auto fine = run(4000, 0.01);
    // ratios[i] compares iterations i+1 and i+2; iterations 3..8 sit at 1..6
    const double max_c = max_ratio_over(coarse, 1, 6);
    const double max_f = max_ratio_over(fine, 1, 6);
    const bool bound_ok = max_c <= 0.75 && max_f <= 0.75;
    const bool tighter = max_f < max_c;
    verdict(1, bound_ok && tighter,
            "max ratio (iters 3-8) coarse " + std::to_string(max_c) + ", refined " +
                std::to_string(max_f) + ", bound 0.75");
}

TEST_CASE("criterion 2: frozen-coefficient solve against the backward ODE oracle") {
    WeightedSpace space(1, 4.0, 2.5);
    auto cloud = sample_reference_cloud(256, space, 2101);
    auto problem = make_bank_problem("monotone_ode");  // f = -y + 1, T = 2
    SolverOptions opts;
    opts.workers = workers();
    double errs[2];
    int idx = 0;
    for (double dt : {0.01, 0.005}) {
        const auto n = static_cast<std::size_t>(std::llround(2.0 / dt));
        auto ens = euler_maruyama(0.0, cloud, problem.diffusion, dt, n, 2102);
        auto drivers = sample_paths(problem.noise, 2.0 + dt, dt, 2102);
        auto sol = backward_lsmc_recursion(problem, ens, drivers.b_hat, no_freeze(), n, space,
                                           opts);
        double err = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            err = std::max(err,
                           std::abs(sol.y_at(k, 0) - (1.0 - std::exp(-(2.0 - sol.times[k])))));
        }
        errs[idx++] = err;
    }
    const double ratio = errs[0] / errs[1];
    const bool ok = errs[0] <= 5.0 * 0.01 && ratio >= 1.6 && ratio <= 2.6;
    verdict(2, ok,
            "max error " + std::to_string(errs[0]) + " (bound 0.05), halving ratio " +
                std::to_string(ratio) + " in [1.6, 2.6]");
}

TEST_CASE("criterion 3: horizon ladder differences decay geometrically") {
    WeightedSpace space(1, 4.0, 2.5);
    auto cloud = sample_reference_cloud(64, space, 2201);
    auto problem = make_bank_problem("ou_additive");  // mu = 1
    const double dt = 0.02;
    const auto steps = static_cast<std::size_t>(std::llround(8.0 / dt));
    auto ens = euler_maruyama(0.0, cloud, problem.diffusion, dt, steps, 2202);
    auto drivers = sample_paths(problem.noise, 8.0 + dt, dt, 2202);
    LadderOptions lopt;
    lopt.max_rungs = 8;
    lopt.cauchy_tol = 1e-4;
    lopt.solver.tolerance = 1e-12;
    lopt.solver.max_iterations = 40;
    lopt.solver.workers = workers();
    const double K = default_discount_rate(problem, space.moment_exponent());
    auto [sol, diag] = solve_horizon_ladder(problem, ens, drivers.b_hat, space, K, lopt);
    (void)sol;
    bool monotone = diag.difference_norms.size() >= 3;
    for (std::size_t i = 0; i + 1 < diag.difference_norms.size(); ++i) {
        monotone = monotone && diag.difference_norms[i + 1] < diag.difference_norms[i];
    }
    const bool base_ok = diag.fitted_base <= std::exp(-1.0) + 0.1;
    verdict(3, monotone && base_ok,
            "rung differences monotone = " + std::string(monotone ? "yes" : "no") +
                ", fitted base " + std::to_string(diag.fitted_base) + " <= " +
                std::to_string(std::exp(-1.0) + 0.1));
}

TEST_CASE("criterion 4: stationary marginal matches the analytic law") {
    WeightedSpace space(1, 4.0, 2.5);
    auto cloud = sample_reference_cloud(16, space, 2301);
    auto problem = make_bank_problem("ou_additive");  // mu = 1, c = 1, beta = 0.5
    const double dt = 0.02, anchor = 5.0, span = 20.0;
    StationaryOptions sopt;
    sopt.ladder.max_rungs = 7;
    sopt.ladder.cauchy_tol = 1e-3;
    sopt.ladder.solver.tolerance = 1e-12;
    const int n_rep = 500;
    bool ok = true;
    std::string detail;
    for (double t : {0.0, 1.0, 2.0}) {
        std::vector<double> samples(n_rep);
        parallel_for(n_rep, workers(), [&](std::size_t r) {
            auto paths = sample_paths(problem.noise, span, dt, 2302, r);
            auto run = build_stationary_solution(problem, space, cloud, paths.b_hat, anchor,
                                                 {t}, sopt, 2303 + r);
            samples[r] = run.fields[0][0];
        });
        const auto st = summarize(samples);
        const bool mean_ok = std::abs(st.mean - 1.0) <= 3.0 * st.std_error;
        const bool var_ok = std::abs(st.variance - 0.125) <= 0.10 * 0.125;
        ok = ok && mean_ok && var_ok;
        detail += "t=" + std::to_string(t) + ": mean " + std::to_string(st.mean) + " var " +
                  std::to_string(st.variance) + "; ";
    }
    verdict(4, ok, detail + "targets mean 1.0 (3 SE), var 0.125 (10%)");
}

TEST_CASE("criterion 5: shift identity distributional and pathwise") {
    WeightedSpace space(1, 4.0, 2.5);
    auto cloud = sample_reference_cloud(8, space, 2401);
    auto problem = make_bank_problem("ou_additive");
    const double dt = 0.05, anchor = 5.0, span = 20.0;
    StationaryOptions sopt;
    sopt.ladder.max_rungs = 6;
    sopt.ladder.cauchy_tol = 1e-3;
    sopt.ladder.solver.tolerance = 1e-12;

    // pathwise exactness at zero offset
    auto zero_rep = check_shift_stationarity(problem, space, cloud, 1.0, 0.0, anchor, 4, span,
                                             dt, sopt, 2402, 4, workers());
    const bool zero_ok = zero_rep.pathwise_max == 0.0;

    int not_significant = 0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        auto r = check_shift_stationarity(problem, space, cloud, 1.0, 1.0, anchor, 500, span,
                                          dt, sopt, 3000 + static_cast<std::uint64_t>(rep) * 7919,
                                          0, workers());
        if (!r.ks.significant) ++not_significant;
    }
    const bool ks_ok = not_significant >= 18;
    verdict(5, zero_ok && ks_ok,
            "zero-offset pathwise max " + std::to_string(zero_rep.pathwise_max) +
                ", KS not significant in " + std::to_string(not_significant) + "/20");
}

TEST_CASE("criterion 6: the reversal anchor does not matter") {
    WeightedSpace space(1, 4.0, 2.5);
    auto cloud = sample_reference_cloud(24, space, 2501);
    auto problem = make_bank_problem("ou_additive");
    const double dt = 0.02;
    auto paths = sample_paths(problem.noise, 24.0, dt, 2502);
    StationaryOptions sopt;
    sopt.ladder.max_rungs = 7;
    sopt.ladder.cauchy_tol = 1e-3;
    sopt.ladder.solver.tolerance = 1e-12;
    const double rel = check_anchor_independence(problem, space, cloud, paths.b_hat, 1.0, 5.0,
                                                 8.0, sopt, 2503);
    verdict(6, rel <= 0.05,
            "relative difference " + std::to_string(rel) + " <= 0.05 at anchors 5 and 8");
}

TEST_CASE("criterion 7: reversal and shift algebra is float-exact") {
    NoiseModel model;
    model.modes = 2;
    model.lambdas = {1.0, 0.5};
    auto paths = sample_paths(model, 6.0, 0.05, 2601);
    const auto& b = paths.b_hat;
    const double scale = std::max(1.0, b.sup_norm());

    double worst = 0.0;
    // double reversal
    auto rev = time_reverse(b, 2.0);
    auto back = time_reverse(rev, 2.0);
    for (double t = 0.0; t <= 2.0 + 1e-12; t += 0.05) {
        for (int m = 0; m < 2; ++m) {
            worst = std::max(worst, std::abs(back.value(m, t) - b.value(m, t)) / scale);
        }
    }
    // shift semigroup
    auto s1 = shift(shift(b, ShiftOp{0.35}), ShiftOp{0.8});
    auto s2 = shift(b, ShiftOp{1.15});
    for (double t = -2.0; t <= 2.0 + 1e-12; t += 0.05) {
        worst = std::max(worst, std::abs(s1.value(0, t) - s2.value(0, t)) / scale);
    }
    // backward integral against minus the forward integral on the reversed clock
    const double tp = 2.0, s = 0.25, T = 1.75;
    const auto n = static_cast<std::size_t>(std::llround((T - s) / b.dt()));
    std::vector<double> h(n + 1), hrev(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double u = s + 0.05 * static_cast<double>(i);
        h[i] = std::cos(2.0 * u) + 0.3 * u;
    }
    for (std::size_t i = 0; i <= n; ++i) {
        const double u = (tp - T) + 0.05 * static_cast<double>(i);
        hrev[i] = std::cos(2.0 * (tp - u)) + 0.3 * (tp - u);
    }
    const double lhs = backward_integral(h, rev, 0, s, T);
    const double rhs = -forward_integral(hrev, b, 0, tp - T, tp - s);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));

    verdict(7, worst <= 1e-12,
            "worst relative defect " + std::to_string(worst) + " <= 1e-12");
}

TEST_CASE("criterion 8: weak-form residual refines and zero data is exact") {
    WeightedSpace space(1, 4.0, 2.5);
    auto problem = make_bank_problem("heat_bump");
    TestFunction phi;
    phi.center = {0.0};
    phi.width = 2.0;
    SolverOptions opts;
    opts.basis_degree = 6;
    opts.workers = workers();

    std::vector<double> residuals;
    struct Level {
        std::size_t m;
        double dt;
    };
    for (const Level lvl : {Level{500, 0.04}, Level{2000, 0.02}, Level{8000, 0.01}}) {
        auto cloud = sample_reference_cloud(lvl.m, space, 2701);
        const auto n = static_cast<std::size_t>(std::llround(0.5 / lvl.dt));
        auto ens = euler_maruyama(0.0, cloud, problem.diffusion, lvl.dt, n, 2702, 0,
                                  opts.workers);
        auto drivers = sample_paths(problem.noise, 0.5 + lvl.dt, lvl.dt, 2702);
        auto sol =
            backward_lsmc_recursion(problem, ens, drivers.b_hat, no_freeze(), n, space, opts);
        residuals.push_back(weak_residual(sol, problem, phi, drivers.b_hat).relative);
    }
    const bool refine_ok =
        residuals[1] <= residuals[0] / 1.4 && residuals[2] <= residuals[1] / 1.4;

    // constant field with zero data
    auto zerop = make_bank_problem("zero");
    zerop.terminal = [](std::span<const double>) { return 3.0; };
    zerop.drift_f = [](double, std::span<const double>, double, std::span<const double>) {
        return 0.0;
    };
    auto cloud = sample_reference_cloud(200, space, 2703);
    auto ens = euler_maruyama(0.0, cloud, zerop.diffusion, 0.05, 10, 2704);
    auto drivers = sample_paths(zerop.noise, 0.55, 0.05, 2704);
    SolverOptions zopts;
    auto zsol = backward_lsmc_recursion(zerop, ens, drivers.b_hat, no_freeze(), 10, space,
                                        zopts);
    const double zero_rel = weak_residual(zsol, zerop, phi, drivers.b_hat).relative;

    verdict(8, refine_ok && zero_rel <= 1e-12,
            "residual levels " + std::to_string(residuals[0]) + " -> " +
                std::to_string(residuals[1]) + " -> " + std::to_string(residuals[2]) +
                " (factor 1.4 each), zero-data residual " + std::to_string(zero_rel));
}

TEST_CASE("criterion 9: diffusion-weighted gradient from Z") {
    WeightedSpace space(1, 4.0, 2.5);
    auto cloud = sample_reference_cloud(8000, space, 2801);
    auto problem = make_bank_problem("heat_bump");
    problem.terminal = [](std::span<const double> x) { return x[0]; };
    const double dt = 0.02;
    SolverOptions opts;
    opts.workers = workers();
    auto ens = euler_maruyama(0.0, cloud, problem.diffusion, dt, 50, 2802, 0, opts.workers);
    auto drivers = sample_paths(problem.noise, 1.0 + dt, dt, 2802);
    auto sol =
        backward_lsmc_recursion(problem, ens, drivers.b_hat, no_freeze(), 50, space, opts);
    const auto g = gradient_representation_check(sol, ens, problem, space);
    verdict(9, g.relative <= 0.05,
            "relative gradient discrepancy " + std::to_string(g.relative) + " <= 0.05");
}

TEST_CASE("criterion 10: the validator fixture table is classified exactly") {
    WeightedSpace space(1, 4.0, 2.5);
    int checked = 0, correct = 0;
    auto tally = [&](bool expect_pass, bool got_pass) {
        ++checked;
        if (expect_pass == got_pass) ++correct;
    };
    auto finite_of = [&](const BDSDEProblem& pb) {
        return validate_conditions_finite(pb, space).all_hard_checks_pass;
    };
    auto infinite_of = [&](const BDSDEProblem& pb, double p, double K) {
        return validate_conditions_infinite(pb, space, p, K).all_hard_checks_pass;
    };

    tally(true, finite_of(make_bank_problem("monotone_ode")));
    tally(true, finite_of(make_bank_problem("linear_g")));
    tally(true, finite_of(make_bank_problem("heat_bump")));
    tally(true, infinite_of(make_bank_problem("ou_additive"), 2.5, 0.1));
    tally(true, infinite_of(make_bank_problem("monotone_ode", {{"mu", 2.0}}), 2.5, 0.1));
    tally(true, infinite_of(make_bank_problem("linear_gy"), 2.5, 0.1));

    tally(false, finite_of(make_bank_problem("linear_g", {{"az", 0.6}})));  // H.2
    {
        auto pb = make_bank_problem("monotone_ode");  // H.4: cubic growth
        pb.drift_f = [](double, std::span<const double>, double y, std::span<const double>) {
            return y * y * y;
        };
        tally(false, finite_of(pb));
    }
    {
        auto pb = make_bank_problem("monotone_ode");  // H.5: anti-monotone
        pb.drift_f = [](double, std::span<const double>, double y, std::span<const double>) {
            return 2.0 * y;
        };
        pb.growth_bound = 2.0;
        tally(false, finite_of(pb));
    }
    tally(false, infinite_of(make_bank_problem("monotone_ode", {{"mu", 0.1}}), 3.0, 1.0));  // A.4
    tally(false, infinite_of(make_bank_problem("monotone_ode", {{"mu", -0.5}}), 2.5, 0.1));  // A.4
    {
        auto pb = make_bank_problem("ou_additive");  // A.6: Lipschitz margin
        pb.diffusion.lipschitz = 0.2;
        pb.diffusion.drift = [](std::span<const double> x, std::span<double> out) {
            for (std::size_t c = 0; c < out.size(); ++c) out[c] = -0.2 * x[c];
        };
        tally(false, infinite_of(pb, 2.5, 0.1));
    }
    verdict(10, checked == 12 && correct == 12,
            std::to_string(correct) + "/" + std::to_string(checked) +
                " fixture configurations classified correctly");
}

TEST_CASE("criterion 11: discounted p-th moment against the Gaussian oracle") {
    WeightedSpace space(1, 4.0, 2.5);
    auto problem = make_bank_problem("ou_additive");
    const double dt = 0.02, p = 2.5;
    const double K = 0.75;  // admissible under the monotonicity margin
    const auto steps = static_cast<std::size_t>(std::llround(8.0 / dt));
    LadderOptions lopt;
    lopt.max_rungs = 8;
    lopt.cauchy_tol = 1e-3;
    lopt.solver.tolerance = 1e-12;

    auto mean_diag = [&](std::size_t particles) {
        auto cloud = sample_reference_cloud(particles, space, 2901);
        const int reps = 160;
        std::vector<double> vals(reps);
        parallel_for(reps, workers(), [&](std::size_t r) {
            auto drivers = sample_paths(problem.noise, 8.0 + dt, dt, 2902, r);
            auto ens = euler_maruyama(0.0, cloud, problem.diffusion, dt, steps, 2903 + r);
            auto [sol, diag] =
                solve_horizon_ladder(problem, ens, drivers.b_hat, space, K, lopt);
            (void)diag;
            vals[r] = pth_moment_diagnostic(sol, p, K, cloud, space);
        });
        double acc = 0.0;
        for (double v : vals) acc += v;
        return acc / reps;
    };
    const double est = mean_diag(32);
    const double est2 = mean_diag(64);

    const double sd = std::sqrt(0.125);
    const double oracle =
        space.normalizer() * adaptive_simpson(
                                 [&](double y) {
                                     return std::pow(std::abs(y), p) *
                                            std::exp(-(y - 1.0) * (y - 1.0) / (2.0 * sd * sd)) /
                                            std::sqrt(2.0 * M_PI * sd * sd);
                                 },
                                 -6.0, 8.0, 1e-10);
    const bool within = std::abs(est - oracle) <= 0.25 * oracle;
    const bool stable = std::abs(est2 - est) <= 0.25 * std::max(est, est2);
    verdict(11, within && stable,
            "diagnostic " + std::to_string(est) + " vs oracle " + std::to_string(oracle) +
                " (25%), doubling particles gives " + std::to_string(est2));
}

TEST_CASE("criterion 12: two-sided comparability of the flow pushforward") {
    WeightedSpace space(1, 4.0, 2.5);
    auto cloud = sample_reference_cloud(2000, space, 3001);
    auto cfg = make_diffusion("ou", 1);
    std::vector<std::function<double(std::span<const double>)>> family = {
        [](std::span<const double>) { return 1.0; },
        [](std::span<const double> x) { return std::exp(-x[0] * x[0]); },
        [](std::span<const double> x) { return 1.0 / (1.0 + x[0] * x[0]); },
        [](std::span<const double> x) {
            const double r2 = x[0] * x[0] / 2.25;
            return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
        },
        [](std::span<const double> x) { return std::exp(-std::abs(x[0])); },
    };
    bool ok = true;
    double worst_upper = 0.0, worst_lower = 1e300;
    for (std::size_t fi = 0; fi < family.size(); ++fi) {
        for (double s : {1.0, 2.0, 3.0, 4.0, 5.0}) {
            auto est = equivalence_norm_estimate(family[fi], 0.0, s, cloud, space, cfg, 0.02,
                                                 16, 3002 + fi, workers());
            const double lower = est.ratio - est.ratio_half_width;
            const double upper = est.ratio + est.ratio_half_width;
            ok = ok && lower > 0.0 && upper <= 100.0;
            worst_upper = std::max(worst_upper, upper);
            worst_lower = std::min(worst_lower, lower);
        }
    }
    verdict(12, ok,
            "ratio confidence bounds within (0, 100]: lower " + std::to_string(worst_lower) +
                ", upper " + std::to_string(worst_upper));
}
