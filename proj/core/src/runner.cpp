#include "bdsde/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>

#include <json.hpp>

#include "bdsde/bank.hpp"
#include "bdsde/conditions.hpp"
#include "bdsde/ladder.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/rng.hpp"
#include "bdsde/spde.hpp"
#include "bdsde/stationarity.hpp"
#include "bdsde/stats.hpp"

namespace bdsde {

namespace {

using nlohmann::ordered_json;

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ordered_json to_json(const ConditionReport& rep) {
    ordered_json out = ordered_json::array();
    for (const auto& e : rep.entries) {
        ordered_json j;
        j["id"] = e.id;
        j["status"] = e.status == ConditionStatus::Pass
                          ? "pass"
                          : (e.status == ConditionStatus::Fail ? "fail" : "asserted");
        j["evidence"] = e.evidence;
        j["value"] = e.value;
        out.push_back(j);
    }
    return out;
}

ordered_json to_json(const ContractionDiagnostics& d) {
    ordered_json j;
    j["iterations"] = d.iterations;
    j["converged"] = d.converged;
    j["weight_rate"] = d.weight_rate;
    j["y_weight"] = d.y_weight;
    j["difference_norms"] = d.difference_norms;
    j["ratios"] = d.ratios;
    return j;
}

ordered_json to_json(const LadderDiagnostics& d) {
    ordered_json j;
    j["rung_horizons"] = d.rung_horizons;
    j["difference_norms"] = d.difference_norms;
    j["fitted_base"] = d.fitted_base;
    j["discount_rate"] = d.discount_rate;
    j["stopped_rung"] = d.stopped_rung;
    j["converged"] = d.converged;
    return j;
}

struct Assertions {
    ordered_json list = ordered_json::array();
    bool all_passed = true;

    void add(const std::string& name, bool passed, const std::string& detail) {
        ordered_json j;
        j["name"] = name;
        j["passed"] = passed;
        j["detail"] = detail;
        list.push_back(j);
        all_passed = all_passed && passed;
    }
};

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ",";
            out_ << header[i];
        }
        out_ << "\r\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ",";
            out_ << cells[i];
        }
        out_ << "\r\n";
    }

private:
    std::ofstream out_;
};

struct PipelineContext {
    const ExperimentConfig* cfg;
    WeightedSpace space;
    ReferenceCloud cloud;
    BDSDEProblem problem;
    std::filesystem::path out_dir;
    RunOutcome* outcome;
    Assertions* asserts;
};

NoiseModel resolve_noise(const ExperimentConfig& cfg, const BDSDEProblem& problem) {
    NoiseModel model = problem.noise;
    if (cfg.noise_modes > 0) {
        if (cfg.noise_modes != problem.noise.modes) {
            throw ConfigError(
                "config: noise.modes must match the problem's coefficient count");
        }
        model.lambdas = cfg.lambdas;
    }
    return model;
}

std::vector<TestFunction> default_test_family(int dimension) {
    std::vector<TestFunction> family;
    for (double c : {-1.0, 0.0, 1.0}) {
        for (double w : {1.0, 2.0}) {
            TestFunction phi;
            phi.center.assign(static_cast<std::size_t>(dimension), 0.0);
            phi.center[0] = c;
            phi.width = w;
            family.push_back(phi);
        }
    }
    return family;
}

void write_fields_csv(const PipelineContext& ctx, const BackwardSolution& sol,
                      const std::string& name) {
    if (!ctx.cfg->write_csv) return;
    const int d = ctx.cloud.dimension;
    std::vector<std::string> header = {"particle"};
    for (int c = 0; c < d; ++c) header.push_back("x" + std::to_string(c));
    header.push_back("y0");
    for (int c = 0; c < d; ++c) header.push_back("z0_" + std::to_string(c));
    const auto path = ctx.out_dir / name;
    CsvWriter csv(path, header);
    for (std::size_t i = 0; i < ctx.cloud.size; ++i) {
        std::vector<std::string> cells = {std::to_string(i)};
        auto x = ctx.cloud.point(i);
        for (int c = 0; c < d; ++c) cells.push_back(num(x[static_cast<std::size_t>(c)]));
        cells.push_back(num(sol.y_at(0, i)));
        for (int c = 0; c < d; ++c) cells.push_back(num(sol.z_at(0, i, c)));
        csv.row(cells);
    }
    ctx.outcome->written_files.push_back(path.string());
}

void run_finite(PipelineContext& ctx, ordered_json& report) {
    const auto& cfg = *ctx.cfg;
    const double horizon = cfg.resolved_horizon();
    const auto n_steps = static_cast<std::size_t>(std::llround(horizon / cfg.dt));
    const auto ensemble = euler_maruyama(0.0, ctx.cloud, ctx.problem.diffusion, cfg.dt,
                                         n_steps, cfg.seed, 0, cfg.workers);
    const double path_span = std::ceil(horizon / cfg.dt) * cfg.dt + cfg.dt;
    const auto drivers = sample_paths(ctx.problem.noise, path_span, cfg.dt, cfg.seed, 0);

    SolverOptions opts;
    opts.basis_degree = cfg.basis_degree;
    opts.implicit_sweeps = cfg.implicit_sweeps;
    opts.max_iterations = cfg.max_iterations;
    opts.tolerance = cfg.tolerance;
    opts.workers = cfg.workers;

    auto sol = picard_solve(ctx.problem, ensemble, drivers.b_hat, ctx.space, opts);
    report["finite"]["picard"] = to_json(sol.picard);
    report["finite"]["regression_warnings"] = sol.regression_warnings;
    ctx.asserts->add("finite.picard_converged", sol.picard.converged,
                     "iterations = " + std::to_string(sol.picard.iterations));
    write_fields_csv(ctx, sol, "fields.csv");

    // weak-form residual table over the default test family
    ordered_json residuals = ordered_json::array();
    std::unique_ptr<CsvWriter> csv;
    std::filesystem::path csv_path = ctx.out_dir / "residuals.csv";
    if (cfg.write_csv) {
        csv = std::make_unique<CsvWriter>(
            csv_path,
            std::vector<std::string>{"phi_id", "dt", "particles", "residual", "normalizer"});
    }
    const auto family = default_test_family(ctx.cloud.dimension);
    for (std::size_t fi = 0; fi < family.size(); ++fi) {
        const auto r = weak_residual(sol, ctx.problem, family[fi], drivers.b_hat);
        ordered_json jr;
        jr["phi_id"] = fi;
        jr["center"] = family[fi].center;
        jr["width"] = family[fi].width;
        jr["residual"] = r.residual;
        jr["normalizer"] = r.normalizer;
        jr["relative"] = r.relative;
        residuals.push_back(jr);
        if (csv) {
            csv->row({std::to_string(fi), num(cfg.dt), std::to_string(ctx.cloud.size),
                      num(r.residual), num(r.normalizer)});
        }
    }
    if (csv) ctx.outcome->written_files.push_back(csv_path.string());
    report["finite"]["residuals"] = residuals;

    if (ctx.problem.diffusion.dimension >= 1) {
        const auto grad = gradient_representation_check(sol, ensemble, ctx.problem, ctx.space);
        report["finite"]["gradient_check"] = {{"discrepancy", grad.discrepancy},
                                              {"magnitude", grad.magnitude},
                                              {"relative", grad.relative}};
    }
}

void run_infinite(PipelineContext& ctx, ordered_json& report) {
    const auto& cfg = *ctx.cfg;
    const BankEntry& entry = bank_entry(cfg.problem_id);
    if (!entry.supports_infinite) {
        ctx.outcome->messages.push_back("problem '" + cfg.problem_id +
                                        "' has no infinite-horizon form; skipping");
        return;
    }
    const double depth = cfg.rung_step * static_cast<double>(cfg.max_rungs);
    const auto n_steps = static_cast<std::size_t>(std::llround(depth / cfg.dt));
    const auto ensemble = euler_maruyama(0.0, ctx.cloud, ctx.problem.diffusion, cfg.dt,
                                         n_steps, cfg.seed, 0, cfg.workers);
    const auto drivers = sample_paths(ctx.problem.noise, depth + cfg.dt, cfg.dt, cfg.seed, 0);

    const double K = cfg.discount_rate > 0.0
                         ? cfg.discount_rate
                         : default_discount_rate(ctx.problem, ctx.space.moment_exponent());
    LadderOptions lopt;
    lopt.rung_step = cfg.rung_step;
    lopt.max_rungs = cfg.max_rungs;
    lopt.cauchy_tol = cfg.cauchy_tol;
    lopt.solver.basis_degree = cfg.basis_degree;
    lopt.solver.implicit_sweeps = cfg.implicit_sweeps;
    lopt.solver.max_iterations = cfg.max_iterations;
    lopt.solver.tolerance = cfg.tolerance;
    lopt.solver.workers = cfg.workers;

    auto [sol, diag] = solve_horizon_ladder(ctx.problem, ensemble, drivers.b_hat, ctx.space,
                                            K, lopt);
    report["infinite"]["ladder"] = to_json(diag);
    ctx.asserts->add("infinite.ladder_converged", diag.converged,
                     "stopped at rung " + std::to_string(diag.stopped_rung));
    const double moment =
        pth_moment_diagnostic(sol, ctx.space.moment_exponent(), K, ctx.cloud, ctx.space);
    report["infinite"]["pth_moment"] = moment;
    ctx.asserts->add("infinite.pth_moment_finite", std::isfinite(moment), num(moment));
    write_fields_csv(ctx, sol, "fields_infinite.csv");

    if (cfg.write_csv) {
        const auto path = ctx.out_dir / "norms.csv";
        CsvWriter csv(path, {"kind", "index", "value"});
        for (std::size_t i = 0; i < diag.difference_norms.size(); ++i) {
            csv.row({"ladder_difference", std::to_string(i), num(diag.difference_norms[i])});
        }
        for (std::size_t i = 0; i < sol.picard.difference_norms.size(); ++i) {
            csv.row({"picard_difference", std::to_string(i),
                     num(sol.picard.difference_norms[i])});
        }
        ctx.outcome->written_files.push_back(path.string());
    }
}

void run_stationarity(PipelineContext& ctx, ordered_json& report) {
    const auto& cfg = *ctx.cfg;
    const BankEntry& entry = bank_entry(cfg.problem_id);
    if (!entry.supports_infinite) {
        ctx.outcome->messages.push_back("problem '" + cfg.problem_id +
                                        "' has no stationary form; skipping");
        return;
    }
    StationaryOptions sopt;
    sopt.ladder.rung_step = cfg.rung_step;
    sopt.ladder.max_rungs = cfg.max_rungs;
    sopt.ladder.cauchy_tol = cfg.cauchy_tol;
    sopt.ladder.solver.basis_degree = cfg.basis_degree;
    sopt.ladder.solver.implicit_sweeps = cfg.implicit_sweeps;
    sopt.ladder.solver.max_iterations = cfg.max_iterations;
    sopt.ladder.solver.tolerance = cfg.tolerance;
    sopt.discount_rate = cfg.discount_rate;

    const double span = cfg.resolved_span();
    const int replicas = cfg.replicas;

    // per-time replica statistics at the first probe particle
    ordered_json times = ordered_json::array();
    const bool is_ou = cfg.problem_id == "ou_additive";
    const bool is_zero = cfg.problem_id == "zero";
    double oracle_mean = 0.0, oracle_var = 0.0;
    if (is_ou) {
        std::map<std::string, double> pr = bank_entry("ou_additive").default_params;
        for (const auto& [k, v] : cfg.problem_params) pr[k] = v;
        oracle_mean = pr.at("c") / pr.at("mu");
        oracle_var = pr.at("beta") * pr.at("beta") / (2.0 * pr.at("mu"));
    } else if (cfg.problem_id == "monotone_ode") {
        std::map<std::string, double> pr = bank_entry("monotone_ode").default_params;
        for (const auto& [k, v] : cfg.problem_params) pr[k] = v;
        oracle_mean = pr.at("c") / pr.at("mu");
    }

    for (double t : cfg.t_list) {
        std::vector<double> samples(static_cast<std::size_t>(replicas));
        std::vector<double> sup_abs(static_cast<std::size_t>(replicas));
        parallel_for(static_cast<std::size_t>(replicas), cfg.workers, [&](std::size_t rep) {
            const auto paths = sample_paths(ctx.problem.noise, span, cfg.dt,
                                            rng::key(cfg.seed, rng::kReplica, rep, 2, 0), rep);
            auto run = build_stationary_solution(ctx.problem, ctx.space, ctx.cloud,
                                                 paths.b_hat, cfg.anchor, {t}, sopt,
                                                 rng::key(cfg.seed, rng::kReplica, rep, 3, 0));
            samples[rep] = run.fields[0][0];
            double mx = 0.0;
            for (double v : run.fields[0]) mx = std::max(mx, std::abs(v));
            sup_abs[rep] = mx;
        });
        const auto stats = summarize(samples);
        ordered_json jt;
        jt["t"] = t;
        jt["mean"] = stats.mean;
        jt["std_error"] = stats.std_error;
        jt["variance"] = stats.variance;
        if (is_ou || cfg.problem_id == "monotone_ode") {
            jt["oracle_mean"] = oracle_mean;
            const bool mean_ok = std::abs(stats.mean - oracle_mean) <=
                                 std::max(3.0 * stats.std_error, 5.0 * cfg.dt + cfg.cauchy_tol);
            ctx.asserts->add("stationarity.mean[t=" + num(t) + "]", mean_ok,
                             "mean " + num(stats.mean) + " vs oracle " + num(oracle_mean));
            if (is_ou) {
                jt["oracle_variance"] = oracle_var;
                const double rel_band = std::max(
                    0.10, 3.0 * std::sqrt(2.0 / std::max(1.0, static_cast<double>(replicas - 1))));
                const bool var_ok =
                    std::abs(stats.variance - oracle_var) <= rel_band * oracle_var;
                ctx.asserts->add("stationarity.variance[t=" + num(t) + "]", var_ok,
                                 "variance " + num(stats.variance) + " vs oracle " +
                                     num(oracle_var));
            }
        }
        if (is_zero) {
            double mx = 0.0;
            for (double v : sup_abs) mx = std::max(mx, v);
            ctx.asserts->add("stationarity.zero_field[t=" + num(t) + "]", mx <= 1e-12,
                             "max |v| = " + num(mx));
        }
        times.push_back(jt);
    }
    report["stationarity"]["times"] = times;

    // shift identity: pathwise pairs plus a nominal-level KS comparison
    const double offset = cfg.rung_step;
    const double t_shift = cfg.t_list.empty() ? 0.0 : cfg.t_list.front();
    const auto shift_rep = check_shift_stationarity(
        ctx.problem, ctx.space, ctx.cloud, t_shift, offset, cfg.anchor,
        std::min(replicas, 128), span, cfg.dt, sopt, cfg.seed ^ 0x5157ull, 16, cfg.workers);
    report["stationarity"]["shift"] = {{"pathwise_mean", shift_rep.pathwise_mean},
                                       {"pathwise_max", shift_rep.pathwise_max},
                                       {"pathwise_scale", shift_rep.pathwise_scale},
                                       {"ks_statistic", shift_rep.ks.statistic},
                                       {"ks_critical", shift_rep.ks.critical_value},
                                       {"ks_significant", shift_rep.ks.significant}};
    ctx.asserts->add("stationarity.shift_ks", !shift_rep.ks.significant,
                     "D = " + num(shift_rep.ks.statistic) + ", crit = " +
                         num(shift_rep.ks.critical_value));

    // reversal-anchor independence on one path
    {
        const auto paths = sample_paths(ctx.problem.noise, span, cfg.dt,
                                        rng::key(cfg.seed, rng::kReplica, 0, 4, 0), 9001);
        const double t_ind = cfg.t_list.empty() ? 1.0 : cfg.t_list.back();
        const double rel = check_anchor_independence(
            ctx.problem, ctx.space, ctx.cloud, paths.b_hat, t_ind, cfg.anchor,
            cfg.anchor + 2.0 * cfg.rung_step, sopt, rng::key(cfg.seed, rng::kReplica, 0, 5, 0));
        report["stationarity"]["anchor_independence"] = rel;
        ctx.asserts->add("stationarity.anchor_independence", rel <= 0.05,
                         "relative difference = " + num(rel));
    }
}

}  // namespace

std::string bank_listing() {
    std::string out;
    for (const auto& e : bank_entries()) {
        out += e.id;
        out += e.has_oracle ? "  [oracle] " : "  [no-oracle] ";
        out += e.description;
        if (e.has_oracle) {
            out += " | oracle: ";
            out += e.oracle;
        }
        out += "\n";
    }
    return out;
}

RunOutcome run_experiment(const ExperimentConfig& config) {
    RunOutcome outcome;
    Assertions asserts;
    ordered_json report;
    report["version"] = "0.1.0";
    report["config"] = ordered_json::parse(config.to_json_text());

    try {
        PipelineContext ctx{
            &config,
            WeightedSpace(config.dimension, config.weight_exponent, config.moment_exponent),
            sample_reference_cloud(config.particles,
                                   WeightedSpace(config.dimension, config.weight_exponent,
                                                 config.moment_exponent),
                                   config.seed),
            make_bank_problem(config.problem_id, config.problem_params, config.dimension),
            std::filesystem::path(config.output_directory),
            &outcome,
            &asserts};
        ctx.problem.noise = resolve_noise(config, ctx.problem);
        std::filesystem::create_directories(ctx.out_dir);

        ProbeSettings probe;
        probe.seed = config.seed ^ 0x9e0bull;
        const auto finite_rep = validate_conditions_finite(ctx.problem, ctx.space, probe);
        report["conditions"]["finite"] = to_json(finite_rep);
        bool conditions_ok = finite_rep.all_hard_checks_pass;
        const bool needs_infinite = config.pipeline == "infinite" ||
                                    config.pipeline == "stationarity" ||
                                    config.pipeline == "full";
        if (needs_infinite && bank_entry(config.problem_id).supports_infinite) {
            const double K =
                config.discount_rate > 0.0
                    ? config.discount_rate
                    : default_discount_rate(ctx.problem, ctx.space.moment_exponent());
            const auto inf_rep = validate_conditions_infinite(
                ctx.problem, ctx.space, ctx.space.moment_exponent(), K, probe);
            report["conditions"]["infinite"] = to_json(inf_rep);
            report["conditions"]["discount_rate"] = K;
            conditions_ok = conditions_ok && inf_rep.all_hard_checks_pass;
        }
        if (!conditions_ok && !config.force) {
            ordered_json failed = ordered_json::array();
            for (const auto& grp : {std::string("finite"), std::string("infinite")}) {
                if (!report["conditions"].contains(grp)) continue;
                for (const auto& e : report["conditions"][grp]) {
                    if (e.at("status") == "fail") failed.push_back(e.at("id"));
                }
            }
            report["error"] = "condition validation failed";
            report["failed_conditions"] = failed;
            outcome.exit_code = kExitConfigError;
            outcome.assertions_passed = false;
            outcome.messages.push_back("condition validation failed; use force to override");
        } else {
            if (!conditions_ok) {
                outcome.messages.push_back("validator failures downgraded to warnings");
            }
            if (config.pipeline == "finite" || config.pipeline == "full") {
                run_finite(ctx, report);
            }
            if (config.pipeline == "infinite" || config.pipeline == "full") {
                run_infinite(ctx, report);
            }
            if (config.pipeline == "stationarity" || config.pipeline == "full") {
                run_stationarity(ctx, report);
            }
        }
    } catch (const ConfigError& e) {
        report["error"] = e.what();
        outcome.exit_code = kExitConfigError;
        outcome.assertions_passed = false;
        outcome.messages.push_back(e.what());
    } catch (const PicardDivergence& e) {
        report["error"] = e.what();
        report["divergence"]["picard"] = to_json(e.diagnostics);
        outcome.exit_code = kExitDiverged;
        outcome.assertions_passed = false;
        outcome.messages.push_back(e.what());
    } catch (const LadderDivergence& e) {
        report["error"] = e.what();
        report["divergence"]["ladder"] = to_json(e.diagnostics);
        outcome.exit_code = kExitDiverged;
        outcome.assertions_passed = false;
        outcome.messages.push_back(e.what());
    } catch (const MomentBlowup& e) {
        report["error"] = e.what();
        outcome.exit_code = kExitDiverged;
        outcome.assertions_passed = false;
        outcome.messages.push_back(e.what());
    } catch (const std::invalid_argument& e) {
        report["error"] = e.what();
        outcome.exit_code = kExitConfigError;
        outcome.assertions_passed = false;
        outcome.messages.push_back(e.what());
    }

    report["assertions"] = asserts.list;
    if (outcome.exit_code == kExitOk) {
        outcome.assertions_passed = asserts.all_passed;
        if (!asserts.all_passed) outcome.exit_code = 1;
    }

    if (config.write_json) {
        std::filesystem::create_directories(config.output_directory);
        const auto path = std::filesystem::path(config.output_directory) / "report.json";
        std::ofstream out(path);
        out << report.dump(2) << "\n";
        outcome.written_files.push_back(path.string());
    }
    return outcome;
}

}  // namespace bdsde
