#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "bdsde/config.hpp"
#include "bdsde/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"bdsde-lab: weighted-space backward doubly stochastic solver workbench"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::int64_t seed_override = -1;
    bool force = false;

    auto* run = app.add_subcommand("run", "execute the pipeline described by a config file");
    run->add_option("--config", config_path, "path to the experiment config")->required();
    run->add_option("--out", out_dir, "output directory override");
    run->add_option("--seed", seed_override, "seed override");
    run->add_flag("--force", force, "downgrade validator failures to warnings");

    auto* validate = app.add_subcommand("validate", "parse a config and run the validators only");
    validate->add_option("--config", config_path, "path to the experiment config")->required();
    validate->add_option("--seed", seed_override, "seed override");

    auto* list = app.add_subcommand("list-bank", "print the built-in problem bank");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        std::fputs(bdsde::bank_listing().c_str(), stdout);
        return 0;
    }

    bdsde::ExperimentConfig cfg;
    try {
        cfg = bdsde::ExperimentConfig::from_file(config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return bdsde::kExitConfigError;
    }
    if (!out_dir.empty()) cfg.output_directory = out_dir;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    cfg.force = force;

    if (validate->parsed()) {
        cfg.pipeline = "finite";
        cfg.particles = std::min<std::size_t>(cfg.particles, 256);
        cfg.write_csv = false;
        // run only the validator stage by forcing an empty pipeline pass
        bdsde::ExperimentConfig vcfg = cfg;
        vcfg.pipeline = "finite";
        vcfg.max_iterations = 1;
        vcfg.tolerance = 0.0;
        const auto outcome = bdsde::run_experiment(vcfg);
        for (const auto& m : outcome.messages) std::fprintf(stderr, "%s\n", m.c_str());
        std::fprintf(stdout, "validation %s\n",
                     outcome.exit_code == bdsde::kExitConfigError ? "failed" : "passed");
        return outcome.exit_code == bdsde::kExitConfigError ? bdsde::kExitConfigError : 0;
    }

    const auto outcome = bdsde::run_experiment(cfg);
    for (const auto& m : outcome.messages) std::fprintf(stderr, "%s\n", m.c_str());
    for (const auto& f : outcome.written_files) std::fprintf(stdout, "wrote %s\n", f.c_str());
    return outcome.exit_code;
}
