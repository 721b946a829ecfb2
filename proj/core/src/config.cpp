#include "bdsde/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bdsde/bank.hpp"

namespace bdsde {

namespace {

using nlohmann::ordered_json;

void expect_keys(const ordered_json& obj, const std::string& where,
                 const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (allowed.find(it.key()) == allowed.end()) {
            throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
        }
    }
}

template <typename T>
T get_or(const ordered_json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const std::exception&) {
        throw ConfigError("config: bad value for '" + key + "'");
    }
}

void check(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig c;
    expect_keys(j, "root",
                {"pipeline", "problem", "space", "noise", "grid", "solver", "mc", "output"});

    c.pipeline = get_or<std::string>(j, "pipeline", c.pipeline);
    check(c.pipeline == "finite" || c.pipeline == "infinite" || c.pipeline == "stationarity" ||
              c.pipeline == "full",
          "pipeline must be finite | infinite | stationarity | full");

    if (j.contains("problem")) {
        const auto& p = j.at("problem");
        expect_keys(p, "problem", {"id", "params"});
        c.problem_id = get_or<std::string>(p, "id", c.problem_id);
        bank_entry(c.problem_id);  // rejects unknown ids
        if (p.contains("params")) {
            for (auto it = p.at("params").begin(); it != p.at("params").end(); ++it) {
                c.problem_params[it.key()] = it.value().get<double>();
            }
        }
    }

    if (j.contains("space")) {
        const auto& s = j.at("space");
        expect_keys(s, "space", {"dimension", "weight_exponent", "moment_exponent"});
        c.dimension = get_or<int>(s, "dimension", c.dimension);
        c.weight_exponent = get_or<double>(s, "weight_exponent", c.weight_exponent);
        c.moment_exponent = get_or<double>(s, "moment_exponent", c.moment_exponent);
        check(c.dimension == 1 || c.dimension == 2, "space.dimension must be 1 or 2");
        check(c.weight_exponent > 3.0, "space.weight_exponent must exceed 3");
        check(c.moment_exponent > 2.0 && c.moment_exponent < c.weight_exponent - 1.0,
              "space.moment_exponent must lie in (2, weight_exponent - 1)");
    }

    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        expect_keys(n, "noise", {"modes", "lambdas"});
        c.noise_modes = get_or<int>(n, "modes", c.noise_modes);
        if (n.contains("lambdas")) c.lambdas = n.at("lambdas").get<std::vector<double>>();
        check(c.noise_modes >= 0, "noise.modes must be nonnegative");
        if (c.noise_modes > 0) {
            check(c.lambdas.size() == static_cast<std::size_t>(c.noise_modes),
                  "noise.lambdas must list one intensity per mode");
            for (double l : c.lambdas) check(l >= 0.0, "noise.lambdas must be nonnegative");
        }
    }

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        expect_keys(g, "grid",
                    {"dt", "horizon", "rung_step", "max_rungs", "anchor", "t_list", "span"});
        c.dt = get_or<double>(g, "dt", c.dt);
        c.horizon = get_or<double>(g, "horizon", c.horizon);
        c.rung_step = get_or<double>(g, "rung_step", c.rung_step);
        c.max_rungs = get_or<int>(g, "max_rungs", c.max_rungs);
        c.anchor = get_or<double>(g, "anchor", c.anchor);
        if (g.contains("t_list")) c.t_list = g.at("t_list").get<std::vector<double>>();
        c.span = get_or<double>(g, "span", c.span);
        check(c.dt > 0.0 && c.dt <= 1.0, "grid.dt must lie in (0, 1]");
        check(c.horizon >= 0.0, "grid.horizon must be nonnegative");
        check(c.rung_step > 0.0, "grid.rung_step must be positive");
        check(c.max_rungs >= 1 && c.max_rungs <= 64, "grid.max_rungs must lie in [1, 64]");
        check(c.anchor > 0.0, "grid.anchor must be positive");
        for (double t : c.t_list) {
            check(t >= 0.0 && t <= c.anchor, "grid.t_list entries must lie in [0, anchor]");
        }
        check(c.span >= 0.0, "grid.span must be nonnegative");
    }

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        expect_keys(s, "solver",
                    {"basis_degree", "implicit_sweeps", "max_iterations", "tolerance",
                     "cauchy_tol", "discount_rate"});
        c.basis_degree = get_or<int>(s, "basis_degree", c.basis_degree);
        c.implicit_sweeps = get_or<int>(s, "implicit_sweeps", c.implicit_sweeps);
        c.max_iterations = get_or<int>(s, "max_iterations", c.max_iterations);
        c.tolerance = get_or<double>(s, "tolerance", c.tolerance);
        c.cauchy_tol = get_or<double>(s, "cauchy_tol", c.cauchy_tol);
        c.discount_rate = get_or<double>(s, "discount_rate", c.discount_rate);
        check(c.basis_degree >= 0 && c.basis_degree <= 10, "solver.basis_degree in [0, 10]");
        check(c.implicit_sweeps >= 0 && c.implicit_sweeps <= 8, "solver.implicit_sweeps in [0, 8]");
        check(c.max_iterations >= 1 && c.max_iterations <= 500,
              "solver.max_iterations in [1, 500]");
        check(c.tolerance >= 0.0, "solver.tolerance must be nonnegative");
        check(c.cauchy_tol > 0.0, "solver.cauchy_tol must be positive");
        check(c.discount_rate >= 0.0, "solver.discount_rate must be nonnegative");
    }

    if (j.contains("mc")) {
        const auto& m = j.at("mc");
        expect_keys(m, "mc", {"particles", "replicas", "seed", "workers"});
        c.particles = get_or<std::size_t>(m, "particles", c.particles);
        c.replicas = get_or<int>(m, "replicas", c.replicas);
        c.seed = get_or<std::uint64_t>(m, "seed", c.seed);
        c.workers = get_or<unsigned>(m, "workers", c.workers);
        check(c.particles >= 1 && c.particles <= 1000000, "mc.particles in [1, 1e6]");
        check(c.replicas >= 1 && c.replicas <= 100000, "mc.replicas in [1, 1e5]");
        check(c.workers >= 1 && c.workers <= 256, "mc.workers in [1, 256]");
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        expect_keys(o, "output", {"directory", "formats"});
        c.output_directory = get_or<std::string>(o, "directory", c.output_directory);
        if (o.contains("formats")) {
            c.write_json = false;
            c.write_csv = false;
            for (const auto& f : o.at("formats")) {
                const auto s = f.get<std::string>();
                if (s == "json") c.write_json = true;
                else if (s == "csv") c.write_csv = true;
                else throw ConfigError("config: unknown output format '" + s + "'");
            }
        }
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json_text() const {
    ordered_json j;
    j["pipeline"] = pipeline;
    j["problem"]["id"] = problem_id;
    if (!problem_params.empty()) {
        for (const auto& [k, v] : problem_params) j["problem"]["params"][k] = v;
    }
    j["space"]["dimension"] = dimension;
    j["space"]["weight_exponent"] = weight_exponent;
    j["space"]["moment_exponent"] = moment_exponent;
    if (noise_modes > 0) {
        j["noise"]["modes"] = noise_modes;
        j["noise"]["lambdas"] = lambdas;
    }
    j["grid"]["dt"] = dt;
    j["grid"]["horizon"] = horizon;
    j["grid"]["rung_step"] = rung_step;
    j["grid"]["max_rungs"] = max_rungs;
    j["grid"]["anchor"] = anchor;
    j["grid"]["t_list"] = t_list;
    j["grid"]["span"] = span;
    j["solver"]["basis_degree"] = basis_degree;
    j["solver"]["implicit_sweeps"] = implicit_sweeps;
    j["solver"]["max_iterations"] = max_iterations;
    j["solver"]["tolerance"] = tolerance;
    j["solver"]["cauchy_tol"] = cauchy_tol;
    j["solver"]["discount_rate"] = discount_rate;
    j["mc"]["particles"] = particles;
    j["mc"]["replicas"] = replicas;
    j["mc"]["seed"] = seed;
    j["mc"]["workers"] = workers;
    j["output"]["directory"] = output_directory;
    std::vector<std::string> formats;
    if (write_json) formats.push_back("json");
    if (write_csv) formats.push_back("csv");
    j["output"]["formats"] = formats;
    return j.dump(2);
}

double ExperimentConfig::resolved_span() const {
    if (span > 0.0) return span;
    const double depth = rung_step * static_cast<double>(max_rungs);
    return 2.0 * anchor + depth + 1.0;
}

double ExperimentConfig::resolved_horizon() const {
    if (horizon > 0.0) return horizon;
    return bank_entry(problem_id).default_horizon;
}

}  // namespace bdsde
