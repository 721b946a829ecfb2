#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdsde {

/// Fully resolved experiment description. Parsed from a strict JSON tree:
/// unknown keys anywhere are rejected, every numeric field is range-checked.
struct ExperimentConfig {
    std::string pipeline = "finite";  // finite | infinite | stationarity | full

    std::string problem_id = "zero";
    std::map<std::string, double> problem_params;

    int dimension = 1;
    double weight_exponent = 4.0;
    double moment_exponent = 2.5;

    int noise_modes = 0;  // 0: take the problem's own noise model
    std::vector<double> lambdas;

    double dt = 0.02;
    double horizon = 0.0;  // 0: problem default
    double rung_step = 1.0;
    int max_rungs = 8;
    double anchor = 5.0;   // reversal time for the stationarity pipeline
    std::vector<double> t_list = {0.0, 1.0, 2.0};
    double span = 0.0;     // 0: derived as 2 * anchor + ladder depth

    int basis_degree = 3;
    int implicit_sweeps = 2;
    int max_iterations = 40;
    double tolerance = 1e-9;
    double cauchy_tol = 1e-3;
    double discount_rate = 0.0;  // 0: default admissible rate

    std::size_t particles = 2000;
    int replicas = 64;
    std::uint64_t seed = 20240901;
    unsigned workers = 1;

    std::string output_directory = "out";
    bool write_json = true;
    bool write_csv = true;

    bool force = false;  // downgrade validator failures to warnings

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    std::string to_json_text() const;

    double resolved_span() const;
    double resolved_horizon() const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bdsde
