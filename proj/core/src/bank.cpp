#include "bdsde/bank.hpp"

#include <cmath>
#include <stdexcept>

namespace bdsde {

namespace {

std::map<std::string, double> merge_params(const BankEntry& entry,
                                           const std::map<std::string, double>& overrides) {
    auto out = entry.default_params;
    for (const auto& [k, v] : overrides) {
        if (out.find(k) == out.end()) {
            throw std::invalid_argument("bank problem '" + entry.id + "': unknown parameter '" +
                                        k + "'");
        }
        out[k] = v;
    }
    return out;
}

BDSDEProblem::Driver zero_driver() {
    return [](double, std::span<const double>, double, std::span<const double>) { return 0.0; };
}

}  // namespace

const std::vector<BankEntry>& bank_entries() {
    static const std::vector<BankEntry> entries = [] {
        std::vector<BankEntry> v;
        v.push_back({"zero",
                     "contracting generator f = -y with zero data, noise, and flow",
                     "Y = 0, Z = 0, every residual and statistic is exactly zero",
                     true, true, ForwardStepper::Pointwise, {}, 1.0});
        v.push_back({"constant_drift_f",
                     "constant generator f = c with constant forward drift",
                     "Y_s = c (T - s), exact on the grid by telescoping",
                     true, false, std::nullopt,
                     {{"c", 1.0}}, 2.0});
        v.push_back({"monotone_ode",
                     "monotone scalar generator f = -mu y + c, no noise coefficient",
                     "backward ODE y' = mu y - c with y(T) = 0: Y_s = (c/mu)(1 - e^{-mu (T-s)})",
                     true, true, ForwardStepper::Pointwise,
                     {{"mu", 1.0}, {"c", 1.0}}, 2.0});
        v.push_back({"ou_additive",
                     "monotone generator f = -mu y + c with constant additive noise beta",
                     "v_t = c/mu + beta int_{-inf}^t e^{-mu(t-r)} dB_r, stationary law "
                     "N(c/mu, beta^2/(2 mu))",
                     true, true, ForwardStepper::Pointwise,
                     {{"mu", 1.0}, {"c", 1.0}, {"beta", 0.5}}, 4.0});
        v.push_back({"heat_bump",
                     "pure heat flow of a Gaussian bump terminal condition",
                     "u(t,x) = w/sqrt(w^2 + T - t) exp(-x^2 / (2(w^2 + T - t)))",
                     true, false, ForwardStepper::HeatAdditive,
                     {{"width", 1.0}}, 0.5});
        v.push_back({"linear_g",
                     "linear noise coefficient in y and z over an OU forward flow; "
                     "contraction stress problem with sum alpha_j = 0.3",
                     "",
                     false, false, std::nullopt,
                     {{"cy", 0.3}, {"az", 0.3}}, 1.0});
        v.push_back({"linear_gy",
                     "scalar linear noise coefficient in y only, linear terminal data, "
                     "zero forward flow",
                     "per particle: Y_s = x exp((-1 - g^2/2)(T-s) + g (Bhat_s - Bhat_T))",
                     true, false, ForwardStepper::Pointwise,
                     {{"gy", 0.2}}, 1.0});
        return v;
    }();
    return entries;
}

const BankEntry& bank_entry(const std::string& id) {
    for (const auto& e : bank_entries()) {
        if (e.id == id) return e;
    }
    throw std::invalid_argument("unknown bank problem '" + id + "'");
}

BDSDEProblem make_bank_problem(const std::string& id,
                               const std::map<std::string, double>& overrides, int dimension) {
    const BankEntry& entry = bank_entry(id);
    const auto pr = merge_params(entry, overrides);
    BDSDEProblem p;
    p.noise.forward_dimension = dimension;
    p.horizon.terminal_time = entry.default_horizon;

    if (id == "zero") {
        p.terminal = nullptr;
        // f(0) = 0 keeps the solution identically zero in exact arithmetic
        // while the strict monotonicity margin stays available
        p.drift_f = [](double, std::span<const double>, double y, std::span<const double>) {
            return -y;
        };
        p.noise_g = {zero_driver()};
        p.noise.modes = 1;
        p.noise.lambdas = {1.0};
        p.y_lipschitz = {0.0};
        p.z_gain = {0.0};
        p.x_gain = {0.0};
        p.monotonicity = -1.0;
        p.growth_bound = 1.0;
        p.diffusion = make_diffusion("zero", dimension);
        p.horizon.infinite = true;
    } else if (id == "constant_drift_f") {
        const double c = pr.at("c");
        p.terminal = nullptr;
        p.drift_f = [c](double, std::span<const double>, double, std::span<const double>) {
            return c;
        };
        p.noise_g = {zero_driver()};
        p.noise.modes = 1;
        p.noise.lambdas = {1.0};
        p.y_lipschitz = {0.0};
        p.z_gain = {0.0};
        p.x_gain = {0.0};
        p.monotonicity = 0.0;
        p.growth_bound = std::abs(c);
        p.diffusion = make_diffusion("constant_drift", dimension);
    } else if (id == "monotone_ode" || id == "ou_additive") {
        const double mu = pr.at("mu");
        const double c = pr.at("c");
        p.terminal = nullptr;
        p.drift_f = [mu, c](double, std::span<const double>, double y, std::span<const double>) {
            return -mu * y + c;
        };
        if (id == "ou_additive") {
            const double beta = pr.at("beta");
            p.noise_g = {[beta](double, std::span<const double>, double,
                                std::span<const double>) { return beta; }};
        } else {
            p.noise_g = {zero_driver()};
        }
        p.noise.modes = 1;
        p.noise.lambdas = {1.0};
        p.y_lipschitz = {0.0};
        p.z_gain = {0.0};
        p.x_gain = {0.0};
        p.monotonicity = -mu;
        p.growth_bound = std::max(mu, std::abs(c));
        p.diffusion = make_diffusion("zero", dimension);
        p.horizon.infinite = (id == "ou_additive");
    } else if (id == "heat_bump") {
        const double w = pr.at("width");
        p.terminal = [w](std::span<const double> x) {
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            return std::exp(-r2 / (2.0 * w * w));
        };
        p.drift_f = zero_driver();
        p.noise_g = {zero_driver()};
        p.noise.modes = 1;
        p.noise.lambdas = {1.0};
        p.y_lipschitz = {0.0};
        p.z_gain = {0.0};
        p.x_gain = {0.0};
        p.monotonicity = 0.0;
        p.growth_bound = 0.0;
        p.diffusion = make_diffusion("ou", dimension);
        // the heat flow keeps the OU sigma but no drift
        p.diffusion.drift = [](std::span<const double>, std::span<double> out) {
            for (auto& v : out) v = 0.0;
        };
        p.diffusion.lipschitz = 0.0;
    } else if (id == "linear_g") {
        const double cy = pr.at("cy");  // C_1, the squared y gain of mode 1
        const double az = pr.at("az");  // alpha_2, the squared z gain of mode 2
        const double sy = std::sqrt(cy);
        const double sz = std::sqrt(az);
        p.terminal = [](std::span<const double> x) {
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            return std::exp(-0.5 * r2);
        };
        p.drift_f = [](double, std::span<const double>, double y, std::span<const double>) {
            return -y;
        };
        p.noise_g = {
            [sy](double, std::span<const double>, double y, std::span<const double>) {
                return sy * y;
            },
            [sz](double, std::span<const double>, double, std::span<const double> z) {
                return sz * z[0];
            }};
        p.noise.modes = 2;
        p.noise.lambdas = {1.0, 1.0};
        p.y_lipschitz = {cy, 0.0};
        p.z_gain = {0.0, az};
        p.x_gain = {0.0, 0.0};
        p.monotonicity = -1.0;
        p.growth_bound = 1.0;
        p.diffusion = make_diffusion("ou", dimension);
    } else if (id == "linear_gy") {
        const double gy = pr.at("gy");
        // linear terminal keeps the field inside the regression span, so the
        // closed-form comparison sees time discretization error only
        p.terminal = [](std::span<const double> x) { return x[0]; };
        p.drift_f = [](double, std::span<const double>, double y, std::span<const double>) {
            return -y;
        };
        p.noise_g = {[gy](double, std::span<const double>, double y, std::span<const double>) {
            return gy * y;
        }};
        p.noise.modes = 1;
        p.noise.lambdas = {1.0};
        p.y_lipschitz = {gy * gy};
        p.z_gain = {0.0};
        p.x_gain = {0.0};
        p.monotonicity = -1.0;
        p.growth_bound = 1.0;
        p.diffusion = make_diffusion("zero", dimension);
    } else {
        throw std::invalid_argument("unknown bank problem '" + id + "'");
    }
    return p;
}

}  // namespace bdsde
