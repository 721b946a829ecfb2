#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bdsde/forward.hpp"
#include "bdsde/noise.hpp"

namespace bdsde {

/// Horizon of a backward problem: a finite terminal time, or an infinite
/// horizon handled through a discount rate and the horizon ladder.
struct HorizonSpec {
    bool infinite = false;
    double terminal_time = 1.0;   // finite case
    double discount_rate = 0.0;   // K > 0; 0 requests the default choice
};

/// Backward doubly stochastic problem data: terminal map h, drift f, noise
/// coefficients g_j, and the structural constants the solvability conditions
/// are stated with. The g_j enter the dynamics against the driver modes of
/// intensity lambda_j, so the weak-Lipschitz constants describe the effective
/// coefficients sqrt(lambda_j) g_j.
struct BDSDEProblem {
    using Terminal = std::function<double(std::span<const double>)>;
    using Driver = std::function<double(double, std::span<const double>, double,
                                        std::span<const double>)>;

    Terminal terminal;               // h(x)
    Driver drift_f;                  // f(r, x, y, z)
    std::vector<Driver> noise_g;     // g_j(r, x, y, z), one per mode

    // structural constants
    double monotonicity = 0.0;       // mu: (y1-y2)(f(y1)-f(y2)) <= mu (y1-y2)^2
    double z_lipschitz = 0.0;        // C: f against z
    std::vector<double> y_lipschitz; // C_j: g_j against y
    std::vector<double> z_gain;      // alpha_j: g_j against z
    std::vector<double> x_gain;      // M_j: g_j against x
    double x_lipschitz = 0.0;        // M: f against x
    double growth_bound = 0.0;       // M_0: |f| <= M_0 (1 + |y| + |z|)

    DiffusionConfig diffusion;
    NoiseModel noise;
    HorizonSpec horizon;

    double sum_alpha() const;
    double sum_cj() const;

    /// effective mode coefficient sqrt(lambda_j) g_j(r, x, y, z)
    double eval_g(int j, double r, std::span<const double> x, double y,
                  std::span<const double> z) const;
    double eval_f(double r, std::span<const double> x, double y,
                  std::span<const double> z) const;
    double eval_h(std::span<const double> x) const;
};

/// Quadratic with linear tails: x^2 on [-cap, cap), continued with matching
/// value and slope outside. C^1, second derivative supported on the core.
double clamped_square(double x, double cap);
double clamped_square_prime(double x, double cap);

/// x^{p/2} on [0, cap), continued linearly with matching value and slope.
/// Requires cap > 0, p > 2, x >= 0; throws std::domain_error for x < 0.
double clamped_power(double x, double cap, double p);
double clamped_power_prime(double x, double cap, double p);

}  // namespace bdsde
