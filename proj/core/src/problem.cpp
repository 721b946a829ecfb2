#include "bdsde/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace bdsde {

double BDSDEProblem::sum_alpha() const {
    double s = 0.0;
    for (double a : z_gain) s += a;
    return s;
}

double BDSDEProblem::sum_cj() const {
    double s = 0.0;
    for (double c : y_lipschitz) s += c;
    return s;
}

double BDSDEProblem::eval_g(int j, double r, std::span<const double> x, double y,
                            std::span<const double> z) const {
    const double lam = noise.lambdas[static_cast<std::size_t>(j)];
    if (lam == 0.0) return 0.0;
    return std::sqrt(lam) * noise_g[static_cast<std::size_t>(j)](r, x, y, z);
}

double BDSDEProblem::eval_f(double r, std::span<const double> x, double y,
                            std::span<const double> z) const {
    return drift_f(r, x, y, z);
}

double BDSDEProblem::eval_h(std::span<const double> x) const {
    return terminal ? terminal(x) : 0.0;
}

double clamped_square(double x, double cap) {
    if (!(cap > 0.0)) throw std::invalid_argument("clamped_square: cap must be positive");
    if (x >= cap) return cap * (2.0 * x - cap);
    if (x < -cap) return -cap * (2.0 * x + cap);
    return x * x;
}

double clamped_square_prime(double x, double cap) {
    if (!(cap > 0.0)) throw std::invalid_argument("clamped_square: cap must be positive");
    if (x >= cap) return 2.0 * cap;
    if (x < -cap) return -2.0 * cap;
    return 2.0 * x;
}

double clamped_power(double x, double cap, double p) {
    if (!(cap > 0.0) || !(p > 2.0)) {
        throw std::invalid_argument("clamped_power: need cap > 0 and p > 2");
    }
    if (x < 0.0) throw std::domain_error("clamped_power: argument must be nonnegative");
    if (x >= cap) {
        return std::pow(cap, 0.5 * (p - 2.0)) * (0.5 * p * x - 0.5 * (p - 2.0) * cap);
    }
    return std::pow(x, 0.5 * p);
}

double clamped_power_prime(double x, double cap, double p) {
    if (!(cap > 0.0) || !(p > 2.0)) {
        throw std::invalid_argument("clamped_power: need cap > 0 and p > 2");
    }
    if (x < 0.0) throw std::domain_error("clamped_power: argument must be nonnegative");
    if (x >= cap) return 0.5 * p * std::pow(cap, 0.5 * (p - 2.0));
    return 0.5 * p * std::pow(x, 0.5 * p - 1.0);
}

}  // namespace bdsde
