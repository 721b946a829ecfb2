#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bdsde {

/// Weighted L^2 space over R^d with weight rho(x) = (1+|x|)^q.
///
/// All spatial integrals in the library are taken against rho^{-1}(x) dx and
/// realized by importance sampling from the normalized density rho^{-1}/Z_rho.
class WeightedSpace {
public:
    /// Throws std::invalid_argument unless q > 3 and p in (2, q-1), and
    /// std::runtime_error if the normalizer cannot be computed (d > 2).
    WeightedSpace(int dimension, double q, double p);

    int dimension() const { return d_; }
    double weight_exponent() const { return q_; }
    double moment_exponent() const { return p_; }

    /// Z_rho = int rho^{-1}(x) dx, fixed at construction by adaptive quadrature.
    double normalizer() const { return z_rho_; }

    /// rho(x) = (1 + |x|)^q
    double weight(std::span<const double> x) const;

private:
    int d_;
    double q_;
    double p_;
    double z_rho_;
};

/// Particle cloud distributed as rho^{-1}/Z_rho, the reference measure for
/// every Monte Carlo spatial integral. Immutable after construction.
struct ReferenceCloud {
    int dimension = 1;
    std::size_t size = 0;
    std::vector<double> points;   // flat, size * dimension
    std::vector<double> weights;  // sum to 1 (uniform here)
    std::uint64_t seed = 0;

    std::span<const double> point(std::size_t i) const {
        return {points.data() + i * static_cast<std::size_t>(dimension),
                static_cast<std::size_t>(dimension)};
    }
};

/// i.i.d. draws from rho^{-1}/Z_rho; deterministic in (seed, count, space).
/// d = 1 uses exact inverse-CDF sampling, d = 2 inverts the radial CDF by
/// Newton iteration with a uniform angle.
ReferenceCloud sample_reference_cloud(std::size_t count, const WeightedSpace& space,
                                      std::uint64_t seed);

/// Monte Carlo estimate of ||field||_{L^2_rho} = sqrt(Z_rho * sum_i w_i field_i^2).
/// Throws std::invalid_argument if the field length differs from the cloud size.
double weighted_l2_norm(std::span<const double> field, const ReferenceCloud& cloud,
                        const WeightedSpace& space);

/// Discount rate and time grid for the exponentially discounted process norms.
struct DiscountedNormSpec {
    double discount_rate = 0.0;     // K > 0
    std::vector<double> grid;       // strictly increasing node times

    DiscountedNormSpec(double k, std::vector<double> nodes);
};

struct DiscountedNormResult {
    double value = 0.0;
    bool diverging = false;  // per-unit-time increments stopped decreasing
};

/// Trapezoidal integral of e^{-K s} ||phi(s)||^2_{L^2_rho} over the grid, the
/// finite-horizon surrogate of the squared M^{2,-K} seminorm. The process is
/// given as one field per grid node.
DiscountedNormResult discounted_l2_process_norm(
    const std::vector<std::vector<double>>& process, const DiscountedNormSpec& spec,
    const ReferenceCloud& cloud, const WeightedSpace& space);

/// max over grid nodes of e^{-K s} ||psi(s)||^2_{L^2_rho}
double discounted_sup_norm(const std::vector<std::vector<double>>& process,
                           const DiscountedNormSpec& spec, const ReferenceCloud& cloud,
                           const WeightedSpace& space);

}  // namespace bdsde
