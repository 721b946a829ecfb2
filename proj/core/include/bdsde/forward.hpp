#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bdsde/weighted_space.hpp"

namespace bdsde {

/// Drift b : R^d -> R^d and diffusion sigma : R^d -> R^{d x d} (row major),
/// with the user-asserted global Lipschitz constant L. The divergence-type
/// correction vector of the generator is evaluated by central finite
/// differences with step 1e-4 (1 + |x|).
struct DiffusionConfig {
    using VectorField = std::function<void(std::span<const double>, std::span<double>)>;
    using MatrixField = std::function<void(std::span<const double>, std::span<double>)>;

    int dimension = 1;
    VectorField drift;      // b
    MatrixField diffusion;  // sigma, row major d*d
    double lipschitz = 0.0; // user-asserted L for both b and sigma

    void eval_drift(std::span<const double> x, std::span<double> out) const;
    void eval_sigma(std::span<const double> x, std::span<double> out) const;
    /// a = sigma sigma^T
    void eval_a(std::span<const double> x, std::span<double> out) const;
    /// correction vector with components A_j = 1/2 sum_i da_ij/dx_i
    void eval_correction(std::span<const double> x, std::span<double> out) const;

    /// Statistical spot-check of the asserted Lipschitz bound on sampled point
    /// pairs; returns the number of violations.
    int probe_lipschitz(std::uint64_t seed, int n_pairs = 1000, double slack = 1e-7) const;
};

/// Built-in coefficient sets selectable by name: zero, constant_drift, ou,
/// linear_sigma.
DiffusionConfig make_diffusion(const std::string& name, int dimension);

/// Forward particle system on a uniform grid. X is regulated to the start
/// point before the start time. Paths are immutable after simulation; the
/// driving increments are re-derivable from (seed, particle, component, step).
class ParticleEnsemble {
public:
    ParticleEnsemble(double start_time, double dt, std::size_t n_steps,
                     const ReferenceCloud& cloud, std::uint64_t seed,
                     std::int64_t driver_offset = 0);

    double start_time() const { return t0_; }
    double dt() const { return dt_; }
    std::size_t n_steps() const { return n_steps_; }          // intervals
    std::size_t n_nodes() const { return n_steps_ + 1; }
    std::size_t size() const { return m_; }
    int dimension() const { return d_; }
    double node_time(std::size_t k) const { return t0_ + dt_ * static_cast<double>(k); }
    std::uint64_t seed() const { return seed_; }

    /// X at grid node k, particle i; queries before the start return the
    /// start point exactly
    std::span<const double> state(std::size_t k, std::size_t i) const {
        return {x_.data() + (k * m_ + i) * static_cast<std::size_t>(d_),
                static_cast<std::size_t>(d_)};
    }
    /// X at an arbitrary time: regulated to the start point for s < t0
    std::span<const double> state_at_time(double s, std::size_t i) const;

    /// forward driver increment over [t_k, t_{k+1}) for particle i, component c
    double w_increment(std::size_t k, std::size_t i, int c) const;

    std::span<double> mutable_state(std::size_t k, std::size_t i) {
        return {x_.data() + (k * m_ + i) * static_cast<std::size_t>(d_),
                static_cast<std::size_t>(d_)};
    }

private:
    double t0_;
    double dt_;
    std::size_t n_steps_;
    std::size_t m_;
    int d_;
    std::uint64_t seed_;
    std::int64_t driver_offset_;
    std::vector<double> x_;  // (n_steps+1) * m * d
};

/// Euler-Maruyama simulation of the forward flow from the cloud points.
/// Throws std::runtime_error naming the particle on non-finite coefficients.
ParticleEnsemble euler_maruyama(double start_time, const ReferenceCloud& cloud,
                                const DiffusionConfig& config, double dt,
                                std::size_t n_steps, std::uint64_t seed,
                                std::int64_t driver_offset = 0, unsigned workers = 1);

/// Restarts the simulation at an intermediate node with the same increments
/// and returns the largest absolute deviation on [r, T]; zero by construction.
double flow_property_check(const ParticleEnsemble& ensemble, const DiffusionConfig& config,
                           std::size_t restart_node);

struct NormEquivalenceEstimate {
    double pushforward = 0.0;  // E int |phi(X_s^{t,x})| rho^{-1} dx
    double identity = 0.0;     // int |phi(x)| rho^{-1} dx
    double ratio = 0.0;
    double pushforward_se = 0.0;
    double ratio_half_width = 0.0;  // 95% half width on the ratio
};

/// Monte Carlo check of the two-sided comparability of the flow pushforward
/// integral with the identity integral, for nonnegative integrable phi.
NormEquivalenceEstimate equivalence_norm_estimate(
    const std::function<double(std::span<const double>)>& phi, double start_time, double s,
    const ReferenceCloud& cloud, const WeightedSpace& space, const DiffusionConfig& config,
    double dt, int n_paths, std::uint64_t seed, unsigned workers = 1);

}  // namespace bdsde
