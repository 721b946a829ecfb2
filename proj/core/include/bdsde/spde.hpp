#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bdsde/solver.hpp"

namespace bdsde {

/// The solution field of the parabolic equation at one time, sampled on the
/// reference cloud: u values and, when available, the diffusion-weighted
/// gradient taken from the Z component.
struct FieldSnapshot {
    double time = 0.0;
    std::vector<double> u;         // per cloud particle
    std::vector<double> sigma_grad_u;  // per particle, d components, may be empty
};

/// Smooth compactly supported test function: the standard mollifier bump
/// exp(1 - 1/(1 - r^2)) with r = |x - center| / width, zero outside.
struct TestFunction {
    std::vector<double> center;
    double width = 1.0;

    double operator()(std::span<const double> x) const;
    void gradient(std::span<const double> x, std::span<double> out) const;
    double support_radius() const { return width; }
};

/// Bookkeeping extraction of the field at the solution's start node: u values
/// are the stored Y values, the gradient values are the stored Z values.
/// Throws std::invalid_argument when t is not the configured start node.
FieldSnapshot extract_field(const BackwardSolution& solution, double t);

struct WeakResidual {
    double mass_start = 0.0;       // int u(t, x) phi(x) dx
    double mass_terminal = 0.0;    // int u(T, x) phi(x) dx
    double gradient_term = 0.0;    // 1/2 int int (s* grad u)(s* grad phi)
    double divergence_term = 0.0;  // int int u div((b - A~) phi)
    double drift_term = 0.0;       // int int f(x, u, s* grad u) phi
    double noise_term = 0.0;       // sum_j int [int g_j phi dx] d+ beta_j
    double residual = 0.0;         // |identity defect|
    double normalizer = 0.0;       // largest single term magnitude
    double relative = 0.0;
};

struct ResidualOptions {
    int quadrature_points = 96;   // per axis, over the support box of phi
    std::size_t node_stride = 1;  // subsample time nodes of the Lebesgue terms
    double support_padding = 0.0; // widen the integration box beyond the support
};

/// Space-time weak-form identity defect of the solver output against one test
/// function. Spatial integrals are Gauss-Legendre over the support of phi
/// (the integrands vanish outside), time integrals are trapezoidal, and the
/// stochastic term uses the right-endpoint backward sum. Interpolants are the
/// solver's per-node regression polynomials; the terminal field is the exact
/// terminal data.
WeakResidual weak_residual(const BackwardSolution& solution, const BDSDEProblem& problem,
                           const TestFunction& phi, const TwoSidedPath& b_hat,
                           const ResidualOptions& options = {});

struct GradientCheck {
    double discrepancy = 0.0;  // time-RMS of the weighted L2 mismatch
    double magnitude = 0.0;    // same norm of the reference gradient field
    double relative = 0.0;
};

/// Compares the solver's Z values against sigma^T times the finite-difference
/// gradient of the u interpolant along the particle paths, in the weighted
/// Monte Carlo norm, averaged over interior time nodes.
GradientCheck gradient_representation_check(const BackwardSolution& solution,
                                            const ParticleEnsemble& ensemble,
                                            const BDSDEProblem& problem,
                                            const WeightedSpace& space);

}  // namespace bdsde
