#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "bdsde/forward.hpp"
#include "bdsde/noise.hpp"
#include "bdsde/problem.hpp"
#include "bdsde/weighted_space.hpp"

namespace bdsde {

/// Polynomial regression basis of total degree <= degree in the scaled
/// coordinates x / scale, for d in {1, 2}.
class PolyBasis {
public:
    PolyBasis(int dimension, int degree, double scale);

    int dimension() const { return d_; }
    int degree() const { return degree_; }
    double scale() const { return scale_; }
    std::size_t size() const { return powers_.size(); }

    void eval(std::span<const double> x, std::span<double> out) const;
    double eval_combination(std::span<const double> coef, std::span<const double> x) const;

private:
    int d_;
    int degree_;
    double scale_;
    std::vector<std::array<int, 2>> powers_;
};

/// One least-squares conditional-expectation operator per time node: the
/// normal matrix of the design at the node's particle positions, factored
/// once and reused for every right-hand side. Falls back to a lower degree
/// when the system is numerically singular, recording a warning.
class NodeRegression {
public:
    NodeRegression(const PolyBasis& basis, const class ParticleEnsemble& ensemble,
                   std::size_t node);

    /// coefficients of the least-squares fit of the targets
    std::vector<double> fit(std::span<const double> targets) const;
    /// fitted values at the node's own particle positions
    void fitted_values(std::span<const double> coef, std::span<double> out) const;

    const PolyBasis& basis() const { return *basis_; }
    bool degraded() const { return degraded_; }

private:
    std::shared_ptr<PolyBasis> basis_;
    const ParticleEnsemble* ensemble_;
    std::size_t node_;
    std::vector<double> chol_;  // p x p Cholesky factor of the normal matrix
    bool degraded_ = false;

    void factor();
};

struct ContractionDiagnostics {
    std::vector<double> difference_norms;  // per outer iteration
    std::vector<double> ratios;            // difference_norms[i] / [i-1]
    double weight_rate = 0.0;              // exponential weight rate of the norm
    double y_weight = 0.0;                 // relative weight of the Y part
    int iterations = 0;
    bool converged = false;
};

/// Discrete backward solution: per-node per-particle Y and Z values plus the
/// per-node regression coefficient records that double as interpolants.
struct BackwardSolution {
    std::vector<double> times;           // grid nodes, size N+1
    std::size_t particles = 0;
    int dimension = 1;
    std::vector<double> y;               // (N+1) * M
    std::vector<double> z;               // (N+1) * M * d
    std::vector<std::vector<double>> y_coef;               // per node
    std::vector<std::vector<std::vector<double>>> z_coef;  // per node, per component
    int basis_degree = 0;
    double basis_scale = 1.0;
    int regression_warnings = 0;
    ContractionDiagnostics picard;

    double y_at(std::size_t k, std::size_t i) const { return y[k * particles + i]; }
    double z_at(std::size_t k, std::size_t i, int c) const {
        return z[(k * particles + i) * static_cast<std::size_t>(dimension) +
                 static_cast<std::size_t>(c)];
    }
    std::size_t n_nodes() const { return times.empty() ? 0 : times.size(); }
};

struct SolverOptions {
    int basis_degree = 3;
    int implicit_sweeps = 2;
    int max_iterations = 40;
    /// Picard stopping tolerance on the weighted difference norm; 0 runs a
    /// fixed iteration budget with no convergence requirement.
    double tolerance = 1e-9;
    unsigned workers = 1;
};

class PicardDivergence : public std::runtime_error {
public:
    PicardDivergence(const std::string& what, ContractionDiagnostics diag)
        : std::runtime_error(what), diagnostics(std::move(diag)) {}
    ContractionDiagnostics diagnostics;
};

/// Frozen noise-coefficient values: mode j at node k, particle i.
using FrozenG = std::function<double(int j, std::size_t k, std::size_t i)>;

/// One backward least-squares pass for the equation with frozen noise term.
/// Node step, from the terminal condition Y_N = h(X_N):
///   Z_k   = (1/dt) Regress[(Y_{k+1} - E[Y_{k+1}|X_k]) dW_k | X_k]
///   Y_k^0 = Regress[Y_{k+1} + f(t_{k+1}, X_{k+1}, Y_{k+1}, Z_k) dt
///                   - sum_j G_j(k+1) dB_j | X_k]
///   Y_k   = fixed-point sweeps of  Y_k <- E_k + f(t_k, X_k, Y_k, Z_k) dt
/// where E_k is the regressed part without the drift and dB_j are the
/// right-endpoint driver increments. The conditional-mean control variate in
/// the Z target removes the O(1/sqrt(dt)) noise without changing the
/// estimated conditional expectation.
BackwardSolution backward_lsmc_recursion(
    const BDSDEProblem& problem, const class ParticleEnsemble& ensemble,
    const TwoSidedPath& b_hat, const FrozenG& frozen_g, std::size_t n_steps,
    const WeightedSpace& space, const SolverOptions& options,
    std::vector<NodeRegression>* regression_cache = nullptr);

/// Outer fixed-point iteration over the frozen noise coefficient: starts from
/// the zero pair, freezes g at the previous iterate, solves the linearized
/// equation, and stops when the exponentially weighted difference norm of
/// successive iterates falls below tolerance. The weight rate is
/// 2 mu + 2C + sum C_j / (2 sum alpha_j), or 2|mu| + 2C + 1 when the noise
/// coefficient does not touch z.
BackwardSolution picard_solve(const BDSDEProblem& problem, const ParticleEnsemble& ensemble,
                              const TwoSidedPath& b_hat, const WeightedSpace& space,
                              const SolverOptions& options,
                              std::vector<NodeRegression>* regression_cache = nullptr,
                              std::size_t n_steps_override = 0);

}  // namespace bdsde
