#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bdsde {

/// Truncated cylindrical Brownian driver: n independent scalar modes with
/// intensities lambda_j. Mode j of the path is sqrt(lambda_j) beta_j for a
/// standard two-sided Brownian motion beta_j.
struct NoiseModel {
    int modes = 1;
    std::vector<double> lambdas;  // size modes, all >= 0
    int forward_dimension = 1;    // dimension of the independent forward driver W

    void validate() const;
};

/// Piecewise-linear sample path of a multi-mode Brownian driver on a uniform
/// grid. Immutable after generation; reversal and shift return new paths by
/// exact re-indexing, never by resampling.
class TwoSidedPath {
public:
    TwoSidedPath(double t_start, double dt, std::size_t n_nodes, int modes);

    double t_start() const { return t_start_; }
    double t_end() const { return t_start_ + dt_ * static_cast<double>(n_nodes_ - 1); }
    double dt() const { return dt_; }
    std::size_t n_nodes() const { return n_nodes_; }
    int modes() const { return modes_; }

    /// Grid index of a time; throws std::out_of_range if t is not a grid node
    /// inside the span.
    std::size_t index_of(double t) const;

    double value_at(int mode, std::size_t node) const {
        return values_[static_cast<std::size_t>(mode) * n_nodes_ + node];
    }
    double value(int mode, double t) const { return value_at(mode, index_of(t)); }
    double increment(int mode, std::size_t node) const {
        return value_at(mode, node + 1) - value_at(mode, node);
    }

    double& slot(int mode, std::size_t node) {
        return values_[static_cast<std::size_t>(mode) * n_nodes_ + node];
    }

    /// Largest absolute path value, used to scale exactness checks.
    double sup_norm() const;

private:
    double t_start_;
    double dt_;
    std::size_t n_nodes_;
    int modes_;
    std::vector<double> values_;
};

/// Grid-aligned shift offset r for the shift family theta_hat.
struct ShiftOp {
    double offset = 0.0;
};

struct DriverPaths {
    TwoSidedPath w;      // forward driver, unit intensity per component
    TwoSidedPath b_hat;  // backward driver modes, intensity lambda_j
};

/// Samples the forward driver W (d components) and the backward driver modes
/// on the symmetric grid [-span, span], both anchored at 0 at time 0.
/// Increments come from counter-based substreams keyed by
/// (seed, path_id, mode, interval), so generation order is irrelevant.
DriverPaths sample_paths(const NoiseModel& model, double span, double dt,
                         std::uint64_t seed, std::uint64_t path_id = 0);

/// time reversal about t_prime: out(s) = in(t_prime - s) - in(t_prime)
TwoSidedPath time_reverse(const TwoSidedPath& path, double t_prime);

/// shift: out(s) = in(s + r) - in(r); r must be grid-aligned
TwoSidedPath shift(const TwoSidedPath& path, const ShiftOp& op);

/// Backward Ito sum with right-endpoint evaluation:
///   sum_i h(t_{i+1}) (B(t_{i+1}) - B(t_i)) over [s, t].
/// h holds one value per grid node of [s, t] inclusive.
double backward_integral(std::span<const double> h, const TwoSidedPath& path, int mode,
                         double s, double t);

/// Forward Ito sum with left-endpoint evaluation over [s, t].
double forward_integral(std::span<const double> h, const TwoSidedPath& path, int mode,
                        double s, double t);

}  // namespace bdsde
