#include "bdsde/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "bdsde/rng.hpp"

namespace bdsde {

void NoiseModel::validate() const {
    if (modes < 1) throw std::invalid_argument("NoiseModel: mode count must be >= 1");
    if (lambdas.size() != static_cast<std::size_t>(modes)) {
        throw std::invalid_argument("NoiseModel: lambda list must have one entry per mode");
    }
    for (double l : lambdas) {
        if (!(l >= 0.0)) throw std::invalid_argument("NoiseModel: lambdas must be nonnegative");
    }
    if (forward_dimension < 1) {
        throw std::invalid_argument("NoiseModel: forward driver dimension must be >= 1");
    }
}

TwoSidedPath::TwoSidedPath(double t_start, double dt, std::size_t n_nodes, int modes)
    : t_start_(t_start), dt_(dt), n_nodes_(n_nodes), modes_(modes),
      values_(n_nodes * static_cast<std::size_t>(modes), 0.0) {
    if (!(dt > 0.0)) throw std::invalid_argument("TwoSidedPath: dt must be positive");
    if (n_nodes < 2) throw std::invalid_argument("TwoSidedPath: need at least two nodes");
    if (modes < 1) throw std::invalid_argument("TwoSidedPath: need at least one mode");
}

std::size_t TwoSidedPath::index_of(double t) const {
    const double x = (t - t_start_) / dt_;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9) {
        throw std::out_of_range("TwoSidedPath: time is not grid-aligned");
    }
    if (r < -0.5 || r > static_cast<double>(n_nodes_ - 1) + 0.5) {
        throw std::out_of_range("TwoSidedPath: time outside the path span");
    }
    return static_cast<std::size_t>(r);
}

double TwoSidedPath::sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

DriverPaths sample_paths(const NoiseModel& model, double span, double dt,
                         std::uint64_t seed, std::uint64_t path_id) {
    model.validate();
    if (!(span > 0.0)) throw std::invalid_argument("sample_paths: span must be positive");
    const auto half = static_cast<std::size_t>(std::llround(span / dt));
    if (std::abs(half * dt - span) > 1e-9 * std::max(1.0, span)) {
        throw std::invalid_argument("sample_paths: span must be a multiple of dt");
    }
    const std::size_t n_nodes = 2 * half + 1;
    const double t_start = -span;
    const std::size_t anchor = half;  // node at time 0

    auto fill = [&](TwoSidedPath& path, std::uint64_t stream, int mode, double intensity) {
        // cumulative sums outward from the anchor keep B(0) = 0 exact
        path.slot(mode, anchor) = 0.0;
        const double scale = std::sqrt(intensity * dt);
        for (std::size_t i = anchor; i + 1 < n_nodes; ++i) {
            const double inc =
                scale * rng::normal(seed, stream, path_id, static_cast<std::uint64_t>(mode), i);
            path.slot(mode, i + 1) = path.value_at(mode, i) + inc;
        }
        for (std::size_t i = anchor; i > 0; --i) {
            const double inc = scale * rng::normal(seed, stream, path_id,
                                                   static_cast<std::uint64_t>(mode), i - 1);
            path.slot(mode, i - 1) = path.value_at(mode, i) - inc;
        }
    };

    DriverPaths out{TwoSidedPath(t_start, dt, n_nodes, model.forward_dimension),
                    TwoSidedPath(t_start, dt, n_nodes, model.modes)};
    for (int c = 0; c < model.forward_dimension; ++c) {
        fill(out.w, rng::kForwardDriver, c, 1.0);
    }
    for (int j = 0; j < model.modes; ++j) {
        fill(out.b_hat, rng::kBackwardDriver, j, model.lambdas[static_cast<std::size_t>(j)]);
    }
    return out;
}

TwoSidedPath time_reverse(const TwoSidedPath& path, double t_prime) {
    const std::size_t anchor = path.index_of(t_prime);
    const std::size_t n = path.n_nodes();
    TwoSidedPath out(t_prime - path.t_end(), path.dt(), n, path.modes());
    for (int m = 0; m < path.modes(); ++m) {
        const double pivot = path.value_at(m, anchor);
        for (std::size_t i = 0; i < n; ++i) {
            // out node i is time t_prime - path.t_end() + i dt, which maps to
            // source node (n - 1 - i)
            out.slot(m, i) = path.value_at(m, n - 1 - i) - pivot;
        }
    }
    return out;
}

TwoSidedPath shift(const TwoSidedPath& path, const ShiftOp& op) {
    const double ratio = op.offset / path.dt();
    const auto steps = std::llround(ratio);
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-9) {
        throw std::out_of_range("shift: offset must be a multiple of dt");
    }
    const std::size_t pivot = path.index_of(op.offset);
    const std::size_t n = path.n_nodes();
    TwoSidedPath out(path.t_start() - op.offset, path.dt(), n, path.modes());
    for (int m = 0; m < path.modes(); ++m) {
        const double base = path.value_at(m, pivot);
        for (std::size_t i = 0; i < n; ++i) {
            // out(s) = in(s + r) - in(r); nodes beyond the source span are
            // clamped out by construction: out covers [t_lo - r, t_hi - r] and
            // source node i is reused directly
            out.slot(m, i) = path.value_at(m, i) - base;
        }
    }
    return out;
}

double backward_integral(std::span<const double> h, const TwoSidedPath& path, int mode,
                         double s, double t) {
    const std::size_t i0 = path.index_of(s);
    const std::size_t i1 = path.index_of(t);
    if (i1 < i0) throw std::invalid_argument("backward_integral: need s <= t");
    if (h.size() != i1 - i0 + 1) {
        throw std::invalid_argument("backward_integral: integrand size does not match the window");
    }
    double acc = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
        acc += h[i + 1 - i0] * (path.value_at(mode, i + 1) - path.value_at(mode, i));
    }
    return acc;
}

double forward_integral(std::span<const double> h, const TwoSidedPath& path, int mode,
                        double s, double t) {
    const std::size_t i0 = path.index_of(s);
    const std::size_t i1 = path.index_of(t);
    if (i1 < i0) throw std::invalid_argument("forward_integral: need s <= t");
    if (h.size() != i1 - i0 + 1) {
        throw std::invalid_argument("forward_integral: integrand size does not match the window");
    }
    double acc = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
        acc += h[i - i0] * (path.value_at(mode, i + 1) - path.value_at(mode, i));
    }
    return acc;
}

}  // namespace bdsde
