#include "bdsde/forward.hpp"

#include <cmath>
#include <stdexcept>

#include "bdsde/parallel.hpp"
#include "bdsde/rng.hpp"

namespace bdsde {

namespace {

constexpr int kMaxDim = 2;

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

void DiffusionConfig::eval_drift(std::span<const double> x, std::span<double> out) const {
    drift(x, out);
}

void DiffusionConfig::eval_sigma(std::span<const double> x, std::span<double> out) const {
    diffusion(x, out);
}

void DiffusionConfig::eval_a(std::span<const double> x, std::span<double> out) const {
    const int d = dimension;
    double sg[kMaxDim * kMaxDim];
    eval_sigma(x, {sg, static_cast<std::size_t>(d * d)});
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += sg[i * d + k] * sg[j * d + k];
            out[static_cast<std::size_t>(i * d + j)] = acc;
        }
    }
}

void DiffusionConfig::eval_correction(std::span<const double> x, std::span<double> out) const {
    const int d = dimension;
    const double h = 1e-4 * (1.0 + norm2(x));
    double xp[kMaxDim], xm[kMaxDim];
    double ap[kMaxDim * kMaxDim], am[kMaxDim * kMaxDim];
    for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int c = 0; c < d; ++c) xp[c] = xm[c] = x[static_cast<std::size_t>(c)];
        xp[i] += h;
        xm[i] -= h;
        eval_a({xp, static_cast<std::size_t>(d)}, {ap, static_cast<std::size_t>(d * d)});
        eval_a({xm, static_cast<std::size_t>(d)}, {am, static_cast<std::size_t>(d * d)});
        for (int j = 0; j < d; ++j) {
            out[static_cast<std::size_t>(j)] += 0.5 * (ap[i * d + j] - am[i * d + j]) / (2.0 * h);
        }
    }
}

int DiffusionConfig::probe_lipschitz(std::uint64_t seed, int n_pairs, double slack) const {
    const int d = dimension;
    int violations = 0;
    double x[kMaxDim], y[kMaxDim], bx[kMaxDim], by[kMaxDim];
    double sx[kMaxDim * kMaxDim], sy[kMaxDim * kMaxDim];
    for (int n = 0; n < n_pairs; ++n) {
        for (int c = 0; c < d; ++c) {
            x[c] = 3.0 * rng::normal(seed, rng::kProbe, static_cast<std::uint64_t>(n), 0, c);
            y[c] = 3.0 * rng::normal(seed, rng::kProbe, static_cast<std::uint64_t>(n), 1, c);
        }
        std::span<const double> xs{x, static_cast<std::size_t>(d)};
        std::span<const double> ys{y, static_cast<std::size_t>(d)};
        eval_drift(xs, {bx, static_cast<std::size_t>(d)});
        eval_drift(ys, {by, static_cast<std::size_t>(d)});
        eval_sigma(xs, {sx, static_cast<std::size_t>(d * d)});
        eval_sigma(ys, {sy, static_cast<std::size_t>(d * d)});
        double dxy = 0.0, db = 0.0, ds = 0.0;
        for (int c = 0; c < d; ++c) {
            dxy += (x[c] - y[c]) * (x[c] - y[c]);
            db += (bx[c] - by[c]) * (bx[c] - by[c]);
        }
        for (int c = 0; c < d * d; ++c) ds += (sx[c] - sy[c]) * (sx[c] - sy[c]);
        const double bound = lipschitz * std::sqrt(dxy) + slack;
        if (std::sqrt(db) > bound || std::sqrt(ds) > bound) ++violations;
    }
    return violations;
}

DiffusionConfig make_diffusion(const std::string& name, int dimension) {
    if (dimension < 1 || dimension > kMaxDim) {
        throw std::invalid_argument("make_diffusion: dimension must be 1 or 2");
    }
    DiffusionConfig cfg;
    cfg.dimension = dimension;
    const int d = dimension;
    if (name == "zero") {
        cfg.lipschitz = 0.0;
        cfg.drift = [](std::span<const double>, std::span<double> out) {
            for (auto& v : out) v = 0.0;
        };
        cfg.diffusion = [](std::span<const double>, std::span<double> out) {
            for (auto& v : out) v = 0.0;
        };
    } else if (name == "constant_drift") {
        cfg.lipschitz = 0.0;
        cfg.drift = [](std::span<const double>, std::span<double> out) {
            for (auto& v : out) v = 1.0;
        };
        cfg.diffusion = [](std::span<const double>, std::span<double> out) {
            for (auto& v : out) v = 0.0;
        };
    } else if (name == "ou") {
        cfg.lipschitz = 1.0;
        cfg.drift = [](std::span<const double> x, std::span<double> out) {
            for (std::size_t c = 0; c < out.size(); ++c) out[c] = -x[c];
        };
        cfg.diffusion = [d](std::span<const double>, std::span<double> out) {
            for (auto& v : out) v = 0.0;
            for (int c = 0; c < d; ++c) out[static_cast<std::size_t>(c * d + c)] = 1.0;
        };
    } else if (name == "linear_sigma") {
        cfg.lipschitz = 0.5;
        cfg.drift = [](std::span<const double>, std::span<double> out) {
            for (auto& v : out) v = 0.0;
        };
        // sigma(x) = diag(0.5 x), a gentle multiplicative diffusion
        cfg.diffusion = [d](std::span<const double> x, std::span<double> out) {
            for (auto& v : out) v = 0.0;
            for (int c = 0; c < d; ++c) {
                out[static_cast<std::size_t>(c * d + c)] = 0.5 * x[static_cast<std::size_t>(c)];
            }
        };
    } else {
        throw std::invalid_argument("make_diffusion: unknown coefficient set '" + name + "'");
    }
    return cfg;
}

ParticleEnsemble::ParticleEnsemble(double start_time, double dt, std::size_t n_steps,
                                   const ReferenceCloud& cloud, std::uint64_t seed,
                                   std::int64_t driver_offset)
    : t0_(start_time), dt_(dt), n_steps_(n_steps), m_(cloud.size), d_(cloud.dimension),
      seed_(seed), driver_offset_(driver_offset),
      x_((n_steps + 1) * cloud.size * static_cast<std::size_t>(cloud.dimension), 0.0) {
    if (!(dt > 0.0)) throw std::invalid_argument("ParticleEnsemble: dt must be positive");
    for (std::size_t i = 0; i < m_; ++i) {
        auto dst = mutable_state(0, i);
        auto src = cloud.point(i);
        for (int c = 0; c < d_; ++c) dst[static_cast<std::size_t>(c)] = src[static_cast<std::size_t>(c)];
    }
}

std::span<const double> ParticleEnsemble::state_at_time(double s, std::size_t i) const {
    if (s < t0_) return state(0, i);  // regulation below the start time
    const double x = (s - t0_) / dt_;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 || r > static_cast<double>(n_steps_) + 0.5) {
        throw std::out_of_range("ParticleEnsemble: time is not a grid node");
    }
    return state(static_cast<std::size_t>(r), i);
}

double ParticleEnsemble::w_increment(std::size_t k, std::size_t i, int c) const {
    const std::uint64_t step =
        static_cast<std::uint64_t>(static_cast<std::int64_t>(k) + driver_offset_ +
                                   (1ll << 40));
    return std::sqrt(dt_) * rng::normal(seed_, rng::kForwardDriver, i,
                                        static_cast<std::uint64_t>(c), step);
}

namespace {

void simulate_particle(ParticleEnsemble& ens, const DiffusionConfig& config, std::size_t i) {
    const int d = ens.dimension();
    double b[kMaxDim], sg[kMaxDim * kMaxDim], dw[kMaxDim];
    for (std::size_t k = 0; k < ens.n_steps(); ++k) {
        auto cur = ens.state(k, i);
        config.eval_drift(cur, {b, static_cast<std::size_t>(d)});
        config.eval_sigma(cur, {sg, static_cast<std::size_t>(d * d)});
        for (int c = 0; c < d; ++c) dw[c] = ens.w_increment(k, i, c);
        auto nxt = ens.mutable_state(k + 1, i);
        for (int r = 0; r < d; ++r) {
            double diff = 0.0;
            for (int c = 0; c < d; ++c) diff += sg[r * d + c] * dw[c];
            nxt[static_cast<std::size_t>(r)] =
                cur[static_cast<std::size_t>(r)] + b[r] * ens.dt() + diff;
            if (!std::isfinite(nxt[static_cast<std::size_t>(r)])) {
                throw std::runtime_error("euler_maruyama: non-finite state at particle " +
                                         std::to_string(i));
            }
        }
    }
}

}  // namespace

ParticleEnsemble euler_maruyama(double start_time, const ReferenceCloud& cloud,
                                const DiffusionConfig& config, double dt,
                                std::size_t n_steps, std::uint64_t seed,
                                std::int64_t driver_offset, unsigned workers) {
    if (config.dimension != cloud.dimension) {
        throw std::invalid_argument("euler_maruyama: dimension mismatch");
    }
    ParticleEnsemble ens(start_time, dt, n_steps, cloud, seed, driver_offset);
    parallel_for(cloud.size, workers,
                 [&](std::size_t i) { simulate_particle(ens, config, i); });
    return ens;
}

double flow_property_check(const ParticleEnsemble& ensemble, const DiffusionConfig& config,
                           std::size_t restart_node) {
    if (restart_node > ensemble.n_steps()) {
        throw std::invalid_argument("flow_property_check: restart node outside the grid");
    }
    const int d = ensemble.dimension();
    double b[kMaxDim], sg[kMaxDim * kMaxDim], dw[kMaxDim], cur[kMaxDim], nxt[kMaxDim];
    double max_dev = 0.0;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        auto start = ensemble.state(restart_node, i);
        for (int c = 0; c < d; ++c) cur[c] = start[static_cast<std::size_t>(c)];
        for (std::size_t k = restart_node; k < ensemble.n_steps(); ++k) {
            config.eval_drift({cur, static_cast<std::size_t>(d)}, {b, static_cast<std::size_t>(d)});
            config.eval_sigma({cur, static_cast<std::size_t>(d)},
                              {sg, static_cast<std::size_t>(d * d)});
            for (int c = 0; c < d; ++c) dw[c] = ensemble.w_increment(k, i, c);
            for (int r = 0; r < d; ++r) {
                double diff = 0.0;
                for (int c = 0; c < d; ++c) diff += sg[r * d + c] * dw[c];
                nxt[r] = cur[r] + b[r] * ensemble.dt() + diff;
            }
            auto ref = ensemble.state(k + 1, i);
            for (int r = 0; r < d; ++r) {
                max_dev = std::max(max_dev, std::abs(nxt[r] - ref[static_cast<std::size_t>(r)]));
                cur[r] = nxt[r];
            }
        }
    }
    return max_dev;
}

NormEquivalenceEstimate equivalence_norm_estimate(
    const std::function<double(std::span<const double>)>& phi, double start_time, double s,
    const ReferenceCloud& cloud, const WeightedSpace& space, const DiffusionConfig& config,
    double dt, int n_paths, std::uint64_t seed, unsigned workers) {
    if (s < start_time) throw std::invalid_argument("equivalence_norm_estimate: s before start");
    const auto n_steps = static_cast<std::size_t>(std::llround((s - start_time) / dt));
    std::vector<double> replica_means(static_cast<std::size_t>(n_paths), 0.0);
    parallel_for(static_cast<std::size_t>(n_paths), workers, [&](std::size_t rep) {
        auto ens = euler_maruyama(start_time, cloud, config, dt, n_steps,
                                  rng::key(seed, rng::kReplica, rep, 0, 0));
        double acc = 0.0;
        for (std::size_t i = 0; i < cloud.size; ++i) {
            acc += cloud.weights[i] * std::abs(phi(ens.state(n_steps, i)));
        }
        replica_means[rep] = space.normalizer() * acc;
    });
    double identity = 0.0;
    for (std::size_t i = 0; i < cloud.size; ++i) {
        identity += cloud.weights[i] * std::abs(phi(cloud.point(i)));
    }
    identity *= space.normalizer();

    NormEquivalenceEstimate out;
    double sum = 0.0;
    for (double v : replica_means) sum += v;
    out.pushforward = sum / static_cast<double>(n_paths);
    double ss = 0.0;
    for (double v : replica_means) ss += (v - out.pushforward) * (v - out.pushforward);
    out.pushforward_se =
        n_paths > 1 ? std::sqrt(ss / (static_cast<double>(n_paths) * (n_paths - 1.0))) : 0.0;
    out.identity = identity;
    out.ratio = identity > 0.0 ? out.pushforward / identity : 0.0;
    out.ratio_half_width = identity > 0.0 ? 1.96 * out.pushforward_se / identity : 0.0;
    return out;
}

}  // namespace bdsde
