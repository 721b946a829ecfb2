#include "bdsde/solver.hpp"

#include <cmath>

#include "bdsde/parallel.hpp"

namespace bdsde {

namespace {

constexpr int kMaxDim = 2;

/// dense Cholesky of a small symmetric positive semidefinite matrix, in
/// place; fails on a pivot that lost more than ten digits against its
/// diagonal, which signals a numerically singular design
bool cholesky(std::vector<double>& a, std::size_t p) {
    std::vector<double> diag(p);
    for (std::size_t i = 0; i < p; ++i) diag[i] = a[i * p + i];
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
            if (i == j) {
                if (!(s > 1e-10 * std::max(diag[i], 1e-300))) return false;
                a[i * p + i] = std::sqrt(s);
            } else {
                a[i * p + j] = s / a[j * p + j];
            }
        }
    }
    return true;
}

void chol_solve(const std::vector<double>& l, std::size_t p, std::span<double> b) {
    for (std::size_t i = 0; i < p; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * p + k] * b[k];
        b[i] = s / l[i * p + i];
    }
    for (std::size_t ii = p; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        double s = b[i];
        for (std::size_t k = i + 1; k < p; ++k) s -= l[k * p + i] * b[k];
        b[i] = s / l[i * p + i];
    }
}

}  // namespace

PolyBasis::PolyBasis(int dimension, int degree, double scale)
    : d_(dimension), degree_(degree), scale_(scale) {
    if (d_ < 1 || d_ > kMaxDim) throw std::invalid_argument("PolyBasis: dimension must be 1 or 2");
    if (degree_ < 0) throw std::invalid_argument("PolyBasis: degree must be nonnegative");
    if (!(scale_ > 0.0)) throw std::invalid_argument("PolyBasis: scale must be positive");
    if (d_ == 1) {
        for (int k = 0; k <= degree_; ++k) powers_.push_back({k, 0});
    } else {
        for (int total = 0; total <= degree_; ++total) {
            for (int i = total; i >= 0; --i) powers_.push_back({i, total - i});
        }
    }
}

void PolyBasis::eval(std::span<const double> x, std::span<double> out) const {
    const double u = x[0] / scale_;
    if (d_ == 1) {
        double m = 1.0;
        for (std::size_t k = 0; k < powers_.size(); ++k) {
            out[k] = m;
            m *= u;
        }
        return;
    }
    const double v = x[1] / scale_;
    double pu[16], pv[16];
    pu[0] = pv[0] = 1.0;
    for (int k = 1; k <= degree_; ++k) {
        pu[k] = pu[k - 1] * u;
        pv[k] = pv[k - 1] * v;
    }
    for (std::size_t k = 0; k < powers_.size(); ++k) {
        out[k] = pu[powers_[k][0]] * pv[powers_[k][1]];
    }
}

double PolyBasis::eval_combination(std::span<const double> coef,
                                   std::span<const double> x) const {
    double phi[64];
    eval(x, {phi, powers_.size()});
    double s = 0.0;
    for (std::size_t k = 0; k < powers_.size(); ++k) s += coef[k] * phi[k];
    return s;
}

NodeRegression::NodeRegression(const PolyBasis& basis, const ParticleEnsemble& ensemble,
                               std::size_t node)
    : basis_(std::make_shared<PolyBasis>(basis)), ensemble_(&ensemble), node_(node) {
    factor();
}

void NodeRegression::factor() {
    for (;;) {
        const std::size_t p = basis_->size();
        std::vector<double> g(p * p, 0.0);
        double phi[64];
        for (std::size_t i = 0; i < ensemble_->size(); ++i) {
            basis_->eval(ensemble_->state(node_, i), {phi, p});
            for (std::size_t a = 0; a < p; ++a) {
                for (std::size_t b = 0; b <= a; ++b) g[a * p + b] += phi[a] * phi[b];
            }
        }
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a + 1; b < p; ++b) g[a * p + b] = g[b * p + a];
        }
        if (cholesky(g, p)) {
            chol_ = std::move(g);
            return;
        }
        if (basis_->degree() == 0) {
            throw std::runtime_error("NodeRegression: singular design at degree 0");
        }
        basis_ = std::make_shared<PolyBasis>(basis_->dimension(), basis_->degree() - 1,
                                             basis_->scale());
        degraded_ = true;
    }
}

std::vector<double> NodeRegression::fit(std::span<const double> targets) const {
    const std::size_t p = basis_->size();
    std::vector<double> rhs(p, 0.0);
    double phi[64];
    for (std::size_t i = 0; i < ensemble_->size(); ++i) {
        basis_->eval(ensemble_->state(node_, i), {phi, p});
        const double t = targets[i];
        for (std::size_t a = 0; a < p; ++a) rhs[a] += phi[a] * t;
    }
    chol_solve(chol_, p, rhs);
    return rhs;
}

void NodeRegression::fitted_values(std::span<const double> coef, std::span<double> out) const {
    for (std::size_t i = 0; i < ensemble_->size(); ++i) {
        out[i] = basis_->eval_combination(coef, ensemble_->state(node_, i));
    }
}

namespace {

double basis_scale_for(const ParticleEnsemble& ensemble) {
    double ms = 0.0;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        auto x = ensemble.state(0, i);
        for (double v : x) ms += v * v;
    }
    ms /= static_cast<double>(ensemble.size());
    return 1.0 + std::sqrt(ms);
}

NodeRegression& node_regression(std::vector<NodeRegression>* cache,
                                std::vector<NodeRegression>& local, const PolyBasis& basis,
                                const ParticleEnsemble& ensemble, std::size_t node) {
    auto& store = cache != nullptr ? *cache : local;
    if (store.size() <= node) store.reserve(ensemble.n_nodes());
    while (store.size() <= node) {
        store.emplace_back(basis, ensemble, store.size());
    }
    return store[node];
}

}  // namespace

BackwardSolution backward_lsmc_recursion(const BDSDEProblem& problem,
                                         const ParticleEnsemble& ensemble,
                                         const TwoSidedPath& b_hat, const FrozenG& frozen_g,
                                         std::size_t n_steps, const WeightedSpace& space,
                                         const SolverOptions& options,
                                         std::vector<NodeRegression>* regression_cache) {
    (void)space;
    if (n_steps < 1 || n_steps > ensemble.n_steps()) {
        throw std::invalid_argument("backward_lsmc_recursion: step count outside the grid");
    }
    const std::size_t m = ensemble.size();
    const int d = ensemble.dimension();
    const int n_modes = problem.noise.modes;
    const double dt = ensemble.dt();

    BackwardSolution sol;
    sol.particles = m;
    sol.dimension = d;
    sol.basis_degree = options.basis_degree;
    sol.basis_scale = basis_scale_for(ensemble);
    sol.times.resize(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) sol.times[k] = ensemble.node_time(k);
    sol.y.assign((n_steps + 1) * m, 0.0);
    sol.z.assign((n_steps + 1) * m * static_cast<std::size_t>(d), 0.0);
    sol.y_coef.resize(n_steps + 1);
    sol.z_coef.assign(n_steps + 1, std::vector<std::vector<double>>(static_cast<std::size_t>(d)));

    const PolyBasis basis(d, options.basis_degree, sol.basis_scale);
    std::vector<NodeRegression> local_cache;

    // terminal condition, bit-exact
    for (std::size_t i = 0; i < m; ++i) {
        sol.y[n_steps * m + i] = problem.eval_h(ensemble.state(n_steps, i));
    }
    {
        auto& regN = node_regression(regression_cache, local_cache, basis, ensemble, n_steps);
        sol.y_coef[n_steps] = regN.fit({sol.y.data() + n_steps * m, m});
        if (regN.degraded()) ++sol.regression_warnings;
    }

    std::vector<double> target(m), cond(m), base(m), work(m);
    std::vector<double> db(static_cast<std::size_t>(n_modes));

    for (std::size_t kk = n_steps; kk > 0; --kk) {
        const std::size_t k = kk - 1;
        auto& reg = node_regression(regression_cache, local_cache, basis, ensemble, k);
        if (reg.degraded()) ++sol.regression_warnings;
        const double* y_next = sol.y.data() + (k + 1) * m;
        double* y_here = sol.y.data() + k * m;
        double* z_here = sol.z.data() + k * m * static_cast<std::size_t>(d);

        // E[Y_{k+1} | X_k], the control variate for the Z targets
        auto cond_coef = reg.fit({y_next, m});
        reg.fitted_values(cond_coef, cond);

        for (int c = 0; c < d; ++c) {
            parallel_for(m, options.workers, [&](std::size_t i) {
                target[i] = (y_next[i] - cond[i]) * ensemble.w_increment(k, i, c) / dt;
            });
            auto zc = reg.fit(target);
            reg.fitted_values(zc, work);
            for (std::size_t i = 0; i < m; ++i) z_here[i * d + c] = work[i];
            sol.z_coef[k][static_cast<std::size_t>(c)] = std::move(zc);
        }

        // frozen noise term against the right-endpoint driver increments
        const std::size_t b0 = b_hat.index_of(ensemble.node_time(k));
        for (int j = 0; j < n_modes; ++j) {
            db[static_cast<std::size_t>(j)] =
                b_hat.value_at(j, b0 + 1) - b_hat.value_at(j, b0);
        }
        parallel_for(m, options.workers, [&](std::size_t i) {
            double acc = y_next[i];
            for (int j = 0; j < n_modes; ++j) {
                acc -= frozen_g(j, k + 1, i) * db[static_cast<std::size_t>(j)];
            }
            base[i] = acc;
        });
        auto base_coef = reg.fit(base);
        reg.fitted_values(base_coef, base);

        const double t_right = ensemble.node_time(k + 1);
        parallel_for(m, options.workers, [&](std::size_t i) {
            double zloc[kMaxDim];
            for (int c = 0; c < d; ++c) zloc[c] = z_here[i * d + c];
            target[i] = problem.eval_f(t_right, ensemble.state(k + 1, i), y_next[i],
                                       {zloc, static_cast<std::size_t>(d)}) *
                        dt;
        });
        auto f_coef = reg.fit(target);
        reg.fitted_values(f_coef, work);

        const double t_here = ensemble.node_time(k);
        parallel_for(m, options.workers, [&](std::size_t i) {
            double y = base[i] + work[i];
            double zloc[kMaxDim];
            for (int c = 0; c < d; ++c) zloc[c] = z_here[i * d + c];
            for (int sweep = 0; sweep < options.implicit_sweeps; ++sweep) {
                y = base[i] + problem.eval_f(t_here, ensemble.state(k, i), y,
                                             {zloc, static_cast<std::size_t>(d)}) *
                                  dt;
            }
            y_here[i] = y;
        });
        sol.y_coef[k] = reg.fit({y_here, m});
    }

    // Z at the terminal node is extrapolated from the last interior node
    if (n_steps >= 1) {
        for (std::size_t i = 0; i < m; ++i) {
            for (int c = 0; c < d; ++c) {
                sol.z[(n_steps * m + i) * d + c] = sol.z[((n_steps - 1) * m + i) * d + c];
            }
        }
        sol.z_coef[n_steps] = sol.z_coef[n_steps - 1];
    }
    return sol;
}

namespace {

struct DiffNorm {
    double y_weight;
    double rate;
};

double weighted_difference(const BackwardSolution& a, const BackwardSolution& b,
                           std::size_t n_steps, const WeightedSpace& space,
                           const DiffNorm& w) {
    // squared exponentially weighted norm of the iterate difference,
    // trapezoidal in time and Monte Carlo in space
    const std::size_t m = a.particles;
    const int d = a.dimension;
    const double t0 = a.times.front();
    double acc = 0.0;
    for (std::size_t k = 0; k <= n_steps; ++k) {
        double dy2 = 0.0, dz2 = 0.0;
        const std::size_t yoff = k * m;
        for (std::size_t i = 0; i < m; ++i) {
            const double dy = a.y[yoff + i] - b.y[yoff + i];
            dy2 += dy * dy;
            for (int c = 0; c < d; ++c) {
                const double dz = a.z[(yoff + i) * d + c] - b.z[(yoff + i) * d + c];
                dz2 += dz * dz;
            }
        }
        dy2 = space.normalizer() * dy2 / static_cast<double>(m);
        dz2 = space.normalizer() * dz2 / static_cast<double>(m);
        const double integrand = std::exp(w.rate * (a.times[k] - t0)) *
                                 (w.y_weight * dy2 + dz2);
        double step = 0.0;
        if (k > 0) step += 0.5 * (a.times[k] - a.times[k - 1]);
        if (k < n_steps) step += 0.5 * (a.times[k + 1] - a.times[k]);
        acc += integrand * step;
    }
    return acc;
}

}  // namespace

BackwardSolution picard_solve(const BDSDEProblem& problem, const ParticleEnsemble& ensemble,
                              const TwoSidedPath& b_hat, const WeightedSpace& space,
                              const SolverOptions& options,
                              std::vector<NodeRegression>* regression_cache,
                              std::size_t n_steps_override) {
    const std::size_t n_steps =
        n_steps_override > 0 ? n_steps_override : ensemble.n_steps();
    const std::size_t m = ensemble.size();
    const int d = ensemble.dimension();

    const double sum_a = problem.sum_alpha();
    const double sum_c = problem.sum_cj();
    DiffNorm norm_w;
    if (sum_a > 0.0) {
        norm_w.rate = 2.0 * problem.monotonicity + 2.0 * problem.z_lipschitz +
                      sum_c / (2.0 * sum_a);
    } else {
        norm_w.rate = 2.0 * std::abs(problem.monotonicity) + 2.0 * problem.z_lipschitz + 1.0;
    }
    norm_w.y_weight = (sum_a > 0.0 && sum_c > 0.0) ? sum_c / sum_a : 1.0;

    BackwardSolution prev;
    prev.particles = m;
    prev.dimension = d;
    prev.times.assign(n_steps + 1, 0.0);
    for (std::size_t k = 0; k <= n_steps; ++k) prev.times[k] = ensemble.node_time(k);
    prev.y.assign((n_steps + 1) * m, 0.0);
    prev.z.assign((n_steps + 1) * m * static_cast<std::size_t>(d), 0.0);

    ContractionDiagnostics diag;
    diag.weight_rate = norm_w.rate;
    diag.y_weight = norm_w.y_weight;

    BackwardSolution sol;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const BackwardSolution& frozen = prev;
        FrozenG g = [&problem, &ensemble, &frozen, d](int j, std::size_t k, std::size_t i) {
            double zloc[kMaxDim];
            for (int c = 0; c < d; ++c) zloc[c] = frozen.z_at(k, i, c);
            return problem.eval_g(j, frozen.times[k], ensemble.state(k, i),
                                  frozen.y_at(k, i), {zloc, static_cast<std::size_t>(d)});
        };
        sol = backward_lsmc_recursion(problem, ensemble, b_hat, g, n_steps, space, options,
                                      regression_cache);
        const double dn = weighted_difference(sol, prev, n_steps, space, norm_w);
        diag.difference_norms.push_back(dn);
        if (diag.difference_norms.size() >= 2) {
            const double prev_dn = diag.difference_norms[diag.difference_norms.size() - 2];
            diag.ratios.push_back(prev_dn > 0.0 ? dn / prev_dn : 0.0);
        }
        diag.iterations = it;
        prev = sol;
        if (options.tolerance > 0.0 && dn <= options.tolerance) {
            diag.converged = true;
            break;
        }
    }
    if (options.tolerance > 0.0 && !diag.converged) {
        throw PicardDivergence("picard_solve: no convergence within the iteration budget",
                               diag);
    }
    if (options.tolerance <= 0.0) diag.converged = true;  // fixed-budget mode
    sol.picard = diag;
    return sol;
}

}  // namespace bdsde
